#ifndef PFM_KV_HPP
#define PFM_KV_HPP

#include <map>
#include <string>
#include <vector>

#include "pfm/common.hpp"

namespace pfm::kv {

/// Self-describing key-value text file used for model persistence.
///
/// Format:
///   pfm-kv 1 <kind>
///   name = scalar-or-string
///   name = matrix R C
///   <R lines of C full-precision values>
///
/// Scalars are written with 17 significant digits so doubles round-trip
/// exactly.
class File {
 public:
  explicit File(std::string kind) : kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

  void set(const std::string& key, double v);
  void set(const std::string& key, std::int64_t v);
  void set(const std::string& key, const std::string& v);
  void set(const std::string& key, const MatrixXd& m);
  void set(const std::string& key, const VectorXd& v);

  bool has(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  MatrixXd get_matrix(const std::string& key) const;
  VectorXd get_vector(const std::string& key) const;

  void save(const std::string& path) const;
  static File load(const std::string& path, const std::string& expected_kind);

 private:
  struct Entry {
    std::string scalar;  // empty when matrix
    MatrixXd matrix;
    bool is_matrix = false;
  };
  std::string kind_;
  std::map<std::string, Entry> entries_;

  const Entry& at(const std::string& key) const;
};

std::string format_double(double v);

}  // namespace pfm::kv

#endif  // PFM_KV_HPP
