#include "pfm/kv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pfm::kv {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void File::set(const std::string& key, double v) {
  entries_[key] = Entry{format_double(v), {}, false};
}

void File::set(const std::string& key, std::int64_t v) {
  entries_[key] = Entry{std::to_string(v), {}, false};
}

void File::set(const std::string& key, const std::string& v) {
  entries_[key] = Entry{v, {}, false};
}

void File::set(const std::string& key, const MatrixXd& m) {
  entries_[key] = Entry{{}, m, true};
}

void File::set(const std::string& key, const VectorXd& v) {
  entries_[key] = Entry{{}, MatrixXd(v), true};
}

bool File::has(const std::string& key) const { return entries_.count(key) != 0; }

const File::Entry& File::at(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw DataError("kv: missing key '" + key + "'");
  return it->second;
}

double File::get_double(const std::string& key) const {
  return std::stod(at(key).scalar);
}

std::int64_t File::get_int(const std::string& key) const {
  return std::stoll(at(key).scalar);
}

std::string File::get_string(const std::string& key) const {
  return at(key).scalar;
}

MatrixXd File::get_matrix(const std::string& key) const {
  const Entry& e = at(key);
  if (!e.is_matrix) throw DataError("kv: key '" + key + "' is not a matrix");
  return e.matrix;
}

VectorXd File::get_vector(const std::string& key) const {
  MatrixXd m = get_matrix(key);
  if (m.cols() != 1) throw DataError("kv: key '" + key + "' is not a vector");
  return VectorXd(m.col(0));
}

void File::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("kv: cannot open '" + path + "' for writing");
  out << "pfm-kv 1 " << kind_ << "\n";
  for (const auto& [key, e] : entries_) {
    if (e.is_matrix) {
      out << key << " = matrix " << e.matrix.rows() << " " << e.matrix.cols()
          << "\n";
      for (Eigen::Index r = 0; r < e.matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < e.matrix.cols(); ++c) {
          if (c) out << " ";
          out << format_double(e.matrix(r, c));
        }
        out << "\n";
      }
    } else {
      out << key << " = " << e.scalar << "\n";
    }
  }
  if (!out) throw DataError("kv: write to '" + path + "' failed");
}

File File::load(const std::string& path, const std::string& expected_kind) {
  std::ifstream in(path);
  if (!in) throw DataError("kv: cannot open '" + path + "'");
  std::string magic, version, kind;
  in >> magic >> version >> kind;
  if (magic != "pfm-kv" || version != "1")
    throw DataError("kv: '" + path + "' is not a pfm-kv file");
  if (!expected_kind.empty() && kind != expected_kind)
    throw DataError("kv: '" + path + "' holds a '" + kind + "', expected '" +
                    expected_kind + "'");
  File f(kind);
  std::string line;
  std::getline(in, line);  // eat rest of header line
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw DataError("kv: malformed line: " + line);
    const std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 3);
    if (value.rfind("matrix ", 0) == 0) {
      std::istringstream hs(value.substr(7));
      Eigen::Index rows = 0, cols = 0;
      hs >> rows >> cols;
      if (rows < 0 || cols < 0) throw DataError("kv: bad matrix header: " + line);
      MatrixXd m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) {
        if (!std::getline(in, line))
          throw DataError("kv: truncated matrix '" + key + "'");
        std::istringstream rs(line);
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (!(rs >> m(r, c)))
            throw DataError("kv: bad matrix row in '" + key + "'");
        }
      }
      f.entries_[key] = Entry{{}, std::move(m), true};
    } else {
      f.entries_[key] = Entry{std::move(value), {}, false};
    }
  }
  return f;
}

}  // namespace pfm::kv
