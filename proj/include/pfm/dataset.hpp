#ifndef PFM_DATASET_HPP
#define PFM_DATASET_HPP

#include <cstdint>
#include <string>
#include <utility>

#include "pfm/common.hpp"

namespace pfm {

/// Raw input/output series in engineering units.
struct TimeSeries {
  VectorXd u;
  VectorXd y;

  Eigen::Index length() const { return u.size(); }
  void validate() const;
};

struct RegressorConfig {
  int n_y = 0;  // output delay count
  int n_u = 0;  // input delay count

  int width() const { return n_y + n_u + 1; }
  void validate() const;
};

/// Per-channel min/max of the affine [0,1] map.
struct NormParams {
  double u_min = 0.0, u_max = 1.0;
  double y_min = 0.0, y_max = 1.0;
  void validate() const;
};

/// Regressor matrix X with target vector Y.
///
/// Row k is [y(k-1)..y(k-n_y), u(k), u(k-1)..u(k-n_u)]; columns
/// [0, n_y) come from the output channel, the rest from the input channel.
/// When `normalized` is set every X entry is in [0,1] (targets may leave
/// [0,1] slightly under train-scoped normalization and are deliberately
/// not clamped, so that errors are computed against the true values).
struct Dataset {
  MatrixXd X;
  VectorXd Y;
  RegressorConfig reg;
  NormParams norm;
  bool normalized = false;

  Eigen::Index rows() const { return X.rows(); }
  Eigen::Index cols() const { return X.cols(); }
  bool column_is_output(Eigen::Index c) const { return c < reg.n_y; }
  void validate() const;
};

Dataset build_regressors(const TimeSeries& ts, const RegressorConfig& cfg);

NormParams compute_norm(const Dataset& ds);
Dataset apply_norm(const Dataset& ds, const NormParams& norm);
std::pair<Dataset, NormParams> normalize(const Dataset& ds);
VectorXd denormalize(const VectorXd& yhat, const NormParams& norm);

std::pair<Dataset, Dataset> split(const Dataset& ds, Eigen::Index n_train);

TimeSeries load_csv(const std::string& path, const std::string& u_column,
                    const std::string& y_column);

/// Validation MSE of a plain least-squares linear model on the regressors
/// of `cfg`; the cheap evaluation behind the random delay search. At most
/// `eval_budget` leading rows are used (0 = all), split 70/30 train/val.
double evaluate_delay_config(const TimeSeries& ts, const RegressorConfig& cfg,
                             Eigen::Index eval_budget = 0);

RegressorConfig random_search_delays(const TimeSeries& ts, int lo, int hi,
                                     int n_trials, Eigen::Index eval_budget,
                                     std::uint64_t seed);

}  // namespace pfm

#endif  // PFM_DATASET_HPP
