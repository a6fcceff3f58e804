#ifndef PFM_PIPELINE_HPP
#define PFM_PIPELINE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pfm/crbm.hpp"
#include "pfm/dataset.hpp"
#include "pfm/fuzzy.hpp"
#include "pfm/probcluster.hpp"
#include "pfm/probopt.hpp"

namespace pfm {

struct PipelineConfig {
  // data
  std::string data_path;
  std::string u_column = "u";
  std::string y_column = "y";
  RegressorConfig reg{4, 5};
  Eigen::Index n_train = 200;
  std::string norm_scope = "train";  // "train" or "all"

  // stages
  RbmTrainConfig rbm;
  ClusterConfig cluster;
  double sigma_b_floor = 0.02;
  std::string sigma_b_mode = "target";  // "target" or "residual"
  double prob_train_mse_guard = 1.6;    // cap on train-MSE growth from P
  std::string width_mode = "kernel";    // "kernel" or "random"
  double width_scale = 1.5;             // kernel-mode width multiplier
  OptimizeOptions probopt;

  // switches
  bool use_rbm = true;
  bool use_prob_rules = true;
  bool resolve_w = false;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Flat sectioned key-value config file; CLI flags override file keys.
void parse_config_file(const std::string& path, PipelineConfig& cfg);

struct Metrics {
  double mse = 0.0, rms = 0.0;            // normalized units
  double mse_denorm = 0.0, rms_denorm = 0.0;
};

struct RunReport {
  std::uint64_t seed = 0;
  bool use_rbm = true;
  bool use_prob_rules = true;
  Eigen::Index raw_pairs = 0;
  Eigen::Index regressor_rows = 0;
  Eigen::Index train_rows = 0;
  Eigen::Index test_rows = 0;
  Eigen::Index K = 0;
  std::vector<double> cluster_sweep_change_fraction;
  std::optional<double> loglik_init;   // only when prob rules are trained
  std::optional<double> loglik_final;
  Metrics train, test;
  std::map<std::string, double> timings_s;
  PipelineConfig resolved;

  /// JSON text of the report; the determinism contract covers everything
  /// except the "timings_s" object.
  std::string to_json() const;
};

/// Trained pipeline artifacts: the fuzzy model plus whatever is needed to
/// map a raw series to predictions again (RBM, normalization, delays).
struct ModelBundle {
  FuzzyModel fuzzy;
  std::optional<RbmModel> rbm;
  NormParams norm;
  RegressorConfig reg;
  bool use_prob_rules = true;

  MatrixXd features_for(const Dataset& normalized) const;
  VectorXd predict(const MatrixXd& features) const;

  void save(const std::string& dir) const;
  static ModelBundle load(const std::string& dir);
};

Metrics evaluate_predictions(const VectorXd& y_true, const VectorXd& y_pred,
                             const NormParams& norm);

std::pair<ModelBundle, RunReport> run_pipeline(const PipelineConfig& cfg);
std::pair<ModelBundle, RunReport> run_pipeline(const PipelineConfig& cfg,
                                               const TimeSeries& ts);

/// 2x2 ablation grid (probabilistic rules x RBM features) over seeds; all
/// cells of one seed share the data split and the trained RBM weights.
struct AblationGrid {
  // indexed [use_prob][use_rbm]
  std::vector<RunReport> reports[2][2];
  double median_train_mse[2][2] = {};
  double median_test_mse[2][2] = {};

  std::string table_text() const;  // the paper-style 2x2 layout
  std::string to_json() const;
};

AblationGrid ablate(const PipelineConfig& cfg,
                    const std::vector<std::uint64_t>& seeds);
AblationGrid ablate(const PipelineConfig& cfg,
                    const std::vector<std::uint64_t>& seeds,
                    const TimeSeries& ts);

/// predictions CSV: k, normalized truth/prediction/residual, denormalized
/// truth/prediction/residual.
void emit_predictions(const FuzzyModel& model, const MatrixXd& features,
                      const VectorXd& y_true, const NormParams& norm,
                      bool use_prob_rules, const std::string& path);

double median(std::vector<double> values);

}  // namespace pfm

#endif  // PFM_PIPELINE_HPP
