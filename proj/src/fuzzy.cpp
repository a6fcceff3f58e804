#include "pfm/fuzzy.hpp"

#include <cmath>
#include <iostream>

#include "pfm/kv.hpp"

namespace pfm {

namespace {
constexpr double kRowSumTol = 1e-9;
constexpr double kWidthFloor = 0.05;
}  // namespace

void FuzzyModel::validate() const {
  if (K < 1 || m < 1) throw ConfigError("fuzzy: empty model");
  if (centers.rows() != K || centers.cols() != m ||
      widths.rows() != K || widths.cols() != m || W.cols() != K ||
      P.rows() != K || P.cols() != K || sigma_b.size() != K)
    throw ConfigError("fuzzy: inconsistent dimensions");
  if ((widths.array() <= 0.0).any()) throw ConfigError("fuzzy: nonpositive width");
  if ((sigma_b.array() <= 0.0).any())
    throw ConfigError("fuzzy: nonpositive consequent width");
  if ((P.array() < 0.0).any()) throw ConfigError("fuzzy: negative probability");
  for (Eigen::Index i = 0; i < K; ++i)
    if (std::abs(P.row(i).sum() - 1.0) > kRowSumTol)
      throw ConfigError("fuzzy: P row " + std::to_string(i) + " does not sum to 1");
}

double membership(double center, double width, double h_i) {
  if (!(width > 0.0)) throw std::invalid_argument("membership: width must be > 0");
  const double d = (h_i - center) / width;
  return std::exp(-d * d);
}

VectorXd firing_strengths(const FuzzyModel& model, const VectorXd& h) {
  if (h.size() != model.m)
    throw std::invalid_argument("firing_strengths: h has wrong dimension");
  // log of the membership product per rule, normalized as a softmax;
  // algebraically identical to products / sum-of-products but immune to
  // underflow of the individual products
  VectorXd e(model.K);
  for (Eigen::Index j = 0; j < model.K; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < model.m; ++i) {
      const double d = (h(i) - model.centers(j, i)) / model.widths(j, i);
      s -= d * d;
    }
    e(j) = s;
  }
  const double peak = e.maxCoeff();
  if (!std::isfinite(peak)) {
    // degenerate inputs: fall back to the uninformative uniform vector
    std::cerr << "pfm: firing strengths degenerate, using uniform\n";
    return VectorXd::Constant(model.K, 1.0 / static_cast<double>(model.K));
  }
  VectorXd phi = (e.array() - peak).exp();
  phi /= phi.sum();
  return phi;
}

double infer_standard(const FuzzyModel& model, const VectorXd& h) {
  return model.W * firing_strengths(model, h);
}

VectorXd rule_probabilities(const FuzzyModel& model, const VectorXd& h,
                            const VectorXd& phi) {
  (void)h;
  return model.P.transpose() * phi;
}

VectorXd rule_probabilities(const FuzzyModel& model, const VectorXd& h) {
  return rule_probabilities(model, h, firing_strengths(model, h));
}

double infer_probabilistic(const FuzzyModel& model, const VectorXd& h) {
  return model.W * rule_probabilities(model, h);
}

namespace {

FuzzyModel skeleton_from_clusters(const ClusterSummary& summary) {
  if (summary.K < 1) throw DataError("fuzzy: summary has no clusters");
  FuzzyModel model;
  model.K = summary.K;
  model.m = summary.centers.cols();
  model.centers = summary.centers;
  model.W = Eigen::RowVectorXd::Zero(model.K);
  model.P = MatrixXd::Identity(model.K, model.K);
  model.sigma_b = VectorXd::Constant(model.K, 0.1);
  return model;
}

}  // namespace

FuzzyModel build_from_clusters(const ClusterSummary& summary,
                               std::uint64_t width_rng_seed) {
  FuzzyModel model = skeleton_from_clusters(summary);
  Rng rng(derive_seed(width_rng_seed, "fuzzy-widths"));
  model.widths.resize(model.K, model.m);
  for (Eigen::Index j = 0; j < model.K; ++j)
    for (Eigen::Index i = 0; i < model.m; ++i)
      model.widths(j, i) = rng.uniform(kWidthFloor, 1.0);
  model.validate();
  return model;
}

FuzzyModel build_from_clusters(const ClusterSummary& summary,
                               const VectorXd& dim_widths,
                               double width_scale) {
  FuzzyModel model = skeleton_from_clusters(summary);
  if (dim_widths.size() != model.m)
    throw std::invalid_argument("build_from_clusters: width vector size");
  if (!(width_scale > 0.0))
    throw std::invalid_argument("build_from_clusters: width scale must be > 0");
  model.widths.resize(model.K, model.m);
  for (Eigen::Index j = 0; j < model.K; ++j)
    for (Eigen::Index i = 0; i < model.m; ++i)
      model.widths(j, i) = std::max(kWidthFloor, width_scale * dim_widths(i));
  model.validate();
  return model;
}

void save_fuzzy(const FuzzyModel& model, const std::string& path) {
  kv::File f("fuzzy-model");
  f.set("version", static_cast<std::int64_t>(1));
  f.set("K", static_cast<std::int64_t>(model.K));
  f.set("m", static_cast<std::int64_t>(model.m));
  f.set("centers", model.centers);
  f.set("widths", model.widths);
  f.set("W", MatrixXd(model.W));
  f.set("P", model.P);
  f.set("sigma_b", model.sigma_b);
  f.save(path);
}

FuzzyModel load_fuzzy(const std::string& path) {
  kv::File f = kv::File::load(path, "fuzzy-model");
  FuzzyModel model;
  model.K = f.get_int("K");
  model.m = f.get_int("m");
  model.centers = f.get_matrix("centers");
  model.widths = f.get_matrix("widths");
  model.W = f.get_matrix("W").row(0);
  model.P = f.get_matrix("P");
  model.sigma_b = f.get_vector("sigma_b");
  model.validate();
  return model;
}

}  // namespace pfm
