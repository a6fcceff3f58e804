#ifndef PFM_FUZZY_HPP
#define PFM_FUZZY_HPP

#include <cstdint>
#include <string>

#include "pfm/common.hpp"
#include "pfm/probcluster.hpp"

namespace pfm {

/// Rule base with Gaussian antecedents over the feature space, scalar
/// consequents W, and a row-stochastic matrix P mixing rule consequents.
/// P = I reduces the probabilistic output to the standard one.
struct FuzzyModel {
  Eigen::Index K = 0;  // rules
  Eigen::Index m = 0;  // feature dimension
  MatrixXd centers;    // K x m
  MatrixXd widths;     // K x m, entrywise > 0
  Eigen::RowVectorXd W;  // 1 x K consequents (normalized output units)
  MatrixXd P;          // K x K, rows on the simplex
  VectorXd sigma_b;    // K consequent membership widths, > 0

  void validate() const;
};

double membership(double center, double width, double h_i);

/// Normalized firing strengths; a probability vector of length K.
VectorXd firing_strengths(const FuzzyModel& model, const VectorXd& h);

double infer_standard(const FuzzyModel& model, const VectorXd& h);

/// p(B^j | h) = sum_i phi_i p_{i,j}; convex combination of P's rows.
VectorXd rule_probabilities(const FuzzyModel& model, const VectorXd& h);
VectorXd rule_probabilities(const FuzzyModel& model, const VectorXd& h,
                            const VectorXd& phi);

double infer_probabilistic(const FuzzyModel& model, const VectorXd& h);

/// Rule skeleton from cluster centers: random widths in [0.05, 1), P = I,
/// zero consequents, sigma_b = 0.1 until trained.
FuzzyModel build_from_clusters(const ClusterSummary& summary,
                               std::uint64_t width_rng_seed);

/// Same skeleton but with widths tied to the clustering geometry: every
/// rule gets width_scale times the per-dimension kernel width. Slope
/// error through the rule basis is much lower than with random widths,
/// which remain available for conformance with the published recipe.
FuzzyModel build_from_clusters(const ClusterSummary& summary,
                               const VectorXd& dim_widths,
                               double width_scale);

void save_fuzzy(const FuzzyModel& model, const std::string& path);
FuzzyModel load_fuzzy(const std::string& path);

}  // namespace pfm

#endif  // PFM_FUZZY_HPP
