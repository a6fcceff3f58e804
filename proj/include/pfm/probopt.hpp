#ifndef PFM_PROBOPT_HPP
#define PFM_PROBOPT_HPP

#include <iosfwd>
#include <vector>

#include "pfm/common.hpp"
#include "pfm/fuzzy.hpp"

namespace pfm {

/// Everything the likelihood of the targets needs that does not change
/// while P is optimized. Q caches the per-sample consequent densities.
struct LikelihoodContext {
  MatrixXd phi_all;  // N x K firing vectors, rows on the simplex
  VectorXd targets;  // N normalized targets
  VectorXd centers;  // K consequent centers (the trained W)
  VectorXd sigma_b;  // K consequent widths, > 0
  MatrixXd Q;        // N x K, Q(k,j) = p(y(k) | B^j)

  static LikelihoodContext build(MatrixXd phi_all, VectorXd targets,
                                 VectorXd centers, VectorXd sigma_b);
};

struct OptimizeOptions {
  int max_iters = 500;
  double grad_tol = 1e-6;    // gradient-projection norm
  double rel_tol = 1e-9;     // relative improvement of L
  double armijo_c = 1e-4;
  double step_init = 1.0;
  double step_shrink = 0.5;
  std::ostream* trace = nullptr;  // line-delimited iteration records
};

struct OptimizeResult {
  MatrixXd P;
  double loglik_init = 0.0;
  double loglik_final = 0.0;
  int iterations = 0;
};

/// Normalized Gaussian consequent density exp(-(y-c)^2/s^2) / (sqrt(pi) s).
double y_given_B(double y, double center, double sigma_b);

/// Mixture density p(y | h) of the probabilistic fuzzy model.
double y_density(double y, const VectorXd& h, const FuzzyModel& model);

double log_likelihood(const LikelihoodContext& ctx, const MatrixXd& P);

/// Gradient over the free block (last column of P is dependent):
/// dL/dp_{i,j} = sum_k phi_i(k) (Q(k,j) - Q(k,K-1)) / s_k.
MatrixXd grad_log_likelihood(const LikelihoodContext& ctx, const MatrixXd& P);

/// Euclidean projection onto { v >= 0, sum(v) <= 1 }.
VectorXd project_capped_simplex(const VectorXd& v);

/// Projected-gradient ascent on L over row-wise capped simplices.
/// Guarantees loglik_final >= loglik_init.
OptimizeResult optimize_P(const LikelihoodContext& ctx, const MatrixXd& init_P,
                          const OptimizeOptions& opts = {});

/// Per-rule std-dev of `values` over the samples assigned to each cluster,
/// floored; rules with fewer than two members fall back to the global
/// std-dev. With values = targets this is the heuristic that fixes
/// sigma_b before P is optimized; callers may instead pass model
/// residuals for sharper consequent densities.
VectorXd consequent_widths_from_labels(const std::vector<int>& labels,
                                       const VectorXd& values,
                                       Eigen::Index rule_count,
                                       double floor_width = 0.02);

}  // namespace pfm

#endif  // PFM_PROBOPT_HPP
