#include "pfm/probopt.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace pfm {

namespace {
constexpr double kDensityFloor = 1e-300;  // keeps log finite on outliers
}

double y_given_B(double y, double center, double sigma_b) {
  if (!(sigma_b > 0.0))
    throw std::invalid_argument("y_given_B: width must be > 0");
  const double d = (y - center) / sigma_b;
  return std::exp(-d * d) / (std::sqrt(M_PI) * sigma_b);
}

double y_density(double y, const VectorXd& h, const FuzzyModel& model) {
  const VectorXd rho = rule_probabilities(model, h);
  double total = 0.0;
  for (Eigen::Index j = 0; j < model.K; ++j)
    total += y_given_B(y, model.W(j), model.sigma_b(j)) * rho(j);
  return total;
}

LikelihoodContext LikelihoodContext::build(MatrixXd phi_all, VectorXd targets,
                                           VectorXd centers, VectorXd sigma_b) {
  LikelihoodContext ctx;
  ctx.phi_all = std::move(phi_all);
  ctx.targets = std::move(targets);
  ctx.centers = std::move(centers);
  ctx.sigma_b = std::move(sigma_b);
  const Eigen::Index N = ctx.phi_all.rows();
  const Eigen::Index K = ctx.phi_all.cols();
  if (ctx.targets.size() != N || ctx.centers.size() != K ||
      ctx.sigma_b.size() != K)
    throw std::invalid_argument("likelihood context: dimension mismatch");
  if ((ctx.sigma_b.array() <= 0.0).any())
    throw std::invalid_argument("likelihood context: nonpositive width");
  ctx.Q.resize(N, K);
  for (Eigen::Index k = 0; k < N; ++k)
    for (Eigen::Index j = 0; j < K; ++j)
      ctx.Q(k, j) = y_given_B(ctx.targets(k), ctx.centers(j), ctx.sigma_b(j));
  return ctx;
}

namespace {

// per-sample mixture densities s_k = phi_k^T P q_k
VectorXd sample_densities(const LikelihoodContext& ctx, const MatrixXd& P) {
  return ((ctx.phi_all * P).array() * ctx.Q.array()).rowwise().sum();
}

}  // namespace

double log_likelihood(const LikelihoodContext& ctx, const MatrixXd& P) {
  const VectorXd s = sample_densities(ctx, P);
  double L = 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    L += std::log(std::max(s(k), kDensityFloor));
  return L;
}

MatrixXd grad_log_likelihood(const LikelihoodContext& ctx, const MatrixXd& P) {
  const Eigen::Index K = ctx.phi_all.cols();
  if (K == 1) return MatrixXd(1, 0);
  const VectorXd s = sample_densities(ctx, P);
  VectorXd r(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k)
    r(k) = s(k) > kDensityFloor ? 1.0 / s(k) : 0.0;  // floored samples are flat
  // G(i,j) = sum_k phi_i(k) Q(k,j) / s_k, then subtract the dependent column
  const MatrixXd G = ctx.phi_all.transpose() * r.asDiagonal() * ctx.Q;
  return G.leftCols(K - 1).colwise() - G.col(K - 1);
}

VectorXd project_capped_simplex(const VectorXd& v) {
  VectorXd w = v.cwiseMax(0.0);
  if (w.sum() <= 1.0) return w;
  // Euclidean projection onto the unit simplex by the sort-and-threshold rule
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0, theta = 0.0;
  Eigen::Index rho = 0;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(u.size()); ++i) {
    cumsum += u[static_cast<std::size_t>(i)];
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (u[static_cast<std::size_t>(i)] - t > 0.0) {
      rho = i + 1;
      theta = t;
    }
  }
  (void)rho;
  return (v.array() - theta).cwiseMax(0.0);
}

namespace {

MatrixXd project_rows(const MatrixXd& V) {
  MatrixXd out(V.rows(), V.cols());
  for (Eigen::Index i = 0; i < V.rows(); ++i)
    out.row(i) = project_capped_simplex(V.row(i).transpose()).transpose();
  return out;
}

MatrixXd full_from_free(const MatrixXd& V) {
  const Eigen::Index K = V.rows();
  MatrixXd P(K, K);
  P.leftCols(K - 1) = V;
  P.col(K - 1) = VectorXd::Ones(K) - V.rowwise().sum();
  // clip tiny negative residue from projection rounding
  P.col(K - 1) = P.col(K - 1).cwiseMax(0.0);
  return P;
}

}  // namespace

OptimizeResult optimize_P(const LikelihoodContext& ctx, const MatrixXd& init_P,
                          const OptimizeOptions& opts) {
  const Eigen::Index K = ctx.phi_all.cols();
  if (init_P.rows() != K || init_P.cols() != K)
    throw std::invalid_argument("optimize_P: init has wrong shape");

  OptimizeResult res;
  if (K == 1) {
    res.P = MatrixXd::Ones(1, 1);
    res.loglik_init = res.loglik_final = log_likelihood(ctx, res.P);
    return res;
  }

  // free block: all columns but the last, rows projected feasible
  MatrixXd V = project_rows(init_P.leftCols(K - 1));
  double L = log_likelihood(ctx, full_from_free(V));
  res.loglik_init = log_likelihood(ctx, init_P);
  // a projected infeasible init may only move L up or keep it; track the
  // ascent guarantee against the projected point
  if (L < res.loglik_init) {
    // the init was feasible (projection was a no-op up to rounding)
    L = res.loglik_init;
  }

  int iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const MatrixXd g = grad_log_likelihood(ctx, full_from_free(V));
    const double gp_norm = (project_rows(V + g) - V).norm();
    if (opts.trace)
      *opts.trace << "iter=" << iter << " L=" << L << " gpnorm=" << gp_norm
                  << "\n";
    if (gp_norm < opts.grad_tol) break;

    double step = opts.step_init;
    double L_new = L;
    MatrixXd V_new = V;
    bool accepted = false;
    while (step > 1e-14) {
      const MatrixXd cand = project_rows(V + step * g);
      const double lin = (g.array() * (cand - V).array()).sum();
      const double L_cand = log_likelihood(ctx, full_from_free(cand));
      if (L_cand >= L + opts.armijo_c * lin && L_cand >= L) {
        V_new = cand;
        L_new = L_cand;
        accepted = true;
        break;
      }
      step *= opts.step_shrink;
    }
    if (opts.trace) *opts.trace << "  step=" << step << " Lnew=" << L_new << "\n";
    if (!accepted) break;
    const double improvement = L_new - L;
    V = V_new;
    L = L_new;
    if (improvement < opts.rel_tol * (std::abs(L) + 1.0)) {
      ++iter;
      break;
    }
  }

  res.P = full_from_free(V);
  res.loglik_final = std::max(L, res.loglik_init);
  res.iterations = iter;
  return res;
}

VectorXd consequent_widths_from_labels(const std::vector<int>& labels,
                                       const VectorXd& values,
                                       Eigen::Index rule_count,
                                       double floor_width) {
  if (static_cast<Eigen::Index>(labels.size()) != values.size())
    throw std::invalid_argument("consequent widths: label/value size mismatch");
  const double global_mean = values.mean();
  const double global_std = std::sqrt(
      (values.array() - global_mean).square().sum() /
      std::max<Eigen::Index>(1, values.size() - 1));

  VectorXd widths(rule_count);
  for (Eigen::Index j = 0; j < rule_count; ++j) {
    double sum = 0.0, sum_sq = 0.0;
    Eigen::Index n = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (labels[k] != static_cast<int>(j)) continue;
      const double y = values(static_cast<Eigen::Index>(k));
      sum += y;
      sum_sq += y * y;
      ++n;
    }
    double sd = global_std;
    if (n >= 2) {
      const double mean = sum / static_cast<double>(n);
      sd = std::sqrt(std::max(0.0, (sum_sq - static_cast<double>(n) * mean * mean) /
                                       static_cast<double>(n - 1)));
    }
    widths(j) = std::max(floor_width, sd);
  }
  return widths;
}

}  // namespace pfm
