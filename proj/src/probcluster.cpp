#include "pfm/probcluster.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

#include "pfm/kv.hpp"

namespace pfm {

void ClusterConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("cluster: alpha must be in (0,1)");
  if (!(psi > 0.0)) throw ConfigError("cluster: psi must be > 0");
  if (lambda < 0.0) throw ConfigError("cluster: lambda must be >= 0");
  if (!(pa_c > 0.0)) throw ConfigError("cluster: C must be > 0");
  if (sweeps < 1) throw ConfigError("cluster: sweeps must be >= 1");
  if (!(new_cluster_threshold > 0.0 && new_cluster_threshold < 1.0))
    throw ConfigError("cluster: new-cluster threshold must be in (0,1)");
  if (t_dof < 1) throw ConfigError("cluster: t dof must be >= 1");
  if (!(bandwidth_scale > 0.0)) throw ConfigError("cluster: bandwidth scale must be > 0");
  if (novelty_sigmas < 0.0) throw ConfigError("cluster: novelty sigmas must be >= 0");
}

Eigen::Index ClusterState::assigned_count() const {
  Eigen::Index total = 0;
  for (Eigen::Index c : counts) total += c;
  return total;
}

void ClusterState::check_consistent() const {
  if (deltas.size() != counts.size() || deltas.size() != means.size())
    throw NumericalError("cluster state: deltas/means/counts size mismatch");
  Eigen::Index labeled = 0;
  for (int l : labels) {
    if (l < 0) continue;
    if (l >= static_cast<int>(deltas.size()))
      throw NumericalError("cluster state: label indexes a dead cluster");
    ++labeled;
  }
  if (labeled != assigned_count())
    throw NumericalError("cluster state: counts do not match labels");
  for (const VectorXd& d : deltas)
    if (!d.allFinite()) throw NumericalError("cluster state: non-finite delta");
}

VectorXd crp_weights(const ClusterState& state, Eigen::Index k_index,
                     const ClusterConfig& cfg) {
  if (k_index < 1) throw std::invalid_argument("crp_weights: k_index must be >= 1");
  const Eigen::Index K = state.cluster_count();
  const double denom = static_cast<double>(k_index) + cfg.psi;
  VectorXd w(K + 1);
  for (Eigen::Index j = 0; j < K; ++j)
    w(j) = std::max(static_cast<double>(state.counts[j]) - cfg.alpha, 0.0) / denom;
  w(K) = (cfg.psi + static_cast<double>(K) * cfg.alpha) / denom;
  return w;
}

double correlation_likelihood(const VectorXd& h, const VectorXd& delta,
                              double lambda) {
  if (h.size() != delta.size())
    throw std::invalid_argument("correlation_likelihood: dimension mismatch");
  return std::exp(h.dot(delta) - lambda * delta.squaredNorm());
}

namespace {

// Fresh cluster parameters: a multivariate-t draw located at the
// likelihood-maximizing direction h/(2 lambda), so the new-cluster option
// competes on how poorly the existing clusters match h rather than on the
// scale of the features.
VectorXd draw_fresh_delta(const VectorXd& h, const ClusterConfig& cfg,
                          Rng& rng) {
  VectorXd d(h.size());
  for (Eigen::Index i = 0; i < h.size(); ++i)
    d(i) = cfg.t_scale * rng.student_t(cfg.t_dof);
  if (cfg.lambda > 0.0) d += h / (2.0 * cfg.lambda);
  return d;
}

}  // namespace

int sample_label(const VectorXd& h, ClusterState& state, Eigen::Index k_index,
                 const ClusterConfig& cfg, Rng& rng) {
  const Eigen::Index K = state.cluster_count();

  if (K == 0) {
    state.deltas.push_back(draw_fresh_delta(h, cfg, rng));
    state.means.push_back(h);
    state.counts.push_back(1);
    return 0;
  }

  const VectorXd prior = crp_weights(state, k_index, cfg);
  const VectorXd fresh = draw_fresh_delta(h, cfg, rng);
  const bool with_kernel = state.kernel_width.size() == h.size();

  // log-space weights: prior x correlation likelihood x kernel
  // responsibility, option K is "new"
  VectorXd lw(K + 1);
  for (Eigen::Index j = 0; j < K; ++j) {
    if (!(prior(j) > 0.0)) {
      lw(j) = -std::numeric_limits<double>::infinity();
      continue;
    }
    double v = std::log(prior(j)) + h.dot(state.deltas[j]) -
               cfg.lambda * state.deltas[j].squaredNorm();
    if (with_kernel)
      v -= 0.5 * ((h - state.means[j]).array() / state.kernel_width.array())
                     .square()
                     .sum();
    lw(j) = v;
  }
  lw(K) = std::log(prior(K)) + h.dot(fresh) - cfg.lambda * fresh.squaredNorm();
  if (with_kernel) lw(K) -= 0.5 * cfg.novelty_sigmas * cfg.novelty_sigmas;

  const double peak = lw.maxCoeff();
  VectorXd p = (lw.array() - peak).exp();
  p /= p.sum();

  // creation needs both an implausible posterior for every existing
  // cluster and genuine geometric novelty; the distance gate stops the
  // cascade where freshly opened singletons make every later sample look
  // novel through the growing psi + K*alpha prior mass
  bool geometrically_novel = true;
  if (with_kernel) {
    double min_sq = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < K; ++j)
      min_sq = std::min(min_sq,
                        ((h - state.means[j]).array() / state.kernel_width.array())
                            .square()
                            .sum());
    geometrically_novel =
        min_sq > cfg.novelty_sigmas * cfg.novelty_sigmas;
  }

  int label;
  if (p.head(K).maxCoeff() < cfg.new_cluster_threshold && geometrically_novel) {
    label = static_cast<int>(K);
  } else {
    std::vector<double> weights(p.data(), p.data() + p.size() - 1);
    label = static_cast<int>(rng.categorical(weights));
  }

  if (label == static_cast<int>(K)) {
    state.deltas.push_back(fresh);
    state.means.push_back(VectorXd::Zero(h.size()));
    state.counts.push_back(0);
  }
  auto& n = state.counts[static_cast<std::size_t>(label)];
  VectorXd& mean = state.means[static_cast<std::size_t>(label)];
  mean = (mean * static_cast<double>(n) + h) / static_cast<double>(n + 1);
  n += 1;
  return label;
}

int predict_label(const VectorXd& h, const ClusterState& state) {
  const Eigen::Index K = state.cluster_count();
  if (K < 1) throw std::invalid_argument("predict_label: no clusters");
  int best = 0;
  double best_dot = h.dot(state.deltas[0]);
  for (Eigen::Index j = 1; j < K; ++j) {
    const double d = h.dot(state.deltas[static_cast<std::size_t>(j)]);
    if (d > best_dot) {
      best_dot = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

double margin(const ClusterState& state, const VectorXd& h, int l_true) {
  if (l_true < 0 || l_true >= state.cluster_count())
    throw std::invalid_argument("margin: invalid label");
  const int l_hat = predict_label(h, state);
  return h.dot(state.deltas[static_cast<std::size_t>(l_true)]) -
         h.dot(state.deltas[static_cast<std::size_t>(l_hat)]);
}

double hinge_from_margin(double margin_value) {
  return margin_value >= 1.0 ? 0.0 : 1.0 - margin_value;
}

double hinge_loss(const ClusterState& state, const VectorXd& h, int l_true) {
  return hinge_from_margin(margin(state, h, l_true));
}

void pa_update(ClusterState& state, const VectorXd& h, int l_true, double c) {
  if (l_true < 0 || l_true >= state.cluster_count())
    throw std::invalid_argument("pa_update: invalid label");
  const double h_sq = h.squaredNorm();
  if (h_sq == 0.0) {
    std::cerr << "pfm: pa_update skipped, zero feature vector\n";
    return;
  }
  const int l_hat = predict_label(h, state);
  const double loss = hinge_from_margin(
      h.dot(state.deltas[static_cast<std::size_t>(l_true)]) -
      h.dot(state.deltas[static_cast<std::size_t>(l_hat)]));
  if (loss == 0.0 || l_hat == l_true) return;  // passive, or add/subtract cancel
  const double tau = std::min(c, loss / h_sq);
  if (tau == 0.0) return;
  state.deltas[static_cast<std::size_t>(l_true)] += tau * h;
  state.deltas[static_cast<std::size_t>(l_hat)] -= tau * h;
}

std::pair<ClusterState, ClusterSummary> fit_clusters(const MatrixXd& H,
                                                     const ClusterConfig& cfg) {
  cfg.validate();
  const Eigen::Index N = H.rows();
  if (N < 1) throw DataError("cluster fit: empty feature matrix");

  Rng rng(derive_seed(cfg.seed, "cluster"));
  ClusterState state;
  state.labels.assign(static_cast<std::size_t>(N), -1);

  // per-dimension kernel widths from the feature spread, fixed for the
  // whole fit; near-constant dimensions are floored so they do not
  // dominate the scaled distances
  const Eigen::RowVectorXd grand_mean = H.colwise().mean();
  VectorXd dim_std =
      (H.rowwise() - grand_mean).array().square().colwise().mean().sqrt();
  const double rms_std = std::sqrt(dim_std.array().square().mean());
  state.kernel_width = VectorXd(H.cols());
  for (Eigen::Index i = 0; i < H.cols(); ++i)
    state.kernel_width(i) = std::max(
        1e-9, cfg.bandwidth_scale * std::max(dim_std(i), 0.1 * rms_std));

  for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
    Eigen::Index changed = 0;
    for (Eigen::Index k = 0; k < N; ++k) {
      const VectorXd h = H.row(k).transpose();
      const int old = state.labels[static_cast<std::size_t>(k)];
      if (old >= 0) {
        // remove the sample before re-drawing its label
        auto& n = state.counts[static_cast<std::size_t>(old)];
        VectorXd& mean = state.means[static_cast<std::size_t>(old)];
        if (n > 1)
          mean = (mean * static_cast<double>(n) - h) / static_cast<double>(n - 1);
        n -= 1;
      }
      const int label = sample_label(h, state, k + 1, cfg, rng);
      state.labels[static_cast<std::size_t>(k)] = label;
      if (label != old) ++changed;
      pa_update(state, h, label, cfg.pa_c);
    }
    state.sweep_change_fraction.push_back(static_cast<double>(changed) /
                                          static_cast<double>(N));
    state.check_consistent();
  }

  // drop empty clusters and re-index labels
  std::vector<int> remap(state.deltas.size(), -1);
  ClusterState packed;
  packed.labels = state.labels;
  packed.sweep_change_fraction = state.sweep_change_fraction;
  packed.kernel_width = state.kernel_width;
  for (std::size_t j = 0; j < state.deltas.size(); ++j) {
    if (state.counts[j] > 0) {
      remap[j] = static_cast<int>(packed.deltas.size());
      packed.deltas.push_back(state.deltas[j]);
      packed.means.push_back(state.means[j]);
      packed.counts.push_back(state.counts[j]);
    }
  }
  for (auto& l : packed.labels) l = remap[static_cast<std::size_t>(l)];
  packed.check_consistent();

  const Eigen::Index K = packed.cluster_count();
  ClusterSummary summary;
  summary.K = K;
  summary.counts = packed.counts;
  summary.centers = MatrixXd::Zero(K, H.cols());
  for (Eigen::Index k = 0; k < N; ++k)
    summary.centers.row(packed.labels[static_cast<std::size_t>(k)]) += H.row(k);
  for (Eigen::Index j = 0; j < K; ++j)
    summary.centers.row(j) /= static_cast<double>(packed.counts[static_cast<std::size_t>(j)]);

  return {std::move(packed), std::move(summary)};
}

void save_summary(const ClusterSummary& summary, const ClusterConfig& cfg,
                  const std::string& path) {
  kv::File f("cluster-summary");
  f.set("K", static_cast<std::int64_t>(summary.K));
  f.set("centers", summary.centers);
  VectorXd counts(summary.K);
  for (Eigen::Index j = 0; j < summary.K; ++j)
    counts(j) = static_cast<double>(summary.counts[static_cast<std::size_t>(j)]);
  f.set("counts", counts);
  f.set("cfg.alpha", cfg.alpha);
  f.set("cfg.psi", cfg.psi);
  f.set("cfg.lambda", cfg.lambda);
  f.set("cfg.pa_c", cfg.pa_c);
  f.set("cfg.sweeps", static_cast<std::int64_t>(cfg.sweeps));
  f.set("cfg.new_cluster_threshold", cfg.new_cluster_threshold);
  f.set("cfg.t_dof", static_cast<std::int64_t>(cfg.t_dof));
  f.set("cfg.t_scale", cfg.t_scale);
  f.set("cfg.seed", static_cast<std::int64_t>(cfg.seed));
  f.save(path);
}

ClusterSummary load_summary(const std::string& path) {
  kv::File f = kv::File::load(path, "cluster-summary");
  ClusterSummary s;
  s.K = f.get_int("K");
  s.centers = f.get_matrix("centers");
  const VectorXd counts = f.get_vector("counts");
  for (Eigen::Index j = 0; j < counts.size(); ++j)
    s.counts.push_back(static_cast<Eigen::Index>(counts(j)));
  return s;
}

}  // namespace pfm
