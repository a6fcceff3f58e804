#include "pfm/crbm.hpp"

#include <algorithm>
#include <numeric>

#include "pfm/kv.hpp"

namespace pfm {

namespace {
constexpr double kAEps = 1e-8;  // below this |a| the conditionals use uniform limits
}

void RbmTrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("rbm: learning rate must be > 0");
  if (epochs < 1) throw ConfigError("rbm: epochs must be >= 1");
  if (gibbs_steps < 1) throw ConfigError("rbm: gibbs steps must be >= 1");
  if (minibatch < 1) throw ConfigError("rbm: minibatch must be >= 1");
  if (hidden_units < 0) throw ConfigError("rbm: hidden units must be >= 0");
}

void RbmModel::validate() const {
  if (V.rows() < 1 || V.cols() < 1) throw ConfigError("rbm: empty model");
  if (b_vis.size() != V.cols() || c_hid.size() != V.rows())
    throw ConfigError("rbm: bias dimensions do not match V");
  if (!V.allFinite() || !b_vis.allFinite() || !c_hid.allFinite())
    throw NumericalError("rbm: non-finite parameter");
}

VectorXd hidden_probs(const RbmModel& model, const VectorXd& x) {
  if (x.size() != model.visible_size())
    throw std::invalid_argument("hidden_probs: x has wrong dimension");
  VectorXd z = model.V * x + model.c_hid;
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = sigmoid(z(i));
  return z;
}

VectorXd sample_hidden(const RbmModel& model, const VectorXd& x, Rng& rng) {
  VectorXd p = hidden_probs(model, x);
  for (Eigen::Index i = 0; i < p.size(); ++i)
    p(i) = rng.uniform() < p(i) ? 1.0 : 0.0;
  return p;
}

double visible_density(double a, double x) {
  if (std::abs(a) < kAEps) return 1.0;
  if (a > 0.0) return a * std::exp(a * (x - 1.0)) / (-std::expm1(-a));
  return a * std::exp(a * x) / std::expm1(a);
}

double visible_cdf(double a, double x) {
  if (std::abs(a) < kAEps) return x;
  if (a > 0.0)
    return std::exp(a * (x - 1.0)) * (-std::expm1(-a * x)) / (-std::expm1(-a));
  return std::expm1(a * x) / std::expm1(a);
}

double visible_expected(double a) {
  if (std::abs(a) < kAEps) return 0.5;
  return 1.0 / (-std::expm1(-a)) - 1.0 / a;
}

double sample_visible_unit(double a, double u) {
  if (std::abs(a) < kAEps) return u;
  double x;
  if (a > 0.0) {
    const double inner = u + (1.0 - u) * std::exp(-a);
    x = inner > 0.0 ? 1.0 + std::log(inner) / a : 0.0;
  } else {
    x = std::log1p(u * std::expm1(a)) / a;
  }
  return std::clamp(x, 0.0, 1.0);
}

VectorXd visible_activation(const RbmModel& model, const VectorXd& h_bar) {
  if (h_bar.size() != model.hidden_size())
    throw std::invalid_argument("visible_activation: h has wrong dimension");
  return model.V.transpose() * h_bar + model.b_vis;
}

VectorXd sample_visible(const RbmModel& model, const VectorXd& h_bar, Rng& rng) {
  VectorXd a = visible_activation(model, h_bar);
  for (Eigen::Index j = 0; j < a.size(); ++j)
    a(j) = sample_visible_unit(a(j), rng.uniform());
  return a;
}

double free_energy(const RbmModel& model, const VectorXd& x) {
  if (x.size() != model.visible_size())
    throw std::invalid_argument("free_energy: x has wrong dimension");
  const VectorXd z = model.V * x + model.c_hid;
  double f = -model.b_vis.dot(x);
  for (Eigen::Index i = 0; i < z.size(); ++i) f -= softplus(z(i));
  return f;
}

VectorXd gibbs_reconstruct(const RbmModel& model, const VectorXd& x, Rng& rng,
                           int steps) {
  VectorXd v = x;
  for (int s = 0; s < steps; ++s)
    v = sample_visible(model, sample_hidden(model, v, rng), rng);
  return v;
}

void cd1_step_with_reconstruction(RbmModel& model, const MatrixXd& batch,
                                  double eta, Rng& rng,
                                  const Reconstruction& recon) {
  if (batch.cols() != model.visible_size())
    throw std::invalid_argument("cd1_step: batch has wrong width");
  const Eigen::Index bsz = batch.rows();
  if (bsz == 0) return;

  MatrixXd dV = MatrixXd::Zero(model.V.rows(), model.V.cols());
  VectorXd db = VectorXd::Zero(model.b_vis.size());
  VectorXd dc = VectorXd::Zero(model.c_hid.size());
  for (Eigen::Index r = 0; r < bsz; ++r) {
    const VectorXd x = batch.row(r).transpose();
    const VectorXd x_tilde = recon(model, x, rng);
    const VectorXd h_data = hidden_probs(model, x);
    const VectorXd h_model = hidden_probs(model, x_tilde);
    dV += h_data * x.transpose() - h_model * x_tilde.transpose();
    db += x - x_tilde;
    dc += h_data - h_model;
  }
  const double scale = eta / static_cast<double>(bsz);
  model.V += scale * dV;
  model.b_vis += scale * db;
  model.c_hid += scale * dc;
}

void cd1_step(RbmModel& model, const MatrixXd& batch, double eta, Rng& rng,
              int gibbs_steps) {
  cd1_step_with_reconstruction(
      model, batch, eta, rng,
      [gibbs_steps](const RbmModel& m, const VectorXd& x, Rng& r) {
        return gibbs_reconstruct(m, x, r, gibbs_steps);
      });
}

RbmModel train_rbm(const MatrixXd& data, RbmTrainConfig cfg) {
  cfg.validate();
  if (data.rows() == 0) throw DataError("rbm: empty training data");
  const Eigen::Index n = data.cols();
  const Eigen::Index m = cfg.hidden_units > 0 ? cfg.hidden_units : n;

  Rng rng(derive_seed(cfg.seed, "rbm"));
  RbmModel model;
  model.V.resize(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      model.V(i, j) = cfg.init_scale * rng.normal();
  model.b_vis = VectorXd::Zero(n);
  model.c_hid = VectorXd::Zero(m);
  model.trained_with = cfg;

  std::vector<Eigen::Index> order(data.rows());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle) {
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1],
                  order[static_cast<std::size_t>(rng.uniform() * i)]);
    }
    for (std::size_t pos = 0; pos < order.size();
         pos += static_cast<std::size_t>(cfg.minibatch)) {
      const auto take = std::min<std::size_t>(cfg.minibatch, order.size() - pos);
      MatrixXd batch(take, n);
      for (std::size_t r = 0; r < take; ++r)
        batch.row(static_cast<Eigen::Index>(r)) = data.row(order[pos + r]);
      cd1_step(model, batch, cfg.learning_rate, rng, cfg.gibbs_steps);
    }
  }
  model.validate();
  return model;
}

RbmModel train_rbm(const Dataset& data, const RbmTrainConfig& cfg) {
  return train_rbm(data.X, cfg);
}

VectorXd transform(const RbmModel& model, const VectorXd& x) {
  return hidden_probs(model, x);
}

MatrixXd transform_all(const RbmModel& model, const MatrixXd& X) {
  MatrixXd H(X.rows(), model.hidden_size());
  for (Eigen::Index r = 0; r < X.rows(); ++r)
    H.row(r) = hidden_probs(model, X.row(r).transpose()).transpose();
  return H;
}

double reconstruction_error(const RbmModel& model, const MatrixXd& X, Rng& rng) {
  if (X.rows() == 0) throw DataError("reconstruction_error: empty data");
  double total = 0.0;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const VectorXd x = X.row(r).transpose();
    const VectorXd a = visible_activation(model, sample_hidden(model, x, rng));
    double sq = 0.0;
    for (Eigen::Index j = 0; j < a.size(); ++j) {
      const double d = x(j) - visible_expected(a(j));
      sq += d * d;
    }
    total += sq;
  }
  return total / static_cast<double>(X.rows());
}

void save_rbm(const RbmModel& model, const std::string& path) {
  kv::File f("rbm");
  f.set("m", static_cast<std::int64_t>(model.hidden_size()));
  f.set("n", static_cast<std::int64_t>(model.visible_size()));
  f.set("V", model.V);
  f.set("b_vis", model.b_vis);
  f.set("c_hid", model.c_hid);
  const RbmTrainConfig& c = model.trained_with;
  f.set("cfg.learning_rate", c.learning_rate);
  f.set("cfg.epochs", static_cast<std::int64_t>(c.epochs));
  f.set("cfg.gibbs_steps", static_cast<std::int64_t>(c.gibbs_steps));
  f.set("cfg.seed", static_cast<std::int64_t>(c.seed));
  f.set("cfg.init_scale", c.init_scale);
  f.set("cfg.hidden_units", static_cast<std::int64_t>(c.hidden_units));
  f.set("cfg.minibatch", static_cast<std::int64_t>(c.minibatch));
  f.set("cfg.shuffle", static_cast<std::int64_t>(c.shuffle ? 1 : 0));
  f.save(path);
}

RbmModel load_rbm(const std::string& path) {
  kv::File f = kv::File::load(path, "rbm");
  RbmModel model;
  model.V = f.get_matrix("V");
  model.b_vis = f.get_vector("b_vis");
  model.c_hid = f.get_vector("c_hid");
  RbmTrainConfig c;
  c.learning_rate = f.get_double("cfg.learning_rate");
  c.epochs = static_cast<int>(f.get_int("cfg.epochs"));
  c.gibbs_steps = static_cast<int>(f.get_int("cfg.gibbs_steps"));
  c.seed = static_cast<std::uint64_t>(f.get_int("cfg.seed"));
  c.init_scale = f.get_double("cfg.init_scale");
  c.hidden_units = static_cast<int>(f.get_int("cfg.hidden_units"));
  c.minibatch = static_cast<int>(f.get_int("cfg.minibatch"));
  c.shuffle = f.get_int("cfg.shuffle") != 0;
  model.trained_with = c;
  model.validate();
  return model;
}

}  // namespace pfm
