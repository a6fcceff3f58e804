#ifndef PFM_CRBM_HPP
#define PFM_CRBM_HPP

#include <cstdint>
#include <functional>
#include <string>

#include "pfm/common.hpp"
#include "pfm/dataset.hpp"

namespace pfm {

struct RbmTrainConfig {
  double learning_rate = 0.2;
  int epochs = 10;
  int gibbs_steps = 1;
  std::uint64_t seed = 1;
  double init_scale = 0.01;  // std-dev of the Gaussian weight init
  int hidden_units = 0;      // 0 = same as the visible width
  int minibatch = 1;
  bool shuffle = false;
  void validate() const;
};

/// Restricted Boltzmann machine with continuous visible units on [0,1].
/// Hidden units are binary with sigmoid conditionals; the visible
/// conditional given a hidden sample is the truncated exponential
/// density a e^{a x}/(e^a - 1) with a_j = (V^T hbar)_j + b_vis_j.
struct RbmModel {
  MatrixXd V;       // m x n
  VectorXd b_vis;   // n
  VectorXd c_hid;   // m
  RbmTrainConfig trained_with;

  Eigen::Index hidden_size() const { return V.rows(); }
  Eigen::Index visible_size() const { return V.cols(); }
  void validate() const;
};

VectorXd hidden_probs(const RbmModel& model, const VectorXd& x);
VectorXd sample_hidden(const RbmModel& model, const VectorXd& x, Rng& rng);

// scalar conditionals of one visible unit; the |a| < 1e-8 uniform limits
// are handled internally
double visible_density(double a, double x);
double visible_cdf(double a, double x);
double visible_expected(double a);
double sample_visible_unit(double a, double u);

VectorXd visible_activation(const RbmModel& model, const VectorXd& h_bar);
VectorXd sample_visible(const RbmModel& model, const VectorXd& h_bar, Rng& rng);

double free_energy(const RbmModel& model, const VectorXd& x);

using Reconstruction =
    std::function<VectorXd(const RbmModel&, const VectorXd&, Rng&)>;

VectorXd gibbs_reconstruct(const RbmModel& model, const VectorXd& x, Rng& rng,
                           int steps = 1);

void cd1_step(RbmModel& model, const MatrixXd& batch, double eta, Rng& rng,
              int gibbs_steps = 1);
void cd1_step_with_reconstruction(RbmModel& model, const MatrixXd& batch,
                                  double eta, Rng& rng,
                                  const Reconstruction& recon);

RbmModel train_rbm(const MatrixXd& data, RbmTrainConfig cfg);
RbmModel train_rbm(const Dataset& data, const RbmTrainConfig& cfg);

VectorXd transform(const RbmModel& model, const VectorXd& x);
MatrixXd transform_all(const RbmModel& model, const MatrixXd& X);

/// Mean squared reconstruction error ||x - E[x|hbar]||^2 over the rows of X,
/// with hbar sampled once per row.
double reconstruction_error(const RbmModel& model, const MatrixXd& X, Rng& rng);

void save_rbm(const RbmModel& model, const std::string& path);
RbmModel load_rbm(const std::string& path);

}  // namespace pfm

#endif  // PFM_CRBM_HPP
