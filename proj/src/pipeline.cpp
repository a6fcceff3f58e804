#include "pfm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pfm/elm.hpp"
#include "pfm/kv.hpp"

namespace pfm {

using ordered_json = nlohmann::ordered_json;

void PipelineConfig::validate() const {
  reg.validate();
  rbm.validate();
  cluster.validate();
  if (n_train < 1) throw ConfigError("pipeline: n_train must be >= 1");
  if (norm_scope != "train" && norm_scope != "all")
    throw ConfigError("pipeline: norm scope must be 'train' or 'all'");
  if (!(sigma_b_floor > 0.0))
    throw ConfigError("pipeline: sigma_b floor must be > 0");
  if (sigma_b_mode != "target" && sigma_b_mode != "residual")
    throw ConfigError("pipeline: sigma_b mode must be 'target' or 'residual'");
  if (!(prob_train_mse_guard >= 1.0))
    throw ConfigError("pipeline: prob train-MSE guard must be >= 1");
  if (width_mode != "kernel" && width_mode != "random")
    throw ConfigError("pipeline: width mode must be 'kernel' or 'random'");
  if (!(width_scale > 0.0))
    throw ConfigError("pipeline: width scale must be > 0");
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2]
               : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Metrics evaluate_predictions(const VectorXd& y_true, const VectorXd& y_pred,
                             const NormParams& norm) {
  if (y_true.size() != y_pred.size() || y_true.size() == 0)
    throw std::invalid_argument("evaluate: prediction size mismatch or empty");
  Metrics m;
  m.mse = (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size());
  m.rms = std::sqrt(m.mse);
  const double span = norm.y_max - norm.y_min;
  m.mse_denorm = m.mse * span * span;
  m.rms_denorm = m.rms * span;
  return m;
}

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  template <typename F>
  auto time(const std::string& stage, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      sink_[stage] += seconds_since(t0);
    } else {
      auto out = f();
      sink_[stage] += seconds_since(t0);
      return out;
    }
  }

 private:
  static double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
  std::map<std::string, double>& sink_;
};

struct Prepared {
  Dataset train, test;
  NormParams norm;
  Eigen::Index raw_pairs = 0;
  Eigen::Index regressor_rows = 0;
};

Prepared prepare(const PipelineConfig& cfg, const TimeSeries& ts) {
  const Dataset ds_raw = build_regressors(ts, cfg.reg);
  auto [train_raw, test_raw] = split(ds_raw, cfg.n_train);
  // train-scoped statistics avoid leaking the test range into the model
  const NormParams norm =
      compute_norm(cfg.norm_scope == "all" ? ds_raw : train_raw);
  Prepared p;
  p.train = apply_norm(train_raw, norm);
  p.test = apply_norm(test_raw, norm);
  p.norm = norm;
  p.raw_pairs = ts.length();
  p.regressor_rows = ds_raw.rows();
  return p;
}

RbmTrainConfig resolve_rbm_config(const PipelineConfig& cfg) {
  RbmTrainConfig rc = cfg.rbm;
  rc.seed = derive_seed(cfg.seed, "rbm-stage");
  return rc;
}

VectorXd predict_rows(const FuzzyModel& model, const MatrixXd& H,
                      bool use_prob_rules) {
  VectorXd out(H.rows());
  for (Eigen::Index k = 0; k < H.rows(); ++k) {
    const VectorXd h = H.row(k).transpose();
    out(k) = use_prob_rules ? infer_probabilistic(model, h)
                            : infer_standard(model, h);
  }
  return out;
}

MatrixXd firing_matrix(const FuzzyModel& model, const MatrixXd& H) {
  MatrixXd phi(H.rows(), model.K);
  for (Eigen::Index k = 0; k < H.rows(); ++k)
    phi.row(k) = firing_strengths(model, H.row(k).transpose()).transpose();
  return phi;
}

std::pair<ModelBundle, RunReport> run_prepared(
    const PipelineConfig& cfg, const Prepared& prep,
    const std::optional<RbmModel>& shared_rbm) {
  RunReport rep;
  rep.seed = cfg.seed;
  rep.use_rbm = cfg.use_rbm;
  rep.use_prob_rules = cfg.use_prob_rules;
  rep.raw_pairs = prep.raw_pairs;
  rep.regressor_rows = prep.regressor_rows;
  rep.train_rows = prep.train.rows();
  rep.test_rows = prep.test.rows();
  rep.resolved = cfg;
  StageTimer timer(rep.timings_s);

  std::optional<RbmModel> rbm;
  if (cfg.use_rbm) {
    if (shared_rbm)
      rbm = *shared_rbm;
    else
      rbm = timer.time("rbm", [&] { return train_rbm(prep.train.X, resolve_rbm_config(cfg)); });
  }

  const MatrixXd h_train = cfg.use_rbm ? timer.time("transform", [&] {
    return transform_all(*rbm, prep.train.X);
  })
                                       : prep.train.X;
  const MatrixXd h_test = cfg.use_rbm ? transform_all(*rbm, prep.test.X)
                                      : prep.test.X;

  ClusterConfig ccfg = cfg.cluster;
  ccfg.seed = derive_seed(cfg.seed, "cluster-stage");
  auto [state, summary] = timer.time("cluster", [&] {
    return fit_clusters(h_train, ccfg);
  });
  rep.K = summary.K;
  rep.cluster_sweep_change_fraction = state.sweep_change_fraction;

  FuzzyModel model =
      cfg.width_mode == "kernel"
          ? build_from_clusters(summary, state.kernel_width, cfg.width_scale)
          : build_from_clusters(summary, derive_seed(cfg.seed, "widths-stage"));

  const MatrixXd phi_train = timer.time("fuzzy_elm", [&] {
    return firing_matrix(model, h_train);
  });
  timer.time("fuzzy_elm", [&] {
    model.W = solve_consequents(phi_train.transpose(),
                                prep.train.Y.transpose());
  });

  if (cfg.use_prob_rules) {
    timer.time("probopt", [&] {
      VectorXd width_basis = prep.train.Y;
      if (cfg.sigma_b_mode == "residual")
        width_basis -= (model.W * phi_train.transpose()).transpose();
      model.sigma_b = consequent_widths_from_labels(
          state.labels, width_basis, model.K, cfg.sigma_b_floor);
      const LikelihoodContext ctx = LikelihoodContext::build(
          phi_train, prep.train.Y, model.W.transpose(), model.sigma_b);
      const OptimizeResult res =
          optimize_P(ctx, MatrixXd::Identity(model.K, model.K), cfg.probopt);
      rep.loglik_init = res.loglik_init;
      rep.loglik_final = res.loglik_final;
      // Likelihood and squared error are different objectives; every
      // P-model is also expressible as a standard model, so the ascent
      // cannot beat the identity's training MSE and may trade too much
      // of it away. Keep the optimized P only while the trade stays
      // within the guard factor.
      const VectorXd base_pred = (model.W * phi_train.transpose()).transpose();
      const double base_mse = (prep.train.Y - base_pred).squaredNorm() /
                              static_cast<double>(prep.train.rows());
      const VectorXd opt_pred =
          (model.W * (res.P.transpose() * phi_train.transpose())).transpose();
      const double opt_mse = (prep.train.Y - opt_pred).squaredNorm() /
                             static_cast<double>(prep.train.rows());
      if (opt_mse <= cfg.prob_train_mse_guard * base_mse) model.P = res.P;
      if (cfg.resolve_w) {
        const MatrixXd psi_weighted = model.P.transpose() * phi_train.transpose();
        model.W = solve_consequents(psi_weighted, prep.train.Y.transpose());
      }
    });
  }

  timer.time("evaluate", [&] {
    const VectorXd pred_train = predict_rows(model, h_train, cfg.use_prob_rules);
    const VectorXd pred_test = predict_rows(model, h_test, cfg.use_prob_rules);
    rep.train = evaluate_predictions(prep.train.Y, pred_train, prep.norm);
    rep.test = evaluate_predictions(prep.test.Y, pred_test, prep.norm);
  });

  ModelBundle bundle;
  bundle.fuzzy = std::move(model);
  bundle.rbm = std::move(rbm);
  bundle.norm = prep.norm;
  bundle.reg = cfg.reg;
  bundle.use_prob_rules = cfg.use_prob_rules;
  return {std::move(bundle), std::move(rep)};
}

}  // namespace

std::pair<ModelBundle, RunReport> run_pipeline(const PipelineConfig& cfg,
                                               const TimeSeries& ts) {
  cfg.validate();
  auto out = run_prepared(cfg, prepare(cfg, ts), std::nullopt);
  double total = 0.0;
  for (const auto& [stage, secs] : out.second.timings_s) total += secs;
  out.second.timings_s["total"] = total;
  return out;
}

std::pair<ModelBundle, RunReport> run_pipeline(const PipelineConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("pipeline: no data file given");
  return run_pipeline(cfg,
                      load_csv(cfg.data_path, cfg.u_column, cfg.y_column));
}

AblationGrid ablate(const PipelineConfig& cfg,
                    const std::vector<std::uint64_t>& seeds,
                    const TimeSeries& ts) {
  cfg.validate();
  if (seeds.empty()) throw ConfigError("ablate: need at least one seed");
  const Prepared prep = prepare(cfg, ts);

  AblationGrid grid;
  for (const std::uint64_t seed : seeds) {
    PipelineConfig base = cfg;
    base.seed = seed;
    // one RBM per seed, shared by both RBM cells of the grid
    base.use_rbm = true;
    const RbmModel rbm = train_rbm(prep.train.X, resolve_rbm_config(base));
    for (int prob = 0; prob < 2; ++prob) {
      for (int with_rbm = 0; with_rbm < 2; ++with_rbm) {
        PipelineConfig cell = base;
        cell.use_prob_rules = prob == 1;
        cell.use_rbm = with_rbm == 1;
        auto [bundle, rep] = run_prepared(
            cell, prep,
            with_rbm ? std::optional<RbmModel>(rbm) : std::nullopt);
        grid.reports[prob][with_rbm].push_back(std::move(rep));
      }
    }
  }
  for (int prob = 0; prob < 2; ++prob) {
    for (int with_rbm = 0; with_rbm < 2; ++with_rbm) {
      std::vector<double> train_mse, test_mse;
      for (const RunReport& r : grid.reports[prob][with_rbm]) {
        train_mse.push_back(r.train.mse);
        test_mse.push_back(r.test.mse);
      }
      grid.median_train_mse[prob][with_rbm] = median(train_mse);
      grid.median_test_mse[prob][with_rbm] = median(test_mse);
    }
  }
  return grid;
}

AblationGrid ablate(const PipelineConfig& cfg,
                    const std::vector<std::uint64_t>& seeds) {
  if (cfg.data_path.empty()) throw ConfigError("ablate: no data file given");
  return ablate(cfg, seeds, load_csv(cfg.data_path, cfg.u_column, cfg.y_column));
}

void emit_predictions(const FuzzyModel& model, const MatrixXd& features,
                      const VectorXd& y_true, const NormParams& norm,
                      bool use_prob_rules, const std::string& path) {
  if (features.rows() == 0) throw DataError("emit_predictions: empty dataset");
  if (features.rows() != y_true.size())
    throw std::invalid_argument("emit_predictions: feature/target mismatch");
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << "k,y_true,y_pred,residual,y_true_denorm,y_pred_denorm,residual_denorm\n";
  const double span = norm.y_max - norm.y_min;
  for (Eigen::Index k = 0; k < features.rows(); ++k) {
    const VectorXd h = features.row(k).transpose();
    const double pred = use_prob_rules ? infer_probabilistic(model, h)
                                       : infer_standard(model, h);
    const double truth = y_true(k);
    const double resid = truth - pred;
    out << k << "," << kv::format_double(truth) << ","
        << kv::format_double(pred) << "," << kv::format_double(resid) << ","
        << kv::format_double(truth * span + norm.y_min) << ","
        << kv::format_double(pred * span + norm.y_min) << ","
        << kv::format_double(resid * span) << "\n";
  }
  if (!out) throw DataError("write to '" + path + "' failed");
}

namespace {

ordered_json config_json(const PipelineConfig& c) {
  ordered_json j;
  j["dataset"] = {{"data_path", c.data_path}, {"u_column", c.u_column},
                  {"y_column", c.y_column},   {"n_y", c.reg.n_y},
                  {"n_u", c.reg.n_u},         {"n_train", c.n_train},
                  {"norm_scope", c.norm_scope}};
  j["rbm"] = {{"learning_rate", c.rbm.learning_rate},
              {"epochs", c.rbm.epochs},
              {"gibbs_steps", c.rbm.gibbs_steps},
              {"init_scale", c.rbm.init_scale},
              {"hidden_units", c.rbm.hidden_units},
              {"minibatch", c.rbm.minibatch},
              {"shuffle", c.rbm.shuffle}};
  j["cluster"] = {{"alpha", c.cluster.alpha},
                  {"psi", c.cluster.psi},
                  {"lambda", c.cluster.lambda},
                  {"pa_c", c.cluster.pa_c},
                  {"sweeps", c.cluster.sweeps},
                  {"new_cluster_threshold", c.cluster.new_cluster_threshold},
                  {"t_dof", c.cluster.t_dof},
                  {"t_scale", c.cluster.t_scale},
                  {"bandwidth_scale", c.cluster.bandwidth_scale},
                  {"novelty_sigmas", c.cluster.novelty_sigmas}};
  j["fuzzy"] = {{"sigma_b_floor", c.sigma_b_floor},
                {"sigma_b_mode", c.sigma_b_mode},
                {"width_mode", c.width_mode},
                {"width_scale", c.width_scale}};
  j["probopt"] = {{"max_iters", c.probopt.max_iters},
                  {"grad_tol", c.probopt.grad_tol},
                  {"rel_tol", c.probopt.rel_tol},
                  {"train_mse_guard", c.prob_train_mse_guard}};
  j["switches"] = {{"use_rbm", c.use_rbm},
                   {"use_prob_rules", c.use_prob_rules},
                   {"resolve_w", c.resolve_w}};
  return j;
}

}  // namespace

std::string RunReport::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["use_rbm"] = use_rbm;
  j["use_prob_rules"] = use_prob_rules;
  j["split"] = {{"raw_pairs", raw_pairs},
                {"regressor_rows", regressor_rows},
                {"train_rows", train_rows},
                {"test_rows", test_rows}};
  j["K"] = K;
  j["cluster_sweep_change_fraction"] = cluster_sweep_change_fraction;
  if (loglik_init) j["loglik_init"] = *loglik_init;
  if (loglik_final) j["loglik_final"] = *loglik_final;
  j["metrics"] = {{"train_mse", train.mse},
                  {"train_rms", train.rms},
                  {"test_mse", test.mse},
                  {"test_rms", test.rms},
                  {"train_mse_denorm", train.mse_denorm},
                  {"train_rms_denorm", train.rms_denorm},
                  {"test_mse_denorm", test.mse_denorm},
                  {"test_rms_denorm", test.rms_denorm}};
  j["config"] = config_json(resolved);
  j["timings_s"] = timings_s;
  return j.dump(2);
}

std::string AblationGrid::table_text() const {
  auto cell = [&](int prob, int rbm, bool train) {
    const double v =
        train ? median_train_mse[prob][rbm] : median_test_mse[prob][rbm];
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%8.2f", v * 1e3);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "Median MSE (x 10^-3, normalized units)\n";
  os << "                          Training            Testing\n";
  os << "                      No RBM      RBM     No RBM      RBM\n";
  os << "Standard fuzzy rule " << cell(0, 0, true) << cell(0, 1, true)
     << cell(0, 0, false) << cell(0, 1, false) << "\n";
  os << "Probabilistic rule  " << cell(1, 0, true) << cell(1, 1, true)
     << cell(1, 0, false) << cell(1, 1, false) << "\n";
  return os.str();
}

std::string AblationGrid::to_json() const {
  ordered_json j;
  const char* prob_names[2] = {"standard", "probabilistic"};
  const char* rbm_names[2] = {"no_rbm", "rbm"};
  for (int prob = 0; prob < 2; ++prob) {
    for (int rbm = 0; rbm < 2; ++rbm) {
      ordered_json cell;
      cell["median_train_mse"] = median_train_mse[prob][rbm];
      cell["median_test_mse"] = median_test_mse[prob][rbm];
      ordered_json runs = ordered_json::array();
      for (const RunReport& r : reports[prob][rbm])
        runs.push_back(ordered_json::parse(r.to_json()));
      cell["runs"] = runs;
      j[std::string(prob_names[prob]) + "." + rbm_names[rbm]] = cell;
    }
  }
  return j.dump(2);
}

MatrixXd ModelBundle::features_for(const Dataset& normalized) const {
  return rbm ? transform_all(*rbm, normalized.X) : normalized.X;
}

VectorXd ModelBundle::predict(const MatrixXd& features) const {
  VectorXd out(features.rows());
  for (Eigen::Index k = 0; k < features.rows(); ++k) {
    const VectorXd h = features.row(k).transpose();
    out(k) = use_prob_rules ? infer_probabilistic(fuzzy, h)
                            : infer_standard(fuzzy, h);
  }
  return out;
}

void ModelBundle::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  save_fuzzy(fuzzy, dir + "/model.kv");
  if (rbm) save_rbm(*rbm, dir + "/rbm.kv");
  kv::File meta("bundle");
  meta.set("u_min", norm.u_min);
  meta.set("u_max", norm.u_max);
  meta.set("y_min", norm.y_min);
  meta.set("y_max", norm.y_max);
  meta.set("n_y", static_cast<std::int64_t>(reg.n_y));
  meta.set("n_u", static_cast<std::int64_t>(reg.n_u));
  meta.set("use_prob_rules", static_cast<std::int64_t>(use_prob_rules ? 1 : 0));
  meta.set("has_rbm", static_cast<std::int64_t>(rbm ? 1 : 0));
  meta.save(dir + "/bundle.kv");
}

ModelBundle ModelBundle::load(const std::string& dir) {
  ModelBundle b;
  const kv::File meta = kv::File::load(dir + "/bundle.kv", "bundle");
  b.fuzzy = load_fuzzy(dir + "/model.kv");
  if (meta.get_int("has_rbm")) b.rbm = load_rbm(dir + "/rbm.kv");
  b.norm = NormParams{meta.get_double("u_min"), meta.get_double("u_max"),
                      meta.get_double("y_min"), meta.get_double("y_max")};
  b.reg = RegressorConfig{static_cast<int>(meta.get_int("n_y")),
                          static_cast<int>(meta.get_int("n_u"))};
  b.use_prob_rules = meta.get_int("use_prob_rules") != 0;
  return b;
}

namespace {

bool parse_bool(const std::string& v, const std::string& where) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean '" + v + "' for " + where);
}

}  // namespace

void parse_config_file(const std::string& path, PipelineConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: missing '=' at line " + std::to_string(line_no));
    auto trim = [](std::string s) {
      const auto sb = s.find_first_not_of(" \t");
      const auto se = s.find_last_not_of(" \t");
      return sb == std::string::npos ? std::string() : s.substr(sb, se - sb + 1);
    };
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "dataset.u_column") cfg.u_column = value;
      else if (key == "dataset.y_column") cfg.y_column = value;
      else if (key == "dataset.n_y") cfg.reg.n_y = std::stoi(value);
      else if (key == "dataset.n_u") cfg.reg.n_u = std::stoi(value);
      else if (key == "dataset.data_path") cfg.data_path = value;
      else if (key == "rbm.learning_rate") cfg.rbm.learning_rate = std::stod(value);
      else if (key == "rbm.epochs") cfg.rbm.epochs = std::stoi(value);
      else if (key == "rbm.gibbs_steps") cfg.rbm.gibbs_steps = std::stoi(value);
      else if (key == "rbm.init_scale") cfg.rbm.init_scale = std::stod(value);
      else if (key == "rbm.hidden_units") cfg.rbm.hidden_units = std::stoi(value);
      else if (key == "rbm.minibatch") cfg.rbm.minibatch = std::stoi(value);
      else if (key == "rbm.shuffle") cfg.rbm.shuffle = parse_bool(value, key);
      else if (key == "cluster.alpha") cfg.cluster.alpha = std::stod(value);
      else if (key == "cluster.psi") cfg.cluster.psi = std::stod(value);
      else if (key == "cluster.lambda") cfg.cluster.lambda = std::stod(value);
      else if (key == "cluster.pa_c") cfg.cluster.pa_c = std::stod(value);
      else if (key == "cluster.sweeps") cfg.cluster.sweeps = std::stoi(value);
      else if (key == "cluster.new_cluster_threshold")
        cfg.cluster.new_cluster_threshold = std::stod(value);
      else if (key == "cluster.t_dof") cfg.cluster.t_dof = std::stoi(value);
      else if (key == "cluster.t_scale") cfg.cluster.t_scale = std::stod(value);
      else if (key == "cluster.bandwidth_scale")
        cfg.cluster.bandwidth_scale = std::stod(value);
      else if (key == "cluster.novelty_sigmas")
        cfg.cluster.novelty_sigmas = std::stod(value);
      else if (key == "fuzzy.sigma_b_floor") cfg.sigma_b_floor = std::stod(value);
      else if (key == "fuzzy.sigma_b_mode") cfg.sigma_b_mode = value;
      else if (key == "fuzzy.width_mode") cfg.width_mode = value;
      else if (key == "fuzzy.width_scale") cfg.width_scale = std::stod(value);
      else if (key == "probopt.train_mse_guard")
        cfg.prob_train_mse_guard = std::stod(value);
      else if (key == "probopt.max_iters") cfg.probopt.max_iters = std::stoi(value);
      else if (key == "probopt.grad_tol") cfg.probopt.grad_tol = std::stod(value);
      else if (key == "probopt.rel_tol") cfg.probopt.rel_tol = std::stod(value);
      else if (key == "bench.n_train") cfg.n_train = std::stol(value);
      else if (key == "bench.norm_scope") cfg.norm_scope = value;
      else if (key == "bench.use_rbm") cfg.use_rbm = parse_bool(value, key);
      else if (key == "bench.use_prob_rules")
        cfg.use_prob_rules = parse_bool(value, key);
      else if (key == "bench.resolve_w") cfg.resolve_w = parse_bool(value, key);
      else if (key == "bench.seed") cfg.seed = std::stoull(value);
      else
        throw ConfigError("config: unknown key '" + key + "' at line " +
                          std::to_string(line_no));
    } catch (const std::invalid_argument&) {
      throw ConfigError("config: bad value '" + value + "' for '" + key +
                        "' at line " + std::to_string(line_no));
    } catch (const std::out_of_range&) {
      throw ConfigError("config: value out of range for '" + key + "' at line " +
                        std::to_string(line_no));
    }
  }
}

}  // namespace pfm
