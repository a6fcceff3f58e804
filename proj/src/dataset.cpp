#include "pfm/dataset.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "pfm/elm.hpp"

namespace pfm {

void TimeSeries::validate() const {
  if (u.size() != y.size()) throw DataError("time series: u and y lengths differ");
  if (u.size() < 1) throw DataError("time series: empty");
  if (!u.allFinite() || !y.allFinite())
    throw DataError("time series: non-finite value");
}

void RegressorConfig::validate() const {
  if (n_y < 0 || n_u < 0) throw ConfigError("regressor delays must be >= 0");
}

void NormParams::validate() const {
  if (!(u_max > u_min)) throw DataError("normalize: constant input channel");
  if (!(y_max > y_min)) throw DataError("normalize: constant output channel");
}

void Dataset::validate() const {
  if (X.rows() != Y.size()) throw DataError("dataset: X/Y row mismatch");
  if (!X.allFinite() || !Y.allFinite()) throw DataError("dataset: non-finite value");
  if (normalized) {
    if (X.minCoeff() < 0.0 || X.maxCoeff() > 1.0)
      throw DataError("dataset: normalized X entry outside [0,1]");
  }
}

Dataset build_regressors(const TimeSeries& ts, const RegressorConfig& cfg) {
  ts.validate();
  cfg.validate();
  const Eigen::Index T = ts.length();
  const Eigen::Index start = std::max(cfg.n_y, cfg.n_u);
  if (T <= start)
    throw DataError("series too short for requested delays (T=" +
                    std::to_string(T) + ", need > " + std::to_string(start) + ")");
  const Eigen::Index N = T - start;
  const int n = cfg.width();

  Dataset ds;
  ds.reg = cfg;
  ds.X.resize(N, n);
  ds.Y.resize(N);
  for (Eigen::Index r = 0; r < N; ++r) {
    const Eigen::Index k = start + r;
    for (int i = 0; i < cfg.n_y; ++i) ds.X(r, i) = ts.y(k - 1 - i);
    for (int j = 0; j <= cfg.n_u; ++j) ds.X(r, cfg.n_y + j) = ts.u(k - j);
    ds.Y(r) = ts.y(k);
  }
  ds.validate();
  return ds;
}

NormParams compute_norm(const Dataset& ds) {
  double u_min = std::numeric_limits<double>::infinity();
  double u_max = -u_min, y_min = u_min, y_max = -u_min;
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.cols(); ++c) {
      const double v = ds.X(r, c);
      if (ds.column_is_output(c)) {
        y_min = std::min(y_min, v);
        y_max = std::max(y_max, v);
      } else {
        u_min = std::min(u_min, v);
        u_max = std::max(u_max, v);
      }
    }
    y_min = std::min(y_min, ds.Y(r));
    y_max = std::max(y_max, ds.Y(r));
  }
  NormParams p{u_min, u_max, y_min, y_max};
  p.validate();
  return p;
}

Dataset apply_norm(const Dataset& ds, const NormParams& norm) {
  norm.validate();
  Dataset out = ds;
  out.norm = norm;
  out.normalized = true;
  const double u_span = norm.u_max - norm.u_min;
  const double y_span = norm.y_max - norm.y_min;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
      double v;
      if (out.column_is_output(c))
        v = (out.X(r, c) - norm.y_min) / y_span;
      else
        v = (out.X(r, c) - norm.u_min) / u_span;
      // Inputs feed the RBM density, defined only on [0,1]; targets stay
      // unclamped so errors are measured against the true values.
      out.X(r, c) = std::clamp(v, 0.0, 1.0);
    }
    out.Y(r) = (out.Y(r) - norm.y_min) / y_span;
  }
  out.validate();
  return out;
}

std::pair<Dataset, NormParams> normalize(const Dataset& ds) {
  NormParams p = compute_norm(ds);
  return {apply_norm(ds, p), p};
}

VectorXd denormalize(const VectorXd& yhat, const NormParams& norm) {
  norm.validate();
  return (yhat.array() * (norm.y_max - norm.y_min) + norm.y_min).matrix();
}

std::pair<Dataset, Dataset> split(const Dataset& ds, Eigen::Index n_train) {
  if (n_train <= 0 || n_train >= ds.rows())
    throw ConfigError("split: n_train out of range (have " +
                      std::to_string(ds.rows()) + " rows, asked " +
                      std::to_string(n_train) + ")");
  Dataset train = ds, test = ds;
  train.X = ds.X.topRows(n_train);
  train.Y = ds.Y.head(n_train);
  test.X = ds.X.bottomRows(ds.rows() - n_train);
  test.Y = ds.Y.tail(ds.rows() - n_train);
  return {train, test};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_cell(const std::string& cell, std::size_t line_no,
                  const std::string& col) {
  const char* s = cell.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0' || !std::isfinite(v))
    throw DataError("csv: non-numeric value '" + cell + "' in column '" + col +
                    "' at line " + std::to_string(line_no));
  return v;
}

}  // namespace

TimeSeries load_csv(const std::string& path, const std::string& u_column,
                    const std::string& y_column) {
  std::ifstream in(path);
  if (!in) throw DataError("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("csv: '" + path + "' is empty");
  const auto header = split_csv_line(line);
  Eigen::Index u_idx = -1, y_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == u_column) u_idx = static_cast<Eigen::Index>(i);
    if (header[i] == y_column) y_idx = static_cast<Eigen::Index>(i);
  }
  if (u_idx < 0) throw DataError("csv: missing column '" + u_column + "'");
  if (y_idx < 0) throw DataError("csv: missing column '" + y_column + "'");

  std::vector<double> us, ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const auto need = static_cast<std::size_t>(std::max(u_idx, y_idx));
    if (cells.size() <= need)
      throw DataError("csv: too few columns at line " + std::to_string(line_no));
    us.push_back(parse_cell(cells[u_idx], line_no, u_column));
    ys.push_back(parse_cell(cells[y_idx], line_no, y_column));
  }
  TimeSeries ts;
  ts.u = Eigen::Map<VectorXd>(us.data(), static_cast<Eigen::Index>(us.size()));
  ts.y = Eigen::Map<VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  ts.validate();
  return ts;
}

double evaluate_delay_config(const TimeSeries& ts, const RegressorConfig& cfg,
                             Eigen::Index eval_budget) {
  Dataset ds = normalize(build_regressors(ts, cfg)).first;
  Eigen::Index n = ds.rows();
  if (eval_budget > 0 && eval_budget < n) n = eval_budget;
  const Eigen::Index n_train = std::max<Eigen::Index>(1, (n * 7) / 10);
  if (n_train >= n) throw DataError("delay search: too few rows to validate");

  // linear model with intercept, fit by least squares on the training part
  MatrixXd A(n_train, ds.cols() + 1);
  A.leftCols(ds.cols()) = ds.X.topRows(n_train);
  A.rightCols(1).setOnes();
  const VectorXd beta = pinv(A) * ds.Y.head(n_train);

  double sse = 0.0;
  for (Eigen::Index r = n_train; r < n; ++r) {
    const double pred =
        ds.X.row(r).dot(beta.head(ds.cols())) + beta(ds.cols());
    const double e = ds.Y(r) - pred;
    sse += e * e;
  }
  return sse / static_cast<double>(n - n_train);
}

RegressorConfig random_search_delays(const TimeSeries& ts, int lo, int hi,
                                     int n_trials, Eigen::Index eval_budget,
                                     std::uint64_t seed) {
  if (n_trials < 1) throw ConfigError("delay search: n_trials must be >= 1");
  if (lo > hi || lo < 0) throw ConfigError("delay search: bad candidate range");
  Rng rng(seed);
  auto draw = [&] {
    return lo + static_cast<int>(rng.uniform() * (hi - lo + 1));
  };
  RegressorConfig best;
  double best_mse = std::numeric_limits<double>::infinity();
  for (int t = 0; t < n_trials; ++t) {
    RegressorConfig cand{draw(), draw()};
    const double mse = evaluate_delay_config(ts, cand, eval_budget);
    if (mse < best_mse) {
      best_mse = mse;
      best = cand;
    }
  }
  return best;
}

}  // namespace pfm
