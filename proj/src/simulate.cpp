#include "pfm/simulate.hpp"

#include <fstream>

#include "pfm/kv.hpp"

namespace pfm {

TimeSeries simulate_furnace(Eigen::Index T, std::uint64_t seed) {
  if (T < 10) throw ConfigError("simulate_furnace: T too small");
  Rng rng(derive_seed(seed, "sim-furnace"));
  const Eigen::Index burn = 200;
  const Eigen::Index total = T + burn;

  VectorXd u(total), y(total);
  double u_prev = 0.0;
  for (Eigen::Index k = 0; k < total; ++k) {
    u_prev = 0.97 * u_prev + 0.25 * rng.normal();
    u(k) = u_prev;
  }
  // rational second-order dynamics with a saturating delayed input gain;
  // strongly nonlinear but bounded
  y.setZero();
  for (Eigen::Index k = 3; k < total; ++k) {
    const double y1 = y(k - 1), y2 = y(k - 2);
    const double ud = u(k - 3);
    y(k) = y1 * y2 * (y1 + 2.5) / (1.0 + y1 * y1 + y2 * y2) -
           1.1 * std::tanh(0.9 * ud) - 0.25 * ud + 0.05 * rng.normal();
  }

  TimeSeries ts;
  ts.u = u.tail(T);
  ts.y = (1.6 * y.tail(T).array() + 53.0).matrix();  // CO2-like level
  ts.validate();
  return ts;
}

TimeSeries simulate_wiener_hammerstein(Eigen::Index T, std::uint64_t seed) {
  if (T < 10) throw ConfigError("simulate_wiener_hammerstein: T too small");
  Rng rng(derive_seed(seed, "sim-wh"));
  const Eigen::Index burn = 200;
  const Eigen::Index total = T + burn;

  VectorXd u(total), x(total), y(total);
  double u_prev = 0.0;
  for (Eigen::Index k = 0; k < total; ++k) {
    u_prev = 0.3 * u_prev + 0.8 * rng.normal();
    u(k) = u_prev;
  }
  x.setZero();
  y.setZero();
  for (Eigen::Index k = 2; k < total; ++k) {
    x(k) = 1.1 * x(k - 1) - 0.4 * x(k - 2) + 0.5 * u(k - 1);
    const double v = x(k) + 0.4 * x(k) * x(k) - 0.3 * x(k) * x(k) * x(k);
    y(k) = 0.9 * y(k - 1) - 0.25 * y(k - 2) + 0.6 * v + 0.01 * rng.normal();
  }

  TimeSeries ts;
  ts.u = u.tail(T);
  ts.y = y.tail(T);
  ts.validate();
  return ts;
}

TimeSeries simulate_linear(Eigen::Index T, double a, double b,
                           double noise_std, std::uint64_t seed) {
  if (T < 2) throw ConfigError("simulate_linear: T too small");
  Rng rng(derive_seed(seed, "sim-linear"));
  TimeSeries ts;
  ts.u.resize(T);
  ts.y.resize(T);
  double u_prev = 0.0, y_prev = 0.0;
  for (Eigen::Index k = 0; k < T; ++k) {
    u_prev = 0.6 * u_prev + rng.normal();
    ts.u(k) = u_prev;
    y_prev = a * y_prev + b * ts.u(k) + noise_std * rng.normal();
    ts.y(k) = y_prev;
  }
  ts.validate();
  return ts;
}

void write_csv(const TimeSeries& ts, const std::string& path,
               const std::string& u_column, const std::string& y_column) {
  std::ofstream out(path);
  if (!out) throw DataError("csv: cannot open '" + path + "' for writing");
  out << u_column << "," << y_column << "\n";
  for (Eigen::Index k = 0; k < ts.length(); ++k)
    out << kv::format_double(ts.u(k)) << "," << kv::format_double(ts.y(k))
        << "\n";
  if (!out) throw DataError("csv: write to '" + path + "' failed");
}

}  // namespace pfm
