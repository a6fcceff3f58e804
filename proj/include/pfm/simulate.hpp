#ifndef PFM_SIMULATE_HPP
#define PFM_SIMULATE_HPP

#include <cstdint>
#include <string>

#include "pfm/dataset.hpp"

namespace pfm {

/// Synthetic furnace-style plant: slowly varying input drives a stable
/// second-order output with a delayed nonlinear gain, scaled to a
/// CO2-percent-like range. Default length matches the classic benchmark.
TimeSeries simulate_furnace(Eigen::Index T = 296, std::uint64_t seed = 2026);

/// Synthetic Wiener-Hammerstein chain: linear filter -> static polynomial
/// nonlinearity -> linear filter, with band-limited input noise.
TimeSeries simulate_wiener_hammerstein(Eigen::Index T = 188000,
                                       std::uint64_t seed = 2026);

/// First-order linear plant y(k) = a y(k-1) + b u(k) + noise.
TimeSeries simulate_linear(Eigen::Index T, double a, double b,
                           double noise_std, std::uint64_t seed);

void write_csv(const TimeSeries& ts, const std::string& path,
               const std::string& u_column, const std::string& y_column);

}  // namespace pfm

#endif  // PFM_SIMULATE_HPP
