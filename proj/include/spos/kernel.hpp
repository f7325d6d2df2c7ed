#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "spos/model.hpp"

namespace spos {

struct KernelConfig {
  enum class Mode { fixed, median_heuristic };
  Mode mode = Mode::median_heuristic;
  double eta = 1.0;  // used when mode == fixed
};

inline void check_bandwidth(double eta) {
  if (!(eta > 0)) throw std::invalid_argument("kernel bandwidth must be > 0");
}

// K(δ) = exp(−‖δ‖²/2η²)
inline double kernel_value(const Vector& delta, double eta) {
  check_bandwidth(eta);
  return std::exp(-delta.squaredNorm() / (2.0 * eta * eta));
}

// ∇K(δ) = −(δ/η²)·K(δ), gradient with respect to the difference argument.
inline Vector kernel_gradient(const Vector& delta, double eta) {
  check_bandwidth(eta);
  return (-kernel_value(delta, eta) / (eta * eta)) * delta;
}

// η² = med²/(2·ln M) over all pairwise distances i<j; degenerate ensembles
// fall back to η = 1. Even-count medians average the two middle values.
inline double median_bandwidth(const Matrix& positions) {
  const long long m = positions.rows();
  if (m < 1) throw std::invalid_argument("median_bandwidth: empty ensemble");
  if (m < 2) return 1.0;
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (long long i = 0; i < m; ++i)
    for (long long j = i + 1; j < m; ++j)
      dists.push_back((positions.row(i) - positions.row(j)).norm());
  const std::size_t n = dists.size();
  const std::size_t mid = n / 2;
  std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
  double med = dists[mid];
  if (n % 2 == 0) {
    const double lower = *std::max_element(dists.begin(), dists.begin() + mid);
    med = 0.5 * (lower + med);
  }
  const double log_m = std::log(static_cast<double>(m));
  if (med == 0.0 || log_m <= 0.0) return 1.0;
  return std::sqrt(med * med / (2.0 * log_m));
}

inline double resolve_bandwidth(const KernelConfig& cfg, const Matrix& positions) {
  if (cfg.mode == KernelConfig::Mode::fixed) {
    check_bandwidth(cfg.eta);
    return cfg.eta;
  }
  return median_bandwidth(positions);
}

}  // namespace spos
