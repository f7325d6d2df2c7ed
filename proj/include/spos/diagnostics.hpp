#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "spos/model.hpp"
#include "spos/rng.hpp"
#include "spos/samplers.hpp"
#include "spos/targets.hpp"

namespace spos {

// Exact W₁ between two equal-size 1-D empirical measures:
// (1/m)·Σ |a₍ᵢ₎ − b₍ᵢ₎| over sorted order statistics.
inline double w1_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w1_1d: empty input");
  if (a.size() != b.size())
    throw std::invalid_argument("w1_1d: inputs must have equal length");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

inline double median_of(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double med = values[mid];
  if (values.size() % 2 == 0) {
    const double lower = *std::max_element(values.begin(), values.begin() + mid);
    med = 0.5 * (lower + med);
  }
  return med;
}

// Draws i.i.d. exact scalar samples from a reference marginal.
struct ReferenceSampler {
  std::function<double(SplitMix64&)> draw;
};

inline ReferenceSampler make_gaussian_reference(double mean, double std) {
  if (!(std > 0)) throw std::invalid_argument("reference std must be > 0");
  return ReferenceSampler{[mean, std](SplitMix64& rng) {
    return mean + std * normal_draw(rng);
  }};
}

// Inverse-CDF sampler over a piecewise-linear quadrature of an unnormalized
// density on [lo, hi].
inline ReferenceSampler make_grid_reference(const std::function<double(double)>& density,
                                            double lo, double hi, int points = 20001) {
  if (!(lo < hi)) throw std::invalid_argument("grid reference: lo must be < hi");
  if (points < 3) throw std::invalid_argument("grid reference: need at least 3 points");
  std::vector<double> grid(points), dens(points);
  const double cell = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) {
    grid[i] = lo + cell * i;
    dens[i] = density(grid[i]);
    if (!(dens[i] >= 0) || !std::isfinite(dens[i]))
      throw std::invalid_argument("grid reference: density must be finite and >= 0");
  }
  std::vector<double> cdf(points, 0.0);
  for (int i = 1; i < points; ++i)
    cdf[i] = cdf[i - 1] + 0.5 * (dens[i - 1] + dens[i]) * cell;
  const double total = cdf.back();
  if (!(total > 0)) throw std::invalid_argument("grid reference: zero total mass");
  return ReferenceSampler{[grid, cdf, total](SplitMix64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng) * total;
    const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cdf.begin());
    if (i == 0) return grid.front();
    const double span = cdf[i] - cdf[i - 1];
    const double frac = span > 0 ? (u - cdf[i - 1]) / span : 0.0;
    return grid[i - 1] + frac * (grid[i] - grid[i - 1]);
  }};
}

inline ReferenceSampler make_multimode_reference(MultimodeParams params = MultimodeParams{}) {
  return make_grid_reference(
      [params](double t) { return std::exp(-(multimode_potential(params, t) )); },
      -8.0, 8.0, 20001);
}

// Median over `repeats` of w1_1d(samples, fresh reference batch of equal size).
inline double w1_vs_reference(const std::vector<double>& samples,
                              const ReferenceSampler& reference, SplitMix64& rng,
                              int repeats) {
  if (samples.empty()) throw std::invalid_argument("w1_vs_reference: empty samples");
  if (repeats < 1) throw std::invalid_argument("w1_vs_reference: repeats must be >= 1");
  std::vector<double> values;
  values.reserve(repeats);
  for (int r = 0; r < repeats; ++r) {
    std::vector<double> fresh(samples.size());
    for (auto& v : fresh) v = reference.draw(rng);
    values.push_back(w1_1d(samples, fresh));
  }
  return median_of(values);
}

struct ModeSet {
  std::vector<double> locations;  // strictly increasing
  double radius = 0.0;            // capture tolerance
};

namespace detail {
// Golden-section minimization of f over [lo, hi].
inline double golden_section_min(const std::function<double(double)>& f, double lo,
                                 double hi) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 80 && (b - a) > 1e-12 * (1.0 + std::abs(a)); ++it) {
    if (f1 < f2) {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - phi * (b - a); f1 = f(x1);
    } else {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + phi * (b - a); f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}
}  // namespace detail

// Scans density ∝ exp(−U) on a uniform grid; keeps strict interior local
// maxima above 1% of the grid peak, refines each by golden section, and
// returns radius = 3 grid cells. Too-close modes merge toward lower U.
inline ModeSet find_modes_grid(const PotentialModel& model, double lo, double hi,
                               int resolution) {
  if (!(lo < hi)) throw std::invalid_argument("find_modes_grid: lo must be < hi");
  if (resolution < 3) throw std::invalid_argument("find_modes_grid: resolution >= 3");
  if (model.dim() != 1)
    throw UnsupportedTargetError("find_modes_grid needs a 1-D target");
  if (!model.has_potential())
    throw UnsupportedTargetError("find_modes_grid needs a potential oracle");

  const double cell = (hi - lo) / (resolution - 1);
  std::vector<double> grid(resolution), u(resolution);
  double u_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < resolution; ++i) {
    grid[i] = lo + cell * i;
    Vector theta(1);
    theta[0] = grid[i];
    u[i] = model.potential(theta);
    u_min = std::min(u_min, u[i]);
  }
  // Densities relative to the grid peak; the shift keeps exp() in range.
  std::vector<double> dens(resolution);
  double peak = 0.0;
  for (int i = 0; i < resolution; ++i) {
    dens[i] = std::exp(-(u[i] - u_min));
    peak = std::max(peak, dens[i]);
  }

  auto potential_at = [&model](double t) {
    Vector theta(1);
    theta[0] = t;
    return model.potential(theta);
  };

  ModeSet modes;
  modes.radius = 3.0 * cell;
  for (int i = 1; i + 1 < resolution; ++i) {
    if (dens[i] > dens[i - 1] && dens[i] > dens[i + 1] && dens[i] > 0.01 * peak) {
      modes.locations.push_back(
          detail::golden_section_min(potential_at, grid[i - 1], grid[i + 1]));
    }
  }
  std::sort(modes.locations.begin(), modes.locations.end());
  // Enforce the separation invariant: consecutive modes > 2·radius apart.
  std::vector<double> kept;
  for (double loc : modes.locations) {
    if (!kept.empty() && loc - kept.back() <= 2.0 * modes.radius) {
      if (potential_at(loc) < potential_at(kept.back())) kept.back() = loc;
    } else {
      kept.push_back(loc);
    }
  }
  modes.locations = std::move(kept);
  return modes;
}

// Number of mode locations having at least one particle within radius.
inline int mode_coverage(const ParticleEnsemble& ensemble, const ModeSet& modes) {
  if (modes.locations.empty())
    throw std::invalid_argument("mode_coverage: empty mode set");
  if (ensemble.dim() != 1)
    throw UnsupportedTargetError("mode_coverage needs a 1-D ensemble");
  int covered = 0;
  for (double loc : modes.locations) {
    for (long long i = 0; i < ensemble.size(); ++i) {
      if (std::abs(ensemble.positions(i, 0) - loc) <= modes.radius) {
        ++covered;
        break;
      }
    }
  }
  return covered;
}

struct Moments {
  Vector mean;
  Matrix covariance;
  bool covariance_valid = false;  // requires M >= 2
};

inline Moments sample_moments(const ParticleEnsemble& ensemble) {
  const long long m = ensemble.size();
  if (m < 1) throw std::invalid_argument("sample_moments: empty ensemble");
  Moments out;
  out.mean = ensemble.positions.colwise().mean().transpose();
  if (m >= 2) {
    const Matrix centered = ensemble.positions.rowwise() - out.mean.transpose();
    out.covariance = (centered.transpose() * centered) / static_cast<double>(m - 1);
    out.covariance_valid = true;
  }
  return out;
}

}  // namespace spos
