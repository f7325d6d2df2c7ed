#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "spos/model.hpp"

namespace spos {

struct GaussianTargetParams {
  Vector mean;
  Matrix covariance;
  int split_count = 1;  // N: how many equal terms the potential is split into
};

inline PotentialModel make_gaussian(const GaussianTargetParams& params) {
  const int d = static_cast<int>(params.mean.size());
  if (d < 1) throw std::invalid_argument("gaussian: empty mean");
  if (params.covariance.rows() != d || params.covariance.cols() != d)
    throw std::invalid_argument("gaussian: covariance shape mismatch");
  if (!params.covariance.isApprox(params.covariance.transpose(), 1e-12))
    throw std::invalid_argument("gaussian: covariance not symmetric");
  Eigen::LLT<Matrix> llt(params.covariance);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("gaussian: covariance not positive definite");
  if (params.split_count < 1)
    throw std::invalid_argument("gaussian: split_count must be >= 1");

  const Matrix precision = llt.solve(Matrix::Identity(d, d));
  const Vector mean = params.mean;
  const int n = params.split_count;
  auto full = [precision, mean](const Vector& theta) -> Vector {
    return precision * (theta - mean);
  };
  auto term = [full, n](int, const Vector& theta) -> Vector {
    return full(theta) / static_cast<double>(n);
  };
  auto pot = [precision, mean](const Vector& theta) -> double {
    const Vector delta = theta - mean;
    return 0.5 * delta.dot(precision * delta);
  };
  return PotentialModel(d, n, term, pot, full);
}

inline PotentialModel make_unit_gaussian(int dim, int split_count = 1) {
  GaussianTargetParams p;
  p.mean = Vector::Zero(dim);
  p.covariance = Matrix::Identity(dim, dim);
  p.split_count = split_count;
  return make_gaussian(p);
}

struct MultimodeParams {
  std::array<double, 10> coefficients{-0.47, -0.83, -0.71, -0.02, 0.24,
                                      0.01,  0.27,  -0.37, 0.87,  -0.37};
};

// U(θ) = exp(¾θ² − (3/2)·Σᵢ cᵢ·sin(¼πi(θ+4))); target density ∝ exp(−U).
inline double multimode_potential(const MultimodeParams& params, double theta) {
  if (!std::isfinite(theta))
    throw std::invalid_argument("multimode_potential: non-finite input");
  double s = 0.0;
  for (int i = 1; i <= 10; ++i)
    s += params.coefficients[i - 1] * std::sin(0.25 * M_PI * i * (theta + 4.0));
  return std::exp(0.75 * theta * theta - 1.5 * s);
}

inline PotentialModel make_multimode(int dim = 1,
                                     MultimodeParams params = MultimodeParams{}) {
  if (dim != 1)
    throw UnsupportedTargetError("multimode target is defined for d=1 only");
  auto grad = [params](const Vector& theta) -> Vector {
    const double t = theta[0];
    double s = 0.0, sp = 0.0;
    for (int i = 1; i <= 10; ++i) {
      const double arg = 0.25 * M_PI * i * (t + 4.0);
      s += params.coefficients[i - 1] * std::sin(arg);
      sp += params.coefficients[i - 1] * 0.25 * M_PI * i * std::cos(arg);
    }
    const double u = std::exp(0.75 * t * t - 1.5 * s);
    Vector out(1);
    out[0] = u * (1.5 * t - 1.5 * sp);
    return out;
  };
  auto term = [grad](int, const Vector& theta) -> Vector { return grad(theta); };
  auto pot = [params](const Vector& theta) -> double {
    return multimode_potential(params, theta[0]);
  };
  return PotentialModel(1, 1, term, pot, grad);
}

struct MixtureComponent {
  double weight;
  double mean;
  double std;
};

// 1-D Gaussian mixture exposed through U = −log p.
inline PotentialModel make_mixture(const std::vector<MixtureComponent>& components) {
  if (components.empty()) throw std::invalid_argument("mixture: no components");
  double total = 0.0;
  for (const auto& c : components) {
    if (c.weight <= 0) throw std::invalid_argument("mixture: weight must be > 0");
    if (c.std <= 0) throw std::invalid_argument("mixture: std must be > 0");
    total += c.weight;
  }
  std::vector<MixtureComponent> comps = components;
  for (auto& c : comps) c.weight /= total;

  auto density = [comps](double t) -> double {
    double p = 0.0;
    for (const auto& c : comps) {
      const double z = (t - c.mean) / c.std;
      p += c.weight * std::exp(-0.5 * z * z) / (c.std * std::sqrt(2.0 * M_PI));
    }
    return p;
  };
  auto density_prime = [comps](double t) -> double {
    double dp = 0.0;
    for (const auto& c : comps) {
      const double z = (t - c.mean) / c.std;
      dp += c.weight * std::exp(-0.5 * z * z) / (c.std * std::sqrt(2.0 * M_PI)) *
            (-z / c.std);
    }
    return dp;
  };
  auto grad = [density, density_prime](const Vector& theta) -> Vector {
    Vector out(1);
    out[0] = -density_prime(theta[0]) / density(theta[0]);
    return out;
  };
  auto term = [grad](int, const Vector& theta) -> Vector { return grad(theta); };
  auto pot = [density](const Vector& theta) -> double {
    return -std::log(density(theta[0]));
  };
  return PotentialModel(1, 1, term, pot, grad);
}

struct RegressionDataset {
  Matrix design;       // N×d covariates
  Vector responses;    // length N
  double noise_std;
  double prior_std;
};

inline void check_dataset(const RegressionDataset& data) {
  if (data.design.rows() == 0)
    throw std::invalid_argument("regression dataset is empty");
  if (data.design.rows() != data.responses.size())
    throw std::invalid_argument("design row count must equal responses length");
  if (data.noise_std <= 0) throw std::invalid_argument("noise_std must be > 0");
  if (data.prior_std <= 0) throw std::invalid_argument("prior_std must be > 0");
}

// Per-datum split Fⱼ(θ) = −∇log p(xⱼ|θ) − (1/N)∇log p(θ); the Gaussian
// prior's gradient is spread equally across the N terms so minibatch
// estimators stay unbiased.
inline PotentialModel make_bayes_linreg(const RegressionDataset& data) {
  check_dataset(data);
  const int n = static_cast<int>(data.design.rows());
  const int d = static_cast<int>(data.design.cols());
  const Matrix x = data.design;
  const Vector y = data.responses;
  const double inv_noise_var = 1.0 / (data.noise_std * data.noise_std);
  const double inv_prior_var = 1.0 / (data.prior_std * data.prior_std);

  auto term = [x, y, n, inv_noise_var, inv_prior_var](int j, const Vector& theta) -> Vector {
    const double residual = x.row(j).dot(theta) - y[j];
    return inv_noise_var * residual * x.row(j).transpose() +
           (inv_prior_var / n) * theta;
  };
  auto full = [x, y, inv_noise_var, inv_prior_var](const Vector& theta) -> Vector {
    return inv_noise_var * (x.transpose() * (x * theta - y)) + inv_prior_var * theta;
  };
  auto pot = [x, y, inv_noise_var, inv_prior_var](const Vector& theta) -> double {
    return 0.5 * inv_noise_var * (x * theta - y).squaredNorm() +
           0.5 * inv_prior_var * theta.squaredNorm();
  };
  return PotentialModel(d, n, term, pot, full);
}

// Exact conjugate Gaussian posterior for the linear-regression target.
inline std::pair<Vector, Matrix> analytic_posterior(const RegressionDataset& data) {
  check_dataset(data);
  const int d = static_cast<int>(data.design.cols());
  const double inv_noise_var = 1.0 / (data.noise_std * data.noise_std);
  const double inv_prior_var = 1.0 / (data.prior_std * data.prior_std);
  const Matrix precision = inv_prior_var * Matrix::Identity(d, d) +
                           inv_noise_var * data.design.transpose() * data.design;
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("analytic_posterior: singular precision");
  const Matrix covariance = llt.solve(Matrix::Identity(d, d));
  const Vector mean =
      llt.solve(inv_noise_var * data.design.transpose() * data.responses);
  return {mean, covariance};
}

}  // namespace spos
