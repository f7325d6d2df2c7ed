#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <functional>
#include <memory>
#include <utility>

#include "spos/errors.hpp"
#include "spos/rng.hpp"

namespace spos {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Tallies of gradient-oracle invocations. Full-gradient evaluations and
// per-term evaluations are counted separately so variance-reduction cost
// claims are observable.
struct OracleCounters {
  std::atomic<long long> full_gradient_calls{0};
  std::atomic<long long> term_gradient_calls{0};
};

// Decomposable potential U(θ) = Σⱼ Fⱼ(θ) with per-term gradient oracles.
// The potential itself is optional; samplers consume only gradients.
class PotentialModel {
public:
  using TermGradientFn = std::function<Vector(int, const Vector&)>;
  using FullGradientFn = std::function<Vector(const Vector&)>;
  using PotentialFn = std::function<double(const Vector&)>;

  PotentialModel(int dim, int num_terms, TermGradientFn term_gradient,
                 PotentialFn potential = nullptr,
                 FullGradientFn full_gradient = nullptr)
      : dim_(dim), num_terms_(num_terms),
        term_gradient_(std::move(term_gradient)),
        potential_(std::move(potential)),
        full_gradient_(std::move(full_gradient)),
        counters_(std::make_shared<OracleCounters>()) {
    if (dim_ < 1) throw std::invalid_argument("PotentialModel: dim must be >= 1");
    if (num_terms_ < 1) throw std::invalid_argument("PotentialModel: num_terms must be >= 1");
    if (!term_gradient_) throw std::invalid_argument("PotentialModel: term_gradient required");
  }

  int dim() const { return dim_; }
  int num_terms() const { return num_terms_; }
  bool has_potential() const { return static_cast<bool>(potential_); }

  double potential(const Vector& theta) const {
    if (!potential_) throw UnsupportedTargetError("model exposes no potential oracle");
    check_theta(theta);
    return potential_(theta);
  }

  Vector term_gradient(int j, const Vector& theta) const {
    if (j < 0 || j >= num_terms_)
      throw std::invalid_argument("term_gradient: index out of range");
    check_theta(theta);
    counters_->term_gradient_calls.fetch_add(1, std::memory_order_relaxed);
    return term_gradient_(j, theta);
  }

  // Raw term evaluation that bypasses the per-term counter; used by
  // full_gradient so the two tallies stay disjoint.
  Vector term_gradient_uncounted(int j, const Vector& theta) const {
    return term_gradient_(j, theta);
  }

  bool has_full_gradient_closure() const { return static_cast<bool>(full_gradient_); }
  Vector full_gradient_closure(const Vector& theta) const { return full_gradient_(theta); }

  std::shared_ptr<OracleCounters> counters() const { return counters_; }

  void check_theta(const Vector& theta) const {
    if (theta.size() != dim_)
      throw std::invalid_argument("theta dimension mismatch");
    if (!theta.allFinite())
      throw std::invalid_argument("theta has non-finite entries");
  }

private:
  int dim_;
  int num_terms_;
  TermGradientFn term_gradient_;
  PotentialFn potential_;
  FullGradientFn full_gradient_;
  std::shared_ptr<OracleCounters> counters_;
};

// F(θ) = Σⱼ Fⱼ(θ). Counted as one full-gradient oracle call.
inline Vector full_gradient(const PotentialModel& model, const Vector& theta) {
  model.check_theta(theta);
  model.counters()->full_gradient_calls.fetch_add(1, std::memory_order_relaxed);
  if (model.has_full_gradient_closure()) return model.full_gradient_closure(theta);
  Vector sum = Vector::Zero(model.dim());
  for (int j = 0; j < model.num_terms(); ++j)
    sum += model.term_gradient_uncounted(j, theta);
  return sum;
}

// G = (N/B)·Σ_{j∈batch} Fⱼ(θ), the unbiased minibatch estimator.
inline Vector stochastic_gradient(const PotentialModel& model, const Vector& theta,
                                  const BatchDraw& batch) {
  if (batch.indices.empty())
    throw std::invalid_argument("stochastic_gradient: empty batch");
  Vector sum = Vector::Zero(model.dim());
  for (int j : batch.indices) sum += model.term_gradient(j, theta);
  const double scale = static_cast<double>(model.num_terms()) /
                       static_cast<double>(batch.indices.size());
  return scale * sum;
}

}  // namespace spos
