#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <set>
#include <vector>

#include "spos/config.hpp"
#include "spos/model.hpp"
#include "spos/parallel.hpp"

namespace spos {

// Per-particle gradient table g(i,j) with an incrementally maintained row
// sum. Memory is M·N·d doubles; construction refuses tables above budget.
class SagaState {
public:
  SagaState(int particles, int num_terms, int dim, double memory_budget_bytes) {
    const double bytes = 8.0 * particles * num_terms * dim;
    if (bytes > memory_budget_bytes)
      throw ConfigError("saga_memory_budget_bytes",
                        "gradient table needs " + std::to_string(bytes) +
                            " bytes, over budget " +
                            std::to_string(memory_budget_bytes));
    table_.assign(particles, Matrix::Zero(num_terms, dim));
    table_sum_ = Matrix::Zero(particles, dim);
  }

  void initialize(const Matrix& positions, const PotentialModel& model, int threads = 1) {
    const long long m = positions.rows();
    parallel_for(m, threads, [&](long long i) {
      Vector sum = Vector::Zero(model.dim());
      for (int j = 0; j < model.num_terms(); ++j) {
        const Vector g = model.term_gradient(j, positions.row(i).transpose());
        table_[i].row(j) = g.transpose();
        sum += g;
      }
      table_sum_.row(i) = sum.transpose();
    });
    initialized_ = true;
  }

  bool initialized() const { return initialized_; }
  const Matrix& table(int i) const { return table_[static_cast<std::size_t>(i)]; }
  Vector table_sum(int i) const { return table_sum_.row(i).transpose(); }

  // Recompute Σⱼ g(i,j) from scratch and compare with the cached sum.
  double audit_max_relative_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < table_.size(); ++i) {
      const Vector fresh = table_[i].colwise().sum().transpose();
      const Vector cached = table_sum_.row(i).transpose();
      const double denom = 1.0 + fresh.cwiseAbs().maxCoeff();
      worst = std::max(worst, (fresh - cached).cwiseAbs().maxCoeff() / denom);
    }
    return worst;
  }

  friend Vector saga_estimate(const SagaState&, int, const Vector&,
                              const BatchDraw&, const PotentialModel&);
  friend void saga_commit(SagaState&, int, const Vector&, const BatchDraw&,
                          const PotentialModel&);

private:
  std::vector<Matrix> table_;  // per particle: N×d
  Matrix table_sum_;           // M×d cached row sums
  bool initialized_ = false;
};

// G⁽ⁱ⁾ = table_sum(i) + (N/B)·Σ_{j∈batch}(Fⱼ(θ) − g(i,j)); read-only.
inline Vector saga_estimate(const SagaState& state, int i, const Vector& theta,
                            const BatchDraw& batch, const PotentialModel& model) {
  if (!state.initialized_) throw StateError("saga_estimate: table not initialized");
  Vector correction = Vector::Zero(model.dim());
  for (int j : batch.indices)
    correction += model.term_gradient(j, theta) - state.table_[i].row(j).transpose();
  const double scale = static_cast<double>(model.num_terms()) /
                       static_cast<double>(batch.indices.size());
  return state.table_sum_.row(i).transpose() + scale * correction;
}

// For each distinct j in batch: g(i,j) ← Fⱼ(θ), with θ the pre-update
// position; the cached row sum is updated incrementally.
inline void saga_commit(SagaState& state, int i, const Vector& theta,
                        const BatchDraw& batch, const PotentialModel& model) {
  if (!state.initialized_) throw StateError("saga_commit: table not initialized");
  std::set<int> distinct(batch.indices.begin(), batch.indices.end());
  Vector sum = state.table_sum_.row(i).transpose();
  for (int j : distinct) {
    const Vector fresh = model.term_gradient(j, theta);
    sum += fresh - state.table_[i].row(j).transpose();
    state.table_[i].row(j) = fresh.transpose();
  }
  state.table_sum_.row(i) = sum.transpose();
}

// Rolling buffer of the last `capacity` ensembles, keyed by step.
class HistoryRing {
public:
  explicit HistoryRing(int capacity) : capacity_(capacity) {}

  void push(long long step, const Matrix& positions) {
    entries_.emplace_back(step, positions);
    if (static_cast<int>(entries_.size()) > capacity_) entries_.erase(entries_.begin());
  }

  const Matrix& at_step(long long step) const {
    for (const auto& e : entries_)
      if (e.first == step) return e.second;
    throw StateError("history ring holds no step " + std::to_string(step));
  }

private:
  int capacity_;
  std::vector<std::pair<long long, Matrix>> entries_;
};

struct SvrgState {
  Matrix snapshot_positions;   // θ̃, M×d
  Matrix snapshot_gradients;   // G̃, M×d
  SvrgOption option = SvrgOption::II;
  int epoch_length = 1;
  bool has_snapshot = false;
};

struct SvrgPlusState {
  Matrix snapshot_positions;
  Matrix snapshot_gradients;
  int epoch_length = 1;
  int snapshot_batch = 1;  // b
  bool has_snapshot = false;
};

// Option I with the epoch draw l made explicit: θ̃ ← θ_{k−l} from history,
// the live ensemble is reset to θ̃, then G̃ ← F(θ̃). Option II ignores l.
// Returns the number of warnings issued (l clamped for lack of history).
inline int svrg_snapshot_with_draw(SvrgState& state, Matrix& positions,
                                   long long step, int l,
                                   const HistoryRing& history,
                                   const PotentialModel& model, int threads = 1) {
  int warnings = 0;
  if (state.option == SvrgOption::I) {
    if (l > step) {
      l = static_cast<int>(std::min<long long>(l, step));
      ++warnings;
    }
    positions = history.at_step(step - l);
  }
  state.snapshot_positions = positions;
  state.snapshot_gradients.resize(positions.rows(), positions.cols());
  parallel_for(positions.rows(), threads, [&](long long i) {
    state.snapshot_gradients.row(i) =
        full_gradient(model, positions.row(i).transpose()).transpose();
  });
  state.has_snapshot = true;
  return warnings;
}

inline int svrg_snapshot(SvrgState& state, Matrix& positions, long long step,
                         const HistoryRing& history, const PotentialModel& model,
                         SplitMix64& rng, int threads = 1) {
  int l = 0;
  if (state.option == SvrgOption::I) l = uniform_index(state.epoch_length, rng);
  return svrg_snapshot_with_draw(state, positions, step, l, history, model, threads);
}

// θ̃ ← θ; G̃⁽ⁱ⁾ ← (N/b)·Σ_{j∈J} Fⱼ(θ⁽ⁱ⁾) with one shared batch J of size b.
// Never calls the full-gradient oracle.
inline void svrg_plus_snapshot(SvrgPlusState& state, const Matrix& positions,
                               const PotentialModel& model, SplitMix64& rng,
                               int threads = 1) {
  if (state.snapshot_batch < 1)
    throw std::invalid_argument("svrg_plus_snapshot: snapshot_batch must be >= 1");
  const BatchDraw batch = sample_batch(model.num_terms(), state.snapshot_batch, rng);
  state.snapshot_positions = positions;
  state.snapshot_gradients.resize(positions.rows(), positions.cols());
  parallel_for(positions.rows(), threads, [&](long long i) {
    state.snapshot_gradients.row(i) =
        stochastic_gradient(model, positions.row(i).transpose(), batch).transpose();
  });
  state.has_snapshot = true;
}

// G = G̃⁽ⁱ⁾ + (N/B)·Σ_{j∈batch}(Fⱼ(θ) − Fⱼ(θ̃⁽ⁱ⁾))
template <typename State>
inline Vector svrg_estimate(const State& state, int i, const Vector& theta,
                            const BatchDraw& batch, const PotentialModel& model) {
  if (!state.has_snapshot) throw StateError("svrg_estimate: no snapshot");
  const Vector anchor = state.snapshot_positions.row(i).transpose();
  Vector correction = Vector::Zero(model.dim());
  for (int j : batch.indices)
    correction += model.term_gradient(j, theta) - model.term_gradient(j, anchor);
  const double scale = static_cast<double>(model.num_terms()) /
                       static_cast<double>(batch.indices.size());
  return state.snapshot_gradients.row(i).transpose() + scale * correction;
}

}  // namespace spos
