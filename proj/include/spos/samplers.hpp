#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "spos/config.hpp"
#include "spos/kernel.hpp"
#include "spos/model.hpp"
#include "spos/parallel.hpp"
#include "spos/rng.hpp"
#include "spos/trace.hpp"
#include "spos/vr.hpp"

namespace spos {

struct ParticleEnsemble {
  Matrix positions;  // M×d
  long long step = 0;

  long long size() const { return positions.rows(); }
  int dim() const { return static_cast<int>(positions.cols()); }
};

// ν₀ = N(mean, scale²·I) per particle, drawn from per-particle init streams.
inline ParticleEnsemble make_initial_ensemble(long long particles, const Vector& mean,
                                              double scale, std::uint64_t seed) {
  if (particles < 1) throw std::invalid_argument("ensemble needs at least one particle");
  if (!(scale >= 0)) throw std::invalid_argument("init scale must be >= 0");
  ParticleEnsemble ensemble;
  ensemble.positions.resize(particles, mean.size());
  for (long long i = 0; i < particles; ++i) {
    SplitMix64 stream = make_stream(seed, StreamPurpose::init, 0, i);
    for (int c = 0; c < mean.size(); ++c)
      ensemble.positions(i, c) = mean[c] + scale * normal_draw(stream);
  }
  ensemble.step = 0;
  return ensemble;
}

namespace detail {

// G⁽ⁱ⁾ for the step: plain minibatch or a variance-reduced estimate.
using GradientProvider =
    std::function<Vector(int i, const Vector& theta, const BatchDraw& batch)>;

inline GradientProvider plain_provider(const PotentialModel& model) {
  return [&model](int, const Vector& theta, const BatchDraw& batch) {
    return stochastic_gradient(model, theta, batch);
  };
}

struct StepScratch {
  Matrix gradients;                // M×d, one G per particle
  std::vector<BatchDraw> batches;  // per particle, kept for SAGA commits
};

inline void draw_batches_and_gradients(const ParticleEnsemble& ensemble,
                                       const PotentialModel& model,
                                       const SamplerConfig& cfg,
                                       const GradientProvider& provider,
                                       int threads, StepScratch& scratch) {
  const long long m = ensemble.size();
  scratch.gradients.resize(m, model.dim());
  scratch.batches.assign(static_cast<std::size_t>(m), BatchDraw{});
  BatchDraw shared;
  if (cfg.shared_batch) {
    SplitMix64 stream = make_stream(cfg.seed, StreamPurpose::batch, ensemble.step, -1);
    shared = sample_batch(model.num_terms(), cfg.batch_size, stream);
  }
  parallel_for(m, threads, [&](long long i) {
    if (cfg.shared_batch) {
      scratch.batches[i] = shared;
    } else {
      SplitMix64 stream = make_stream(cfg.seed, StreamPurpose::batch, ensemble.step, i);
      scratch.batches[i] = sample_batch(model.num_terms(), cfg.batch_size, stream);
    }
    scratch.gradients.row(i) =
        provider(static_cast<int>(i), ensemble.positions.row(i).transpose(),
                 scratch.batches[i])
            .transpose();
  });
}

inline void check_finite(const Matrix& positions, long long step) {
  for (long long i = 0; i < positions.rows(); ++i)
    if (!positions.row(i).allFinite()) throw DivergenceError(step, i);
}

// θ′⁽ⁱ⁾ = θ⁽ⁱ⁾ − (h/β)·G⁽ⁱ⁾·drift − (h/M)·Σⱼ K(δᵢⱼ)·G⁽ʲ⁾
//        + (h/M)·Σⱼ (δᵢⱼ/η²)·K(δᵢⱼ) + √(2h/β)·ξ⁽ⁱ⁾·noise
// with δᵢⱼ = θ⁽ⁱ⁾ − θ⁽ʲ⁾. SVGD keeps only the interaction sum. All reads
// come from the step-k ensemble; writes go to a fresh buffer.
inline ParticleEnsemble apply_interacting(const ParticleEnsemble& ensemble,
                                          const SamplerConfig& cfg,
                                          const KernelConfig& kernel_cfg,
                                          const StepScratch& scratch, int threads) {
  const long long m = ensemble.size();
  const int d = ensemble.dim();
  const double h = cfg.step_size.at(ensemble.step);
  const bool langevin = cfg.kind != SamplerKind::SVGD;
  const double drift_coeff = langevin ? (h / cfg.beta) * cfg.drift_scale : 0.0;
  const double noise_coeff =
      langevin ? std::sqrt(2.0 * h / cfg.beta) * cfg.noise_scale : 0.0;

  const double eta = resolve_bandwidth(kernel_cfg, ensemble.positions);
  const double inv_eta2 = 1.0 / (eta * eta);
  Matrix next(m, d);
  parallel_for(m, threads, [&](long long i) {
    const Vector theta = ensemble.positions.row(i).transpose();
    Vector interaction = Vector::Zero(d);
    for (long long j = 0; j < m; ++j) {
      const Vector delta = theta - ensemble.positions.row(j).transpose();
      const double k_ij = std::exp(-delta.squaredNorm() * 0.5 * inv_eta2);
      interaction += k_ij * (inv_eta2 * delta - scratch.gradients.row(j).transpose());
    }
    Vector out = theta - drift_coeff * scratch.gradients.row(i).transpose() +
                 (h / static_cast<double>(m)) * interaction;
    if (noise_coeff != 0.0) {
      SplitMix64 stream = make_stream(cfg.seed, StreamPurpose::noise, ensemble.step, i);
      for (int c = 0; c < d; ++c) out[c] += noise_coeff * normal_draw(stream);
    }
    next.row(i) = out.transpose();
  });
  check_finite(next, ensemble.step);
  return ParticleEnsemble{std::move(next), ensemble.step + 1};
}

// θ′ = θ − β⁻¹·G·h + √(2β⁻¹h)·ξ·noise, each particle independent.
inline ParticleEnsemble apply_sgld(const ParticleEnsemble& ensemble,
                                   const SamplerConfig& cfg,
                                   const StepScratch& scratch, int threads) {
  const long long m = ensemble.size();
  const int d = ensemble.dim();
  const double h = cfg.step_size.at(ensemble.step);
  const double noise_coeff = std::sqrt(2.0 * h / cfg.beta) * cfg.noise_scale;

  Matrix next(m, d);
  parallel_for(m, threads, [&](long long i) {
    Vector out = ensemble.positions.row(i).transpose() -
                 (h / cfg.beta) * scratch.gradients.row(i).transpose();
    SplitMix64 stream = make_stream(cfg.seed, StreamPurpose::noise, ensemble.step, i);
    for (int c = 0; c < d; ++c) out[c] += noise_coeff * normal_draw(stream);
    next.row(i) = out.transpose();
  });
  check_finite(next, ensemble.step);
  return ParticleEnsemble{std::move(next), ensemble.step + 1};
}

inline ParticleEnsemble one_step(const ParticleEnsemble& ensemble,
                                 const PotentialModel& model,
                                 const SamplerConfig& cfg,
                                 const KernelConfig& kernel_cfg,
                                 const GradientProvider& provider, int threads,
                                 StepScratch& scratch) {
  draw_batches_and_gradients(ensemble, model, cfg, provider, threads, scratch);
  if (cfg.kind == SamplerKind::SGLD)
    return apply_sgld(ensemble, cfg, scratch, threads);
  return apply_interacting(ensemble, cfg, kernel_cfg, scratch, threads);
}

}  // namespace detail

inline ParticleEnsemble sgld_step(const ParticleEnsemble& ensemble,
                                  const PotentialModel& model,
                                  const SamplerConfig& cfg, int threads = 1) {
  SamplerConfig step_cfg = cfg;
  step_cfg.kind = SamplerKind::SGLD;
  detail::StepScratch scratch;
  return detail::one_step(ensemble, model, step_cfg, KernelConfig{},
                          detail::plain_provider(model), threads, scratch);
}

inline ParticleEnsemble svgd_step(const ParticleEnsemble& ensemble,
                                  const PotentialModel& model,
                                  const SamplerConfig& cfg,
                                  const KernelConfig& kernel_cfg, int threads = 1) {
  SamplerConfig step_cfg = cfg;
  step_cfg.kind = SamplerKind::SVGD;
  detail::StepScratch scratch;
  return detail::one_step(ensemble, model, step_cfg, kernel_cfg,
                          detail::plain_provider(model), threads, scratch);
}

inline ParticleEnsemble spos_step(const ParticleEnsemble& ensemble,
                                  const PotentialModel& model,
                                  const SamplerConfig& cfg,
                                  const KernelConfig& kernel_cfg, int threads = 1) {
  SamplerConfig step_cfg = cfg;
  step_cfg.kind = SamplerKind::SPOS;
  detail::StepScratch scratch;
  return detail::one_step(ensemble, model, step_cfg, kernel_cfg,
                          detail::plain_provider(model), threads, scratch);
}

struct RunOptions {
  long long snapshot_every = 1;
  int threads = 1;
};

// Applies T steps of the configured sampler. Snapshots are recorded at step
// 0, every snapshot_every steps, and at the final step; metric rows (per-
// coordinate mean and variance) share those steps. Deterministic for a given
// (seed, config, model) regardless of thread count.
inline RunTrace run(const ParticleEnsemble& initial, const PotentialModel& model,
                    const SamplerConfig& cfg, const KernelConfig& kernel_cfg,
                    const RunOptions& opts = RunOptions{}) {
  validate(cfg);
  if (opts.snapshot_every < 1)
    throw std::invalid_argument("snapshot_every must be >= 1");
  if (initial.size() < 1) throw std::invalid_argument("empty ensemble");
  const auto t_begin = std::chrono::steady_clock::now();
  const int threads = opts.threads < 1 ? 1 : opts.threads;
  const long long m = initial.size();

  RunTrace trace;
  const long long base_full = model.counters()->full_gradient_calls.load();
  const long long base_term = model.counters()->term_gradient_calls.load();

  auto record = [&](const ParticleEnsemble& ensemble) {
    trace.snapshots.push_back({ensemble.step, ensemble.positions});
    MetricRow row;
    row.step = ensemble.step;
    for (int c = 0; c < ensemble.dim(); ++c) {
      const auto col = ensemble.positions.col(c);
      const double mean = col.mean();
      double var = 0.0;
      if (m >= 2) var = (col.array() - mean).square().sum() / static_cast<double>(m - 1);
      row.values.emplace_back("mean_" + std::to_string(c), mean);
      row.values.emplace_back("var_" + std::to_string(c), var);
    }
    trace.metrics.push_back(std::move(row));
  };

  ParticleEnsemble ensemble = initial;
  ensemble.step = 0;
  record(ensemble);

  std::optional<SagaState> saga;
  SvrgState svrg;
  SvrgPlusState svrg_plus;
  HistoryRing history(cfg.epoch_length);
  detail::GradientProvider provider = detail::plain_provider(model);

  if (cfg.kind == SamplerKind::SAGA_POS) {
    saga.emplace(static_cast<int>(m), model.num_terms(), model.dim(),
                 cfg.saga_memory_budget_bytes);
    saga->initialize(ensemble.positions, model, threads);
    provider = [&saga, &model](int i, const Vector& theta, const BatchDraw& batch) {
      return saga_estimate(*saga, i, theta, batch, model);
    };
  } else if (cfg.kind == SamplerKind::SVRG_POS) {
    svrg.option = cfg.svrg_option;
    svrg.epoch_length = cfg.epoch_length;
    history.push(0, ensemble.positions);
    provider = [&svrg, &model](int i, const Vector& theta, const BatchDraw& batch) {
      return svrg_estimate(svrg, i, theta, batch, model);
    };
  } else if (cfg.kind == SamplerKind::SVRG_POS_PLUS) {
    svrg_plus.epoch_length = cfg.epoch_length;
    svrg_plus.snapshot_batch = cfg.snapshot_batch;
    provider = [&svrg_plus, &model](int i, const Vector& theta, const BatchDraw& batch) {
      return svrg_estimate(svrg_plus, i, theta, batch, model);
    };
  }

  detail::StepScratch scratch;
  for (long long k = 0; k < cfg.total_steps; ++k) {
    if (cfg.kind == SamplerKind::SVRG_POS && k % cfg.epoch_length == 0) {
      SplitMix64 stream = make_stream(cfg.seed, StreamPurpose::epoch_draw, k, -1);
      const int clamped =
          svrg_snapshot(svrg, ensemble.positions, k, history, model, stream, threads);
      if (clamped > 0)
        trace.warnings.push_back("svrg option I epoch draw clamped at step " +
                                 std::to_string(k));
    } else if (cfg.kind == SamplerKind::SVRG_POS_PLUS && k % cfg.epoch_length == 0) {
      SplitMix64 stream = make_stream(cfg.seed, StreamPurpose::snapshot_batch, k, -1);
      svrg_plus_snapshot(svrg_plus, ensemble.positions, model, stream, threads);
    }

    const ParticleEnsemble previous = std::move(ensemble);
    ensemble = detail::one_step(previous, model, cfg, kernel_cfg, provider, threads,
                                scratch);

    if (cfg.kind == SamplerKind::SAGA_POS) {
      parallel_for(m, threads, [&](long long i) {
        saga_commit(*saga, static_cast<int>(i),
                    previous.positions.row(i).transpose(), scratch.batches[i], model);
      });
      if ((k + 1) % cfg.saga_audit_every == 0 &&
          saga->audit_max_relative_error() > 1e-9)
        throw StateError("saga table sum audit failed at step " + std::to_string(k + 1));
    }
    if (cfg.kind == SamplerKind::SVRG_POS) history.push(k + 1, ensemble.positions);

    if ((k + 1) % opts.snapshot_every == 0 || k + 1 == cfg.total_steps)
      record(ensemble);
  }

  trace.full_gradient_calls = model.counters()->full_gradient_calls.load() - base_full;
  trace.term_gradient_calls = model.counters()->term_gradient_calls.load() - base_term;
  trace.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return trace;
}

}  // namespace spos
