#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "spos/errors.hpp"

namespace spos {

enum class SamplerKind { SGLD, SVGD, SPOS, SAGA_POS, SVRG_POS, SVRG_POS_PLUS };

inline bool uses_kernel(SamplerKind kind) {
  return kind != SamplerKind::SGLD;
}

inline bool is_svrg(SamplerKind kind) {
  return kind == SamplerKind::SVRG_POS || kind == SamplerKind::SVRG_POS_PLUS;
}

inline std::string to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::SGLD: return "SGLD";
    case SamplerKind::SVGD: return "SVGD";
    case SamplerKind::SPOS: return "SPOS";
    case SamplerKind::SAGA_POS: return "SAGA-POS";
    case SamplerKind::SVRG_POS: return "SVRG-POS";
    case SamplerKind::SVRG_POS_PLUS: return "SVRG-POS+";
  }
  return "?";
}

enum class SvrgOption { I, II };

// h(k) = h₀ for γ=0, else h₀·(k+1)^(−γ); the +1 keeps the first step at h₀.
struct StepSchedule {
  double h0 = 0.0;
  double gamma = 0.0;

  double at(long long k) const {
    if (gamma == 0.0) return h0;
    return h0 * std::pow(static_cast<double>(k + 1), -gamma);
  }
};

struct SamplerConfig {
  SamplerKind kind = SamplerKind::SPOS;
  StepSchedule step_size;
  double beta = 1.0;
  int batch_size = 1;
  long long total_steps = 0;
  std::uint64_t seed = 0;
  int epoch_length = 1;       // τ, SVRG variants
  int snapshot_batch = 1;     // b, SVRG-POS+ only
  SvrgOption svrg_option = SvrgOption::II;
  double noise_scale = 1.0;   // test hook: scales injected noise, in [0,1]
  double drift_scale = 1.0;   // test hook: scales the β⁻¹G drift, in [0,1]
  bool shared_batch = false;  // one batch per step instead of per particle
  double saga_memory_budget_bytes = 1024.0 * 1024.0 * 1024.0;
  int saga_audit_every = 100;
};

inline void validate(const SamplerConfig& cfg) {
  if (!(cfg.step_size.h0 > 0)) throw ConfigError("step_size.h0", "must be > 0");
  if (!(cfg.step_size.gamma >= 0)) throw ConfigError("step_size.gamma", "must be >= 0");
  if (!(cfg.beta > 0)) throw ConfigError("beta", "must be > 0");
  if (cfg.batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (cfg.total_steps < 0) throw ConfigError("total_steps", "must be >= 0");
  if (is_svrg(cfg.kind) && cfg.epoch_length < 1)
    throw ConfigError("epoch_length", "must be >= 1 for SVRG samplers");
  if (cfg.kind == SamplerKind::SVRG_POS_PLUS && cfg.snapshot_batch < 1)
    throw ConfigError("snapshot_batch", "must be >= 1 for SVRG-POS+");
  if (!(cfg.noise_scale >= 0 && cfg.noise_scale <= 1))
    throw ConfigError("noise_scale", "must be in [0, 1]");
  if (!(cfg.drift_scale >= 0 && cfg.drift_scale <= 1))
    throw ConfigError("drift_scale", "must be in [0, 1]");
  if (!(cfg.saga_memory_budget_bytes > 0))
    throw ConfigError("saga_memory_budget_bytes", "must be > 0");
  if (cfg.saga_audit_every < 1)
    throw ConfigError("saga_audit_every", "must be >= 1");
}

}  // namespace spos
