#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "spos/config.hpp"
#include "spos/csv.hpp"
#include "spos/diagnostics.hpp"
#include "spos/errors.hpp"
#include "spos/kernel.hpp"
#include "spos/samplers.hpp"
#include "spos/serialize.hpp"
#include "spos/targets.hpp"
#include "spos/trace.hpp"

namespace spos {

inline constexpr int kConfigSchemaVersion = 1;

struct GaussianSpec {
  Vector mean;
  Matrix covariance;
  int split_count = 1;
};

struct MultimodeSpec {};

struct MixtureSpec {
  std::vector<MixtureComponent> components;
};

struct BayesLinregSpec {
  std::string csv_path;
  double noise_std = 1.0;
  double prior_std = 1.0;
};

using TargetSpec = std::variant<GaussianSpec, MultimodeSpec, MixtureSpec, BayesLinregSpec>;

struct InitSpec {
  Vector mean;
  double scale = 1.0;
};

struct OutputSpec {
  std::string trace_path;
  std::string summary_path;
  long long snapshot_every = 1;
};

struct ExperimentConfig {
  TargetSpec target;
  SamplerConfig sampler;
  KernelConfig kernel;
  long long particles = 1;
  InitSpec init;
  OutputSpec outputs;
};

namespace detail {

inline std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline const Json& member(const Json& obj, const std::string& path, const std::string& key) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(join_path(path, key), "missing required field");
  return *it;
}

inline const Json* maybe(const Json& obj, const std::string& key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline double as_double(const Json& node, const std::string& path) {
  if (!node.is_number()) throw ConfigError(path, "must be a number");
  return node.get<double>();
}

inline long long as_integer(const Json& node, const std::string& path) {
  if (!node.is_number_integer() && !node.is_number_unsigned())
    throw ConfigError(path, "must be an integer");
  return node.get<long long>();
}

inline std::uint64_t as_seed(const Json& node, const std::string& path) {
  if (node.is_number_unsigned()) return node.get<std::uint64_t>();
  if (node.is_number_integer() && node.get<long long>() >= 0)
    return static_cast<std::uint64_t>(node.get<long long>());
  throw ConfigError(path, "must be a non-negative integer");
}

inline bool as_bool(const Json& node, const std::string& path) {
  if (!node.is_boolean()) throw ConfigError(path, "must be a boolean");
  return node.get<bool>();
}

inline std::string as_string(const Json& node, const std::string& path) {
  if (!node.is_string()) throw ConfigError(path, "must be a string");
  return node.get<std::string>();
}

inline Vector as_vector(const Json& node, const std::string& path) {
  if (!node.is_array() || node.empty())
    throw ConfigError(path, "must be a non-empty array of numbers");
  Vector out(node.size());
  for (std::size_t i = 0; i < node.size(); ++i)
    out[static_cast<Eigen::Index>(i)] = as_double(node[i], path + "[" + std::to_string(i) + "]");
  return out;
}

inline Matrix as_matrix(const Json& node, const std::string& path) {
  if (!node.is_array() || node.empty())
    throw ConfigError(path, "must be a non-empty array of number arrays");
  const std::size_t rows = node.size();
  std::size_t cols = 0;
  Matrix out;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    const Json& row = node[r];
    if (!row.is_array() || row.empty())
      throw ConfigError(row_path, "must be a non-empty array of numbers");
    if (r == 0) {
      cols = row.size();
      out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (row.size() != cols) {
      throw ConfigError(row_path, "rows must all have the same length");
    }
    for (std::size_t c = 0; c < cols; ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          as_double(row[c], row_path + "[" + std::to_string(c) + "]");
  }
  return out;
}

inline Json vector_to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Json matrix_to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace detail

inline SamplerKind parse_sampler_kind(const std::string& token, const std::string& path) {
  if (token == "sgld") return SamplerKind::SGLD;
  if (token == "svgd") return SamplerKind::SVGD;
  if (token == "spos") return SamplerKind::SPOS;
  if (token == "saga-pos") return SamplerKind::SAGA_POS;
  if (token == "svrg-pos") return SamplerKind::SVRG_POS;
  if (token == "svrg-pos+") return SamplerKind::SVRG_POS_PLUS;
  throw ConfigError(path, "unknown sampler kind '" + token +
                              "' (expected sgld, svgd, spos, saga-pos, svrg-pos, svrg-pos+)");
}

inline std::string sampler_kind_token(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::SGLD: return "sgld";
    case SamplerKind::SVGD: return "svgd";
    case SamplerKind::SPOS: return "spos";
    case SamplerKind::SAGA_POS: return "saga-pos";
    case SamplerKind::SVRG_POS: return "svrg-pos";
    case SamplerKind::SVRG_POS_PLUS: return "svrg-pos+";
  }
  return "spos";
}

inline void validate(const ExperimentConfig& cfg) {
  try {
    validate(cfg.sampler);
  } catch (const ConfigError& err) {
    throw ConfigError("sampler." + err.field(), err.message());
  }
  if (cfg.kernel.mode == KernelConfig::Mode::fixed && !(cfg.kernel.eta > 0))
    throw ConfigError("kernel.eta", "must be > 0 for fixed bandwidth");
  if (cfg.particles < 1) throw ConfigError("particles", "must be >= 1");
  if (cfg.init.mean.size() < 1) throw ConfigError("init.mean", "must be non-empty");
  if (!(cfg.init.scale >= 0)) throw ConfigError("init.scale", "must be >= 0");
  if (cfg.outputs.trace_path.empty())
    throw ConfigError("outputs.trace_path", "must be a non-empty path");
  if (cfg.outputs.summary_path.empty())
    throw ConfigError("outputs.summary_path", "must be a non-empty path");
  if (cfg.outputs.snapshot_every < 1)
    throw ConfigError("outputs.snapshot_every", "must be >= 1");

  if (const auto* gaussian = std::get_if<GaussianSpec>(&cfg.target)) {
    if (gaussian->covariance.rows() != gaussian->mean.size() ||
        gaussian->covariance.cols() != gaussian->mean.size())
      throw ConfigError("target.cov", "must be a square matrix matching target.mean");
    if (gaussian->split_count < 1)
      throw ConfigError("target.split_count", "must be >= 1");
  } else if (const auto* mixture = std::get_if<MixtureSpec>(&cfg.target)) {
    if (mixture->components.empty())
      throw ConfigError("target.components", "must be non-empty");
    for (std::size_t i = 0; i < mixture->components.size(); ++i) {
      const std::string base = "target.components[" + std::to_string(i) + "]";
      if (!(mixture->components[i].weight > 0))
        throw ConfigError(base + ".weight", "must be > 0");
      if (!(mixture->components[i].std > 0))
        throw ConfigError(base + ".std", "must be > 0");
    }
    if (cfg.init.mean.size() != 1)
      throw ConfigError("init.mean", "mixture target is 1-D");
  } else if (std::holds_alternative<MultimodeSpec>(cfg.target)) {
    if (cfg.init.mean.size() != 1)
      throw ConfigError("init.mean", "multimode target is 1-D");
  } else if (const auto* linreg = std::get_if<BayesLinregSpec>(&cfg.target)) {
    if (linreg->csv_path.empty())
      throw ConfigError("target.csv_path", "must be a non-empty path");
    if (!(linreg->noise_std > 0))
      throw ConfigError("target.noise_std", "must be > 0");
    if (!(linreg->prior_std > 0))
      throw ConfigError("target.prior_std", "must be > 0");
  }
}

inline TargetSpec parse_target_spec(const Json& node, const std::string& path) {
  const std::string type = detail::as_string(detail::member(node, path, "type"),
                                             detail::join_path(path, "type"));
  if (type == "gaussian") {
    GaussianSpec spec;
    spec.mean = detail::as_vector(detail::member(node, path, "mean"),
                                  detail::join_path(path, "mean"));
    spec.covariance = detail::as_matrix(detail::member(node, path, "cov"),
                                        detail::join_path(path, "cov"));
    if (const Json* v = detail::maybe(node, "split_count"))
      spec.split_count =
          static_cast<int>(detail::as_integer(*v, detail::join_path(path, "split_count")));
    return spec;
  }
  if (type == "multimode") return MultimodeSpec{};
  if (type == "mixture") {
    MixtureSpec spec;
    const Json& comps = detail::member(node, path, "components");
    const std::string comps_path = detail::join_path(path, "components");
    if (!comps.is_array() || comps.empty())
      throw ConfigError(comps_path, "must be a non-empty array");
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const std::string base = comps_path + "[" + std::to_string(i) + "]";
      MixtureComponent comp;
      comp.weight = detail::as_double(detail::member(comps[i], base, "weight"), base + ".weight");
      comp.mean = detail::as_double(detail::member(comps[i], base, "mean"), base + ".mean");
      comp.std = detail::as_double(detail::member(comps[i], base, "std"), base + ".std");
      spec.components.push_back(comp);
    }
    return spec;
  }
  if (type == "bayes_linreg") {
    BayesLinregSpec spec;
    spec.csv_path = detail::as_string(detail::member(node, path, "csv_path"),
                                      detail::join_path(path, "csv_path"));
    if (const Json* v = detail::maybe(node, "noise_std"))
      spec.noise_std = detail::as_double(*v, detail::join_path(path, "noise_std"));
    if (const Json* v = detail::maybe(node, "prior_std"))
      spec.prior_std = detail::as_double(*v, detail::join_path(path, "prior_std"));
    return spec;
  }
  throw ConfigError(detail::join_path(path, "type"),
                    "unknown target type '" + type +
                        "' (expected gaussian, multimode, mixture, bayes_linreg)");
}

inline SamplerConfig parse_sampler_config(const Json& node, const std::string& path) {
  SamplerConfig cfg;
  if (!node.is_object()) throw ConfigError(path, "must be an object");
  if (const Json* v = detail::maybe(node, "kind"))
    cfg.kind = parse_sampler_kind(detail::as_string(*v, detail::join_path(path, "kind")),
                                  detail::join_path(path, "kind"));
  const Json& step = detail::member(node, path, "step_size");
  const std::string step_path = detail::join_path(path, "step_size");
  cfg.step_size.h0 =
      detail::as_double(detail::member(step, step_path, "h0"), step_path + ".h0");
  if (const Json* v = detail::maybe(step, "gamma"))
    cfg.step_size.gamma = detail::as_double(*v, step_path + ".gamma");
  if (const Json* v = detail::maybe(node, "beta"))
    cfg.beta = detail::as_double(*v, detail::join_path(path, "beta"));
  if (const Json* v = detail::maybe(node, "batch_size"))
    cfg.batch_size =
        static_cast<int>(detail::as_integer(*v, detail::join_path(path, "batch_size")));
  if (const Json* v = detail::maybe(node, "total_steps"))
    cfg.total_steps = detail::as_integer(*v, detail::join_path(path, "total_steps"));
  if (const Json* v = detail::maybe(node, "seed"))
    cfg.seed = detail::as_seed(*v, detail::join_path(path, "seed"));
  if (const Json* v = detail::maybe(node, "epoch_length"))
    cfg.epoch_length =
        static_cast<int>(detail::as_integer(*v, detail::join_path(path, "epoch_length")));
  if (const Json* v = detail::maybe(node, "snapshot_batch"))
    cfg.snapshot_batch =
        static_cast<int>(detail::as_integer(*v, detail::join_path(path, "snapshot_batch")));
  if (const Json* v = detail::maybe(node, "svrg_option")) {
    const std::string option = detail::as_string(*v, detail::join_path(path, "svrg_option"));
    if (option == "I")
      cfg.svrg_option = SvrgOption::I;
    else if (option == "II")
      cfg.svrg_option = SvrgOption::II;
    else
      throw ConfigError(detail::join_path(path, "svrg_option"), "must be \"I\" or \"II\"");
  }
  if (const Json* v = detail::maybe(node, "noise_scale"))
    cfg.noise_scale = detail::as_double(*v, detail::join_path(path, "noise_scale"));
  if (const Json* v = detail::maybe(node, "drift_scale"))
    cfg.drift_scale = detail::as_double(*v, detail::join_path(path, "drift_scale"));
  if (const Json* v = detail::maybe(node, "shared_batch"))
    cfg.shared_batch = detail::as_bool(*v, detail::join_path(path, "shared_batch"));
  if (const Json* v = detail::maybe(node, "saga_memory_budget_bytes"))
    cfg.saga_memory_budget_bytes =
        detail::as_double(*v, detail::join_path(path, "saga_memory_budget_bytes"));
  if (const Json* v = detail::maybe(node, "saga_audit_every"))
    cfg.saga_audit_every =
        static_cast<int>(detail::as_integer(*v, detail::join_path(path, "saga_audit_every")));
  return cfg;
}

inline KernelConfig parse_kernel_config(const Json& node, const std::string& path) {
  KernelConfig cfg;
  if (!node.is_object()) throw ConfigError(path, "must be an object");
  if (const Json* v = detail::maybe(node, "mode")) {
    const std::string mode = detail::as_string(*v, detail::join_path(path, "mode"));
    if (mode == "fixed")
      cfg.mode = KernelConfig::Mode::fixed;
    else if (mode == "median_heuristic")
      cfg.mode = KernelConfig::Mode::median_heuristic;
    else
      throw ConfigError(detail::join_path(path, "mode"),
                        "must be \"fixed\" or \"median_heuristic\"");
  }
  if (const Json* v = detail::maybe(node, "eta"))
    cfg.eta = detail::as_double(*v, detail::join_path(path, "eta"));
  return cfg;
}

inline ExperimentConfig parse_experiment_config(const Json& document) {
  if (!document.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  const long long version = detail::as_integer(
      detail::member(document, "", "schema_version"), "schema_version");
  if (version != kConfigSchemaVersion)
    throw ConfigError("schema_version",
                      "unsupported version " + std::to_string(version) + " (expected " +
                          std::to_string(kConfigSchemaVersion) + ")");

  ExperimentConfig cfg;
  cfg.target = parse_target_spec(detail::member(document, "", "target"), "target");
  cfg.sampler = parse_sampler_config(detail::member(document, "", "sampler"), "sampler");
  if (const Json* v = detail::maybe(document, "kernel"))
    cfg.kernel = parse_kernel_config(*v, "kernel");
  cfg.particles = detail::as_integer(detail::member(document, "", "particles"), "particles");
  const Json& init = detail::member(document, "", "init");
  cfg.init.mean = detail::as_vector(detail::member(init, "init", "mean"), "init.mean");
  if (const Json* v = detail::maybe(init, "scale"))
    cfg.init.scale = detail::as_double(*v, "init.scale");
  const Json& outputs = detail::member(document, "", "outputs");
  cfg.outputs.trace_path = detail::as_string(
      detail::member(outputs, "outputs", "trace_path"), "outputs.trace_path");
  cfg.outputs.summary_path = detail::as_string(
      detail::member(outputs, "outputs", "summary_path"), "outputs.summary_path");
  if (const Json* v = detail::maybe(outputs, "snapshot_every"))
    cfg.outputs.snapshot_every = detail::as_integer(*v, "outputs.snapshot_every");

  validate(cfg);
  return cfg;
}

inline Json target_spec_to_json(const TargetSpec& spec) {
  Json node;
  if (const auto* gaussian = std::get_if<GaussianSpec>(&spec)) {
    node["type"] = "gaussian";
    node["mean"] = detail::vector_to_json(gaussian->mean);
    node["cov"] = detail::matrix_to_json(gaussian->covariance);
    node["split_count"] = gaussian->split_count;
  } else if (std::holds_alternative<MultimodeSpec>(spec)) {
    node["type"] = "multimode";
  } else if (const auto* mixture = std::get_if<MixtureSpec>(&spec)) {
    node["type"] = "mixture";
    Json comps = Json::array();
    for (const MixtureComponent& comp : mixture->components) {
      Json entry;
      entry["weight"] = comp.weight;
      entry["mean"] = comp.mean;
      entry["std"] = comp.std;
      comps.push_back(std::move(entry));
    }
    node["components"] = std::move(comps);
  } else if (const auto* linreg = std::get_if<BayesLinregSpec>(&spec)) {
    node["type"] = "bayes_linreg";
    node["csv_path"] = linreg->csv_path;
    node["noise_std"] = linreg->noise_std;
    node["prior_std"] = linreg->prior_std;
  }
  return node;
}

inline Json experiment_config_to_json(const ExperimentConfig& cfg) {
  Json document;
  document["schema_version"] = kConfigSchemaVersion;
  document["target"] = target_spec_to_json(cfg.target);
  Json sampler;
  sampler["kind"] = sampler_kind_token(cfg.sampler.kind);
  sampler["step_size"] = Json{{"h0", cfg.sampler.step_size.h0},
                              {"gamma", cfg.sampler.step_size.gamma}};
  sampler["beta"] = cfg.sampler.beta;
  sampler["batch_size"] = cfg.sampler.batch_size;
  sampler["total_steps"] = cfg.sampler.total_steps;
  sampler["seed"] = cfg.sampler.seed;
  sampler["epoch_length"] = cfg.sampler.epoch_length;
  sampler["snapshot_batch"] = cfg.sampler.snapshot_batch;
  sampler["svrg_option"] = cfg.sampler.svrg_option == SvrgOption::I ? "I" : "II";
  sampler["noise_scale"] = cfg.sampler.noise_scale;
  sampler["drift_scale"] = cfg.sampler.drift_scale;
  sampler["shared_batch"] = cfg.sampler.shared_batch;
  sampler["saga_memory_budget_bytes"] = cfg.sampler.saga_memory_budget_bytes;
  sampler["saga_audit_every"] = cfg.sampler.saga_audit_every;
  document["sampler"] = std::move(sampler);
  Json kernel;
  kernel["mode"] =
      cfg.kernel.mode == KernelConfig::Mode::fixed ? "fixed" : "median_heuristic";
  kernel["eta"] = cfg.kernel.eta;
  document["kernel"] = std::move(kernel);
  document["particles"] = cfg.particles;
  document["init"] = Json{{"mean", detail::vector_to_json(cfg.init.mean)},
                          {"scale", cfg.init.scale}};
  document["outputs"] = Json{{"trace_path", cfg.outputs.trace_path},
                             {"summary_path", cfg.outputs.summary_path},
                             {"snapshot_every", cfg.outputs.snapshot_every}};
  return document;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<config>", "cannot open config file: " + path);
  Json document;
  try {
    document = Json::parse(in);
  } catch (const Json::parse_error& err) {
    throw ConfigError("<config>", std::string("JSON parse error: ") + err.what());
  }
  return parse_experiment_config(document);
}

inline PotentialModel build_model(const TargetSpec& spec) {
  if (const auto* gaussian = std::get_if<GaussianSpec>(&spec))
    return make_gaussian({gaussian->mean, gaussian->covariance, gaussian->split_count});
  if (std::holds_alternative<MultimodeSpec>(spec)) return make_multimode(1);
  if (const auto* mixture = std::get_if<MixtureSpec>(&spec))
    return make_mixture(mixture->components);
  const auto& linreg = std::get<BayesLinregSpec>(spec);
  try {
    return make_bayes_linreg(
        read_dataset_csv(linreg.csv_path, linreg.noise_std, linreg.prior_std));
  } catch (const std::runtime_error& err) {
    throw ConfigError("target.csv_path", err.what());
  }
}

inline void ensure_writable(const std::string& path, const std::string& field) {
  if (path.empty()) throw ConfigError(field, "must be a non-empty path");
  std::ofstream probe(path, std::ios::app);
  if (!probe) throw ConfigError(field, "path is not writable: " + path);
}

// Per-coordinate marginal reference samplers, when the target admits them.
inline std::vector<ReferenceSampler> coordinate_references(const TargetSpec& spec) {
  std::vector<ReferenceSampler> refs;
  if (const auto* gaussian = std::get_if<GaussianSpec>(&spec)) {
    for (Eigen::Index c = 0; c < gaussian->mean.size(); ++c)
      refs.push_back(make_gaussian_reference(gaussian->mean[c],
                                             std::sqrt(gaussian->covariance(c, c))));
  } else if (std::holds_alternative<MultimodeSpec>(spec)) {
    refs.push_back(make_multimode_reference());
  } else if (const auto* mixture = std::get_if<MixtureSpec>(&spec)) {
    std::vector<MixtureComponent> comps = mixture->components;
    double total = 0.0;
    for (const MixtureComponent& comp : comps) total += comp.weight;
    double lo = comps[0].mean, hi = comps[0].mean;
    for (const MixtureComponent& comp : comps) {
      lo = std::min(lo, comp.mean - 8.0 * comp.std);
      hi = std::max(hi, comp.mean + 8.0 * comp.std);
    }
    refs.push_back(make_grid_reference(
        [comps, total](double t) {
          double dens = 0.0;
          for (const MixtureComponent& comp : comps) {
            const double z = (t - comp.mean) / comp.std;
            dens += comp.weight / total * std::exp(-0.5 * z * z) /
                    (comp.std * std::sqrt(2.0 * M_PI));
          }
          return dens;
        },
        lo, hi, 4001));
  } else if (const auto* linreg = std::get_if<BayesLinregSpec>(&spec)) {
    try {
      const RegressionDataset data =
          read_dataset_csv(linreg->csv_path, linreg->noise_std, linreg->prior_std);
      const auto [mean, cov] = analytic_posterior(data);
      for (Eigen::Index c = 0; c < mean.size(); ++c)
        refs.push_back(make_gaussian_reference(mean[c], std::sqrt(cov(c, c))));
    } catch (const std::runtime_error&) {
      refs.clear();
    }
  }
  return refs;
}

// Discovered modes for 1-D analytic targets; nullopt where undefined.
inline std::optional<ModeSet> analytic_modes(const TargetSpec& spec,
                                             const PotentialModel& model) {
  if (std::holds_alternative<MultimodeSpec>(spec))
    return find_modes_grid(model, -5.0, 5.0, 201);
  if (const auto* mixture = std::get_if<MixtureSpec>(&spec)) {
    double lo = mixture->components[0].mean, hi = mixture->components[0].mean;
    for (const MixtureComponent& comp : mixture->components) {
      lo = std::min(lo, comp.mean - 4.0 * comp.std);
      hi = std::max(hi, comp.mean + 4.0 * comp.std);
    }
    return find_modes_grid(model, lo, hi, 401);
  }
  if (const auto* gaussian = std::get_if<GaussianSpec>(&spec)) {
    if (gaussian->mean.size() != 1) return std::nullopt;
    const double sigma = std::sqrt(gaussian->covariance(0, 0));
    return find_modes_grid(model, gaussian->mean[0] - 5.0 * sigma,
                           gaussian->mean[0] + 5.0 * sigma, 201);
  }
  return std::nullopt;
}

struct ExperimentResult {
  RunTrace trace;
  Json summary;
};

inline Json summarize_run(const ExperimentConfig& cfg, const RunTrace& trace) {
  const Snapshot& last = trace.snapshots.back();
  ParticleEnsemble final_ensemble{last.positions, last.step};
  const Moments moments = sample_moments(final_ensemble);

  Json summary;
  summary["schema_version"] = kConfigSchemaVersion;
  summary["sampler"] = sampler_kind_token(cfg.sampler.kind);
  summary["final_step"] = last.step;
  summary["snapshots"] = static_cast<long long>(trace.snapshots.size());
  Json final_moments;
  final_moments["mean"] = detail::vector_to_json(moments.mean);
  final_moments["covariance_valid"] = moments.covariance_valid;
  if (moments.covariance_valid)
    final_moments["covariance"] = detail::matrix_to_json(moments.covariance);
  summary["final_moments"] = std::move(final_moments);

  const std::vector<ReferenceSampler> refs = coordinate_references(cfg.target);
  if (static_cast<Eigen::Index>(refs.size()) == last.positions.cols()) {
    SplitMix64 stream =
        make_stream(cfg.sampler.seed, StreamPurpose::reference, last.step, -1);
    Json w1 = Json::array();
    for (Eigen::Index c = 0; c < last.positions.cols(); ++c) {
      std::vector<double> coord(last.positions.rows());
      for (Eigen::Index i = 0; i < last.positions.rows(); ++i)
        coord[static_cast<std::size_t>(i)] = last.positions(i, c);
      w1.push_back(w1_vs_reference(coord, refs[static_cast<std::size_t>(c)], stream, 5));
    }
    summary["w1_per_coordinate"] = std::move(w1);
  }

  const PotentialModel model = build_model(cfg.target);
  if (const std::optional<ModeSet> modes = analytic_modes(cfg.target, model)) {
    Json coverage;
    coverage["covered"] = mode_coverage(final_ensemble, *modes);
    coverage["total"] = static_cast<long long>(modes->locations.size());
    Json locations = Json::array();
    for (double loc : modes->locations) locations.push_back(loc);
    coverage["locations"] = std::move(locations);
    coverage["radius"] = modes->radius;
    summary["mode_coverage"] = std::move(coverage);
  }

  summary["wall_time_seconds"] = trace.wall_time_seconds;
  summary["oracle_calls"] = Json{{"full_gradient", trace.full_gradient_calls},
                                 {"term_gradient", trace.term_gradient_calls}};
  Json warnings = Json::array();
  for (const std::string& warning : trace.warnings) warnings.push_back(warning);
  summary["warnings"] = std::move(warnings);
  summary["config_echo"] = experiment_config_to_json(cfg);
  return summary;
}

inline void write_json_file(const std::string& path, const Json& document,
                            const std::string& field) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError(field, "path is not writable: " + path);
  out << dump_json_17g(document) << '\n';
  out.flush();
  if (!out) throw ConfigError(field, "write failed: " + path);
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 1) {
  validate(cfg);
  const PotentialModel model = build_model(cfg.target);
  if (cfg.init.mean.size() != model.dim())
    throw ConfigError("init.mean", "length must match the target dimension " +
                                       std::to_string(model.dim()));
  ensure_writable(cfg.outputs.trace_path, "outputs.trace_path");
  ensure_writable(cfg.outputs.summary_path, "outputs.summary_path");

  const ParticleEnsemble initial = make_initial_ensemble(
      cfg.particles, cfg.init.mean, cfg.init.scale, cfg.sampler.seed);
  RunOptions opts;
  opts.snapshot_every = cfg.outputs.snapshot_every;
  opts.threads = threads;

  ExperimentResult result;
  result.trace = run(initial, model, cfg.sampler, cfg.kernel, opts);
  result.trace.config_echo = dump_json_17g(experiment_config_to_json(cfg));
  write_trace_csv(cfg.outputs.trace_path, result.trace);
  result.summary = summarize_run(cfg, result.trace);
  write_json_file(cfg.outputs.summary_path, result.summary, "outputs.summary_path");
  return result;
}

inline constexpr std::uint64_t kDefaultCompareSeed = 24;

struct CompareOptions {
  std::uint64_t seed = kDefaultCompareSeed;
  long long particles = 200;
  long long total_steps = 5000;
  double step_size = 1e-3;
  double beta = 1.0;
  double init_mean = 0.0;
  double init_scale = 0.5;
  std::string out_dir = "multimode_out";
  int threads = 1;
};

struct CompareReport {
  int coverage_spos = 0;
  int coverage_svgd = 0;
  ModeSet modes;
  Json report;
};

// SPOS vs SVGD from one tightly clustered init on the 1-D multimode target.
inline CompareReport compare_multimode(const CompareOptions& opts = CompareOptions{}) {
  if (opts.out_dir.empty()) throw ConfigError("out", "must be a non-empty path");
  if (opts.particles < 1) throw ConfigError("particles", "must be >= 1");
  if (opts.total_steps < 0) throw ConfigError("steps", "must be >= 0");
  std::error_code ec;
  std::filesystem::create_directories(opts.out_dir, ec);
  if (!std::filesystem::is_directory(opts.out_dir))
    throw ConfigError("out", "cannot create directory: " + opts.out_dir);
  const auto file_in_dir = [&opts](const char* name) {
    return (std::filesystem::path(opts.out_dir) / name).string();
  };
  const std::string spos_path = file_in_dir("spos_trace.csv");
  const std::string svgd_path = file_in_dir("svgd_trace.csv");
  const std::string report_path = file_in_dir("compare.json");
  ensure_writable(spos_path, "out");
  ensure_writable(svgd_path, "out");
  ensure_writable(report_path, "out");

  const PotentialModel model = make_multimode(1);
  Vector mean(1);
  mean[0] = opts.init_mean;
  const ParticleEnsemble initial =
      make_initial_ensemble(opts.particles, mean, opts.init_scale, opts.seed);

  SamplerConfig spos_cfg;
  spos_cfg.kind = SamplerKind::SPOS;
  spos_cfg.step_size.h0 = opts.step_size;
  spos_cfg.beta = opts.beta;
  spos_cfg.total_steps = opts.total_steps;
  spos_cfg.seed = opts.seed;
  SamplerConfig svgd_cfg = spos_cfg;
  svgd_cfg.kind = SamplerKind::SVGD;
  KernelConfig kernel;

  RunOptions run_opts;
  run_opts.snapshot_every = std::max<long long>(1, opts.total_steps / 50);
  run_opts.threads = opts.threads;

  const RunTrace spos_trace = run(initial, model, spos_cfg, kernel, run_opts);
  const RunTrace svgd_trace = run(initial, model, svgd_cfg, kernel, run_opts);
  write_trace_csv(spos_path, spos_trace);
  write_trace_csv(svgd_path, svgd_trace);

  CompareReport result;
  result.modes = find_modes_grid(model, -5.0, 5.0, 201);
  const Snapshot& spos_last = spos_trace.snapshots.back();
  const Snapshot& svgd_last = svgd_trace.snapshots.back();
  result.coverage_spos =
      mode_coverage(ParticleEnsemble{spos_last.positions, spos_last.step}, result.modes);
  result.coverage_svgd =
      mode_coverage(ParticleEnsemble{svgd_last.positions, svgd_last.step}, result.modes);

  Json report;
  report["schema_version"] = kConfigSchemaVersion;
  report["seed"] = opts.seed;
  report["particles"] = opts.particles;
  report["total_steps"] = opts.total_steps;
  report["step_size"] = opts.step_size;
  report["beta"] = opts.beta;
  report["init"] = Json{{"mean", opts.init_mean}, {"scale", opts.init_scale}};
  report["coverage_spos"] = result.coverage_spos;
  report["coverage_svgd"] = result.coverage_svgd;
  Json locations = Json::array();
  for (double loc : result.modes.locations) locations.push_back(loc);
  report["modes"] = Json{{"locations", std::move(locations)}, {"radius", result.modes.radius}};
  report["wall_time_seconds"] = Json{{"spos", spos_trace.wall_time_seconds},
                                     {"svgd", svgd_trace.wall_time_seconds}};
  write_json_file(report_path, report, "out");
  result.report = std::move(report);
  return result;
}

}  // namespace spos
