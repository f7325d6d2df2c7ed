#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"

namespace {

constexpr double kExactTol = 1e-12;
constexpr double kC1WallBound = 10.0;
constexpr double kC2WallBound = 30.0;
constexpr double kC3WallBound = 60.0;
constexpr double kC4WallBoundPerSeed = 60.0;
constexpr std::uint64_t kCompareSeeds[5] = {2, 3, 24, 33, 40};
constexpr std::uint64_t kTrendSeeds[5] = {1, 2, 3, 4, 5};

struct Outcome {
  bool passed = true;
  std::string summary;
  std::vector<std::string> details;

  void fail(const std::string& reason) {
    passed = false;
    details.push_back(reason);
  }
};

std::string working_dir() {
  static const std::string dir = [] {
    const std::filesystem::path path =
        std::filesystem::temp_directory_path() /
        ("spos_acceptance_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
    return path.string();
  }();
  return dir;
}

void check_criterion_result(const spos::CriterionResult& result, double wall_bound,
                            Outcome& outcome) {
  outcome.passed = result.passed;
  for (const std::string& failure : result.failures) outcome.details.push_back(failure);
  std::ostringstream summary;
  for (std::size_t i = 0; i < result.observed.size() && i < 2; ++i)
    summary << (i ? ", " : "") << result.observed[i].first << "="
            << spos::format_double(result.observed[i].second);
  outcome.summary = summary.str();
  if (!(result.wall_time_seconds < wall_bound))
    outcome.fail("runtime " + spos::format_double(result.wall_time_seconds) +
                 "s exceeds bound " + spos::format_double(wall_bound) + "s");
}

void criterion_gaussian_sgld(Outcome& outcome) {
  check_criterion_result(spos::validate_gaussian_sgld(), kC1WallBound, outcome);
}

void criterion_spos_ensemble(Outcome& outcome) {
  check_criterion_result(spos::validate_spos_ensemble(), kC2WallBound, outcome);
}

void criterion_conjugate_posterior(Outcome& outcome) {
  check_criterion_result(spos::validate_conjugate_posterior(), kC3WallBound, outcome);
}

void criterion_multimode_exploration(Outcome& outcome) {
  int wins = 0;
  std::ostringstream summary;
  for (std::uint64_t seed : kCompareSeeds) {
    spos::CompareOptions opts;
    opts.seed = seed;
    opts.out_dir = working_dir() + "/compare_seed_" + std::to_string(seed);
    const auto begin = std::chrono::steady_clock::now();
    const spos::CompareReport report = spos::compare_multimode(opts);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    const bool win =
        report.coverage_spos >= 3 && report.coverage_spos > report.coverage_svgd;
    wins += win ? 1 : 0;
    summary << (seed == kCompareSeeds[0] ? "" : " ") << seed << ":"
            << report.coverage_spos << ">" << report.coverage_svgd;
    if (!(wall < kC4WallBoundPerSeed))
      outcome.fail("seed " + std::to_string(seed) + " took " +
                   spos::format_double(wall) + "s, bound " +
                   spos::format_double(kC4WallBoundPerSeed) + "s");
    if (!win)
      outcome.details.push_back("seed " + std::to_string(seed) + ": coverage_spos=" +
                                std::to_string(report.coverage_spos) +
                                " coverage_svgd=" +
                                std::to_string(report.coverage_svgd));
  }
  outcome.summary = "wins " + std::to_string(wins) + "/5 (" + summary.str() + ")";
  if (wins < 4) outcome.fail("need wins on at least 4 of 5 seeds");
}

void criterion_estimator_exactness(Outcome& outcome) {
  const spos::PotentialModel model = spos::make_unit_gaussian(2, 5);
  const spos::ParticleEnsemble ensemble =
      spos::make_initial_ensemble(4, spos::Vector::Zero(2), 1.5, 11);

  spos::SvrgState svrg;
  svrg.option = spos::SvrgOption::II;
  spos::HistoryRing history(1);
  spos::Matrix positions = ensemble.positions;
  spos::svrg_snapshot_with_draw(svrg, positions, 0, 0, history, model);
  spos::SagaState saga(4, model.num_terms(), model.dim(), 1e9);
  saga.initialize(ensemble.positions, model);

  spos::BatchDraw batch;
  batch.indices = {1, 3, 3};
  double worst_svrg = 0.0, worst_saga = 0.0;
  for (int i = 0; i < 4; ++i) {
    const spos::Vector theta = ensemble.positions.row(i).transpose();
    const spos::Vector full = spos::full_gradient(model, theta);
    worst_svrg = std::max(worst_svrg,
                          (spos::svrg_estimate(svrg, i, theta, batch, model) - full)
                              .cwiseAbs()
                              .maxCoeff());
    worst_saga = std::max(worst_saga,
                          (spos::saga_estimate(saga, i, theta, batch, model) - full)
                              .cwiseAbs()
                              .maxCoeff());
  }
  if (!(worst_svrg <= kExactTol))
    outcome.fail("svrg estimate at snapshot off by " + spos::format_double(worst_svrg));
  if (!(worst_saga <= kExactTol))
    outcome.fail("saga estimate at init off by " + spos::format_double(worst_saga));

  spos::SamplerConfig cfg;
  cfg.kind = spos::SamplerKind::SVRG_POS_PLUS;
  cfg.step_size.h0 = 0.005;
  cfg.total_steps = 1000;
  cfg.epoch_length = 10;
  cfg.snapshot_batch = 2;
  cfg.batch_size = 2;
  cfg.seed = 11;
  const spos::PotentialModel split_model = spos::make_unit_gaussian(1, 8);
  const spos::ParticleEnsemble initial =
      spos::make_initial_ensemble(5, spos::Vector::Zero(1), 1.0, 11);
  spos::RunOptions opts;
  opts.snapshot_every = 100;
  const spos::RunTrace trace = spos::run(initial, split_model, cfg, spos::KernelConfig{}, opts);
  if (trace.full_gradient_calls != 0)
    outcome.fail("svrg-pos+ made " + std::to_string(trace.full_gradient_calls) +
                 " full-gradient calls over 1000 steps");
  outcome.summary = "max deviation " +
                    spos::format_double(std::max(worst_svrg, worst_saga)) +
                    ", full calls " + std::to_string(trace.full_gradient_calls);
}

void criterion_unbiasedness(Outcome& outcome) {
  const std::array<double, 3> slope = {0.5, 1.0, 1.5};
  const std::array<double, 3> center = {-1.0, 0.0, 2.0};
  const spos::PotentialModel model(
      1, 3, [slope, center](int j, const spos::Vector& theta) {
        return spos::Vector::Constant(1, slope[j] * (theta[0] - center[j]));
      });
  const double theta_value = 0.7;
  const spos::Vector theta = spos::Vector::Constant(1, theta_value);
  const double full = spos::full_gradient(model, theta)[0];

  spos::Matrix anchor(1, 1);
  anchor << theta_value + 0.008;
  spos::SvrgState svrg;
  svrg.option = spos::SvrgOption::II;
  spos::HistoryRing history(1);
  spos::svrg_snapshot_with_draw(svrg, anchor, 0, 0, history, model);

  spos::Matrix init(1, 1);
  init << -0.4;
  spos::SagaState saga(1, 3, 1, 1e6);
  saga.initialize(init, model);
  spos::BatchDraw past;
  past.indices = {1};
  spos::saga_commit(saga, 0, spos::Vector::Constant(1, 0.9), past, model);

  double plain_mean = 0.0, saga_mean = 0.0, svrg_mean = 0.0;
  double plain_var = 0.0, svrg_var = 0.0;
  for (int j = 0; j < 3; ++j) {
    spos::BatchDraw batch;
    batch.indices = {j};
    const double plain = spos::stochastic_gradient(model, theta, batch)[0];
    const double saga_est = spos::saga_estimate(saga, 0, theta, batch, model)[0];
    const double svrg_est = spos::svrg_estimate(svrg, 0, theta, batch, model)[0];
    plain_mean += plain / 3.0;
    saga_mean += saga_est / 3.0;
    svrg_mean += svrg_est / 3.0;
    plain_var += (plain - full) * (plain - full) / 3.0;
    svrg_var += (svrg_est - full) * (svrg_est - full) / 3.0;
  }
  if (!(std::abs(plain_mean - full) <= kExactTol))
    outcome.fail("plain estimator mean off by " +
                 spos::format_double(std::abs(plain_mean - full)));
  if (!(std::abs(saga_mean - full) <= kExactTol))
    outcome.fail("saga estimator mean off by " +
                 spos::format_double(std::abs(saga_mean - full)));
  if (!(std::abs(svrg_mean - full) <= kExactTol))
    outcome.fail("svrg estimator mean off by " +
                 spos::format_double(std::abs(svrg_mean - full)));
  if (!(svrg_var < plain_var))
    outcome.fail("svrg variance " + spos::format_double(svrg_var) +
                 " not below plain variance " + spos::format_double(plain_var));
  outcome.summary = "var svrg " + spos::format_double(svrg_var) + " < plain " +
                    spos::format_double(plain_var);
}

void criterion_w1_oracle(Outcome& outcome) {
  double worst = 0.0;
  int instance = 0;
  for (std::uint64_t seed = 1; instance < 200; ++seed) {
    for (int m = 2; m <= 6 && instance < 200; ++m, ++instance) {
      spos::SplitMix64 sa = spos::make_stream(seed, spos::StreamPurpose::reference, m, -1);
      spos::SplitMix64 sb = spos::make_stream(seed + 999, spos::StreamPurpose::reference, m, -1);
      std::vector<double> a(m), b(m);
      for (double& v : a) v = 2.0 * spos::normal_draw(sa);
      for (double& v : b) v = 2.0 * spos::normal_draw(sb);
      worst = std::max(worst,
                       std::abs(spos::w1_1d(a, b) - oracle::brute_force_w1(a, b)));
    }
  }
  if (!(worst <= kExactTol))
    outcome.fail("max |w1 - brute force| = " + spos::format_double(worst));
  outcome.summary = "200 instances, max deviation " + spos::format_double(worst);
}

struct CliOutcome {
  int code = -1;
  std::string output;
};

CliOutcome run_cli(const std::string& binary, const std::string& args) {
  const std::string command = "\"" + binary + "\" " + args + " 2>&1";
  FILE* pipe = popen(command.c_str(), "r");
  CliOutcome result;
  if (pipe == nullptr) return result;
  char buffer[4096];
  while (std::fgets(buffer, sizeof(buffer), pipe) != nullptr) result.output += buffer;
  const int status = pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void criterion_determinism(Outcome& outcome) {
  const char* binary = std::getenv("SPOS_CLI_PATH");
  if (binary == nullptr) {
    outcome.fail("SPOS_CLI_PATH is not set; cannot invoke the CLI");
    return;
  }
  std::vector<std::string> traces;
  const std::string thread_flags[3] = {"--threads 1", "--threads 1", "--threads 4"};
  for (int invocation = 0; invocation < 3; ++invocation) {
    const std::string dir = working_dir() + "/determinism_" + std::to_string(invocation);
    std::filesystem::create_directories(dir);
    spos::Json document;
    document["schema_version"] = 1;
    document["target"] = {{"type", "gaussian"}, {"mean", {0.0}}, {"cov", {{1.0}}}};
    document["sampler"] = {{"kind", "spos"},
                           {"step_size", {{"h0", 0.05}}},
                           {"total_steps", 50},
                           {"seed", 7}};
    document["particles"] = 16;
    document["init"] = {{"mean", {0.0}}, {"scale", 0.5}};
    document["outputs"] = {{"trace_path", dir + "/trace.csv"},
                           {"summary_path", dir + "/summary.json"},
                           {"snapshot_every", 10}};
    const std::string config = dir + "/config.json";
    std::ofstream(config) << spos::dump_json_17g(document) << "\n";
    const CliOutcome result = run_cli(binary, "run " + config + " " + thread_flags[invocation]);
    if (result.code != 0) {
      outcome.fail("cli run exited " + std::to_string(result.code) + ": " + result.output);
      return;
    }
    traces.push_back(read_file(dir + "/trace.csv"));
    if (traces.back().empty()) {
      outcome.fail("trace file is empty for invocation " + std::to_string(invocation));
      return;
    }
  }
  if (traces[0] != traces[1]) outcome.fail("repeat invocation changed trace bytes");
  if (traces[0] != traces[2]) outcome.fail("--threads 4 changed trace bytes");
  outcome.summary = std::to_string(traces[0].size()) + " trace bytes identical across 3 runs";
}

void criterion_reduction_identity(Outcome& outcome) {
  const spos::PotentialModel model = spos::make_unit_gaussian(3);
  spos::SamplerConfig cfg;
  cfg.step_size.h0 = 0.07;
  cfg.beta = 0.6;
  cfg.noise_scale = 0.0;
  cfg.drift_scale = 0.0;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const spos::ParticleEnsemble before =
        spos::make_initial_ensemble(4, spos::Vector::Zero(3), 1.5, seed);
    const spos::ParticleEnsemble svgd =
        spos::svgd_step(before, model, cfg, spos::KernelConfig{});
    const spos::ParticleEnsemble spos_out =
        spos::spos_step(before, model, cfg, spos::KernelConfig{});
    worst = std::max(worst,
                     (svgd.positions - spos_out.positions).cwiseAbs().maxCoeff());
  }
  if (!(worst <= kExactTol))
    outcome.fail("max |spos - svgd| = " + spos::format_double(worst));
  outcome.summary = "50 ensembles, max deviation " + spos::format_double(worst);
}

void criterion_w1_trend(Outcome& outcome) {
  const spos::ReferenceSampler reference = spos::make_gaussian_reference(0.0, 1.0);
  const spos::PotentialModel model = spos::make_unit_gaussian(1);
  std::ostringstream summary;
  for (std::uint64_t seed : kTrendSeeds) {
    spos::SamplerConfig cfg;
    cfg.kind = spos::SamplerKind::SPOS;
    cfg.step_size.h0 = 0.05;
    cfg.total_steps = 500;
    cfg.seed = seed;
    const spos::ParticleEnsemble initial =
        spos::make_initial_ensemble(100, spos::Vector::Constant(1, 3.0), 0.5, seed);
    spos::RunOptions opts;
    opts.snapshot_every = 10;
    const spos::RunTrace trace = spos::run(initial, model, cfg, spos::KernelConfig{}, opts);

    const std::size_t n = trace.snapshots.size();
    const std::size_t window = std::max<std::size_t>(1, n / 10);
    const auto window_median = [&](std::size_t begin, std::size_t end) {
      std::vector<double> values;
      for (std::size_t s = begin; s < end; ++s) {
        const spos::Snapshot& snap = trace.snapshots[s];
        std::vector<double> coord(static_cast<std::size_t>(snap.positions.rows()));
        for (Eigen::Index i = 0; i < snap.positions.rows(); ++i)
          coord[static_cast<std::size_t>(i)] = snap.positions(i, 0);
        spos::SplitMix64 stream =
            spos::make_stream(seed, spos::StreamPurpose::reference, snap.step, -1);
        values.push_back(spos::w1_vs_reference(coord, reference, stream, 5));
      }
      return spos::median_of(values);
    };
    const double early = window_median(0, window);
    const double late = window_median(n - window, n);
    summary << (seed == kTrendSeeds[0] ? "" : " ") << spos::format_double(late) << "<"
            << spos::format_double(early);
    if (!(late < early))
      outcome.fail("seed " + std::to_string(seed) + ": final-window W1 " +
                   spos::format_double(late) + " not below first-window W1 " +
                   spos::format_double(early));
  }
  outcome.summary = summary.str();
}

struct Criterion {
  std::string label;
  std::function<void(Outcome&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"gaussian calibration", criterion_gaussian_sgld},
      {"ensemble calibration", criterion_spos_ensemble},
      {"conjugate posterior accuracy", criterion_conjugate_posterior},
      {"multimode exploration", criterion_multimode_exploration},
      {"estimator exactness", criterion_estimator_exactness},
      {"unbiasedness by enumeration", criterion_unbiasedness},
      {"w1 oracle equivalence", criterion_w1_oracle},
      {"determinism", criterion_determinism},
      {"reduction identity", criterion_reduction_identity},
      {"w1 convergence trend", criterion_w1_trend},
  };

  bool all_passed = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto begin = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      criteria[k].body(outcome);
    } catch (const std::exception& err) {
      outcome.fail(std::string("exception: ") + err.what());
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
    std::printf("criterion %2zu (%s): %s [%s] (%.1fs)\n", k + 1,
                criteria[k].label.c_str(), outcome.passed ? "PASS" : "FAIL",
                outcome.summary.c_str(), wall);
    for (const std::string& detail : outcome.details)
      std::printf("    %s\n", detail.c_str());
    all_passed = all_passed && outcome.passed;
  }
  std::printf("%s\n", all_passed ? "ALL CRITERIA PASSED" : "CRITERIA FAILED");
  return all_passed ? 0 : 1;
}
