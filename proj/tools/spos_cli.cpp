#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <spos/spos.hpp>

namespace {

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const spos::DivergenceError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const spos::ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}

int run_validate(const std::string& out_dir, int threads) {
  if (out_dir.empty()) throw spos::ConfigError("out", "must be a non-empty path");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir))
    throw spos::ConfigError("out", "cannot create directory: " + out_dir);
  const std::string card_path =
      (std::filesystem::path(out_dir) / "validate.json").string();
  spos::ensure_writable(card_path, "out");

  const std::vector<spos::CriterionResult> results = spos::run_validation_suite(threads);
  spos::write_json_file(card_path, spos::validation_scorecard(results), "out");

  bool all_passed = true;
  for (const spos::CriterionResult& result : results) {
    std::cout << result.name << ": " << (result.passed ? "PASS" : "FAIL") << "\n";
    if (!result.passed) {
      all_passed = false;
      std::cerr << "criterion failed: " << result.name << "\n";
      for (const std::string& failure : result.failures)
        std::cerr << "  " << failure << "\n";
    }
  }
  std::cout << "wrote " << card_path << "\n";
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"particle-based Bayesian sampling experiments"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "worker thread cap (default: SAMPLER_THREADS env var, else 1)");

  std::string config_path;
  CLI::App* run_cmd = app.add_subcommand("run", "run a config-driven experiment");
  run_cmd->fallthrough();
  run_cmd->add_option("config", config_path, "JSON config file")->required();

  spos::CompareOptions compare;
  CLI::App* compare_cmd = app.add_subcommand(
      "compare-multimode", "run SPOS and SVGD from one init on the multimode target");
  compare_cmd->fallthrough();
  compare_cmd->add_option("--seed", compare.seed, "RNG seed");
  compare_cmd->add_option("--particles", compare.particles, "ensemble size M");
  compare_cmd->add_option("--steps", compare.total_steps, "step count T");
  compare_cmd->add_option("--out", compare.out_dir, "output directory");

  std::string validate_out = "validation_out";
  CLI::App* validate_cmd =
      app.add_subcommand("validate", "run the calibration scorecard suite");
  validate_cmd->fallthrough();
  validate_cmd->add_option("--out", validate_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  const int worker_threads = spos::resolve_threads(threads);

  if (run_cmd->parsed()) {
    return guarded([&] {
      const spos::ExperimentConfig cfg = spos::load_experiment_config(config_path);
      spos::run_experiment(cfg, worker_threads);
      std::cout << "wrote " << cfg.outputs.trace_path << " and "
                << cfg.outputs.summary_path << "\n";
      return 0;
    });
  }
  if (compare_cmd->parsed()) {
    return guarded([&] {
      compare.threads = worker_threads;
      const spos::CompareReport report = spos::compare_multimode(compare);
      std::cout << "coverage_spos=" << report.coverage_spos
                << " coverage_svgd=" << report.coverage_svgd << "\n";
      std::cout << "wrote " << compare.out_dir << "/compare.json\n";
      return 0;
    });
  }
  return guarded([&] { return run_validate(validate_out, worker_threads); });
}
