#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "spos/model.hpp"

namespace spos {

struct Snapshot {
  long long step;
  Matrix positions;  // M×d
};

struct MetricRow {
  long long step;
  std::vector<std::pair<std::string, double>> values;  // insertion-ordered
};

struct RunTrace {
  std::vector<Snapshot> snapshots;
  std::vector<MetricRow> metrics;
  double wall_time_seconds = 0.0;
  std::string config_echo;
  std::vector<std::string> warnings;
  long long full_gradient_calls = 0;
  long long term_gradient_calls = 0;
};

}  // namespace spos
