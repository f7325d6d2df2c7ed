#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spos/targets.hpp"
#include "spos/trace.hpp"

namespace spos {

// 17 significant digits: enough to round-trip any double exactly.
inline std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

// Header `step,particle,dim_0,…`; one row per (snapshot, particle).
inline void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  if (trace.snapshots.empty()) throw std::invalid_argument("trace has no snapshots");
  const long long d = trace.snapshots.front().positions.cols();
  out << "step,particle";
  for (long long c = 0; c < d; ++c) out << ",dim_" << c;
  out << "\n";
  for (const auto& snap : trace.snapshots) {
    for (long long i = 0; i < snap.positions.rows(); ++i) {
      out << snap.step << ',' << i;
      for (long long c = 0; c < d; ++c)
        out << ',' << format_double(snap.positions(i, c));
      out << "\n";
    }
  }
}

inline void write_trace_csv(const std::string& path, const RunTrace& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open trace path for writing: " + path);
  write_trace_csv(out, trace);
  if (!out.flush()) throw std::runtime_error("failed writing trace: " + path);
}

// CSV with a header naming one covariate column per dimension plus `y`.
inline RegressionDataset read_dataset_csv(const std::string& path, double noise_std,
                                          double prior_std) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset has no header: " + path);
  std::vector<std::string> names;
  {
    std::stringstream header(line);
    std::string field;
    while (std::getline(header, field, ',')) names.push_back(field);
  }
  int y_col = -1;
  for (std::size_t c = 0; c < names.size(); ++c)
    if (names[c] == "y") y_col = static_cast<int>(c);
  if (y_col < 0) throw std::runtime_error("dataset header has no `y` column: " + path);
  const int d = static_cast<int>(names.size()) - 1;
  if (d < 1) throw std::runtime_error("dataset has no covariate columns: " + path);

  std::vector<std::vector<double>> rows;
  for (int line_no = 2; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ss, field, ',')) {
      try {
        row.push_back(std::stod(field));
      } catch (const std::exception&) {
        throw std::runtime_error("dataset " + path + " line " +
                                 std::to_string(line_no) + ": bad number '" + field + "'");
      }
    }
    if (row.size() != names.size())
      throw std::runtime_error("dataset " + path + " line " + std::to_string(line_no) +
                               ": expected " + std::to_string(names.size()) + " fields");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("dataset has no data rows: " + path);

  RegressionDataset data;
  data.design.resize(static_cast<long long>(rows.size()), d);
  data.responses.resize(static_cast<long long>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    int col = 0;
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (static_cast<int>(c) == y_col)
        data.responses[static_cast<long long>(r)] = rows[r][c];
      else
        data.design(static_cast<long long>(r), col++) = rows[r][c];
    }
  }
  data.noise_std = noise_std;
  data.prior_std = prior_std;
  check_dataset(data);
  return data;
}

}  // namespace spos
