#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ncopt/core.hpp"

namespace ncopt {

// Batch experiment runner: seeded problem instances crossed with methods,
// JSON-lines traces, a CSV summary, and aggregate statistics. Identical specs
// reproduce byte-identical outputs.

struct MethodConfig {
  std::string name;  // gd | ragd | ncg | guarded-2nd | guarded-3rd |
                     // guarded-practical | guarded-practical-no-nc
  double c1 = 0.01;
  std::optional<double> l1, l2, l3;  // constants override for guarded modes
};

struct ProblemConfig {
  std::string kind;            // biweight | quadratic | double_well
  Eigen::Index d = 30;         // biweight columns
  Eigen::Index m = 60;         // biweight rows
  Eigen::Index dim = 2;        // quadratic / double_well dimension
  double kappa = 100.0;        // quadratic condition number
  double x0_scale = 0.25;      // seeded-start scale (quadratic, double_well)
};

struct SeedRange {
  std::uint64_t begin = 0;
  std::uint64_t end = 0;  // exclusive
};

struct ExperimentSpec {
  ProblemConfig problem;
  std::vector<MethodConfig> methods;
  SeedRange seeds;
  double eps = 1e-4;
  std::int64_t max_steps = 10'000;
  std::string output_path = "out";
  bool assert_lemmas = false;
  bool write_traces = true;
};

ExperimentSpec spec_from_json(const std::string& text);
std::string spec_to_json(const ExperimentSpec& spec);

struct SummaryRow {
  std::string method;
  std::uint64_t seed = 0;
  bool converged = false;
  std::int64_t steps = 0;
  std::int64_t n_gradient = 0;
  std::int64_t n_value = 0;
  double f_final = std::numeric_limits<double>::quiet_NaN();
  double grad_norm_final = std::numeric_limits<double>::quiet_NaN();
  std::int64_t witness_events = 0;
  std::int64_t nc_exploit_wins = 0;
  std::string error;  // empty on success; "assertion: ..." for lemma failures
};

struct ProblemInstance {
  std::shared_ptr<Oracle> oracle;
  Vector x0;
};

/// Instantiates the problem for one seed. Biweight starts at the origin;
/// quadratic and double-well starts are seeded through the documented
/// counter generator.
ProblemInstance make_problem(const ProblemConfig& cfg, std::uint64_t seed);

/// Runs one (method, seed) cell; never throws, failures land in row.error.
SummaryRow run_single(const ExperimentSpec& spec, const MethodConfig& method,
                      std::uint64_t seed, RunTrace* trace);

struct ExperimentOutput {
  std::vector<SummaryRow> rows;
  std::vector<std::string> files_written;
};

/// Runs the full batch and writes traces plus summary.csv (and an echo of the
/// spec) under out_dir. Runs are independent and may execute in parallel;
/// outputs do not depend on the schedule.
ExperimentOutput run_experiment(const ExperimentSpec& spec,
                                const std::string& out_dir,
                                int parallelism = 1);

struct MethodSummary {
  std::string method;
  std::int64_t runs = 0;
  std::int64_t converged = 0;
  std::int64_t errors = 0;
  // Steps statistics are right-censored: unconverged runs count as +inf and
  // show up as absent quantiles.
  std::optional<double> median_steps;
  std::vector<std::optional<double>> decile_steps;  // q = 0.0, 0.1, ..., 1.0
  std::int64_t total_gradient = 0;
  std::int64_t total_value = 0;
};

std::vector<MethodSummary> summarize(const std::vector<SummaryRow>& rows);
std::string summary_to_json(const std::vector<MethodSummary>& summaries);
std::string summary_table(const std::vector<MethodSummary>& summaries);

std::string rows_to_csv(const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> rows_from_csv(const std::string& text);

std::string trace_to_jsonl(const RunTrace& trace);

}  // namespace ncopt
