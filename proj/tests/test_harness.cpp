#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ncopt/harness.hpp"

using namespace ncopt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

ExperimentSpec tiny_spec() {
  ExperimentSpec spec;
  spec.problem.kind = "biweight";
  spec.problem.d = 10;
  spec.problem.m = 20;
  spec.methods = {MethodConfig{"gd"}, MethodConfig{"guarded-practical"}};
  spec.seeds = {0, 3};
  spec.eps = 1e-3;
  spec.max_steps = 3000;
  return spec;
}

}  // namespace

TEST_CASE("spec round-trips through JSON") {
  ExperimentSpec spec = tiny_spec();
  spec.methods[1].c1 = 0.05;
  spec.assert_lemmas = true;
  const std::string text = spec_to_json(spec);
  const ExperimentSpec back = spec_from_json(text);
  CHECK(back.problem.kind == "biweight");
  CHECK(back.problem.d == 10);
  CHECK(back.methods.size() == 2);
  CHECK(back.methods[1].c1 == 0.05);
  CHECK(back.seeds.end == 3);
  CHECK(back.assert_lemmas);
  CHECK(spec_to_json(back) == text);
}

TEST_CASE("quadratic spec with the guarded schedule yields no witness rows") {
  ExperimentSpec spec;
  spec.problem.kind = "quadratic";
  spec.problem.dim = 4;
  spec.problem.kappa = 100.0;
  MethodConfig m{"guarded-2nd"};
  m.l2 = 1.0;  // quadratics have zero Hessian variation; supply a bound
  spec.methods = {m};
  spec.seeds = {0, 1};
  spec.eps = 1e-6;
  spec.max_steps = 50000;
  const std::string dir = "harness_test_out/quad";
  fs::remove_all(dir);
  const ExperimentOutput out = run_experiment(spec, dir);
  REQUIRE(out.rows.size() == 1);
  CHECK(out.rows[0].error.empty());
  CHECK(out.rows[0].converged);
  CHECK(out.rows[0].witness_events == 0);
}

TEST_CASE("empty seed range produces empty outputs without error") {
  ExperimentSpec spec = tiny_spec();
  spec.seeds = {5, 5};
  const std::string dir = "harness_test_out/empty";
  fs::remove_all(dir);
  const ExperimentOutput out = run_experiment(spec, dir);
  CHECK(out.rows.empty());
  const auto rows = rows_from_csv(slurp(dir + "/summary.csv"));
  CHECK(rows.empty());
}

TEST_CASE("summary rows survive the CSV round trip") {
  ExperimentSpec spec = tiny_spec();
  spec.write_traces = false;
  const std::string dir = "harness_test_out/roundtrip";
  fs::remove_all(dir);
  const ExperimentOutput out = run_experiment(spec, dir);
  const auto rows = rows_from_csv(slurp(dir + "/summary.csv"));
  REQUIRE(rows.size() == out.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].method == out.rows[i].method);
    CHECK(rows[i].seed == out.rows[i].seed);
    CHECK(rows[i].converged == out.rows[i].converged);
    CHECK(rows[i].steps == out.rows[i].steps);
    CHECK(rows[i].n_gradient == out.rows[i].n_gradient);
    CHECK(rows[i].f_final == out.rows[i].f_final);
  }
}

TEST_CASE("summarize medians, censoring, and dominance") {
  std::vector<SummaryRow> rows;
  SummaryRow r;
  r.method = "a";
  r.converged = true;
  r.steps = 40;
  rows.push_back(r);
  // Single row: the median is that row's steps.
  auto s = summarize(rows);
  REQUIRE(s.size() == 1);
  CHECK(*s[0].median_steps == 40.0);

  // Unconverged rows censor to +inf and erase the median when they dominate.
  SummaryRow bad = r;
  bad.converged = false;
  rows.push_back(bad);
  rows.push_back(bad);
  s = summarize(rows);
  CHECK(!s[0].median_steps.has_value());

  // One method strictly dominant per-seed: its CDF dominates pointwise.
  std::vector<SummaryRow> duel;
  for (int seed = 0; seed < 10; ++seed) {
    SummaryRow fast;
    fast.method = "fast";
    fast.seed = static_cast<std::uint64_t>(seed);
    fast.converged = true;
    fast.steps = 10 + seed;
    SummaryRow slow = fast;
    slow.method = "slow";
    slow.steps = 100 + seed;
    duel.push_back(fast);
    duel.push_back(slow);
  }
  s = summarize(duel);
  REQUIRE(s.size() == 2);
  for (std::size_t q = 0; q < s[0].decile_steps.size(); ++q) {
    REQUIRE(s[0].decile_steps[q].has_value());
    REQUIRE(s[1].decile_steps[q].has_value());
    CHECK(*s[0].decile_steps[q] < *s[1].decile_steps[q]);
  }
  CHECK(*s[0].median_steps < *s[1].median_steps);
}

TEST_CASE("summary gradient totals equal the final trace counter snapshots") {
  ExperimentSpec spec = tiny_spec();
  spec.seeds = {0, 2};
  const std::string dir = "harness_test_out/counters";
  fs::remove_all(dir);
  const ExperimentOutput out = run_experiment(spec, dir);
  std::int64_t total_grad_rows = 0;
  for (const auto& row : out.rows) total_grad_rows += row.n_gradient;

  std::int64_t total_grad_traces = 0;
  for (const auto& file : out.files_written) {
    if (file.find(".jsonl") == std::string::npos) continue;
    std::istringstream in(slurp(file));
    std::string line, last;
    while (std::getline(in, line)) {
      if (!line.empty()) last = line;
    }
    const auto pos = last.rfind("\"n_gradient\":");
    REQUIRE(pos != std::string::npos);
    total_grad_traces += std::stoll(last.substr(pos + 13));
  }
  CHECK(total_grad_rows == total_grad_traces);
}

TEST_CASE("identical specs produce byte-identical outputs") {
  ExperimentSpec spec = tiny_spec();
  const std::string dir1 = "harness_test_out/det1";
  const std::string dir2 = "harness_test_out/det2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  run_experiment(spec, dir1, 1);
  run_experiment(spec, dir2, 2);  // parallel schedule must not matter
  CHECK(slurp(dir1 + "/summary.csv") == slurp(dir2 + "/summary.csv"));
  for (const auto& entry : fs::recursive_directory_iterator(dir1)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel =
        fs::relative(entry.path(), dir1).string();
    CHECK(slurp(entry.path().string()) == slurp((fs::path(dir2) / rel).string()));
  }
}

TEST_CASE("unknown methods are recorded as row errors, batch continues") {
  ExperimentSpec spec = tiny_spec();
  spec.methods = {MethodConfig{"nope"}, MethodConfig{"gd"}};
  spec.write_traces = false;
  const std::string dir = "harness_test_out/errors";
  fs::remove_all(dir);
  const ExperimentOutput out = run_experiment(spec, dir);
  REQUIRE(out.rows.size() == 6);
  CHECK(!out.rows[0].error.empty());
  CHECK(out.rows[5].error.empty());
}
