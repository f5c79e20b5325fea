#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ncopt/agd_monitor.hpp"
#include "ncopt/driver.hpp"
#include "ncopt/harness.hpp"
#include "ncopt/nc_exploit.hpp"
#include "ncopt/problems.hpp"
#include "ncopt/rng.hpp"

namespace fs = std::filesystem;
using namespace ncopt;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// Output root: NCOPT_OUTPUT_ROOT when set, else the working directory.
fs::path resolve_out(const std::string& out) {
  fs::path p(out);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("NCOPT_OUTPUT_ROOT")) {
    return fs::path(root) / p;
  }
  return p;
}

int cmd_run(const std::string& spec_path, std::string out,
            int parallelism, bool assert_lemmas) {
  ExperimentSpec spec = spec_from_json(read_file(spec_path));
  if (assert_lemmas) spec.assert_lemmas = true;
  if (out.empty()) out = spec.output_path;
  const fs::path out_dir = resolve_out(out);

  const ExperimentOutput result =
      run_experiment(spec, out_dir.string(), parallelism);

  const auto summaries = summarize(result.rows);
  std::cout << summary_table(summaries);
  std::cout << result.rows.size() << " runs -> " << out_dir.string() << "\n";

  bool any_error = false;
  bool any_assertion = false;
  for (const SummaryRow& r : result.rows) {
    if (r.error.empty()) continue;
    if (r.error.rfind("assertion", 0) == 0) {
      any_assertion = true;
    } else {
      any_error = true;
    }
    std::cerr << r.method << " seed " << r.seed << ": " << r.error << "\n";
  }
  if (any_error) return 2;
  if (any_assertion) return 3;
  return 0;
}

int cmd_summarize(const std::string& dir, const std::string& json_out) {
  const fs::path summary = fs::path(dir) / "summary.csv";
  const auto rows = rows_from_csv(read_file(summary.string()));
  const auto summaries = summarize(rows);
  std::cout << summary_table(summaries);
  const std::string json_text = summary_to_json(summaries);
  if (!json_out.empty()) {
    std::ofstream f(resolve_out(json_out), std::ios::binary);
    f << json_text;
  } else {
    std::cout << json_text;
  }
  return 0;
}

int cmd_gen_problem(std::uint64_t seed, Eigen::Index d, Eigen::Index m,
                    const std::string& out) {
  const BiweightInstance inst = gen_biweight(seed, d, m);
  const std::string text = biweight_to_json(inst);
  if (out.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream f(resolve_out(out), std::ios::binary);
    f << text << "\n";
    std::cout << "wrote " << resolve_out(out).string() << "\n";
  }
  return 0;
}

// Lemma-assertion campaign: the statistical checks behind the method's
// guarantees, sized for a quick console run.
int cmd_check(std::uint64_t n_seeds) {
  int failures = 0;
  auto report = [&](const char* name, bool ok, const std::string& note = "") {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!note.empty()) std::cout << " (" << note << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  // Convex quadratics: no witness, certified iteration bound.
  {
    bool ok = true;
    std::int64_t checked = 0;
    for (std::uint64_t s = 0; s < n_seeds && ok; ++s) {
      const auto dim =
          static_cast<Eigen::Index>(1 + rng::keyed_u64(s, 100, 0) % 20);
      const double kappa =
          std::pow(10.0, 4.0 * rng::uniform01(s, 101, 0));
      Vector lambda(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        lambda[i] = dim == 1 ? 1.0
                             : std::pow(kappa, static_cast<double>(i) /
                                                   static_cast<double>(dim - 1));
      }
      QuadraticOracle q(lambda);
      Vector y0(dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        y0[i] = rng::normal01(s, 102, static_cast<std::uint64_t>(i));
      }
      AgdParams params;
      params.smoothness = lambda.maxCoeff();
      params.strong_convexity = lambda.minCoeff();
      EvalCounters c;
      const double gn0 = norm(eval_gradient(q, y0, c));
      params.target_eps = std::max(1e-9, 1e-6 * gn0);
      const AgdOutcome out = run_monitored_agd(q, y0, params, c);
      ok = out.terminated_stationary && !out.witness;
      ++checked;
    }
    report("convex quadratics emit no witness", ok,
           std::to_string(checked) + " instances");
  }

  // Symmetric curvature step progress on constructed pairs.
  {
    bool ok = true;
    const double l2 = 12.0;
    std::int64_t checked = 0;
    for (std::uint64_t s = 0; s < n_seeds && ok; ++s) {
      DoubleWellOracle dw(3);
      Vector dir(3);
      for (int i = 0; i < 3; ++i) dir[i] = rng::normal01(s, 110, i);
      dir.normalize();
      const double alpha = 0.1 + 0.7 * rng::uniform01(s, 111, 0);
      const double h = 0.5 * (alpha / (4.0 * l2)) *
                       (0.5 + 0.5 * rng::uniform01(s, 112, 0));
      const Vector u = h * dir;
      const Vector v = -h * dir;
      EvalCounters c;
      const double f_u = eval_value(dw, u, c);
      const double f_v = eval_value(dw, v, c);
      const Vector g_v = eval_gradient(dw, v, c);
      const double margin =
          f_v + g_v.dot(u - v) - 0.5 * alpha * (u - v).squaredNorm() - f_u;
      if (!(margin > 0)) continue;  // hypothesis not met; skip draw
      const double eta = alpha / l2;
      const NcStepResult z = exploit_nc_pair(dw, u, v, eta, c);
      ok = z.f_z <= f_u - alpha * eta * eta / 12.0;
      ++checked;
    }
    report("curvature step achieves the guaranteed decrease", ok,
           std::to_string(checked) + " pairs");
  }

  // Per-iteration progress of the theoretical schedules.
  {
    bool ok = true;
    for (const double eps : {1e-2, 1e-3}) {
      for (const auto mode :
           {GuardedMode::second_order, GuardedMode::third_order}) {
        DoubleWellOracle dw(1);
        GuardedConfig cfg;
        cfg.mode = mode;
        cfg.eps = eps;
        cfg.l1 = 11.0;
        cfg.l2 = 12.0;
        cfg.l3 = 6.0;
        cfg.assert_lemmas = true;
        Vector p0(1);
        p0[0] = 0.1;
        const GuardedResult r = run_guarded(dw, p0, cfg);
        ok = ok && r.converged && r.lemma_violations == 0;
      }
    }
    report("guarded per-iteration progress bounds hold", ok);
  }

  // Cubic interpolation identity.
  {
    bool ok = true;
    for (std::uint64_t s = 0; s < 1000 && ok; ++s) {
      double coeff[4];
      for (int i = 0; i < 4; ++i) {
        coeff[i] = -10.0 + 20.0 * rng::uniform01(s, 120, static_cast<std::uint64_t>(i));
      }
      auto h = [&](double th) {
        return coeff[0] + th * (coeff[1] + th * (coeff[2] + th * coeff[3]));
      };
      const double th = rng::uniform01(s, 121, 0);
      const double rec = cubic_reconstruct(h(0), h(-0.5), h(-1), h(-3), th);
      ok = std::abs(rec - h(th)) <= 1e-9;
    }
    report("cubic reconstruction is exact", ok);
  }

  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"first-order optimization benchmark harness"};
  app.require_subcommand(1);

  std::string spec_path, out, dir, json_out;
  int parallelism = 1;
  bool assert_lemmas = false;
  std::uint64_t seed = 0, n_seeds = 200;
  Eigen::Index d = 30, m = 60;

  auto* run = app.add_subcommand("run", "run an experiment spec");
  run->add_option("spec_file", spec_path, "spec file (JSON)");
  run->add_option("--spec", spec_path, "spec file (JSON), same as the positional");
  run->add_option("--out", out, "output directory");
  run->add_option("--parallelism", parallelism, "worker threads");
  run->add_flag("--assert-lemmas", assert_lemmas, "enable lemma assertions");

  auto* summ = app.add_subcommand("summarize", "summarize an output directory");
  summ->add_option("dir", dir, "experiment output directory")->required();
  summ->add_option("--json", json_out, "write the JSON report here");

  auto* check = app.add_subcommand("check", "run the lemma-assertion campaign");
  check->add_option("--seeds", n_seeds, "instances per campaign");

  std::string kind = "biweight";
  auto* gen = app.add_subcommand("gen-problem", "generate a problem instance");
  gen->add_option("--kind", kind, "problem kind (biweight)");
  gen->add_option("--seed", seed, "instance seed");
  gen->add_option("--d", d, "columns");
  gen->add_option("--m", m, "rows");
  gen->add_option("--out", out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (spec_path.empty()) {
        std::cerr << "run: missing spec file\n";
        return 2;
      }
      return cmd_run(spec_path, out, parallelism, assert_lemmas);
    }
    if (summ->parsed()) return cmd_summarize(dir, json_out);
    if (check->parsed()) return cmd_check(n_seeds);
    if (gen->parsed()) {
      if (kind != "biweight") {
        std::cerr << "gen-problem: only biweight instances serialize\n";
        return 2;
      }
      return cmd_gen_problem(seed, d, m, out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
