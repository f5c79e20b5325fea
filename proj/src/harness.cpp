#include "ncopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ncopt/baselines.hpp"
#include "ncopt/driver.hpp"
#include "ncopt/problems.hpp"
#include "ncopt/rng.hpp"

namespace ncopt {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize_field(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::string sanitize_filename(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') {
      c = '_';
    }
  }
  return s;
}

// Seed streams for harness-generated starting points; distinct from the
// biweight instance streams.
constexpr std::uint64_t kStartStream = 16;

}  // namespace

ExperimentSpec spec_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentSpec spec;
  const auto& p = j.at("problem");
  spec.problem.kind = p.at("kind").get<std::string>();
  if (p.contains("d")) spec.problem.d = p.at("d").get<Eigen::Index>();
  if (p.contains("m")) spec.problem.m = p.at("m").get<Eigen::Index>();
  if (p.contains("dim")) spec.problem.dim = p.at("dim").get<Eigen::Index>();
  if (p.contains("kappa")) spec.problem.kappa = p.at("kappa").get<double>();
  if (p.contains("x0_scale")) spec.problem.x0_scale = p.at("x0_scale").get<double>();
  for (const auto& m : j.at("methods")) {
    MethodConfig mc;
    mc.name = m.at("name").get<std::string>();
    if (m.contains("c1")) mc.c1 = m.at("c1").get<double>();
    if (m.contains("l1")) mc.l1 = m.at("l1").get<double>();
    if (m.contains("l2")) mc.l2 = m.at("l2").get<double>();
    if (m.contains("l3")) mc.l3 = m.at("l3").get<double>();
    spec.methods.push_back(std::move(mc));
  }
  spec.seeds.begin = j.at("seeds").at("begin").get<std::uint64_t>();
  spec.seeds.end = j.at("seeds").at("end").get<std::uint64_t>();
  spec.eps = j.at("eps").get<double>();
  if (j.contains("max_steps")) spec.max_steps = j.at("max_steps").get<std::int64_t>();
  if (j.contains("output_path")) spec.output_path = j.at("output_path").get<std::string>();
  if (j.contains("assert_lemmas")) spec.assert_lemmas = j.at("assert_lemmas").get<bool>();
  if (j.contains("write_traces")) spec.write_traces = j.at("write_traces").get<bool>();
  return spec;
}

std::string spec_to_json(const ExperimentSpec& spec) {
  ordered_json j;
  j["problem"]["kind"] = spec.problem.kind;
  j["problem"]["d"] = spec.problem.d;
  j["problem"]["m"] = spec.problem.m;
  j["problem"]["dim"] = spec.problem.dim;
  j["problem"]["kappa"] = spec.problem.kappa;
  j["problem"]["x0_scale"] = spec.problem.x0_scale;
  j["methods"] = ordered_json::array();
  for (const auto& m : spec.methods) {
    ordered_json mj;
    mj["name"] = m.name;
    mj["c1"] = m.c1;
    if (m.l1) mj["l1"] = *m.l1;
    if (m.l2) mj["l2"] = *m.l2;
    if (m.l3) mj["l3"] = *m.l3;
    j["methods"].push_back(std::move(mj));
  }
  j["seeds"]["begin"] = spec.seeds.begin;
  j["seeds"]["end"] = spec.seeds.end;
  j["eps"] = spec.eps;
  j["max_steps"] = spec.max_steps;
  j["output_path"] = spec.output_path;
  j["assert_lemmas"] = spec.assert_lemmas;
  j["write_traces"] = spec.write_traces;
  return j.dump(2) + "\n";
}

ProblemInstance make_problem(const ProblemConfig& cfg, std::uint64_t seed) {
  ProblemInstance inst;
  if (cfg.kind == "biweight") {
    inst.oracle = std::make_shared<BiweightOracle>(gen_biweight(seed, cfg.d, cfg.m));
    inst.x0 = Vector::Zero(cfg.d);
  } else if (cfg.kind == "quadratic") {
    // Eigenvalues log-spaced from 1 to kappa, endpoints exact.
    Vector lambda(cfg.dim);
    if (cfg.dim == 1) {
      lambda[0] = 1.0;
    } else {
      for (Eigen::Index i = 0; i < cfg.dim; ++i) {
        lambda[i] = std::pow(cfg.kappa, static_cast<double>(i) /
                                            static_cast<double>(cfg.dim - 1));
      }
    }
    inst.oracle = std::make_shared<QuadraticOracle>(std::move(lambda));
    inst.x0.resize(cfg.dim);
    for (Eigen::Index i = 0; i < cfg.dim; ++i) {
      inst.x0[i] = cfg.x0_scale *
                   rng::normal01(seed, kStartStream, static_cast<std::uint64_t>(i));
    }
  } else if (cfg.kind == "double_well") {
    inst.oracle = std::make_shared<DoubleWellOracle>(cfg.dim);
    inst.x0.resize(cfg.dim);
    for (Eigen::Index i = 0; i < cfg.dim; ++i) {
      inst.x0[i] = cfg.x0_scale *
                   (2.0 * rng::uniform01(seed, kStartStream,
                                         static_cast<std::uint64_t>(i)) -
                    1.0);
    }
  } else {
    throw std::invalid_argument("make_problem: unknown kind '" + cfg.kind + "'");
  }
  return inst;
}

namespace {

// Total-gradient budget of the theoretical schedules, asserted per run when
// lemma assertions are on, the lower bound is known, and eps sits inside the
// schedule's validity range. Empty result means the budget holds (or does
// not apply).
std::string check_gradient_budget(const Oracle& f, const Vector& x0,
                                  const GuardedConfig& cfg,
                                  const GuardedResult& r) {
  const KnownConstants kc = f.constants();
  if (!kc.f_lower_bound) return {};
  EvalCounters scratch;
  const double delta_f = eval_value(f, x0, scratch) - *kc.f_lower_bound;
  if (!(delta_f > 0)) return {};
  const double eps = cfg.eps;
  double budget;
  if (cfg.mode == GuardedMode::second_order) {
    const double l2 = *cfg.l2;
    if (!(eps <= std::min(std::pow(delta_f, 2.0 / 3.0) * std::cbrt(l2),
                          cfg.l1 * cfg.l1 / (64.0 * l2)))) {
      return {};
    }
    budget = 20.0 * delta_f * std::sqrt(cfg.l1) * std::pow(l2, 0.25) *
             std::pow(eps, -1.75) * std::log(500.0 * cfg.l1 * delta_f / (eps * eps));
  } else {
    const double l3 = *cfg.l3;
    if (!(std::pow(eps, 2.0 / 3.0) <=
          std::min(std::sqrt(delta_f) * std::pow(l3, 1.0 / 6.0),
                   cfg.l1 / (8.0 * std::cbrt(l3))))) {
      return {};
    }
    budget = 20.0 * delta_f * std::sqrt(cfg.l1) * std::pow(l3, 1.0 / 6.0) *
             std::pow(eps, -5.0 / 3.0) *
             std::log(500.0 * cfg.l1 * delta_f / (eps * eps));
  }
  if (static_cast<double>(r.counters.n_gradient) > budget) {
    return "assertion: gradient budget exceeded (" +
           std::to_string(r.counters.n_gradient) + " > " +
           std::to_string(budget) + ")";
  }
  return {};
}

GuardedConfig guarded_config_for(const ExperimentSpec& spec,
                                 const MethodConfig& method,
                                 const Oracle& oracle) {
  GuardedConfig cfg;
  cfg.eps = spec.eps;
  cfg.c1 = method.c1;
  cfg.max_total_inner_steps = spec.max_steps;
  cfg.assert_lemmas = spec.assert_lemmas;
  const KnownConstants kc = oracle.constants();
  auto need = [&](const std::optional<double>& override_v,
                  const std::optional<double>& known, const char* what) {
    if (override_v) return *override_v;
    if (known) return *known;
    throw std::invalid_argument(std::string("method '") + method.name +
                                "' needs constant " + what);
  };
  if (method.name == "guarded-2nd") {
    cfg.mode = GuardedMode::second_order;
    cfg.l1 = need(method.l1, kc.l1, "l1");
    cfg.l2 = need(method.l2, kc.l2, "l2");
    if (*cfg.l2 <= 0) throw std::invalid_argument("guarded-2nd needs l2 > 0");
  } else if (method.name == "guarded-3rd") {
    cfg.mode = GuardedMode::third_order;
    cfg.l1 = need(method.l1, kc.l1, "l1");
    cfg.l3 = need(method.l3, kc.l3, "l3");
    if (*cfg.l3 <= 0) throw std::invalid_argument("guarded-3rd needs l3 > 0");
  } else {
    cfg.mode = GuardedMode::practical;
    cfg.l1 = method.l1.value_or(1.0);  // initial semi-adaptive estimate
    cfg.exploit_curvature = method.name != "guarded-practical-no-nc";
  }
  return cfg;
}

}  // namespace

SummaryRow run_single(const ExperimentSpec& spec, const MethodConfig& method,
                      std::uint64_t seed, RunTrace* trace) {
  SummaryRow row;
  row.method = method.name;
  row.seed = seed;
  try {
    const ProblemInstance inst = make_problem(spec.problem, seed);
    const Oracle& f = *inst.oracle;
    if (method.name == "gd" || method.name == "ragd" || method.name == "ncg") {
      BaselineResult r;
      if (method.name == "gd") {
        r = run_gd(f, inst.x0, spec.eps, spec.max_steps, trace);
      } else if (method.name == "ragd") {
        r = run_ragd(f, inst.x0, spec.eps, spec.max_steps, trace);
      } else {
        r = run_ncg(f, inst.x0, spec.eps, spec.max_steps, trace);
      }
      row.converged = r.converged;
      row.steps = r.steps;
      row.n_gradient = r.counters.n_gradient;
      row.n_value = r.counters.n_value;
      row.f_final = r.f_final;
      row.grad_norm_final = r.grad_norm_final;
    } else if (method.name.rfind("guarded", 0) == 0) {
      const GuardedConfig cfg = guarded_config_for(spec, method, f);
      const GuardedResult r = run_guarded(f, inst.x0, cfg, trace);
      row.converged = r.converged;
      row.steps = r.total_inner_steps;
      row.n_gradient = r.counters.n_gradient;
      row.n_value = r.counters.n_value;
      row.f_final = r.f_final;
      row.grad_norm_final = r.grad_norm_final;
      row.witness_events = r.witness_events;
      row.nc_exploit_wins = r.nc_exploit_wins;
      if (r.lemma_violations > 0) {
        row.error = "assertion: per-iteration progress violated " +
                    std::to_string(r.lemma_violations) + " time(s)";
      }
      if (spec.assert_lemmas && row.error.empty() && r.converged &&
          cfg.mode != GuardedMode::practical) {
        const std::string budget_err = check_gradient_budget(f, inst.x0, cfg, r);
        if (!budget_err.empty()) row.error = budget_err;
      }
    } else {
      throw std::invalid_argument("unknown method '" + method.name + "'");
    }
  } catch (const std::exception& e) {
    row.error = e.what();
    row.converged = false;
  }
  return row;
}

std::string trace_to_jsonl(const RunTrace& trace) {
  std::string out;
  out.reserve(trace.records.size() * 96);
  for (const TraceRecord& r : trace.records) {
    ordered_json j;
    j["outer"] = r.outer_step;
    j["inner"] = r.inner_step;
    if (std::isfinite(r.f_value)) j["f"] = r.f_value; else j["f"] = nullptr;
    if (std::isfinite(r.grad_norm)) j["grad_norm"] = r.grad_norm;
    else j["grad_norm"] = nullptr;
    j["event"] = event_name(r.event);
    j["detail"] = r.detail;
    j["n_value"] = r.counters.n_value;
    j["n_gradient"] = r.counters.n_gradient;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string rows_to_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "method,seed,converged,steps,n_gradient,n_value,f_final,"
      "grad_norm_final,witness_events,nc_exploit_wins,error\n";
  for (const SummaryRow& r : rows) {
    out += sanitize_field(r.method);
    out += ',' + std::to_string(r.seed);
    out += ',' + std::string(r.converged ? "1" : "0");
    out += ',' + std::to_string(r.steps);
    out += ',' + std::to_string(r.n_gradient);
    out += ',' + std::to_string(r.n_value);
    out += ',' + fmt_double(r.f_final);
    out += ',' + fmt_double(r.grad_norm_final);
    out += ',' + std::to_string(r.witness_events);
    out += ',' + std::to_string(r.nc_exploit_wins);
    out += ',' + sanitize_field(r.error);
    out += '\n';
  }
  return out;
}

std::vector<SummaryRow> rows_from_csv(const std::string& text) {
  std::vector<SummaryRow> rows;
  std::istringstream in(text);
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (int i = 0; i < 10; ++i) {
      const std::size_t comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    fields.push_back(line.substr(pos));  // error field, may be empty
    SummaryRow r;
    r.method = fields[0];
    r.seed = std::stoull(fields[1]);
    r.converged = fields[2] == "1";
    r.steps = std::stoll(fields[3]);
    r.n_gradient = std::stoll(fields[4]);
    r.n_value = std::stoll(fields[5]);
    r.f_final = std::stod(fields[6]);
    r.grad_norm_final = std::stod(fields[7]);
    r.witness_events = std::stoll(fields[8]);
    r.nc_exploit_wins = std::stoll(fields[9]);
    r.error = fields[10];
    rows.push_back(std::move(r));
  }
  return rows;
}

ExperimentOutput run_experiment(const ExperimentSpec& spec,
                                const std::string& out_dir, int parallelism) {
  namespace fs = std::filesystem;
  ExperimentOutput output;

  struct Cell {
    std::size_t method_index;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (std::size_t mi = 0; mi < spec.methods.size(); ++mi) {
    for (std::uint64_t s = spec.seeds.begin; s < spec.seeds.end; ++s) {
      cells.push_back({mi, s});
    }
  }

  fs::create_directories(out_dir);
  if (spec.write_traces && !cells.empty()) {
    fs::create_directories(fs::path(out_dir) / "traces");
  }

  std::vector<SummaryRow> rows(cells.size());
  std::vector<std::string> trace_files(cells.size());

  auto work = [&](std::size_t idx) {
    const Cell& c = cells[idx];
    RunTrace trace;
    RunTrace* trace_ptr = spec.write_traces ? &trace : nullptr;
    rows[idx] = run_single(spec, spec.methods[c.method_index], c.seed, trace_ptr);
    if (spec.write_traces) {
      const std::string fname =
          sanitize_filename(spec.methods[c.method_index].name) + "__seed" +
          std::to_string(c.seed) + ".jsonl";
      const fs::path path = fs::path(out_dir) / "traces" / fname;
      std::ofstream f(path, std::ios::binary);
      f << trace_to_jsonl(trace);
      trace_files[idx] = path.string();
    }
  };

  const int workers = std::max(1, parallelism);
  if (workers == 1 || cells.size() <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const std::size_t n = std::min(static_cast<std::size_t>(workers), cells.size());
    pool.reserve(n);
    for (std::size_t w = 0; w < n; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cells.size()) return;
          work(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  output.rows = std::move(rows);
  for (auto& tf : trace_files) {
    if (!tf.empty()) output.files_written.push_back(std::move(tf));
  }

  const fs::path summary_path = fs::path(out_dir) / "summary.csv";
  {
    std::ofstream f(summary_path, std::ios::binary);
    f << rows_to_csv(output.rows);
  }
  output.files_written.push_back(summary_path.string());

  const fs::path spec_path = fs::path(out_dir) / "spec.json";
  {
    std::ofstream f(spec_path, std::ios::binary);
    f << spec_to_json(spec);
  }
  output.files_written.push_back(spec_path.string());
  return output;
}

std::vector<MethodSummary> summarize(const std::vector<SummaryRow>& rows) {
  std::vector<MethodSummary> out;
  auto find = [&](const std::string& m) -> MethodSummary& {
    for (auto& s : out) {
      if (s.method == m) return s;
    }
    out.push_back(MethodSummary{});
    out.back().method = m;
    return out.back();
  };
  for (const SummaryRow& r : rows) {
    MethodSummary& s = find(r.method);
    ++s.runs;
    if (r.converged) ++s.converged;
    if (!r.error.empty()) ++s.errors;
    s.total_gradient += r.n_gradient;
    s.total_value += r.n_value;
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (MethodSummary& s : out) {
    std::vector<double> steps;
    for (const SummaryRow& r : rows) {
      if (r.method != s.method) continue;
      // Right-censoring: non-converged runs sit at +inf for CDF purposes.
      steps.push_back(r.converged ? static_cast<double>(r.steps) : inf);
    }
    std::sort(steps.begin(), steps.end());
    auto quantile = [&](double q) -> std::optional<double> {
      if (steps.empty()) return std::nullopt;
      const auto idx = static_cast<std::size_t>(
          std::floor(q * static_cast<double>(steps.size() - 1)));
      const double v = steps[idx];
      if (!std::isfinite(v)) return std::nullopt;
      return v;
    };
    s.median_steps = quantile(0.5);
    s.decile_steps.clear();
    for (int q = 0; q <= 10; ++q) {
      s.decile_steps.push_back(quantile(static_cast<double>(q) / 10.0));
    }
  }
  return out;
}

std::string summary_to_json(const std::vector<MethodSummary>& summaries) {
  ordered_json j;
  j["methods"] = ordered_json::array();
  for (const MethodSummary& s : summaries) {
    ordered_json m;
    m["method"] = s.method;
    m["runs"] = s.runs;
    m["converged"] = s.converged;
    m["errors"] = s.errors;
    if (s.median_steps) m["median_steps"] = *s.median_steps;
    else m["median_steps"] = nullptr;
    m["decile_steps"] = ordered_json::array();
    for (const auto& q : s.decile_steps) {
      if (q) m["decile_steps"].push_back(*q);
      else m["decile_steps"].push_back(nullptr);
    }
    m["total_gradient_evals"] = s.total_gradient;
    m["total_value_evals"] = s.total_value;
    j["methods"].push_back(std::move(m));
  }
  return j.dump(2) + "\n";
}

std::string summary_table(const std::vector<MethodSummary>& summaries) {
  std::ostringstream os;
  os << "method                         runs  conv  errors  median   grads       values\n";
  for (const MethodSummary& s : summaries) {
    const std::string median =
        s.median_steps ? std::to_string(static_cast<long long>(*s.median_steps))
                       : std::string("inf");
    char line[160];
    std::snprintf(line, sizeof line, "%-30s %5lld %5lld %7lld %7s %11lld %12lld\n",
                  s.method.c_str(), static_cast<long long>(s.runs),
                  static_cast<long long>(s.converged),
                  static_cast<long long>(s.errors), median.c_str(),
                  static_cast<long long>(s.total_gradient),
                  static_cast<long long>(s.total_value));
    os << line;
  }
  return os.str();
}

}  // namespace ncopt
