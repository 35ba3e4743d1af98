#include "commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "l1l2/experiments.hpp"
#include "l1l2/model.hpp"
#include "l1l2/prox_oracle.hpp"

namespace l1l2::cli {

namespace fs = std::filesystem;

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific);
  return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::optional<RunSettings> settings_or_report(const CommandOptions& opts, bool required, std::ostream& err) {
  try {
    RunSettings st;
    if (opts.config) st = load_config(*opts.config);
    else if (required) throw ConfigError("config", "a config file is required (--config)");
    if (opts.seed) st.spec.seed = *opts.seed;
    if (opts.threads == 0) throw ConfigError("threads", "must be positive");
    return st;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return std::nullopt;
  }
}

void warn_ignored_fields(const ExperimentSpec& spec, std::ostream& err, const CommandOptions& opts) {
  if (opts.verbosity == Verbosity::Quiet) return;
  const ExperimentSpec defaults;
  if (spec.matrix_family == MatrixFamily::Gaussian) {
    if (spec.D != defaults.D) err << "warning: D is ignored for the gaussian family\n";
    if (spec.F != defaults.F) err << "warning: F is ignored for the gaussian family\n";
  } else if (spec.normalize_cols) {
    err << "warning: normalize_cols is ignored for the dct family\n";
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

void write_file(const fs::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << contents;
  f.close();
  if (!f) throw IoError("write to '" + path.string() + "' failed");
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream o;
  o << kTrialsHeader << '\n';
  for (const auto& r : records) {
    o << r.trial_index << ',' << r.seed_used << ',' << format_real(r.rel_err) << ',' << format_real(r.ree_err) << ','
      << format_real(r.mse) << ',' << (r.success ? 1 : 0) << ',' << r.iterations << ',' << csv_field(r.termination)
      << ',' << format_real(r.wall_time_ms) << '\n';
  }
  return o.str();
}

std::string trace_csv(const SolverResult& res) {
  std::ostringstream o;
  o << kTraceHeader << '\n';
  if (res.objective_trace.empty()) return o.str();
  o << 0 << ',' << format_real(res.objective_trace[0]) << ",,,,\n";
  for (std::size_t k = 0; k < res.step_trace.size(); ++k) {
    o << k + 1 << ',' << format_real(res.objective_trace[k + 1]) << ',' << format_real(res.step_trace[k]) << ','
      << to_string(res.prox_case_trace[k]) << ',' << res.backtrack_trace[k] << ',' << format_real(res.lambda_trace[k])
      << '\n';
  }
  return o.str();
}

nlohmann::ordered_json summary_json(const ExperimentSpec& spec, const ExperimentSummary& s) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr); };
  nlohmann::ordered_json j;
  j["family"] = std::string(to_string(spec.matrix_family));
  j["solver"] = std::string(to_string(spec.solver));
  j["m"] = spec.m;
  j["n"] = spec.n;
  j["s"] = spec.s;
  j["seed"] = spec.seed;
  j["lambda"] = spec.lambda0;
  j["eps"] = spec.eps_rule.eps(spec.m);
  j["trials"] = s.trials;
  j["success_rate"] = s.success_rate;
  j["rel_err_mean"] = num(s.rel_err.mean);
  j["rel_err_std"] = num(s.rel_err.std);
  j["ree_err_mean"] = num(s.ree_err.mean);
  j["ree_err_std"] = num(s.ree_err.std);
  j["mse_mean"] = num(s.mse.mean);
  j["mse_std"] = num(s.mse.std);
  const bool has_oracle = spec.sigma > 0.0;
  j["oracle_mse_mean"] = has_oracle ? num(s.oracle_mse.mean) : nlohmann::ordered_json(nullptr);
  j["oracle_mse_std"] = has_oracle ? num(s.oracle_mse.std) : nlohmann::ordered_json(nullptr);
  j["iterations_mean"] = s.iterations.mean;
  j["iterations_std"] = s.iterations.std;
  return j;
}

void report_trials(const std::vector<TrialRecord>& records, const CommandOptions& opts, std::ostream& err) {
  if (opts.verbosity != Verbosity::Verbose) return;
  for (const auto& r : records)
    err << "trial " << r.trial_index << ": rel_err " << format_real(r.rel_err) << ", " << r.iterations
        << " iterations, " << r.termination << '\n';
}

}  // namespace

int cmd_solve(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto st = settings_or_report(opts, true, err);
  if (!st) return kConfigError;
  const ExperimentSpec& spec = st->spec;
  warn_ignored_fields(spec, err, opts);
  const bool trace = opts.trace || st->trace;

  const ExperimentResult result = run_experiment(spec, opts.threads, trace);
  report_trials(result.records, opts, err);
  try {
    ensure_dir(opts.out_dir);
    write_file(opts.out_dir / "trials.csv", trials_csv(result.records));
    write_file(opts.out_dir / "summary.json", summary_json(spec, result.summary).dump(2) + "\n");
    if (trace)
      for (std::size_t i = 0; i < result.solves.size(); ++i)
        write_file(opts.out_dir / ("trace_" + std::to_string(i) + ".csv"), trace_csv(result.solves[i]));
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  }
  if (opts.verbosity != Verbosity::Quiet)
    out << "trials " << result.summary.trials << ", success rate " << format_real(result.summary.success_rate)
        << ", mean rel_err " << format_real(result.summary.rel_err.mean) << ", mean mse "
        << format_real(result.summary.mse.mean) << '\n';
  return kOk;
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto st = settings_or_report(opts, true, err);
  if (!st) return kConfigError;
  if (!st->sweep) {
    err << "config error: sweep_axis: a sweep needs sweep_axis and sweep_values\n";
    return kConfigError;
  }
  warn_ignored_fields(st->spec, err, opts);
  const SweepSpec& sw = *st->sweep;

  std::ostringstream csv;
  csv << axis_name(sw.axis) << ',' << kSweepTail << '\n';
  for (double v : sw.values) {
    const ExperimentSpec spec = with_axis_value(st->spec, sw.axis, v);
    const ExperimentResult result = run_experiment(spec, opts.threads);
    report_trials(result.records, opts, err);
    const auto& s = result.summary;
    csv << format_real(v) << ',' << format_real(s.success_rate) << ',' << format_real(s.rel_err.mean) << ','
        << format_real(s.ree_err.mean) << ',' << format_real(s.mse.mean) << ',' << format_real(s.iterations.mean)
        << '\n';
    if (opts.verbosity != Verbosity::Quiet)
      out << axis_name(sw.axis) << " = " << format_real(v) << ": success rate " << format_real(s.success_rate) << '\n';
  }
  try {
    ensure_dir(opts.out_dir);
    write_file(opts.out_dir / "sweep.csv", csv.str());
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  }
  return kOk;
}

// ------------------------------------------------------------ prox check

ProxCheckCase draw_prox_case(CounterRng& rng, ProxCase target) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> dim(1, 3);
  ProxCheckCase c;
  c.target = target;
  const std::size_t n = dim(rng);
  c.params.beta = 0.01 + 4.99 * u01(rng);
  c.params.gamma = 0.1 + 9.9 * u01(rng);
  c.params.d = 0.5 + 19.5 * u01(rng);
  const double beta = c.params.beta;

  double top = 0.0;  // target value of ||y||_inf
  switch (target) {
    case ProxCase::I: top = beta * (1.0 + 0.01 + 3.0 * u01(rng)); break;
    case ProxCase::II: top = beta; break;
    case ProxCase::III: {
      const double lo = std::max(0.0, (1.0 - c.params.gamma) * beta);
      top = lo + (beta - lo) * (0.01 + 0.98 * u01(rng));
      break;
    }
    case ProxCase::IV:
      if (c.params.gamma >= 1.0) c.params.gamma = 0.1 + 0.89 * u01(rng);  // band is empty for gamma >= 1
      top = (1.0 - c.params.gamma) * beta * u01(rng);
      break;
  }
  std::uniform_int_distribution<std::size_t> pos(0, n - 1);
  const std::size_t peak = pos(rng);
  c.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double sign = u01(rng) < 0.5 ? -1.0 : 1.0;
    c.y[i] = sign * (i == peak ? top : top * u01(rng));
  }
  return c;
}

double prox_gap(const ProxCheckCase& c, const ProxFn& prox_fn) {
  const Vector closed = prox_fn(c.y, c.params).result;
  const Vector oracle = prox_oracle(c.y, c.params);
  return std::abs(prox_objective(closed, c.y, c.params) - prox_objective(oracle, c.y, c.params));
}

ProxCheckReport run_prox_check(std::size_t checks, std::uint64_t seed, const ProxFn& prox_fn) {
  ProxCheckReport rep;
  rep.checks = checks;
  CounterRng rng = CounterRng::stream(seed, 0, StreamTag::Check);
  for (std::size_t k = 0; k < checks; ++k) {
    const auto target = static_cast<ProxCase>(1 + k % 4);
    ProxCheckCase c = draw_prox_case(rng, target);
    rep.case_hits[static_cast<std::size_t>(prox_rho(c.y, c.params).case_id) - 1]++;
    const double gap = prox_gap(c, prox_fn);
    if (k == 0 || !(gap <= rep.max_gap)) {
      rep.max_gap = gap;
      rep.worst = std::move(c);
    }
  }
  return rep;
}

namespace {

std::string describe(const ProxCheckCase& c) {
  std::ostringstream o;
  o << "y = [";
  for (std::size_t i = 0; i < c.y.size(); ++i) o << (i ? ", " : "") << format_real(c.y[i]);
  o << "] beta = " << format_real(c.params.beta) << " gamma = " << format_real(c.params.gamma)
    << " d = " << format_real(c.params.d);
  return o.str();
}

}  // namespace

int cmd_prox_check(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  return cmd_prox_check(opts, out, err, [](std::span<const double> y, const ProxParams& p) { return prox_rho(y, p); });
}

int cmd_prox_check(const CommandOptions& opts, std::ostream& out, std::ostream& err, const ProxFn& prox_fn) {
  const auto st = settings_or_report(opts, false, err);
  if (!st) return kConfigError;
  const std::size_t checks = st->checks ? st->checks : 1000;
  const std::uint64_t seed = opts.seed.value_or(st->check_seed);
  const ProxCheckReport rep = run_prox_check(checks, seed, prox_fn);
  const bool ok = rep.max_gap <= kProxGapTolerance;
  if (opts.verbosity != Verbosity::Quiet || !ok) {
    out << "prox-check: " << rep.checks << " draws, cases I/II/III/IV = " << rep.case_hits[0] << '/'
        << rep.case_hits[1] << '/' << rep.case_hits[2] << '/' << rep.case_hits[3]
        << ", max objective gap " << format_real(rep.max_gap) << '\n';
    out << "worst case: " << describe(rep.worst) << " gap = " << format_real(rep.max_gap) << '\n';
  }
  if (!ok) {
    err << "prox-check failed: gap exceeds " << format_real(kProxGapTolerance) << '\n';
    return kCheckFailure;
  }
  return kOk;
}

// ------------------------------------------------------------ gradient check

double gradient_relative_error(const ProblemInstance& inst, std::span<const double> x, double step) {
  const PenaltyObjective obj(inst, 1.0, 1.0);
  const Vector g = envelope_gradient(obj, x);
  Vector probe(x.begin(), x.end());
  Vector fd(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double up = envelope_value(obj, probe);
    probe[i] = x[i] - step;
    const double down = envelope_value(obj, probe);
    probe[i] = x[i];
    fd[i] = (up - down) / (2.0 * step);
  }
  const double diff = distance(g, fd);
  const double scale = norm2(g);
  if (scale == 0.0) return diff == 0.0 ? 0.0 : kInfinity;
  return diff / scale;
}

GradCheckReport run_grad_check(std::size_t instances, std::uint64_t seed) {
  GradCheckReport rep;
  rep.instances = instances;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> dim(1, 20);
  for (std::size_t k = 0; k < instances; ++k) {
    CounterRng rng = CounterRng::stream(seed, k, StreamTag::Check);
    const std::size_t m = dim(rng), n = dim(rng);
    ProblemInstance inst;
    inst.a = DenseMatrix(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) inst.a(i, j) = normal(rng);
    inst.b.resize(m);
    for (double& v : inst.b) v = normal(rng);
    Vector x(n);
    for (double& v : x) v = normal(rng);
    const double rn = distance(matvec(inst.a, x), inst.b);
    // eps = 0 for a quarter of the draws; otherwise the point lands inside or
    // outside the tube with roughly equal odds
    inst.eps = k % 4 == 0 ? 0.0 : std::min(2.0 * u01(rng) * rn, 0.999 * norm2(inst.b));
    if (std::abs(rn - inst.eps) <= kGradBoundaryMargin) continue;
    ++rep.compared;
    const double e = gradient_relative_error(inst, x);
    if (!(e <= rep.max_rel_err)) {
      rep.max_rel_err = e;
      rep.worst_instance = k;
      rep.worst_m = m;
      rep.worst_n = n;
      rep.worst_eps = inst.eps;
      rep.worst_residual_norm = rn;
    }
  }
  return rep;
}

int cmd_grad_check(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  const auto st = settings_or_report(opts, false, err);
  if (!st) return kConfigError;
  const std::size_t instances = st->checks ? st->checks : 200;
  const std::uint64_t seed = opts.seed.value_or(st->check_seed);
  const GradCheckReport rep = run_grad_check(instances, seed);
  const bool ok = rep.max_rel_err <= kGradTolerance;
  if (opts.verbosity != Verbosity::Quiet || !ok) {
    out << "grad-check: " << rep.compared << " of " << rep.instances
        << " points compared, max relative error " << format_real(rep.max_rel_err) << '\n';
    out << "worst case: instance " << rep.worst_instance << " (seed " << seed << ") m = " << rep.worst_m
        << " n = " << rep.worst_n << " eps = " << format_real(rep.worst_eps)
        << " ||Ax-b|| = " << format_real(rep.worst_residual_norm) << '\n';
  }
  if (!ok) {
    err << "grad-check failed: relative error exceeds " << format_real(kGradTolerance) << '\n';
    return kCheckFailure;
  }
  return kOk;
}

}  // namespace l1l2::cli
