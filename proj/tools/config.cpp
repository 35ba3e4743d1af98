#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace l1l2::cli {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key, "expected a real number, got '" + v + "'");
  return out;
}

std::uint64_t to_count(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
  return out;
}

bool to_flag(const std::string& key, const std::string& v) {
  const std::string l = lower(v);
  if (l == "true" || l == "on" || l == "yes" || l == "1") return true;
  if (l == "false" || l == "off" || l == "no" || l == "0") return false;
  throw ConfigError(key, "expected true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_real(key, trim(item)));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list");
  return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "family", "m", "n", "s", "F", "D", "sigma", "eps_rule", "eps_scale", "normalize_cols",
      "trials", "seed", "lambda", "lambda_schedule", "solver", "d", "eta", "a", "window",
      "rel_tol", "max_iter", "admm_weight", "admm_iters", "admm_rho", "warm_start",
      "success_tol", "trace", "sweep_axis", "sweep_values", "checks", "check_seed"};
  return keys;
}

std::string_view axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::S: return "s";
    case SweepAxis::F: return "F";
    case SweepAxis::D: return "D";
    case SweepAxis::M: return "m";
  }
  return "?";
}

ExperimentSpec with_axis_value(const ExperimentSpec& spec, SweepAxis axis, double value) {
  ExperimentSpec out = spec;
  switch (axis) {
    case SweepAxis::S: out.s = static_cast<std::size_t>(value); break;
    case SweepAxis::F: out.F = value; break;
    case SweepAxis::D: out.D = value; break;
    case SweepAxis::M: out.m = static_cast<std::size_t>(value); break;
  }
  return out;
}

RunSettings parse_config(const std::string& text) {
  RunSettings st;
  ExperimentSpec& sp = st.spec;
  std::optional<SweepAxis> axis;
  std::optional<std::vector<double>> sweep_values;
  std::string eps_rule = "zero";
  std::optional<double> eps_scale;

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string val = trim(std::string_view(line).substr(eq + 1));
    if (val.empty()) throw ConfigError(key, "missing value");

    if (key == "family") {
      const std::string v = lower(val);
      if (v == "dct") sp.matrix_family = MatrixFamily::OversampledDCT;
      else if (v == "gaussian") sp.matrix_family = MatrixFamily::Gaussian;
      else throw ConfigError(key, "expected dct or gaussian, got '" + val + "'");
    } else if (key == "m") sp.m = to_count(key, val);
    else if (key == "n") sp.n = to_count(key, val);
    else if (key == "s") sp.s = to_count(key, val);
    else if (key == "F") sp.F = to_real(key, val);
    else if (key == "D") sp.D = to_real(key, val);
    else if (key == "sigma") sp.sigma = to_real(key, val);
    else if (key == "eps_rule") eps_rule = lower(val);
    else if (key == "eps_scale") eps_scale = to_real(key, val);
    else if (key == "normalize_cols") sp.normalize_cols = to_flag(key, val);
    else if (key == "trials") sp.trials = to_count(key, val);
    else if (key == "seed") sp.seed = to_count(key, val);
    else if (key == "lambda") sp.lambda0 = to_real(key, val);
    else if (key == "lambda_schedule") sp.lambda_schedule_on = to_flag(key, val);
    else if (key == "solver") {
      const std::string v = lower(val);
      if (v == "ppga") sp.solver = SolverKind::PPGA;
      else if (v == "ppga_ml") sp.solver = SolverKind::PPGA_ML;
      else if (v == "ppga_nl") sp.solver = SolverKind::PPGA_NL;
      else throw ConfigError(key, "expected PPGA, PPGA_ML or PPGA_NL, got '" + val + "'");
    } else if (key == "d") sp.d = to_real(key, val);
    else if (key == "eta") sp.eta = to_real(key, val);
    else if (key == "a") sp.a = to_real(key, val);
    else if (key == "window") sp.window = to_count(key, val);
    else if (key == "rel_tol") sp.rel_tol = to_real(key, val);
    else if (key == "max_iter") sp.max_iter = to_count(key, val);
    else if (key == "admm_weight") sp.admm_weight = to_real(key, val);
    else if (key == "admm_iters") sp.admm_iters = to_count(key, val);
    else if (key == "admm_rho") sp.admm_rho = to_real(key, val);
    else if (key == "warm_start") {
      const std::string v = lower(val);
      if (v == "auto") sp.warm_start = WarmStart::Auto;
      else if (v == "l1") sp.warm_start = WarmStart::L1;
      else throw ConfigError(key, "expected auto or l1, got '" + val + "'");
    } else if (key == "success_tol") sp.success_tol = to_real(key, val);
    else if (key == "trace") st.trace = to_flag(key, val);
    else if (key == "sweep_axis") {
      if (val == "s") axis = SweepAxis::S;
      else if (val == "F") axis = SweepAxis::F;
      else if (val == "D") axis = SweepAxis::D;
      else if (val == "m") axis = SweepAxis::M;
      else throw ConfigError(key, "expected one of s, F, D, m, got '" + val + "'");
    } else if (key == "sweep_values") sweep_values = to_list(key, val);
    else if (key == "checks") st.checks = to_count(key, val);
    else if (key == "check_seed") st.check_seed = to_count(key, val);
    else throw ConfigError(key, "unknown key");
  }

  if (eps_rule == "zero") {
    sp.eps_rule = EpsRule::zero();
  } else if (eps_rule == "scaled_sqrt_m") {
    if (!eps_scale) throw ConfigError("eps_scale", "required when eps_rule = scaled_sqrt_m");
    sp.eps_rule = EpsRule::scaled(*eps_scale);
  } else {
    throw ConfigError("eps_rule", "expected zero or scaled_sqrt_m, got '" + eps_rule + "'");
  }

  if (axis.has_value() != sweep_values.has_value())
    throw ConfigError(axis ? "sweep_values" : "sweep_axis", "sweep_axis and sweep_values must be given together");
  if (axis) {
    for (double v : *sweep_values) {
      if ((*axis == SweepAxis::S || *axis == SweepAxis::M) && (v < 1.0 || v != std::floor(v)))
        throw ConfigError("sweep_values", "values for axis " + std::string(axis_name(*axis)) +
                                              " must be positive integers");
    }
    st.sweep = SweepSpec{*axis, *sweep_values};
  }

  // field-level checks first so the message names the key
  if (!(sp.eta > 0.0 && sp.eta < 1.0)) throw ConfigError("eta", "must lie in (0, 1)");
  if (!(sp.a >= 0.0)) throw ConfigError("a", "must be nonnegative");
  if (!(sp.lambda0 > 0.0)) throw ConfigError("lambda", "must be positive");
  if (!(sp.d > 0.0)) throw ConfigError("d", "must be positive");
  if (!(sp.sigma >= 0.0)) throw ConfigError("sigma", "must be nonnegative");
  if (!(sp.rel_tol >= 0.0)) throw ConfigError("rel_tol", "must be nonnegative");
  if (sp.trials == 0) throw ConfigError("trials", "must be positive");
  if (sp.s == 0 || sp.s > sp.n) throw ConfigError("s", "must satisfy 1 <= s <= n");
  if (sp.m == 0 || sp.m > sp.n) throw ConfigError("m", "must satisfy 1 <= m <= n");
  if (sp.matrix_family == MatrixFamily::OversampledDCT && !(sp.F > 0.0)) throw ConfigError("F", "must be positive");
  if (!(sp.D >= 0.0)) throw ConfigError("D", "must be nonnegative");
  if (!(sp.admm_weight > 0.0)) throw ConfigError("admm_weight", "must be positive");
  if (!(sp.admm_rho > 0.0)) throw ConfigError("admm_rho", "must be positive");
  try {
    sp.validate();
    if (st.sweep)
      for (double v : st.sweep->values) with_axis_value(sp, st.sweep->axis, v).validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(st.sweep ? "sweep_values" : "", e.what());
  }
  return st;
}

RunSettings load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace l1l2::cli
