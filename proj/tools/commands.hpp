#ifndef L1L2_TOOLS_COMMANDS_HPP
#define L1L2_TOOLS_COMMANDS_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "config.hpp"
#include "l1l2/prox.hpp"
#include "l1l2/random.hpp"

namespace l1l2::cli {

enum ExitCode : int { kOk = 0, kCheckFailure = 1, kConfigError = 2, kIoError = 3 };

enum class Verbosity { Quiet, Normal, Verbose };

struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out_dir = ".";
  std::size_t threads = 1;
  bool trace = false;
  std::optional<std::uint64_t> seed;
  Verbosity verbosity = Verbosity::Normal;
};

// ------------------------------------------------------------ formatting

/// Shortest round-trip scientific form, e.g. 1.5e-03. Independent of locale.
std::string format_real(double v);

/// RFC 4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(std::string_view s);

inline constexpr std::string_view kTrialsHeader =
    "trial,seed,rel_err,ree_err,mse,success,iterations,termination,wall_time_ms";
inline constexpr std::string_view kTraceHeader = "iteration,q_lambda,alpha,prox_case,backtracks,lambda";
inline constexpr std::string_view kSweepTail = "success_rate,mean_rel_err,mean_ree_err,mean_mse,mean_iters";

// ------------------------------------------------------------ commands

int cmd_solve(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);

using ProxFn = std::function<ProxSelection(std::span<const double>, const ProxParams&)>;

struct ProxCheckCase {
  Vector y;
  ProxParams params;
  ProxCase target = ProxCase::I;
};

/// Random (y, beta, gamma, d) with n in {1, 2, 3}, beta in [0.01, 5],
/// gamma in [0.1, 10], d in [0.5, 20], built so that ||y||_inf falls in the
/// band of `target`.
ProxCheckCase draw_prox_case(CounterRng& rng, ProxCase target);

struct ProxCheckReport {
  std::size_t checks = 0;
  double max_gap = 0.0;
  ProxCheckCase worst;
  std::array<std::size_t, 4> case_hits{};  // indexed by case - 1, as classified by prox_rho
};

/// Objective gap |F(prox_fn(y)) - F(oracle(y))| for one case.
double prox_gap(const ProxCheckCase& c, const ProxFn& prox_fn);

/// Cycles the target case over I..IV for `checks` draws.
ProxCheckReport run_prox_check(std::size_t checks, std::uint64_t seed, const ProxFn& prox_fn);

inline constexpr double kProxGapTolerance = 1e-7;

int cmd_prox_check(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_prox_check(const CommandOptions& opts, std::ostream& out, std::ostream& err, const ProxFn& prox_fn);

struct GradCheckReport {
  std::size_t instances = 0;
  std::size_t compared = 0;  // points farther than the margin from the tube boundary
  double max_rel_err = 0.0;
  std::size_t worst_instance = 0;
  std::size_t worst_m = 0, worst_n = 0;
  double worst_eps = 0.0, worst_residual_norm = 0.0;
};

inline constexpr double kGradStep = 1e-6;
inline constexpr double kGradBoundaryMargin = 1e-4;
inline constexpr double kGradTolerance = 1e-5;

/// Relative error ||g - g_fd||_2 / ||g||_2 between the analytic envelope
/// gradient and central differences; 0 when both vanish.
double gradient_relative_error(const ProblemInstance& inst, std::span<const double> x, double step = kGradStep);

/// Random A, b, eps, x with m, n <= 20; a quarter of the instances use eps = 0.
GradCheckReport run_grad_check(std::size_t instances, std::uint64_t seed);

int cmd_grad_check(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace l1l2::cli

#endif  // L1L2_TOOLS_COMMANDS_HPP
