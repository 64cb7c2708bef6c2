#pragma once

// Runtime checkers for the inequalities OptEMA trajectories must satisfy,
// plus two standalone numerical oracles (log-sum bounds, gradient
// domination). Every checker is a pure function of its inputs.
//
// Inequalities lhs <= rhs are scored by a slack; negative slack is a
// violation and a report passes iff worst_slack >= -tolerance.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optema/optimizer.hpp"
#include "optema/problems.hpp"

namespace optema {

struct Trajectory {
  std::vector<StepRecord> steps;
  /// Set for OptEMA runs; baselines leave it empty.
  std::optional<Variant> variant;
  double tau = 1.0;
};

struct CheckReport {
  std::string check_name;
  bool passed = true;
  double worst_slack = 0.0;
  std::uint64_t worst_index = 0;
  double tolerance = 0.0;
  /// False when the check does not apply (e.g. no smoothness constant).
  bool applicable = true;
};

inline constexpr double kInvariantTolerance = 1e-9;
inline constexpr double kMonotoneTolerance = 1e-12;
inline constexpr double kLogSumTolerance = 1e-9;
inline constexpr double kDominationTolerance = 1e-8;

/// (rhs - lhs) / max(|lhs|, |rhs|), or 0 when both sides vanish.
double relative_slack(double lhs, double rhs);

/// sqrt(tau/t) <= rho_t <= 1 for t >= 1, rho_t <= rho_{t-1} <= rho_t (1 + ghat_t) for t >= 2.
CheckReport check_rho_bounds(const Trajectory& traj, double tau);

/// Variant M: sum |m|^2 <= (2 + 2 sqrt(tau) ghat_T) sum |g|^2 <= 3 (1 + sum |g|^2)^{3/2}.
/// Variant V (fixed alpha): sum |m|^2 <= sum |g|^2. Checked at every prefix.
CheckReport check_momentum_energy(const Trajectory& traj, Variant variant);

/// |v_t| <= ghat_t^2.
CheckReport check_second_moment(const Trajectory& traj);

/// gamma_t <= gamma_{t-1} (1 + 1e-12).
CheckReport check_stepsize_monotone(const Trajectory& traj);

/// For every prefix T of b >= 0:
///   (a) sum b_t / (1 + S_t)   <= ln(1 + S_T)
///   (b) sum b_t / (1 + S_t)^p <= (1 + S_T)^{1-p} / (1 - p)
CheckReport check_log_sum_bounds(std::span<const double> b, double p);

/// |grad f(x)|^2 <= 2 L (f(x) - f*) at every point. Throws DiagnosticError
/// when the problem has no smoothness constant.
CheckReport check_gradient_domination(const Problem& problem, const std::vector<Vector>& points);

/// The four trajectory checks that apply to an OptEMA run.
std::vector<CheckReport> check_optema_trajectory(const Trajectory& traj);

/// Feeds a fixed gradient stream through OptEMA from x1.
Trajectory trace_stream(const Hyperparameters& hyper, std::span<const double> x1,
                        const GradientStream& stream);

struct InvariantSuiteReport {
  std::size_t streams = 0;
  std::uint64_t steps = 0;
  std::size_t violations = 0;
  /// Worst report per check name across all streams.
  std::vector<CheckReport> worst;
  /// First violating stream index, if any.
  std::optional<std::size_t> first_violation;
};

struct RandomStreamSpec {
  std::size_t min_dim = 1;
  std::size_t max_dim = 64;
  std::size_t min_length = 10;
  std::size_t max_length = 10'000;
  double min_norm = 1e-6;
  double max_norm = 1e3;
};

/// Seeded random stream: dimension uniform, length and per-step norms
/// log-uniform over the spec ranges, directions uniform on the sphere.
GradientStream random_stream(std::uint64_t seed, const RandomStreamSpec& spec = {});

/// Runs the four trajectory checkers over `count` random streams, cycling
/// both variants and tau in {0, 0.5, 1}.
InvariantSuiteReport run_invariant_suite(std::size_t count, std::uint64_t seed,
                                         const RandomStreamSpec& spec = {});

}  // namespace optema
