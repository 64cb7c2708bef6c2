#include "optema/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

namespace optema {

double relative_slack(double lhs, double rhs) {
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (scale == 0.0) return 0.0;
  return (rhs - lhs) / scale;
}

namespace {

// Tracks the most-violated margin of one check.
class SlackTracker {
 public:
  SlackTracker(std::string name, double tolerance) {
    report_.check_name = std::move(name);
    report_.tolerance = tolerance;
    report_.worst_slack = std::numeric_limits<double>::infinity();
  }

  void observe(double slack, std::uint64_t index) {
    if (std::isnan(slack)) slack = -std::numeric_limits<double>::infinity();
    if (slack < report_.worst_slack) {
      report_.worst_slack = slack;
      report_.worst_index = index;
    }
  }

  CheckReport finish() {
    // Vacuous checks report zero slack.
    if (std::isinf(report_.worst_slack) && report_.worst_slack > 0) report_.worst_slack = 0.0;
    report_.passed = report_.worst_slack >= -report_.tolerance;
    return report_;
  }

 private:
  CheckReport report_;
};

void require_indexed(const Trajectory& traj, const char* check) {
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const StepRecord& r = traj.steps[i];
    if (r.t != i + 1) {
      throw DiagnosticError(std::string(check) + ": trajectory steps must be indexed 1..T");
    }
    if (std::isnan(r.rho) || std::isnan(r.gamma) || std::isnan(r.g_norm) ||
        std::isnan(r.m_norm) || std::isnan(r.v_norm) || std::isnan(r.g_hat)) {
      throw DiagnosticError(std::string(check) + ": missing field at t=" + std::to_string(r.t));
    }
  }
}

}  // namespace

CheckReport check_rho_bounds(const Trajectory& traj, double tau) {
  require_indexed(traj, "rho_bounds");
  if (!(tau >= 0.0 && tau <= 1.0)) throw DiagnosticError("rho_bounds: tau outside [0,1]");
  SlackTracker tracker("rho_bounds", kInvariantTolerance);
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const StepRecord& r = traj.steps[i];
    const double lower = std::sqrt(tau / static_cast<double>(r.t));
    tracker.observe(relative_slack(lower, r.rho), r.t);
    tracker.observe(relative_slack(r.rho, 1.0), r.t);
    if (i > 0) {
      const StepRecord& prev = traj.steps[i - 1];
      tracker.observe(relative_slack(r.rho, prev.rho), r.t);
      tracker.observe(relative_slack(prev.rho, r.rho * (1.0 + r.g_hat)), r.t);
    }
  }
  return tracker.finish();
}

CheckReport check_momentum_energy(const Trajectory& traj, Variant variant) {
  require_indexed(traj, "momentum_energy");
  if (!traj.variant) throw DiagnosticError("momentum_energy: trajectory carries no variant tag");
  if (*traj.variant != variant) {
    throw DiagnosticError("momentum_energy: trajectory is variant " + to_string(*traj.variant) +
                          ", requested " + to_string(variant));
  }
  SlackTracker tracker("momentum_energy", kInvariantTolerance);
  double m_sum = 0.0;
  double g_sum = 0.0;
  const double root_tau = std::sqrt(traj.tau);
  for (const StepRecord& r : traj.steps) {
    m_sum += r.m_norm * r.m_norm;
    g_sum += r.g_norm * r.g_norm;
    if (variant == Variant::M) {
      const double middle = (2.0 + 2.0 * root_tau * r.g_hat) * g_sum;
      tracker.observe(relative_slack(m_sum, middle), r.t);
      tracker.observe(relative_slack(middle, 3.0 * std::pow(1.0 + g_sum, 1.5)), r.t);
    } else {
      if (r.alpha_t != traj.steps.front().alpha_t) {
        throw DiagnosticError("momentum_energy: variant V requires a fixed alpha");
      }
      tracker.observe(relative_slack(m_sum, g_sum), r.t);
    }
  }
  return tracker.finish();
}

CheckReport check_second_moment(const Trajectory& traj) {
  require_indexed(traj, "second_moment");
  SlackTracker tracker("second_moment", kInvariantTolerance);
  for (const StepRecord& r : traj.steps) {
    tracker.observe(relative_slack(r.v_norm, r.g_hat * r.g_hat), r.t);
  }
  return tracker.finish();
}

CheckReport check_stepsize_monotone(const Trajectory& traj) {
  require_indexed(traj, "stepsize_monotone");
  SlackTracker tracker("stepsize_monotone", kMonotoneTolerance);
  for (std::size_t i = 1; i < traj.steps.size(); ++i) {
    const double prev = traj.steps[i - 1].gamma;
    const double cur = traj.steps[i].gamma;
    const double slack = prev > 0.0 ? (prev - cur) / prev : (cur > 0.0 ? -1.0 : 0.0);
    tracker.observe(slack, traj.steps[i].t);
  }
  return tracker.finish();
}

CheckReport check_log_sum_bounds(std::span<const double> b, double p) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("log_sum_bounds: p must lie in (0,1)");
  for (double x : b) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw InputError("log_sum_bounds: entries must be finite and >= 0");
    }
  }
  SlackTracker tracker("log_sum_bounds", kLogSumTolerance);
  double running = 0.0;
  double lhs_a = 0.0;
  double lhs_b = 0.0;
  for (std::size_t t = 0; t < b.size(); ++t) {
    running += b[t];
    lhs_a += b[t] / (1.0 + running);
    lhs_b += b[t] / std::pow(1.0 + running, p);
    tracker.observe(std::log1p(running) - lhs_a, t + 1);
    tracker.observe(std::pow(1.0 + running, 1.0 - p) / (1.0 - p) - lhs_b, t + 1);
  }
  return tracker.finish();
}

CheckReport check_gradient_domination(const Problem& problem, const std::vector<Vector>& points) {
  if (!problem.lipschitz) {
    throw DiagnosticError("gradient_domination: problem '" + problem.name +
                          "' has no smoothness constant");
  }
  const double L = *problem.lipschitz;
  SlackTracker tracker("gradient_domination", kDominationTolerance);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Evaluation e = evaluate(problem, points[i]);
    tracker.observe(relative_slack(squared_norm(e.grad), 2.0 * L * (e.f - problem.f_star)), i);
  }
  return tracker.finish();
}

std::vector<CheckReport> check_optema_trajectory(const Trajectory& traj) {
  if (!traj.variant) throw DiagnosticError("trajectory carries no variant tag");
  return {check_rho_bounds(traj, traj.tau), check_momentum_energy(traj, *traj.variant),
          check_second_moment(traj), check_stepsize_monotone(traj)};
}

Trajectory trace_stream(const Hyperparameters& hyper, std::span<const double> x1,
                        const GradientStream& stream) {
  OptimizerState state = init(x1, hyper);
  Trajectory traj;
  traj.variant = hyper.variant;
  traj.tau = hyper.tau;
  traj.steps.reserve(stream.size());
  for (const Vector& g : stream) traj.steps.push_back(step(state, g));
  return traj;
}

GradientStream random_stream(std::uint64_t seed, const RandomStreamSpec& spec) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim_dist(spec.min_dim, spec.max_dim);
  std::uniform_real_distribution<double> log_len(std::log(static_cast<double>(spec.min_length)),
                                                 std::log(static_cast<double>(spec.max_length)));
  std::uniform_real_distribution<double> log_norm(std::log(spec.min_norm),
                                                  std::log(spec.max_norm));
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::size_t dim = dim_dist(rng);
  const auto length = std::clamp(static_cast<std::size_t>(std::lround(std::exp(log_len(rng)))),
                                 spec.min_length, spec.max_length);
  GradientStream stream(length, Vector(dim));
  for (Vector& g : stream) {
    double len = 0.0;
    while (len == 0.0) {
      for (double& gi : g) gi = normal(rng);
      len = norm(g);
    }
    const double target = std::exp(log_norm(rng));
    for (double& gi : g) gi *= target / len;
  }
  return stream;
}

InvariantSuiteReport run_invariant_suite(std::size_t count, std::uint64_t seed,
                                         const RandomStreamSpec& spec) {
  static constexpr double kTaus[] = {0.0, 0.5, 1.0};
  InvariantSuiteReport report;
  std::map<std::string, CheckReport> worst;
  std::seed_seq seq{seed};
  std::vector<std::uint64_t> seeds(count);
  seq.generate(seeds.begin(), seeds.end());

  for (std::size_t i = 0; i < count; ++i) {
    const GradientStream stream = random_stream(seeds[i], spec);
    Hyperparameters hyper;
    hyper.variant = i % 2 == 0 ? Variant::M : Variant::V;
    hyper.tau = kTaus[(i / 2) % 3];
    const Vector x1(stream.front().size(), 0.0);
    const Trajectory traj = trace_stream(hyper, x1, stream);
    report.steps += traj.steps.size();
    bool violated = false;
    for (const CheckReport& r : check_optema_trajectory(traj)) {
      auto [it, inserted] = worst.emplace(r.check_name, r);
      if (!inserted && r.worst_slack < it->second.worst_slack) it->second = r;
      violated = violated || !r.passed;
    }
    if (violated) {
      ++report.violations;
      if (!report.first_violation) report.first_violation = i;
    }
  }
  report.streams = count;
  for (auto& [name, r] : worst) report.worst.push_back(r);
  return report;
}

}  // namespace optema
