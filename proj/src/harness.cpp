#include "optema/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <variant>

namespace optema {

void OptimizerSpec::resolve() {
  if (kind == "optema-m") {
    hyper.variant = Variant::M;
  } else if (kind == "optema-v") {
    hyper.variant = Variant::V;
  } else if (kind == "sgd") {
    baseline.kind = BaselineKind::SGD;
  } else if (kind == "sgd-momentum") {
    baseline.kind = BaselineKind::SGDMomentum;
  } else if (kind == "adam") {
    baseline.kind = BaselineKind::Adam;
  } else if (kind == "adagrad-norm") {
    baseline.kind = BaselineKind::AdaGradNorm;
  } else {
    throw ConfigError("unknown optimizer '" + kind + "'");
  }
}

void ExperimentConfig::validate() const {
  OptimizerSpec spec = optimizer;
  spec.resolve();
  if (spec.is_optema()) {
    spec.hyper.validate();
  } else {
    spec.baseline.validate();
  }
  if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  if (horizons.empty()) throw ConfigError("horizons must be nonempty");
  if (horizons.front() < 1) throw ConfigError("horizons must be >= 1");
  for (std::size_t i = 1; i < horizons.size(); ++i) {
    if (horizons[i] <= horizons[i - 1]) throw ConfigError("horizons must be strictly increasing");
  }
  if (record_every < 1) throw ConfigError("record_every must be >= 1");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be finite and >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

CheckViolation::CheckViolation(CheckReport report, std::uint64_t seed)
    : std::runtime_error("check " + report.check_name + " failed at t=" +
                         std::to_string(report.worst_index) + " (seed " + std::to_string(seed) +
                         ")"),
      report_(std::move(report)),
      seed_(seed) {}

DivergenceError::DivergenceError(std::uint64_t iteration, std::uint64_t seed)
    : std::runtime_error("non-finite iterate at t=" + std::to_string(iteration) + " (seed " +
                         std::to_string(seed) + ")"),
      iteration_(iteration) {}

namespace {

class AnyOptimizer {
 public:
  AnyOptimizer(const OptimizerSpec& spec, std::span<const double> x1) {
    if (spec.is_optema()) {
      state_ = init(x1, spec.hyper);
    } else {
      state_ = baseline_init(x1, spec.baseline);
    }
  }

  StepRecord step(std::span<const double> g) {
    if (auto* s = std::get_if<OptimizerState>(&state_)) return optema::step(*s, g);
    return baseline_step(std::get<BaselineState>(state_), g);
  }

  const Vector& x() const {
    if (const auto* s = std::get_if<OptimizerState>(&state_)) return s->x;
    return std::get<BaselineState>(state_).x;
  }

 private:
  std::variant<OptimizerState, BaselineState> state_;
};

}  // namespace

Problem problem_for(const ExperimentConfig& config) {
  Problem p = make_problem(config.problem, config.dim, config.logistic);
  if (config.x0.size() == 1) {
    p.x_init.assign(p.dim, config.x0.front());
  } else if (!config.x0.empty()) {
    if (config.x0.size() != p.dim) {
      throw ConfigError("x0 has " + std::to_string(config.x0.size()) + " entries, problem dim is " +
                        std::to_string(p.dim));
    }
    p.x_init = config.x0;
  }
  if (!all_finite(p.x_init)) throw ConfigError("x0 must be finite");
  return p;
}

SeedResult run_seed(const ExperimentConfig& config, const Problem& problem, std::uint64_t seed) {
  OptimizerSpec spec = config.optimizer;
  spec.resolve();
  AnyOptimizer opt(spec, problem.x_init);
  NoiseStream noise(NoiseModel{config.sigma, seed, config.noise_kind});

  SeedResult result;
  result.seed = seed;
  Trajectory& traj = result.trajectory;
  if (spec.is_optema()) {
    traj.variant = spec.hyper.variant;
    traj.tau = spec.hyper.tau;
  }
  const std::uint64_t horizon_max = config.max_horizon();
  traj.steps.reserve(horizon_max);

  double grad_norm_sum = 0.0;
  double grad_norm_min = std::numeric_limits<double>::infinity();
  auto next_horizon = config.horizons.begin();

  for (std::uint64_t t = 1; t <= horizon_max; ++t) {
    Evaluation e = evaluate(problem, opt.x());
    if (!std::isfinite(e.f) || !all_finite(e.grad)) throw DivergenceError(t, seed);
    const double true_norm = norm(e.grad);
    grad_norm_sum += true_norm;
    grad_norm_min = std::min(grad_norm_min, true_norm);

    noise.perturb(e.grad);
    StepRecord rec = opt.step(e.grad);
    rec.f_value = e.f;
    rec.true_grad_norm = true_norm;
    if (rec.degenerate) ++result.degenerate_steps;
    traj.steps.push_back(rec);
    if (!all_finite(opt.x())) throw DivergenceError(t, seed);

    if (t == *next_horizon) {
      HorizonResult h;
      h.horizon = t;
      h.avg_grad_norm = grad_norm_sum / static_cast<double>(t);
      h.min_grad_norm = grad_norm_min;
      h.final_f = evaluate(problem, opt.x()).f;
      result.horizons.push_back(h);
      ++next_horizon;
    }
  }

  if (spec.is_optema()) {
    result.checks = check_optema_trajectory(traj);
    for (const CheckReport& r : result.checks) {
      if (!r.passed) throw CheckViolation(r, seed);
    }
  }
  return result;
}

RunResult run(const ExperimentConfig& config) {
  config.validate();
  const Problem problem = problem_for(config);
  if (problem.x_init.size() != problem.dim) throw ConfigError("problem has no initial point");

  const std::size_t n = config.seeds.size();
  std::vector<std::optional<SeedResult>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        slots[i] = run_seed(config, problem, config.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers = std::min<unsigned>(config.threads, static_cast<unsigned>(n));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  // Report the first failing seed in config order, independent of scheduling.
  for (const auto& err : errors) {
    if (err) std::rethrow_exception(err);
  }

  RunResult out;
  for (auto& slot : slots) out.seeds.push_back(std::move(*slot));
  for (std::size_t h = 0; h < config.horizons.size(); ++h) {
    double sum = 0.0;
    for (const SeedResult& s : out.seeds) sum += s.horizons[h].avg_grad_norm;
    out.mean_avg_grad_norm.emplace_back(config.horizons[h], sum / static_cast<double>(n));
  }
  return out;
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw InputError("fit_rate needs at least 3 points");
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& [T, err] : points) {
    if (!(T > 0.0) || !(err > 0.0) || !std::isfinite(T) || !std::isfinite(err)) {
      throw InputError("fit_rate needs positive finite (T, error) pairs");
    }
    xs.push_back(std::log(T));
    ys.push_back(std::log(err));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0) throw InputError("fit_rate needs at least two distinct T values");

  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  // A flat series is fitted exactly by slope 0.
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.points_used = xs.size();
  return fit;
}

SweepResult noise_sweep(const ExperimentConfig& base, const std::vector<double>& sigma_grid) {
  std::size_t positive = 0;
  for (double s : sigma_grid) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InputError("sigma grid entries must be >= 0");
    if (s > 0.0) ++positive;
  }
  if (positive < 3) throw InputError("noise_sweep needs at least 3 positive sigma values");

  SweepResult out;
  out.horizon = base.max_horizon();
  std::vector<std::pair<double, double>> fit_points;
  for (double sigma : sigma_grid) {
    ExperimentConfig cfg = base;
    cfg.sigma = sigma;
    RunResult r = run(cfg);
    SigmaPoint p;
    p.sigma = sigma;
    for (const SeedResult& s : r.seeds) p.per_seed.push_back(s.horizons.back().avg_grad_norm);
    p.mean_avg_grad_norm = r.mean_avg_grad_norm.back().second;
    for (SeedResult& s : r.seeds) s.trajectory.steps.clear();
    if (sigma == 0.0) {
      out.zero_noise_floor = p.mean_avg_grad_norm;
    } else {
      fit_points.emplace_back(sigma, p.mean_avg_grad_norm);
    }
    out.points.push_back(std::move(p));
    out.runs.push_back(std::move(r));
  }
  out.sigma_fit = fit_rate(fit_points);

  std::vector<std::pair<double, double>> sorted = fit_points;
  std::sort(sorted.begin(), sorted.end());
  out.monotone = true;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].second < sorted[i - 1].second) out.monotone = false;
  }
  return out;
}

namespace {

std::vector<double> rho_sequence(const GradientStream& stream, double tau) {
  Hyperparameters hyper;
  hyper.tau = tau;
  OptimizerState state = init(Vector(stream.front().size(), 0.0), hyper);
  std::vector<double> rho;
  rho.reserve(stream.size());
  for (const Vector& g : stream) rho.push_back(update_statistics(state, g).rho);
  return rho;
}

}  // namespace

SpikeReport spike_experiment(double base_norm, double spike_norm, std::size_t spike_index,
                             std::size_t length, std::size_t dim, std::uint64_t seed) {
  const GradientStream stream = spike_stream(base_norm, spike_norm, spike_index, length, dim, seed);
  const GradientStream control = spike_stream(base_norm, base_norm, spike_index, length, dim, seed);

  SpikeReport r;
  r.rho_corrected = rho_sequence(stream, 1.0);
  r.rho_plain = rho_sequence(stream, 0.0);
  r.final_ratio = r.rho_corrected.back() / r.rho_plain.back();
  r.min_ratio_after_spike = std::numeric_limits<double>::infinity();
  for (std::size_t t = spike_index; t <= length; ++t) {
    r.min_ratio_after_spike =
        std::min(r.min_ratio_after_spike, r.rho_corrected[t - 1] / r.rho_plain[t - 1]);
  }
  for (std::size_t t = 1; t <= length; ++t) {
    const double lower = std::sqrt(1.0 / static_cast<double>(t));
    if (relative_slack(lower, r.rho_corrected[t - 1]) < -kInvariantTolerance) {
      r.lower_bound_holds = false;
    }
  }
  const auto control_corrected = rho_sequence(control, 1.0);
  const auto control_plain = rho_sequence(control, 0.0);
  r.control_final_ratio = control_corrected.back() / control_plain.back();
  for (const Vector& g : stream) r.g_sq_sum += squared_norm(g);
  return r;
}

}  // namespace optema
