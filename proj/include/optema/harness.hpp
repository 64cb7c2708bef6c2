#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "optema/baselines.hpp"
#include "optema/diagnostics.hpp"
#include "optema/optimizer.hpp"
#include "optema/problems.hpp"

namespace optema {

/// Which optimizer a run uses. `kind` is one of
/// optema-m, optema-v, sgd, sgd-momentum, adam, adagrad-norm.
struct OptimizerSpec {
  std::string kind = "optema-m";
  Hyperparameters hyper;
  BaselineConfig baseline;

  bool is_optema() const { return kind == "optema-m" || kind == "optema-v"; }
  /// Normalizes `hyper.variant` / `baseline.kind` from `kind`.
  void resolve();
};

struct ExperimentConfig {
  OptimizerSpec optimizer;
  std::string problem = "quadratic";
  std::size_t dim = 0;  // 0 = problem default
  /// Start point override: empty = problem default, one value = fill.
  Vector x0;
  LogisticSpec logistic;
  double sigma = 0.0;
  NoiseKind noise_kind = NoiseKind::Gaussian;
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::uint64_t> horizons{1000};
  std::uint64_t record_every = 1;
  unsigned threads = 1;
  std::string output_dir;

  void validate() const;
  std::uint64_t max_horizon() const { return horizons.back(); }
};

class CheckViolation : public std::runtime_error {
 public:
  CheckViolation(CheckReport report, std::uint64_t seed);
  const CheckReport& report() const { return report_; }
  std::uint64_t seed() const { return seed_; }

 private:
  CheckReport report_;
  std::uint64_t seed_;
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::uint64_t iteration, std::uint64_t seed);
  std::uint64_t iteration() const { return iteration_; }

 private:
  std::uint64_t iteration_;
};

struct HorizonResult {
  std::uint64_t horizon = 0;
  /// (1/T) sum_{t<=T} |grad f(x_t)|, exact gradients at the iterates.
  double avg_grad_norm = 0.0;
  double min_grad_norm = 0.0;
  /// f(x_{T+1}), the iterate after T updates.
  double final_f = 0.0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<HorizonResult> horizons;
  std::vector<CheckReport> checks;
  std::uint64_t degenerate_steps = 0;
  Trajectory trajectory;
};

struct RunResult {
  std::vector<SeedResult> seeds;
  /// Seed-averaged avg_grad_norm per horizon.
  std::vector<std::pair<std::uint64_t, double>> mean_avg_grad_norm;
};

/// One (config, seed) run up to the largest horizon. Deterministic.
SeedResult run_seed(const ExperimentConfig& config, const Problem& problem, std::uint64_t seed);

/// All seeds, optionally in parallel; results are ordered as config.seeds.
RunResult run(const ExperimentConfig& config);

Problem problem_for(const ExperimentConfig& config);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points_used = 0;
};

/// OLS of ln(error) on ln(T).
RateFit fit_rate(const std::vector<std::pair<double, double>>& points);

struct SigmaPoint {
  double sigma = 0.0;
  double mean_avg_grad_norm = 0.0;
  std::vector<double> per_seed;
};

struct SweepResult {
  std::uint64_t horizon = 0;
  std::vector<SigmaPoint> points;
  /// Slope of ln(avg_grad_norm) against ln(sigma) over the positive sigmas.
  RateFit sigma_fit;
  /// avg_grad_norm at sigma = 0, when the grid contains it.
  std::optional<double> zero_noise_floor;
  /// Seed-averaged error is non-decreasing in sigma across the positive grid.
  bool monotone = false;
  std::vector<RunResult> runs;
};

SweepResult noise_sweep(const ExperimentConfig& base, const std::vector<double>& sigma_grid);

struct SpikeReport {
  std::vector<double> rho_corrected;  // tau = 1
  std::vector<double> rho_plain;      // tau = 0
  double final_ratio = 0.0;
  double min_ratio_after_spike = 0.0;
  double control_final_ratio = 0.0;  // same stream without the spike
  bool lower_bound_holds = true;     // rho_t(tau=1) >= sqrt(1/t)
  double g_sq_sum = 0.0;
};

SpikeReport spike_experiment(double base_norm, double spike_norm, std::size_t spike_index,
                             std::size_t length, std::size_t dim = 4, std::uint64_t seed = 0);

}  // namespace optema
