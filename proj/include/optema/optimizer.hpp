#pragma once

// OptEMA: an EMA optimizer whose momentum/second-moment coefficients and
// stepsize are closed-loop functions of the observed gradient trajectory.
//
// One step consumes exactly one stochastic gradient g_t and runs
//
//   rho_t   = sqrt((1 + tau/t * G_t) / (1 + G_t)),   G_t = sum_{i<=t} |g_i|^2
//   ghat_t  = max_{i<=t} |g_i|
//   (a_t, b_t) = (rho_t, beta)                       variant M
//              = (alpha, rho_t / (1 + mu ghat_t^2))  variant V
//   m_t = (1 - a_t) m_{t-1} + a_t g_t
//   v_t = (1 - b_t) v_{t-1} + b_t g_t*g_t
//   gamma_t = min(a_t / (1 + mu ghat^2), (1 + sum_j |m_j|^2/a_j)^{-1/2})  M
//           = (1 + mu ghat^2)^{-1} (1 + sum_j |m_j|^2)^{-1/2}            V
//   x_{t+1} = x_t - theta gamma_t m_t / (eps + sqrt(v_t))
//
// Norms are Euclidean over the whole parameter vector; v and the
// preconditioner are elementwise. No bias correction.

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "optema/common.hpp"

namespace optema {

enum class Variant { M, V };

/// How variant V turns rho_t into beta_t. `Rho` is the algorithm as stated;
/// `SqrtRho` uses sqrt(rho_t) for side-by-side comparison.
enum class BetaRule { Rho, SqrtRho };

std::string to_string(Variant v);
Variant parse_variant(const std::string& s);

struct Hyperparameters {
  double theta = 1.0;
  double tau = 1.0;
  double eps = 1e-5;
  double mu = 1e-8;
  double alpha = 0.9;   // fixed first-moment weight, variant V
  double beta = 0.999;  // fixed second-moment weight, variant M
  Variant variant = Variant::M;
  BetaRule beta_rule = BetaRule::Rho;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Past this many steps the scalar accumulators use compensated summation.
inline constexpr std::uint64_t kCompensationThreshold = 1'000'000;

struct OptimizerState {
  std::uint64_t t = 0;
  Vector x;
  Vector m;
  Vector v;
  RunningSum g_sq_sum;           // G_t
  double g_hat = 0.0;            // max_i |g_i|
  RunningSum m_energy_weighted;  // sum_j |m_j|^2 / a_j   (variant M only)
  RunningSum m_energy;           // sum_j |m_j|^2         (variant V only)
  Hyperparameters hyper;

  std::size_t dim() const { return x.size(); }
  bool compensated() const { return t > kCompensationThreshold; }
};

struct StepRecord {
  std::uint64_t t = 0;
  double g_norm = 0.0;
  double rho = 1.0;
  double alpha_t = 1.0;
  double beta_t = 1.0;
  double gamma = 1.0;
  double m_norm = 0.0;
  double v_norm = 0.0;
  double g_hat = 0.0;
  std::optional<double> f_value;
  std::optional<double> true_grad_norm;
  /// gamma_t underflowed to zero; the iterate did not move.
  bool degenerate = false;
};

struct Statistics {
  double rho;
  double g_hat;
};

struct EmaWeights {
  double alpha_t;
  double beta_t;
};

OptimizerState init(std::span<const double> x1, const Hyperparameters& hyper);

/// Advances t and folds |g|^2, |g| into G_t and ghat_t, then returns rho_t.
Statistics update_statistics(OptimizerState& state, std::span<const double> g);

EmaWeights select_ema_weights(const OptimizerState& state, double rho, double g_hat);

void update_moments(OptimizerState& state, std::span<const double> g, double alpha_t,
                    double beta_t);

double compute_stepsize(const OptimizerState& state, double alpha_t);

void apply_update(OptimizerState& state, double gamma);

/// One full iteration. On error the state is left untouched.
StepRecord step(OptimizerState& state, std::span<const double> g);

/// 1 / (1 + mu * ghat^2), evaluated as mu*ghat*ghat and saturating to 0.
double stability_factor(double mu, double g_hat);

/// Corrected AdaGrad-Norm statistic for a given step index and G_t.
double corrected_adagrad_norm(double tau, std::uint64_t t, double g_sq_sum);

}  // namespace optema
