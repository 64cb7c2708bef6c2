#include "optema/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace optema {

std::string to_string(Variant v) { return v == Variant::M ? "M" : "V"; }

Variant parse_variant(const std::string& s) {
  if (s == "M" || s == "m") return Variant::M;
  if (s == "V" || s == "v") return Variant::V;
  throw ConfigError("unknown OptEMA variant '" + s + "'");
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(std::string("hyperparameter out of range: ") + what);
}

}  // namespace

void Hyperparameters::validate() const {
  require(std::isfinite(theta) && theta >= 0.0, "theta must be >= 0");
  require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0,1]");
  require(eps > 0.0 && eps < 1.0, "eps must lie in (0,1)");
  require(mu > 0.0 && mu < 1.0, "mu must lie in (0,1)");
  require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0,1)");
  require(beta > 0.0 && beta < 1.0, "beta must lie in (0,1)");
}

OptimizerState init(std::span<const double> x1, const Hyperparameters& hyper) {
  hyper.validate();
  if (x1.empty()) throw ConfigError("initial point must have dimension >= 1");
  if (!all_finite(x1)) throw ConfigError("initial point contains non-finite entries");
  OptimizerState s;
  s.x.assign(x1.begin(), x1.end());
  s.m.assign(x1.size(), 0.0);
  s.v.assign(x1.size(), 0.0);
  s.hyper = hyper;
  return s;
}

double corrected_adagrad_norm(double tau, std::uint64_t t, double g_sq_sum) {
  const double correction = tau / static_cast<double>(t);
  if (!std::isfinite(g_sq_sum)) {
    // Limit of the ratio as G -> inf.
    return std::max(std::sqrt(correction), std::numeric_limits<double>::min());
  }
  const double num = 1.0 + correction * g_sq_sum;
  const double den = 1.0 + g_sq_sum;
  return std::sqrt(num / den);
}

double stability_factor(double mu, double g_hat) {
  const double penalty = mu * g_hat * g_hat;
  if (!std::isfinite(penalty)) return 0.0;
  return 1.0 / (1.0 + penalty);
}

Statistics update_statistics(OptimizerState& state, std::span<const double> g) {
  if (g.size() != state.dim()) throw StepError("gradient dimension mismatch");
  if (!all_finite(g)) throw StepError("non-finite gradient");
  state.t += 1;
  const double sq = squared_norm(g);
  state.g_sq_sum.add(sq, state.compensated());
  state.g_hat = std::max(state.g_hat, std::sqrt(sq));
  const double rho = corrected_adagrad_norm(state.hyper.tau, state.t, state.g_sq_sum.value());
  return {rho, state.g_hat};
}

EmaWeights select_ema_weights(const OptimizerState& state, double rho, double g_hat) {
  const Hyperparameters& h = state.hyper;
  if (h.variant == Variant::M) return {rho, h.beta};
  const double base = h.beta_rule == BetaRule::SqrtRho ? std::sqrt(rho) : rho;
  return {h.alpha, base * stability_factor(h.mu, g_hat)};
}

void update_moments(OptimizerState& state, std::span<const double> g, double alpha_t,
                    double beta_t) {
  double m_sq = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    state.m[i] = (1.0 - alpha_t) * state.m[i] + alpha_t * g[i];
    // beta_t can saturate to 0 while g_i^2 overflows; 0 * inf must not leak NaN.
    const double fresh = beta_t > 0.0 ? beta_t * (g[i] * g[i]) : 0.0;
    state.v[i] = (1.0 - beta_t) * state.v[i] + fresh;
    m_sq += state.m[i] * state.m[i];
  }
  const bool comp = state.compensated();
  if (state.hyper.variant == Variant::M) {
    state.m_energy_weighted.add(m_sq / alpha_t, comp);
  } else {
    state.m_energy.add(m_sq, comp);
  }
}

double compute_stepsize(const OptimizerState& state, double alpha_t) {
  const Hyperparameters& h = state.hyper;
  const double stab = stability_factor(h.mu, state.g_hat);
  if (h.variant == Variant::M) {
    const double energy = 1.0 / std::sqrt(1.0 + state.m_energy_weighted.value());
    return std::min(alpha_t * stab, energy);
  }
  return stab / std::sqrt(1.0 + state.m_energy.value());
}

void apply_update(OptimizerState& state, double gamma) {
  const double scale = state.hyper.theta * gamma;
  for (std::size_t i = 0; i < state.x.size(); ++i) {
    state.x[i] -= scale * state.m[i] / (state.hyper.eps + std::sqrt(state.v[i]));
  }
}

StepRecord step(OptimizerState& state, std::span<const double> g) {
  if (g.size() != state.dim()) throw StepError("gradient dimension mismatch");
  if (!all_finite(g)) throw StepError("non-finite gradient at t=" + std::to_string(state.t + 1));

  StepRecord rec;
  const auto [rho, g_hat] = update_statistics(state, g);
  const auto [alpha_t, beta_t] = select_ema_weights(state, rho, g_hat);
  update_moments(state, g, alpha_t, beta_t);
  const double gamma = compute_stepsize(state, alpha_t);
  apply_update(state, gamma);

  rec.t = state.t;
  rec.g_norm = norm(g);
  rec.rho = rho;
  rec.alpha_t = alpha_t;
  rec.beta_t = beta_t;
  rec.gamma = gamma;
  rec.m_norm = norm(state.m);
  rec.v_norm = norm(state.v);
  rec.g_hat = g_hat;
  rec.degenerate = !(gamma > 0.0);
  return rec;
}

}  // namespace optema
