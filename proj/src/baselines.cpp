#include "optema/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace optema {

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::SGD: return "sgd";
    case BaselineKind::SGDMomentum: return "sgd-momentum";
    case BaselineKind::Adam: return "adam";
    case BaselineKind::AdaGradNorm: return "adagrad-norm";
  }
  return "unknown";
}

void BaselineConfig::validate() const {
  auto open_unit = [](double x) { return x > 0.0 && x < 1.0; };
  if (!(std::isfinite(lr) && lr > 0.0)) throw ConfigError("baseline lr must be > 0");
  switch (kind) {
    case BaselineKind::SGD: break;
    case BaselineKind::SGDMomentum:
      if (!open_unit(momentum)) throw ConfigError("momentum must lie in (0,1)");
      break;
    case BaselineKind::Adam:
      if (!open_unit(beta1)) throw ConfigError("beta1 must lie in (0,1)");
      if (!open_unit(beta2)) throw ConfigError("beta2 must lie in (0,1)");
      if (!open_unit(eps_adam)) throw ConfigError("eps_adam must lie in (0,1)");
      break;
    case BaselineKind::AdaGradNorm:
      if (!(std::isfinite(b0) && b0 > 0.0)) throw ConfigError("b0 must be > 0");
      break;
  }
}

BaselineState baseline_init(std::span<const double> x1, const BaselineConfig& config) {
  config.validate();
  if (x1.empty()) throw ConfigError("initial point must have dimension >= 1");
  if (!all_finite(x1)) throw ConfigError("initial point contains non-finite entries");
  BaselineState s;
  s.x.assign(x1.begin(), x1.end());
  s.m.assign(x1.size(), 0.0);
  s.v.assign(x1.size(), 0.0);
  s.config = config;
  return s;
}

StepRecord baseline_step(BaselineState& s, std::span<const double> g) {
  if (g.size() != s.x.size()) throw StepError("gradient dimension mismatch");
  if (!all_finite(g)) throw StepError("non-finite gradient at t=" + std::to_string(s.t + 1));

  const BaselineConfig& c = s.config;
  s.t += 1;
  const double sq = squared_norm(g);
  s.g_sq_sum += sq;
  s.g_hat = std::max(s.g_hat, std::sqrt(sq));

  StepRecord rec;
  rec.t = s.t;
  rec.g_norm = std::sqrt(sq);
  rec.g_hat = s.g_hat;

  switch (c.kind) {
    case BaselineKind::SGD: {
      const double lr = c.schedule == SgdSchedule::InvSqrt
                            ? c.lr / std::sqrt(static_cast<double>(s.t))
                            : c.lr;
      for (std::size_t i = 0; i < g.size(); ++i) s.x[i] -= lr * g[i];
      rec.gamma = lr;
      rec.m_norm = rec.g_norm;
      break;
    }
    case BaselineKind::SGDMomentum: {
      for (std::size_t i = 0; i < g.size(); ++i) {
        s.m[i] = c.momentum * s.m[i] + g[i];
        s.x[i] -= c.lr * s.m[i];
      }
      rec.gamma = c.lr;
      rec.m_norm = norm(s.m);
      break;
    }
    case BaselineKind::Adam: {
      const double t = static_cast<double>(s.t);
      const double corr1 = 1.0 - std::pow(c.beta1, t);
      const double corr2 = 1.0 - std::pow(c.beta2, t);
      for (std::size_t i = 0; i < g.size(); ++i) {
        s.m[i] = c.beta1 * s.m[i] + (1.0 - c.beta1) * g[i];
        s.v[i] = c.beta2 * s.v[i] + (1.0 - c.beta2) * g[i] * g[i];
        const double m_hat = s.m[i] / corr1;
        const double v_hat = s.v[i] / corr2;
        s.x[i] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps_adam);
      }
      rec.alpha_t = 1.0 - c.beta1;
      rec.beta_t = 1.0 - c.beta2;
      rec.gamma = c.lr;
      rec.m_norm = norm(s.m);
      rec.v_norm = norm(s.v);
      break;
    }
    case BaselineKind::AdaGradNorm: {
      const double factor = 1.0 / std::sqrt(c.b0 * c.b0 + s.g_sq_sum);
      const double lr = c.lr * factor;
      for (std::size_t i = 0; i < g.size(); ++i) s.x[i] -= lr * g[i];
      rec.rho = factor;
      rec.gamma = lr;
      rec.m_norm = rec.g_norm;
      break;
    }
  }
  return rec;
}

}  // namespace optema
