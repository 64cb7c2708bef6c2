#pragma once

// Comparison optimizers sharing OptEMA's StepRecord telemetry. Fields with no
// natural counterpart (rho, alpha_t, beta_t) are reported as 1.

#include <cstdint>
#include <span>
#include <string>

#include "optema/common.hpp"
#include "optema/optimizer.hpp"

namespace optema {

enum class BaselineKind { SGD, SGDMomentum, Adam, AdaGradNorm };
enum class SgdSchedule { Constant, InvSqrt };

std::string to_string(BaselineKind k);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::SGD;
  double lr = 0.01;
  SgdSchedule schedule = SgdSchedule::Constant;
  double momentum = 0.9;   // SGDMomentum
  double beta1 = 0.9;      // Adam
  double beta2 = 0.999;    // Adam
  double eps_adam = 1e-8;  // Adam
  double b0 = 1.0;         // AdaGrad-Norm denominator seed

  void validate() const;
};

struct BaselineState {
  std::uint64_t t = 0;
  Vector x;
  Vector m;  // momentum buffer / Adam first moment
  Vector v;  // Adam second moment
  double g_sq_sum = 0.0;
  double g_hat = 0.0;
  BaselineConfig config;
};

BaselineState baseline_init(std::span<const double> x1, const BaselineConfig& config);

/// Advances the baseline by one gradient; the new iterate is `state.x`.
StepRecord baseline_step(BaselineState& state, std::span<const double> g);

}  // namespace optema
