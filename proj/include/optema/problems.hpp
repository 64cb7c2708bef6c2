#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "optema/common.hpp"

namespace optema {

struct Evaluation {
  double f = 0.0;
  Vector grad;
};

/// Smooth objective with an exact gradient oracle and a known lower bound.
/// `lipschitz` is absent when the function has no global smoothness constant.
struct Problem {
  using Oracle = std::function<double(std::span<const double> x, std::span<double> grad)>;

  std::string name;
  std::size_t dim = 0;
  Oracle oracle;
  double f_star = 0.0;
  std::optional<double> lipschitz;
  Vector x_init;
  /// Construction parameters, echoed into run configs.
  std::map<std::string, std::string> parameters;
};

Evaluation evaluate(const Problem& problem, std::span<const double> x);

enum class NoiseKind { Gaussian, SphereUniform };

std::string to_string(NoiseKind k);
NoiseKind parse_noise_kind(const std::string& s);

/// Additive gradient noise with E[xi] = 0 and E|xi|^2 = sigma^2.
struct NoiseModel {
  double sigma = 0.0;
  std::uint64_t seed = 0;
  NoiseKind kind = NoiseKind::Gaussian;
};

/// Deterministic draw sequence for one run: the k-th perturbation depends
/// only on (seed, k).
class NoiseStream {
 public:
  explicit NoiseStream(const NoiseModel& model);

  /// Adds one noise draw to `g` in place.
  void perturb(std::span<double> g);

  std::uint64_t draws() const { return draws_; }
  const NoiseModel& model() const { return model_; }

 private:
  NoiseModel model_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

Vector sample_gradient(const Problem& problem, std::span<const double> x, NoiseStream& noise);

/// f(x) = 1/2 sum_i a_i x_i^2.
Problem make_quadratic(const Vector& diag);

/// Diagonal 1..n quadratic started from the all-ones point.
Problem make_quadratic(std::size_t n);

/// Chained Rosenbrock sum_i b (x_{i+1} - x_i^2)^2 + (a - x_i)^2.
Problem make_rosenbrock(std::size_t n, double a = 1.0, double b = 100.0);

/// sum_i x_i^2 / (1 + x_i^2): smooth, nonconvex, f* = 0, L = 2.
Problem make_separable(std::size_t n);

struct LogisticSpec {
  std::uint64_t data_seed = 1;
  std::size_t samples = 200;
  std::size_t features = 10;
  double label_flip = 0.1;
  double reg = 1e-2;
};

/// L2-regularized logistic regression on seeded synthetic data. f* is found
/// by a Newton pre-solve to gradient norm below 1e-10 and cached per spec.
Problem make_logistic(const LogisticSpec& spec);

/// Looks a problem up by name. `dim` = 0 selects the built-in default.
Problem make_problem(const std::string& name, std::size_t dim = 0,
                     const LogisticSpec& logistic = {});

std::vector<Problem> builtin_problems();

using GradientStream = std::vector<Vector>;

/// Random unit directions scaled to `base_norm`, except `spike_norm` at the
/// 1-based position `spike_index`.
GradientStream spike_stream(double base_norm, double spike_norm, std::size_t spike_index,
                            std::size_t length, std::size_t dim, std::uint64_t seed = 0);

}  // namespace optema
