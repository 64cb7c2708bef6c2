#include "optema/problems.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <sstream>
#include <tuple>

namespace optema {

Evaluation evaluate(const Problem& problem, std::span<const double> x) {
  if (x.size() != problem.dim) {
    throw ConfigError("dimension mismatch for problem '" + problem.name + "': expected " +
                      std::to_string(problem.dim) + ", got " + std::to_string(x.size()));
  }
  Evaluation e;
  e.grad.assign(problem.dim, 0.0);
  e.f = problem.oracle(x, e.grad);
  return e;
}

std::string to_string(NoiseKind k) {
  return k == NoiseKind::Gaussian ? "gaussian" : "sphere";
}

NoiseKind parse_noise_kind(const std::string& s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "sphere" || s == "sphere_uniform") return NoiseKind::SphereUniform;
  throw ConfigError("unknown noise kind '" + s + "'");
}

NoiseStream::NoiseStream(const NoiseModel& model) : model_(model), engine_(model.seed) {
  if (!(model.sigma >= 0.0) || !std::isfinite(model.sigma)) {
    throw ConfigError("noise sigma must be finite and >= 0");
  }
}

void NoiseStream::perturb(std::span<double> g) {
  ++draws_;
  if (model_.sigma == 0.0) return;
  const double n = static_cast<double>(g.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  if (model_.kind == NoiseKind::Gaussian) {
    // Per-coordinate variance sigma^2 / n so that E|xi|^2 = sigma^2.
    const double scale = model_.sigma / std::sqrt(n);
    for (double& gi : g) gi += scale * normal(engine_);
    return;
  }
  Vector dir(g.size());
  double len = 0.0;
  while (len == 0.0) {
    for (double& d : dir) d = normal(engine_);
    len = norm(dir);
  }
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += model_.sigma * dir[i] / len;
}

Vector sample_gradient(const Problem& problem, std::span<const double> x, NoiseStream& noise) {
  Evaluation e = evaluate(problem, x);
  noise.perturb(e.grad);
  return std::move(e.grad);
}

Problem make_quadratic(const Vector& diag) {
  if (diag.empty()) throw ConfigError("quadratic needs dimension >= 1");
  for (double a : diag) {
    if (!(a > 0.0)) throw ConfigError("quadratic diagonal must be positive");
  }
  Problem p;
  p.name = "quadratic";
  p.dim = diag.size();
  p.oracle = [diag](std::span<const double> x, std::span<double> grad) {
    double f = 0.0;
    for (std::size_t i = 0; i < diag.size(); ++i) {
      f += 0.5 * diag[i] * x[i] * x[i];
      grad[i] = diag[i] * x[i];
    }
    return f;
  };
  p.f_star = 0.0;
  p.lipschitz = *std::max_element(diag.begin(), diag.end());
  p.x_init.assign(diag.size(), 1.0);
  p.parameters["dim"] = std::to_string(p.dim);
  return p;
}

Problem make_quadratic(std::size_t n) {
  Vector diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = static_cast<double>(i + 1);
  return make_quadratic(diag);
}

Problem make_rosenbrock(std::size_t n, double a, double b) {
  if (n < 2) throw ConfigError("rosenbrock needs dimension >= 2");
  Problem p;
  p.name = "rosenbrock";
  p.dim = n;
  p.oracle = [a, b](std::span<const double> x, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double f = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      const double r = x[i + 1] - x[i] * x[i];
      const double d = a - x[i];
      f += b * r * r + d * d;
      grad[i] += -4.0 * b * x[i] * r - 2.0 * d;
      grad[i + 1] += 2.0 * b * r;
    }
    return f;
  };
  p.f_star = 0.0;
  p.x_init.assign(n, 1.0);
  for (std::size_t i = 0; i < n; i += 2) p.x_init[i] = -1.2;
  p.parameters["dim"] = std::to_string(n);
  p.parameters["a"] = std::to_string(a);
  p.parameters["b"] = std::to_string(b);
  return p;
}

Problem make_separable(std::size_t n) {
  if (n < 1) throw ConfigError("separable needs dimension >= 1");
  Problem p;
  p.name = "separable";
  p.dim = n;
  p.oracle = [](std::span<const double> x, std::span<double> grad) {
    double f = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double q = 1.0 + x[i] * x[i];
      f += x[i] * x[i] / q;
      grad[i] = 2.0 * x[i] / (q * q);
    }
    return f;
  };
  p.f_star = 0.0;
  p.lipschitz = 2.0;
  p.x_init.assign(n, 1.0);
  p.parameters["dim"] = std::to_string(n);
  return p;
}

namespace {

struct LogisticData {
  Eigen::MatrixXd features;  // N x n
  Eigen::VectorXd labels;    // +-1
  double reg = 0.0;
  double lipschitz = 0.0;
  double f_star = 0.0;
  Vector minimizer;
};

double logistic_value(const LogisticData& d, const Eigen::VectorXd& w, Eigen::VectorXd* grad,
                      Eigen::MatrixXd* hess) {
  const Eigen::Index n_samples = d.features.rows();
  const Eigen::VectorXd margins = d.labels.cwiseProduct(d.features * w);
  double f = 0.0;
  Eigen::VectorXd coef(n_samples);
  Eigen::VectorXd curv(n_samples);
  for (Eigen::Index i = 0; i < n_samples; ++i) {
    const double z = margins[i];
    // log(1 + exp(-z)), stable for both signs.
    f += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    const double s = 1.0 / (1.0 + std::exp(z));  // sigmoid(-z)
    coef[i] = -d.labels[i] * s;
    curv[i] = s * (1.0 - s);
  }
  const double inv_n = 1.0 / static_cast<double>(n_samples);
  f = f * inv_n + 0.5 * d.reg * w.squaredNorm();
  if (grad) *grad = inv_n * (d.features.transpose() * coef) + d.reg * w;
  if (hess) {
    *hess = inv_n * (d.features.transpose() * curv.asDiagonal() * d.features);
    hess->diagonal().array() += d.reg;
  }
  return f;
}

std::shared_ptr<const LogisticData> build_logistic(const LogisticSpec& spec) {
  auto d = std::make_shared<LogisticData>();
  std::mt19937_64 rng(spec.data_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto N = static_cast<Eigen::Index>(spec.samples);
  const auto n = static_cast<Eigen::Index>(spec.features);

  Eigen::VectorXd w_true(n);
  for (Eigen::Index j = 0; j < n; ++j) w_true[j] = normal(rng);
  d->features.resize(N, n);
  d->labels.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) d->features(i, j) = normal(rng);
    double y = d->features.row(i).dot(w_true) >= 0.0 ? 1.0 : -1.0;
    if (unit(rng) < spec.label_flip) y = -y;
    d->labels[i] = y;
  }
  d->reg = spec.reg;

  const Eigen::MatrixXd gram = d->features.transpose() * d->features;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  d->lipschitz = eig.eigenvalues().maxCoeff() / (4.0 * static_cast<double>(N)) + spec.reg;

  // Damped Newton pre-solve for f*.
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  double f = logistic_value(*d, w, &grad, &hess);
  for (int it = 0; it < 200 && grad.norm() >= 1e-10; ++it) {
    const Eigen::VectorXd dir = hess.ldlt().solve(-grad);
    double step = 1.0;
    Eigen::VectorXd trial = w + dir;
    double f_trial = logistic_value(*d, trial, nullptr, nullptr);
    while (f_trial > f + 1e-4 * step * grad.dot(dir) && step > 1e-12) {
      step *= 0.5;
      trial = w + step * dir;
      f_trial = logistic_value(*d, trial, nullptr, nullptr);
    }
    w = trial;
    f = logistic_value(*d, w, &grad, &hess);
  }
  if (!(grad.norm() < 1e-10)) {
    throw ConfigError("logistic pre-solve did not reach gradient norm 1e-10");
  }
  d->f_star = f;
  d->minimizer.assign(w.data(), w.data() + w.size());
  return d;
}

std::shared_ptr<const LogisticData> cached_logistic(const LogisticSpec& spec) {
  using Key = std::tuple<std::uint64_t, std::size_t, std::size_t, double, double>;
  static std::mutex mutex;
  static std::map<Key, std::shared_ptr<const LogisticData>> cache;
  const Key key{spec.data_seed, spec.samples, spec.features, spec.label_flip, spec.reg};
  std::lock_guard lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto data = build_logistic(spec);
  cache.emplace(key, data);
  return data;
}

std::string format_double(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

}  // namespace

Problem make_logistic(const LogisticSpec& spec) {
  if (spec.samples < 1 || spec.features < 1) {
    throw ConfigError("logistic needs samples >= 1 and features >= 1");
  }
  if (!(spec.label_flip >= 0.0 && spec.label_flip <= 0.5)) {
    throw ConfigError("label_flip must lie in [0, 0.5]");
  }
  if (!(spec.reg > 0.0)) throw ConfigError("logistic reg must be > 0");
  auto data = cached_logistic(spec);

  Problem p;
  p.name = "logistic";
  p.dim = spec.features;
  p.oracle = [data](std::span<const double> x, std::span<double> grad) {
    const Eigen::Map<const Eigen::VectorXd> w(x.data(), static_cast<Eigen::Index>(x.size()));
    Eigen::VectorXd g;
    const double f = logistic_value(*data, w, &g, nullptr);
    std::copy(g.data(), g.data() + g.size(), grad.begin());
    return f;
  };
  p.f_star = data->f_star;
  p.lipschitz = data->lipschitz;
  p.x_init.assign(spec.features, 0.0);
  p.parameters["data_seed"] = std::to_string(spec.data_seed);
  p.parameters["samples"] = std::to_string(spec.samples);
  p.parameters["features"] = std::to_string(spec.features);
  p.parameters["label_flip"] = format_double(spec.label_flip);
  p.parameters["reg"] = format_double(spec.reg);
  p.parameters["f_star"] = format_double(data->f_star);
  return p;
}

Problem make_problem(const std::string& name, std::size_t dim, const LogisticSpec& logistic) {
  if (name == "quadratic") return make_quadratic(dim == 0 ? 10 : dim);
  if (name == "rosenbrock") return make_rosenbrock(dim == 0 ? 2 : dim);
  if (name == "separable") return make_separable(dim == 0 ? 10 : dim);
  if (name == "logistic") {
    LogisticSpec spec = logistic;
    if (dim != 0) spec.features = dim;
    return make_logistic(spec);
  }
  throw ConfigError("unknown problem '" + name + "'");
}

std::vector<Problem> builtin_problems() {
  return {make_quadratic(10), make_rosenbrock(2), make_rosenbrock(10), make_logistic({}),
          make_separable(10)};
}

GradientStream spike_stream(double base_norm, double spike_norm, std::size_t spike_index,
                            std::size_t length, std::size_t dim, std::uint64_t seed) {
  if (dim < 1) throw InputError("spike stream needs dim >= 1");
  if (spike_index < 1 || spike_index > length) {
    throw InputError("spike_index must lie in [1, length]");
  }
  if (!(base_norm >= 0.0) || !(spike_norm >= 0.0)) {
    throw InputError("spike stream norms must be >= 0");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  GradientStream stream(length, Vector(dim));
  for (std::size_t t = 1; t <= length; ++t) {
    Vector& g = stream[t - 1];
    double len = 0.0;
    while (len == 0.0) {
      for (double& gi : g) gi = normal(rng);
      len = norm(g);
    }
    const double target = t == spike_index ? spike_norm : base_norm;
    for (double& gi : g) gi *= target / len;
  }
  return stream;
}

}  // namespace optema
