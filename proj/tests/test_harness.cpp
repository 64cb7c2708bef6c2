#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "optema/harness.hpp"

using namespace optema;

namespace {

ExperimentConfig quadratic_config(const std::string& method, std::vector<std::uint64_t> horizons) {
  ExperimentConfig c;
  c.optimizer.kind = method;
  c.problem = "quadratic";
  c.dim = 10;
  c.horizons = std::move(horizons);
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig c = quadratic_config("optema-m", {10, 100});
  CHECK_NOTHROW(c.validate());
  SUBCASE("horizons") {
    c.horizons = {100, 100};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.horizons = {};
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("seeds") {
    c.seeds.clear();
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("misc") {
    c.record_every = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("optimizer") {
    c.optimizer.kind = "lion";
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("hyperparameters") {
    c.optimizer.hyper.tau = 2.0;
    CHECK_THROWS_AS(run(c), ConfigError);
  }
}

TEST_CASE("zero-noise run improves with the horizon") {
  const RunResult r = run(quadratic_config("optema-m", {100, 1000}));
  REQUIRE(r.seeds.size() == 1);
  const auto& h = r.seeds[0].horizons;
  REQUIRE(h.size() == 2);
  CHECK(h[1].avg_grad_norm < h[0].avg_grad_norm);
  CHECK(h[1].min_grad_norm <= h[0].min_grad_norm);
  CHECK(r.seeds[0].trajectory.steps.size() == 1000);
  REQUIRE(r.seeds[0].checks.size() == 4);
  for (const CheckReport& c : r.seeds[0].checks) CHECK(c.passed);
}

TEST_CASE("theta 0 freezes the iterate") {
  for (const char* method : {"optema-m", "optema-v"}) {
    ExperimentConfig c = quadratic_config(method, {10, 50});
    c.optimizer.hyper.theta = 0.0;
    const Problem p = problem_for(c);
    const Evaluation e1 = evaluate(p, p.x_init);
    const RunResult r = run(c);
    for (const HorizonResult& h : r.seeds[0].horizons) {
      CHECK(h.avg_grad_norm == doctest::Approx(norm(e1.grad)).epsilon(1e-13));
      CHECK(h.min_grad_norm == norm(e1.grad));
      CHECK(h.final_f == e1.f);
    }
  }
}

TEST_CASE("noise-free runs ignore the seed") {
  ExperimentConfig c = quadratic_config("optema-v", {50, 200});
  c.seeds = {1, 99};
  const RunResult r = run(c);
  REQUIRE(r.seeds.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r.seeds[0].horizons[i].avg_grad_norm == r.seeds[1].horizons[i].avg_grad_norm);
    CHECK(r.seeds[0].horizons[i].final_f == r.seeds[1].horizons[i].final_f);
  }
}

TEST_CASE("noisy runs depend on the seed and nothing else") {
  ExperimentConfig c = quadratic_config("optema-m", {300});
  c.sigma = 0.5;
  c.seeds = {3, 4, 5, 6};
  const RunResult serial = run(c);
  c.threads = 3;
  const RunResult parallel = run(c);
  CHECK(serial.seeds[0].horizons[0].avg_grad_norm != serial.seeds[1].horizons[0].avg_grad_norm);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(serial.seeds[i].seed == parallel.seeds[i].seed);
    const auto& a = serial.seeds[i].trajectory.steps;
    const auto& b = parallel.seeds[i].trajectory.steps;
    REQUIRE(a.size() == b.size());
    for (std::size_t t = 0; t < a.size(); ++t) {
      REQUIRE(a[t].gamma == b[t].gamma);
      REQUIRE(a[t].f_value == b[t].f_value);
    }
  }
  CHECK(serial.mean_avg_grad_norm == parallel.mean_avg_grad_norm);
}

TEST_CASE("baselines run through the harness") {
  for (const char* method : {"sgd", "sgd-momentum", "adam", "adagrad-norm"}) {
    CAPTURE(method);
    ExperimentConfig c = quadratic_config(method, {200});
    c.optimizer.baseline.lr = 0.01;
    const RunResult r = run(c);
    CHECK(r.seeds[0].checks.empty());
    CHECK(r.seeds[0].horizons[0].final_f < evaluate(problem_for(c), problem_for(c).x_init).f);
  }
}

TEST_CASE("divergence is reported with its iteration") {
  ExperimentConfig c = quadratic_config("sgd", {2000});
  c.optimizer.baseline.lr = 1.0;
  try {
    run(c);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.iteration() > 1);
    CHECK(e.iteration() < 2000);
  }
}

TEST_CASE("start point override") {
  ExperimentConfig c = quadratic_config("optema-m", {10});
  c.x0 = {0.5};
  CHECK(problem_for(c).x_init == Vector(10, 0.5));
  c.x0 = {1.0, 2.0};
  CHECK_THROWS_AS(problem_for(c), ConfigError);
  c.x0 = Vector(10, 0.0);
  c.x0[3] = 2.0;
  CHECK(problem_for(c).x_init[3] == 2.0);
}

TEST_CASE("fit_rate") {
  SUBCASE("exact power law") {
    const RateFit f = fit_rate({{100.0, 0.1}, {1000.0, 0.1 / std::sqrt(10.0)}, {1e4, 0.01}});
    CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.points_used == 3);
    CHECK(f.intercept == doctest::Approx(std::log(0.1) + 0.5 * std::log(100.0)).epsilon(1e-12));
  }
  SUBCASE("constant errors") {
    const RateFit f = fit_rate({{10.0, 0.3}, {100.0, 0.3}, {1000.0, 0.3}});
    CHECK(f.slope == 0.0);
    CHECK(f.r_squared == 1.0);
  }
  SUBCASE("quarter-power curve with jitter") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    std::vector<std::pair<double, double>> pts;
    for (int k = 0; k <= 8; ++k) {
      const double T = std::pow(10.0, 2.0 + 0.25 * k);
      pts.emplace_back(T, std::pow(T, -0.25) * (1.0 + jitter(rng)));
    }
    const RateFit f = fit_rate(pts);
    CHECK(f.slope >= -0.27);
    CHECK(f.slope <= -0.23);
    CHECK(f.r_squared > 0.99);
  }
  SUBCASE("bad input") {
    CHECK_THROWS_AS(fit_rate({{1.0, 1.0}, {2.0, 0.5}}), InputError);
    CHECK_THROWS_AS(fit_rate({{1.0, 1.0}, {2.0, 0.0}, {3.0, 0.1}}), InputError);
    CHECK_THROWS_AS(fit_rate({{5.0, 1.0}, {5.0, 0.5}, {5.0, 0.1}}), InputError);
  }
}

TEST_CASE("noise sweep") {
  ExperimentConfig c = quadratic_config("optema-v", {300});
  c.seeds = {1, 2};
  SUBCASE("grid too small") {
    CHECK_THROWS_AS(noise_sweep(c, {0.1}), InputError);
    CHECK_THROWS_AS(noise_sweep(c, {0.0, 0.1, 1.0}), InputError);
    CHECK_THROWS_AS(noise_sweep(c, {-0.1, 0.1, 1.0, 2.0}), InputError);
  }
  SUBCASE("zero noise is reported separately") {
    const SweepResult s = noise_sweep(c, {0.0, 0.1, 0.3, 1.0});
    REQUIRE(s.zero_noise_floor.has_value());
    CHECK(s.sigma_fit.points_used == 3);
    CHECK(s.points.size() == 4);
    CHECK(s.horizon == 300);
    const RunResult plain = run(c);
    CHECK(*s.zero_noise_floor == plain.mean_avg_grad_norm.back().second);
    for (const SigmaPoint& p : s.points) CHECK(p.per_seed.size() == 2);
  }
}

TEST_CASE("spike experiment") {
  SUBCASE("closed form") {
    const SpikeReport r = spike_experiment(1.0, 100.0, 10, 100);
    const double corrected = std::sqrt((1.0 + 10099.0 / 100.0) / (1.0 + 10099.0));
    const double plain = std::sqrt(1.0 / 10100.0);
    CHECK(r.g_sq_sum == doctest::Approx(10099.0).epsilon(1e-12));
    CHECK(r.rho_corrected.back() == doctest::Approx(corrected).epsilon(1e-12));
    CHECK(r.rho_plain.back() == doctest::Approx(plain).epsilon(1e-12));
    CHECK(r.rho_corrected.back() == doctest::Approx(0.1005).epsilon(1e-3));
    CHECK(r.final_ratio == doctest::Approx(corrected / plain).epsilon(1e-12));
    CHECK(r.final_ratio == doctest::Approx(10.1).epsilon(1e-2));
    CHECK(r.lower_bound_holds);
    CHECK(r.min_ratio_after_spike > 1.0);
  }
  SUBCASE("control without a spike") {
    const SpikeReport r = spike_experiment(1.0, 1.0, 10, 100);
    // G_t = t, so the ratio is sqrt(1 + G/t) = sqrt(2).
    CHECK(r.final_ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(r.control_final_ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  }
  SUBCASE("lower bound at every step") {
    const SpikeReport r = spike_experiment(0.01, 1e4, 3, 500);
    CHECK(r.lower_bound_holds);
    for (std::size_t t = 1; t <= 500; ++t) {
      CHECK(r.rho_corrected[t - 1] >= std::sqrt(1.0 / static_cast<double>(t)) * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("exceptions carry their context") {
  const CheckViolation v(CheckReport{"second_moment", false, -0.5, 7, 1e-9, true}, 3);
  CHECK(v.report().worst_index == 7);
  CHECK(v.seed() == 3);
  CHECK(std::string(v.what()).find("second_moment") != std::string::npos);
  const DivergenceError d(42, 1);
  CHECK(d.iteration() == 42);
  CHECK(std::string(d.what()).find("t=42") != std::string::npos);
}
