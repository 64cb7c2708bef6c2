#include <doctest.h>

#include <charconv>
#include <cstring>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "optema/io.hpp"

using namespace optema;

TEST_CASE("config parsing") {
  ConfigEntries e = default_config();
  SUBCASE("sections and comments") {
    merge_config_text(e,
                      "# quadratic, variant V\n"
                      "[optimizer]\n"
                      "method = optema-v   # trailing comment\n"
                      "alpha = 0.5\n"
                      "\n"
                      "[noise]\n"
                      "sigma = 0.25\n"
                      "[run]\n"
                      "seeds = 1, 2,3\n"
                      "horizons = 10,100\n");
    const ExperimentConfig c = to_experiment_config(e);
    CHECK(c.optimizer.kind == "optema-v");
    CHECK(c.optimizer.hyper.variant == Variant::V);
    CHECK(c.optimizer.hyper.alpha == 0.5);
    CHECK(c.sigma == 0.25);
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(c.horizons == std::vector<std::uint64_t>{10, 100});
  }
  SUBCASE("overrides, bare and qualified") {
    apply_override(e, "sigma=0.5");
    apply_override(e, "optimizer.tau = 0");
    apply_override(e, "x0=0.1,0.2");
    apply_override(e, "v_beta_rule=sqrt_rho");
    const ExperimentConfig c = to_experiment_config(e);
    CHECK(c.sigma == 0.5);
    CHECK(c.optimizer.hyper.tau == 0.0);
    CHECK(c.x0 == Vector{0.1, 0.2});
    CHECK(c.optimizer.hyper.beta_rule == BetaRule::SqrtRho);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(apply_override(e, "gamma=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(e, "noise.gamma=1"), ConfigError);
    CHECK_THROWS_AS(apply_override(e, "sigma"), ConfigError);
    CHECK_THROWS_AS(merge_config_text(e, "[weights]\n"), ConfigError);
    CHECK_THROWS_AS(merge_config_text(e, "[noise]\ntheta = 1\n"), ConfigError);
    CHECK_THROWS_AS(merge_config_text(e, "[noise\n"), ConfigError);
    CHECK_THROWS_AS(merge_config_text(e, "just words\n"), ConfigError);
    ConfigEntries bad = default_config();
    apply_override(bad, "theta=fast");
    CHECK_THROWS_AS(to_experiment_config(bad), ConfigError);
    ConfigEntries bad_seed = default_config();
    apply_override(bad_seed, "seeds=1,-2");
    CHECK_THROWS_AS(to_experiment_config(bad_seed), ConfigError);
    ConfigEntries bad_range = default_config();
    apply_override(bad_range, "eps=2");
    CHECK_THROWS_AS(to_experiment_config(bad_range), ConfigError);
  }
}

TEST_CASE("config echo reproduces the entries") {
  ConfigEntries e = default_config();
  apply_override(e, "method=adam");
  apply_override(e, "sigma_grid=0.1,0.2,0.5");
  const std::string echo = echo_config(e);
  CHECK(echo.rfind("[optimizer]\nmethod = adam\n", 0) == 0);
  ConfigEntries back = default_config();
  apply_override(back, "method=sgd");
  merge_config_text(back, echo);
  CHECK(back == e);
  CHECK(echo_config(back) == echo);
  CHECK(sigma_grid(back) == std::vector<double>{0.1, 0.2, 0.5});
  CHECK(sigma_grid(default_config()).empty());
}

TEST_CASE("doubles round-trip through text") {
  std::mt19937_64 rng(77);
  auto check = [](double x) {
    const std::string s = format_double(x);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(back == x);
  };
  for (int i = 0; i < 100000; ++i) {
    std::uint64_t bits = rng();
    double x = 0.0;
    std::memcpy(&x, &bits, sizeof x);
    if (std::isfinite(x)) check(x);
  }
  check(0.0);
  check(-0.0);
  check(std::numeric_limits<double>::min());
  check(std::numeric_limits<double>::denorm_min());
  check(std::numeric_limits<double>::max());
  check(0.1);
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1e-5) == "1e-05");
}

TEST_CASE("trajectory csv") {
  Trajectory traj;
  for (std::uint64_t t = 1; t <= 10; ++t) {
    StepRecord r;
    r.t = t;
    r.g_norm = 1.0 / static_cast<double>(t);
    r.rho = std::sqrt(2.0 / (1.0 + static_cast<double>(t)));
    r.gamma = 0.1 / static_cast<double>(t);
    if (t != 4) r.f_value = 0.1 * static_cast<double>(t);
    traj.steps.push_back(r);
  }
  std::ostringstream os;
  write_trajectory_csv(os, traj, 3);
  std::istringstream is(os.str());
  const auto rows = read_csv(is);
  REQUIRE(rows.size() == 1 + 5);  // header, t = 1, 3, 6, 9, 10
  CHECK(os.str().rfind(std::string(kTrajectoryHeader) + "\n", 0) == 0);
  CHECK(rows[0].cells.size() == 11);
  CHECK(rows[1].cells[0] == "1");
  CHECK(rows[2].cells[0] == "3");
  CHECK(rows[5].cells[0] == "10");
  CHECK(rows[1].cells[2].empty());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].cells.size() == 11);
    const std::uint64_t t = std::stoull(rows[i].cells[0]);
    const StepRecord& r = traj.steps[t - 1];
    double rho = 0.0;
    const std::string& cell = rows[i].cells[4];
    std::from_chars(cell.data(), cell.data() + cell.size(), rho);
    CHECK(rho == r.rho);
  }

  std::ostringstream every;
  write_trajectory_csv(every, traj, 1);
  std::istringstream is2(every.str());
  const auto all = read_csv(is2);
  CHECK(all.size() == 11);
  CHECK(all[4].cells[1].empty());  // t = 4 has no objective value
}

TEST_CASE("json summaries") {
  const CheckReport r{"rho_bounds", true, 0.25, 3, 1e-9, true};
  const auto j = to_json(r);
  CHECK(j["check_name"] == "rho_bounds");
  CHECK(j["worst_index"] == 3);
  CHECK(j.begin().key() == "check_name");
  const auto f = to_json(RateFit{-0.5, 1.0, 0.99, 5});
  CHECK(f["slope"] == -0.5);
  CHECK(f["points_used"] == 5);
}
