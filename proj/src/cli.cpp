#include "optema/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "optema/harness.hpp"
#include "optema/io.hpp"

namespace optema::cli {

namespace fs = std::filesystem;

namespace {

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '"', '\'');
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path resolve_output_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "optema-out";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

struct ConfigOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output;
};

void add_config_options(CLI::App* sub, ConfigOptions& opts) {
  sub->add_option("--config", opts.config_path, "key=value config file");
  sub->add_option("--set", opts.overrides, "override key=value (repeatable)");
  sub->add_option("--output", opts.output, "output directory");
}

ConfigEntries resolve_entries(const ConfigOptions& opts) {
  ConfigEntries entries = default_config();
  if (!opts.config_path.empty()) merge_config_text(entries, read_file(opts.config_path));
  for (const std::string& o : opts.overrides) apply_override(entries, o);
  return entries;
}

fs::path prepare_output(const ConfigOptions& opts, const ConfigEntries& entries) {
  const fs::path dir = resolve_output_dir(opts.output);
  fs::create_directories(dir);
  write_text(dir / "config.echo", echo_config(entries));
  return dir;
}

nlohmann::ordered_json problem_json(const Problem& p) {
  nlohmann::ordered_json params(nlohmann::ordered_json::value_t::object);
  for (const auto& [k, v] : p.parameters) params[k] = v;
  return {{"name", p.name}, {"dim", p.dim}, {"f_star", p.f_star}, {"parameters", params}};
}

int cmd_run(const ConfigOptions& opts, std::ostream& out, std::ostream& err) {
  const ConfigEntries entries = resolve_entries(opts);
  const ExperimentConfig config = to_experiment_config(entries);
  const fs::path dir = prepare_output(opts, entries);
  const Problem problem = problem_for(config);

  const RunResult result = run(config);

  nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const SeedResult& s : result.seeds) {
    if (s.degenerate_steps > 0) {
      err << "optema: warning=degenerate reason=\"stepsize underflowed to 0 on "
          << s.degenerate_steps << " steps (seed " << s.seed << ")\"\n";
    }
    std::ofstream csv(dir / ("traj_seed" + std::to_string(s.seed) + ".csv"), std::ios::binary);
    write_trajectory_csv(csv, s.trajectory, config.record_every);
    per_seed.push_back(to_json(s));
    for (const CheckReport& r : s.checks) {
      auto j = to_json(r);
      j["seed"] = s.seed;
      checks.push_back(j);
    }
  }
  nlohmann::ordered_json fits(nlohmann::ordered_json::value_t::object);
  if (result.mean_avg_grad_norm.size() >= 3) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [T, v] : result.mean_avg_grad_norm) pts.emplace_back(double(T), v);
    if (std::all_of(pts.begin(), pts.end(), [](const auto& p) { return p.second > 0.0; })) {
      fits["horizon"] = to_json(fit_rate(pts));
    }
  }
  nlohmann::ordered_json summary{{"config_echo", echo_config(entries)},
                                 {"problem", problem_json(problem)},
                                 {"per_seed_results", per_seed},
                                 {"rate_fits", fits},
                                 {"check_reports", checks}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  out << "method=" << config.optimizer.kind << " problem=" << problem.name
      << " dim=" << problem.dim << " sigma=" << format_double(config.sigma) << '\n';
  out << "T,mean_avg_grad_norm\n";
  for (const auto& [T, v] : result.mean_avg_grad_norm) out << T << ',' << format_double(v) << '\n';
  if (fits.contains("horizon")) {
    out << "rate slope=" << format_double(fits["horizon"]["slope"].get<double>())
        << " r2=" << format_double(fits["horizon"]["r_squared"].get<double>()) << '\n';
  }
  out << "output=" << dir.string() << '\n';
  return kOk;
}

int cmd_sweep(const ConfigOptions& opts, std::ostream& out) {
  const ConfigEntries entries = resolve_entries(opts);
  const ExperimentConfig config = to_experiment_config(entries);
  const std::vector<double> grid = sigma_grid(entries);
  if (grid.empty()) throw ConfigError("sweep needs run.sigma_grid");
  const fs::path dir = prepare_output(opts, entries);

  const SweepResult sweep = noise_sweep(config, grid);

  nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  std::ostringstream csv;
  csv << "sigma,mean_avg_grad_norm\n";
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const SigmaPoint& p = sweep.points[i];
    csv << format_double(p.sigma) << ',' << format_double(p.mean_avg_grad_norm) << '\n';
    for (const SeedResult& s : sweep.runs[i].seeds) {
      auto j = to_json(s);
      j["sigma"] = p.sigma;
      per_seed.push_back(j);
      for (const CheckReport& r : s.checks) {
        auto c = to_json(r);
        c["seed"] = s.seed;
        c["sigma"] = p.sigma;
        checks.push_back(c);
      }
    }
  }
  write_text(dir / "sweep.csv", csv.str());
  nlohmann::ordered_json fits{{"sigma_exponent", to_json(sweep.sigma_fit)},
                              {"horizon", sweep.horizon},
                              {"monotone_in_sigma", sweep.monotone}};
  if (sweep.zero_noise_floor) fits["zero_noise_floor"] = *sweep.zero_noise_floor;
  nlohmann::ordered_json summary{{"config_echo", echo_config(entries)},
                                 {"per_seed_results", per_seed},
                                 {"rate_fits", fits},
                                 {"check_reports", checks}};
  write_text(dir / "summary.json", summary.dump(2) + "\n");

  out << csv.str();
  out << "sigma_exponent=" << format_double(sweep.sigma_fit.slope)
      << " r2=" << format_double(sweep.sigma_fit.r_squared)
      << " monotone=" << (sweep.monotone ? "yes" : "no") << '\n';
  out << "output=" << dir.string() << '\n';
  return kOk;
}

struct SpikeOptions {
  double base = 1.0;
  double spike = 100.0;
  std::size_t index = 10;
  std::size_t length = 100;
  std::size_t dim = 4;
  std::uint64_t seed = 0;
  std::string output;
};

int cmd_spike(const SpikeOptions& o, std::ostream& out) {
  const SpikeReport r = spike_experiment(o.base, o.spike, o.index, o.length, o.dim, o.seed);
  const fs::path dir = resolve_output_dir(o.output);
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << "t,rho_tau1,rho_tau0,ratio\n";
  for (std::size_t t = 1; t <= o.length; ++t) {
    csv << t << ',' << format_double(r.rho_corrected[t - 1]) << ','
        << format_double(r.rho_plain[t - 1]) << ','
        << format_double(r.rho_corrected[t - 1] / r.rho_plain[t - 1]) << '\n';
  }
  write_text(dir / "spike.csv", csv.str());
  write_text(dir / "spike.json", to_json(r).dump(2) + "\n");
  out << "rho_final(tau=1)=" << format_double(r.rho_corrected.back())
      << " rho_final(tau=0)=" << format_double(r.rho_plain.back())
      << " ratio=" << format_double(r.final_ratio)
      << " control_ratio=" << format_double(r.control_final_ratio)
      << " lower_bound=" << (r.lower_bound_holds ? "ok" : "violated") << '\n';
  if (!r.lower_bound_holds) {
    throw CheckViolation(CheckReport{"spike_lower_bound", false, -1.0, 0, kInvariantTolerance, true},
                         o.seed);
  }
  return kOk;
}

int cmd_check(std::size_t streams, std::uint64_t seed, std::size_t max_length, std::ostream& out) {
  RandomStreamSpec spec;
  spec.max_length = std::max(max_length, spec.min_length);
  const InvariantSuiteReport report = run_invariant_suite(streams, seed, spec);
  out << "streams=" << report.streams << " steps=" << report.steps
      << " violations=" << report.violations << '\n';
  for (const CheckReport& r : report.worst) {
    out << std::left << std::setw(20) << r.check_name << (r.passed ? " PASS" : " FAIL")
        << " worst_slack=" << format_double(r.worst_slack) << " at t=" << r.worst_index << '\n';
  }
  for (const CheckReport& r : report.worst) {
    if (!r.passed) throw CheckViolation(r, seed);
  }
  return kOk;
}

int cmd_list(std::ostream& out) {
  out << "name,dim,f_star,L\n";
  for (const Problem& p : builtin_problems()) {
    out << p.name << ',' << p.dim << ',' << format_double(p.f_star) << ','
        << (p.lipschitz ? format_double(*p.lipschitz) : std::string()) << '\n';
  }
  return kOk;
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"OptEMA optimizer experiments"};
  app.name("optema");
  app.require_subcommand(1);

  ConfigOptions run_opts;
  ConfigOptions sweep_opts;
  SpikeOptions spike_opts;
  std::size_t check_streams = 1000;
  std::uint64_t check_seed = 0;
  std::size_t check_max_length = 10'000;

  add_config_options(app.add_subcommand("run", "run one experiment config"), run_opts);
  add_config_options(app.add_subcommand("sweep", "noise sweep over run.sigma_grid"), sweep_opts);

  auto* spike = app.add_subcommand("spike", "gradient-spike robustness of the rho statistic");
  spike->add_option("--base", spike_opts.base, "base gradient norm");
  spike->add_option("--spike", spike_opts.spike, "spike gradient norm");
  spike->add_option("--index", spike_opts.index, "1-based spike position");
  spike->add_option("--length", spike_opts.length, "stream length");
  spike->add_option("--dim", spike_opts.dim, "gradient dimension");
  spike->add_option("--seed", spike_opts.seed, "direction seed");
  spike->add_option("--output", spike_opts.output, "output directory");

  auto* check = app.add_subcommand("check", "trajectory invariant suite on random streams");
  check->add_option("--streams", check_streams, "number of random streams");
  check->add_option("--seed", check_seed, "suite seed");
  check->add_option("--max-length", check_max_length, "longest stream");

  app.add_subcommand("list-problems", "list built-in problems");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "optema: error=config reason=\"" << one_line(e.what()) << "\"\n";
    return kConfigError;
  }

  try {
    if (app.got_subcommand("run")) return cmd_run(run_opts, out, err);
    if (app.got_subcommand("sweep")) return cmd_sweep(sweep_opts, out);
    if (app.got_subcommand("spike")) return cmd_spike(spike_opts, out);
    if (app.got_subcommand("check")) {
      return cmd_check(check_streams, check_seed, check_max_length, out);
    }
    return cmd_list(out);
  } catch (const CheckViolation& e) {
    err << "optema: error=check reason=\"" << one_line(e.what()) << "\"\n";
    return kCheckFailure;
  } catch (const DivergenceError& e) {
    err << "optema: error=divergence reason=\"" << one_line(e.what()) << "\"\n";
    return kDivergence;
  } catch (const std::exception& e) {
    err << "optema: error=config reason=\"" << one_line(e.what()) << "\"\n";
    return kConfigError;
  }
}

}  // namespace optema::cli
