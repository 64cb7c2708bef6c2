#include "optema/io.hpp"

#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace optema {

namespace {

struct KeySpec {
  const char* section;
  const char* key;
  const char* default_value;
};

// Canonical order of the echo.
constexpr std::array<KeySpec, 29> kKeys{{
    {"optimizer", "method", "optema-m"},
    {"optimizer", "theta", "1"},
    {"optimizer", "tau", "1"},
    {"optimizer", "eps", "1e-05"},
    {"optimizer", "mu", "1e-08"},
    {"optimizer", "alpha", "0.9"},
    {"optimizer", "beta", "0.999"},
    {"optimizer", "v_beta_rule", "rho"},
    {"optimizer", "lr", "0.01"},
    {"optimizer", "sgd_schedule", "constant"},
    {"optimizer", "momentum", "0.9"},
    {"optimizer", "beta1", "0.9"},
    {"optimizer", "beta2", "0.999"},
    {"optimizer", "eps_adam", "1e-08"},
    {"optimizer", "b0", "1"},
    {"problem", "problem", "quadratic"},
    {"problem", "dim", "0"},
    {"problem", "x0", ""},
    {"problem", "data_seed", "1"},
    {"problem", "samples", "200"},
    {"problem", "label_flip", "0.1"},
    {"problem", "reg", "0.01"},
    {"noise", "sigma", "0"},
    {"noise", "noise_kind", "gaussian"},
    {"run", "seeds", "1"},
    {"run", "horizons", "1000"},
    {"run", "record_every", "1"},
    {"run", "threads", "1"},
    {"run", "sigma_grid", ""},
}};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string qualify(const std::string& key, const std::string& section) {
  if (key.find('.') != std::string::npos) {
    for (const KeySpec& k : kKeys) {
      if (key == std::string(k.section) + "." + k.key) return key;
    }
    throw ConfigError("unknown config key '" + key + "'");
  }
  for (const KeySpec& k : kKeys) {
    if (key == k.key && (section.empty() || section == k.section)) {
      return std::string(k.section) + "." + k.key;
    }
  }
  if (!section.empty()) {
    throw ConfigError("unknown config key '" + key + "' in section [" + section + "]");
  }
  throw ConfigError("unknown config key '" + key + "'");
}

const std::string& get(const ConfigEntries& e, const std::string& key) {
  auto it = e.find(key);
  if (it == e.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

double get_double(const ConfigEntries& e, const std::string& key) {
  const std::string& s = get(e, key);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + s + "'");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& s, const std::string& key) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + s + "'");
  }
  return v;
}

std::uint64_t get_uint(const ConfigEntries& e, const std::string& key) {
  return parse_uint(get(e, key), key);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ConfigEntries default_config() {
  ConfigEntries e;
  for (const KeySpec& k : kKeys) e[std::string(k.section) + "." + k.key] = k.default_value;
  return e;
}

void merge_config_text(ConfigEntries& entries, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section != "optimizer" && section != "problem" && section != "noise" &&
          section != "run") {
        throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    entries[qualify(trim(line.substr(0, eq)), section)] = trim(line.substr(eq + 1));
  }
}

void apply_override(ConfigEntries& entries, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not key=value");
  entries[qualify(trim(assignment.substr(0, eq)), "")] = trim(assignment.substr(eq + 1));
}

std::string echo_config(const ConfigEntries& entries) {
  std::ostringstream os;
  std::string section;
  for (const KeySpec& k : kKeys) {
    if (section != k.section) {
      if (!section.empty()) os << '\n';
      section = k.section;
      os << '[' << section << "]\n";
    }
    os << k.key << " = " << get(entries, section + "." + k.key) << '\n';
  }
  return os.str();
}

ExperimentConfig to_experiment_config(const ConfigEntries& e) {
  ExperimentConfig c;
  OptimizerSpec& o = c.optimizer;
  o.kind = get(e, "optimizer.method");
  o.hyper.theta = get_double(e, "optimizer.theta");
  o.hyper.tau = get_double(e, "optimizer.tau");
  o.hyper.eps = get_double(e, "optimizer.eps");
  o.hyper.mu = get_double(e, "optimizer.mu");
  o.hyper.alpha = get_double(e, "optimizer.alpha");
  o.hyper.beta = get_double(e, "optimizer.beta");
  const std::string& rule = get(e, "optimizer.v_beta_rule");
  if (rule == "rho") {
    o.hyper.beta_rule = BetaRule::Rho;
  } else if (rule == "sqrt_rho") {
    o.hyper.beta_rule = BetaRule::SqrtRho;
  } else {
    throw ConfigError("v_beta_rule must be rho or sqrt_rho");
  }
  o.baseline.lr = get_double(e, "optimizer.lr");
  const std::string& schedule = get(e, "optimizer.sgd_schedule");
  if (schedule == "constant") {
    o.baseline.schedule = SgdSchedule::Constant;
  } else if (schedule == "inv_sqrt") {
    o.baseline.schedule = SgdSchedule::InvSqrt;
  } else {
    throw ConfigError("sgd_schedule must be constant or inv_sqrt");
  }
  o.baseline.momentum = get_double(e, "optimizer.momentum");
  o.baseline.beta1 = get_double(e, "optimizer.beta1");
  o.baseline.beta2 = get_double(e, "optimizer.beta2");
  o.baseline.eps_adam = get_double(e, "optimizer.eps_adam");
  o.baseline.b0 = get_double(e, "optimizer.b0");
  o.resolve();

  c.problem = get(e, "problem.problem");
  c.dim = get_uint(e, "problem.dim");
  c.x0.clear();
  for (const std::string& s : split_list(get(e, "problem.x0"))) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw ConfigError("problem.x0 entry '" + s + "' is not a number");
    }
    c.x0.push_back(v);
  }
  c.logistic.data_seed = get_uint(e, "problem.data_seed");
  c.logistic.samples = get_uint(e, "problem.samples");
  c.logistic.label_flip = get_double(e, "problem.label_flip");
  c.logistic.reg = get_double(e, "problem.reg");

  c.sigma = get_double(e, "noise.sigma");
  c.noise_kind = parse_noise_kind(get(e, "noise.noise_kind"));

  c.seeds.clear();
  for (const std::string& s : split_list(get(e, "run.seeds"))) {
    c.seeds.push_back(parse_uint(s, "run.seeds"));
  }
  c.horizons.clear();
  for (const std::string& s : split_list(get(e, "run.horizons"))) {
    c.horizons.push_back(parse_uint(s, "run.horizons"));
  }
  c.record_every = get_uint(e, "run.record_every");
  c.threads = static_cast<unsigned>(get_uint(e, "run.threads"));
  c.validate();
  return c;
}

std::vector<double> sigma_grid(const ConfigEntries& entries) {
  std::vector<double> out;
  for (const std::string& s : split_list(get(entries, "run.sigma_grid"))) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw ConfigError("run.sigma_grid entry '" + s + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

std::string format_double(double x) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, std::uint64_t record_every) {
  os << kTrajectoryHeader << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const StepRecord& r = traj.steps[i];
    const bool last = i + 1 == traj.steps.size();
    if (r.t % record_every != 0 && r.t != 1 && !last) continue;
    os << r.t << ',' << opt(r.f_value) << ',' << opt(r.true_grad_norm) << ','
       << format_double(r.g_norm) << ',' << format_double(r.rho) << ','
       << format_double(r.alpha_t) << ',' << format_double(r.beta_t) << ','
       << format_double(r.gamma) << ',' << format_double(r.m_norm) << ','
       << format_double(r.v_norm) << ',' << format_double(r.g_hat) << '\n';
  }
}

std::vector<CsvRow> read_csv(std::istream& is) {
  std::vector<CsvRow> rows;
  std::string line;
  while (std::getline(is, line)) {
    CsvRow row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      row.cells.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

nlohmann::ordered_json to_json(const CheckReport& r) {
  return {{"check_name", r.check_name},     {"passed", r.passed},
          {"worst_slack", r.worst_slack},   {"worst_index", r.worst_index},
          {"tolerance", r.tolerance},       {"applicable", r.applicable}};
}

nlohmann::ordered_json to_json(const RateFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"r_squared", f.r_squared},
          {"points_used", f.points_used}};
}

nlohmann::ordered_json to_json(const SeedResult& s) {
  nlohmann::ordered_json horizons = nlohmann::ordered_json::array();
  for (const HorizonResult& h : s.horizons) {
    horizons.push_back({{"T", h.horizon},
                        {"avg_grad_norm", h.avg_grad_norm},
                        {"min_grad_norm", h.min_grad_norm},
                        {"final_f", h.final_f}});
  }
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const CheckReport& r : s.checks) checks.push_back(to_json(r));
  return {{"seed", s.seed},
          {"horizons", horizons},
          {"degenerate_steps", s.degenerate_steps},
          {"checks", checks}};
}

nlohmann::ordered_json to_json(const SpikeReport& r) {
  return {{"final_ratio", r.final_ratio},
          {"min_ratio_after_spike", r.min_ratio_after_spike},
          {"control_final_ratio", r.control_final_ratio},
          {"lower_bound_holds", r.lower_bound_holds},
          {"g_sq_sum", r.g_sq_sum},
          {"rho_corrected_final", r.rho_corrected.back()},
          {"rho_plain_final", r.rho_plain.back()}};
}

}  // namespace optema
