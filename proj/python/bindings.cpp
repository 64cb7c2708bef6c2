#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "optema/baselines.hpp"
#include "optema/diagnostics.hpp"
#include "optema/harness.hpp"
#include "optema/io.hpp"
#include "optema/optimizer.hpp"
#include "optema/problems.hpp"

namespace py = pybind11;
using namespace optema;

namespace {

py::object to_python(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

// Python-facing OptEMA instance; owns one state machine.
class PyOptimizer {
 public:
  PyOptimizer(const Vector& x1, const Hyperparameters& hyper) : state_(init(x1, hyper)) {}

  StepRecord step(const Vector& g) { return optema::step(state_, g); }

  const OptimizerState& state() const { return state_; }

 private:
  OptimizerState state_;
};

ExperimentConfig build_config(const std::string& config_text,
                              const std::vector<std::string>& overrides) {
  ConfigEntries e = default_config();
  if (!config_text.empty()) merge_config_text(e, config_text);
  for (const std::string& o : overrides) apply_override(e, o);
  return to_experiment_config(e);
}

py::dict run_to_dict(const RunResult& r, bool with_trajectories) {
  py::list seeds;
  for (const SeedResult& s : r.seeds) {
    py::dict d = to_python(to_json(s));
    if (with_trajectories) d["trajectory"] = s.trajectory.steps;
    seeds.append(d);
  }
  py::dict out;
  out["per_seed_results"] = seeds;
  out["mean_avg_grad_norm"] = r.mean_avg_grad_norm;
  if (r.mean_avg_grad_norm.size() >= 3) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [T, err] : r.mean_avg_grad_norm) pts.emplace_back(static_cast<double>(T), err);
    out["rate_fit"] = to_python(to_json(fit_rate(pts)));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_optema, m) {
  m.doc() = "OptEMA optimizers, test problems and trajectory diagnostics";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<StepError>(m, "StepError", PyExc_RuntimeError);
  py::register_exception<DiagnosticError>(m, "DiagnosticError", PyExc_RuntimeError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);
  py::register_exception<CheckViolation>(m, "CheckViolation", PyExc_RuntimeError);

  py::class_<Hyperparameters>(m, "Hyperparameters")
      .def(py::init([](const std::string& variant, double theta, double tau, double eps, double mu,
                       double alpha, double beta, bool sqrt_rho_beta) {
             Hyperparameters h;
             h.variant = parse_variant(variant);
             h.theta = theta;
             h.tau = tau;
             h.eps = eps;
             h.mu = mu;
             h.alpha = alpha;
             h.beta = beta;
             h.beta_rule = sqrt_rho_beta ? BetaRule::SqrtRho : BetaRule::Rho;
             h.validate();
             return h;
           }),
           py::arg("variant") = "M", py::arg("theta") = 1.0, py::arg("tau") = 1.0,
           py::arg("eps") = 1e-5, py::arg("mu") = 1e-8, py::arg("alpha") = 0.9,
           py::arg("beta") = 0.999, py::arg("sqrt_rho_beta") = false)
      .def_property_readonly("variant", [](const Hyperparameters& h) { return to_string(h.variant); })
      .def_readonly("theta", &Hyperparameters::theta)
      .def_readonly("tau", &Hyperparameters::tau)
      .def_readonly("eps", &Hyperparameters::eps)
      .def_readonly("mu", &Hyperparameters::mu)
      .def_readonly("alpha", &Hyperparameters::alpha)
      .def_readonly("beta", &Hyperparameters::beta);

  py::class_<StepRecord>(m, "StepRecord")
      .def_readonly("t", &StepRecord::t)
      .def_readonly("g_norm", &StepRecord::g_norm)
      .def_readonly("rho", &StepRecord::rho)
      .def_readonly("alpha_t", &StepRecord::alpha_t)
      .def_readonly("beta_t", &StepRecord::beta_t)
      .def_readonly("gamma", &StepRecord::gamma)
      .def_readonly("m_norm", &StepRecord::m_norm)
      .def_readonly("v_norm", &StepRecord::v_norm)
      .def_readonly("g_hat", &StepRecord::g_hat)
      .def_readonly("f_value", &StepRecord::f_value)
      .def_readonly("true_grad_norm", &StepRecord::true_grad_norm)
      .def_readonly("degenerate", &StepRecord::degenerate);

  py::class_<PyOptimizer>(m, "Optimizer")
      .def(py::init<const Vector&, const Hyperparameters&>(), py::arg("x1"),
           py::arg("hyper") = Hyperparameters{})
      .def("step", &PyOptimizer::step, py::arg("g"),
           "Consumes one gradient and returns the step telemetry.")
      .def_property_readonly("t", [](const PyOptimizer& o) { return o.state().t; })
      .def_property_readonly("x", [](const PyOptimizer& o) { return o.state().x; })
      .def_property_readonly("m", [](const PyOptimizer& o) { return o.state().m; })
      .def_property_readonly("v", [](const PyOptimizer& o) { return o.state().v; })
      .def_property_readonly("g_sq_sum", [](const PyOptimizer& o) { return o.state().g_sq_sum.value(); })
      .def_property_readonly("g_hat", [](const PyOptimizer& o) { return o.state().g_hat; });

  m.def("corrected_adagrad_norm", &corrected_adagrad_norm, py::arg("tau"), py::arg("t"),
        py::arg("g_sq_sum"));

  py::class_<CheckReport>(m, "CheckReport")
      .def_readonly("check_name", &CheckReport::check_name)
      .def_readonly("passed", &CheckReport::passed)
      .def_readonly("worst_slack", &CheckReport::worst_slack)
      .def_readonly("worst_index", &CheckReport::worst_index)
      .def_readonly("tolerance", &CheckReport::tolerance)
      .def_readonly("applicable", &CheckReport::applicable)
      .def("__repr__", [](const CheckReport& r) {
        return "CheckReport(" + r.check_name + ", passed=" + (r.passed ? "True" : "False") +
               ", worst_slack=" + format_double(r.worst_slack) + ")";
      });

  py::class_<Problem>(m, "Problem")
      .def_readonly("name", &Problem::name)
      .def_readonly("dim", &Problem::dim)
      .def_readonly("f_star", &Problem::f_star)
      .def_readonly("lipschitz", &Problem::lipschitz)
      .def_readonly("x_init", &Problem::x_init)
      .def("evaluate",
           [](const Problem& p, const Vector& x) {
             const Evaluation e = evaluate(p, x);
             return py::make_tuple(e.f, e.grad);
           },
           py::arg("x"), "Returns (f, grad) at x.");

  m.def("make_problem", [](const std::string& name, std::size_t dim) { return make_problem(name, dim); },
        py::arg("name"), py::arg("dim") = 0);
  m.def("builtin_problems", &builtin_problems);

  m.def("trace_checks",
        [](const Hyperparameters& hyper, const std::vector<Vector>& stream) {
          if (stream.empty()) throw InputError("empty gradient stream");
          const Trajectory traj = trace_stream(hyper, Vector(stream.front().size(), 0.0), stream);
          return py::make_tuple(traj.steps, check_optema_trajectory(traj));
        },
        py::arg("hyper"), py::arg("stream"),
        "Runs the stream from the origin; returns (steps, check reports).");
  m.def("check_log_sum_bounds",
        [](const Vector& b, double p) { return check_log_sum_bounds(b, p); }, py::arg("b"),
        py::arg("p"));
  m.def("check_gradient_domination", &check_gradient_domination, py::arg("problem"),
        py::arg("points"));
  m.def("run_invariant_suite",
        [](std::size_t count, std::uint64_t seed, std::size_t max_length) {
          RandomStreamSpec spec;
          spec.max_length = max_length;
          const InvariantSuiteReport r = run_invariant_suite(count, seed, spec);
          py::dict d;
          d["streams"] = r.streams;
          d["steps"] = r.steps;
          d["violations"] = r.violations;
          d["worst"] = r.worst;
          return d;
        },
        py::arg("count"), py::arg("seed"), py::arg("max_length") = 10'000);

  m.def("run_experiment",
        [](const std::vector<std::string>& overrides, const std::string& config_text,
           bool trajectories) {
          const ExperimentConfig c = build_config(config_text, overrides);
          RunResult r;
          {
            py::gil_scoped_release release;
            r = run(c);
          }
          return run_to_dict(r, trajectories);
        },
        py::arg("overrides") = std::vector<std::string>{}, py::arg("config_text") = "",
        py::arg("trajectories") = false,
        "Runs a config given as `key=value` overrides on top of the defaults.");
  m.def("noise_sweep",
        [](const std::vector<double>& sigmas, const std::vector<std::string>& overrides) {
          const ExperimentConfig c = build_config("", overrides);
          SweepResult s;
          {
            py::gil_scoped_release release;
            s = noise_sweep(c, sigmas);
          }
          py::dict d;
          d["horizon"] = s.horizon;
          py::list pts;
          for (const SigmaPoint& p : s.points) pts.append(py::make_tuple(p.sigma, p.mean_avg_grad_norm));
          d["points"] = pts;
          d["sigma_fit"] = to_python(to_json(s.sigma_fit));
          d["zero_noise_floor"] = s.zero_noise_floor;
          d["monotone"] = s.monotone;
          return d;
        },
        py::arg("sigmas"), py::arg("overrides") = std::vector<std::string>{});
  m.def("spike_experiment",
        [](double base_norm, double spike_norm, std::size_t spike_index, std::size_t length) {
          return to_python(to_json(spike_experiment(base_norm, spike_norm, spike_index, length)));
        },
        py::arg("base_norm") = 1.0, py::arg("spike_norm") = 100.0, py::arg("spike_index") = 10,
        py::arg("length") = 100);
  m.def("fit_rate", &fit_rate, py::arg("points"));

  py::class_<RateFit>(m, "RateFit")
      .def_readonly("slope", &RateFit::slope)
      .def_readonly("intercept", &RateFit::intercept)
      .def_readonly("r_squared", &RateFit::r_squared)
      .def_readonly("points_used", &RateFit::points_used);
}
