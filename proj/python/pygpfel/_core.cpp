// Python bindings for the main operations: kernels, GP regression, the
// control-affine model, and closed-loop scenario runs.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gpfel/config.hpp"

namespace py = pybind11;
using namespace gpfel;

namespace {

// Thin holder so shared_ptr<const Kernel> round-trips through Python.
struct PyKernel {
  KernelPtr ptr;
};

PyKernel make_se(const Eigen::VectorXd& lengthscales, double signal_variance) {
  return {std::make_shared<SEArdKernel>(SEHyperparams{lengthscales, signal_variance})};
}

// Mutable GP regressor over the immutable PosteriorState snapshots.
class GP {
 public:
  GP(const PyKernel& kernel, double noise_variance)
      : post_(PosteriorState::fit(make_empty(noise_variance), kernel.ptr, zero_mean())) {}

  void add(const Eigen::VectorXd& x, double y, double u) {
    post_ = post_.add_point(x, y, u);
  }
  void remove(Eigen::Index index) { post_ = post_.remove_point(index); }

  std::pair<double, double> predict(const Eigen::VectorXd& x, double u) const {
    return post_.predict(x, u);
  }

  Eigen::Index size() const { return post_.dataset().size(); }

  double log_marginal_likelihood() const {
    return gpfel::log_marginal_likelihood(post_.dataset(), *post_.kernel(),
                                          post_.prior_mean());
  }

  Eigen::VectorXd log_params() const { return post_.kernel()->log_params(); }

  void set_log_params(const Eigen::VectorXd& lp) {
    post_ = PosteriorState::fit(post_.dataset(), post_.kernel()->with_log_params(lp),
                                post_.prior_mean());
  }

  double optimize(int n_restarts, unsigned seed) {
    HyperOptOptions options;
    options.seed = seed;
    const HyperOptReport report =
        optimize_hyperparameters(post_.dataset(), *post_.kernel(),
                                 post_.kernel()->log_params(), n_restarts,
                                 post_.prior_mean(), options);
    set_log_params(report.log_params);
    return report.log_likelihood;
  }

 private:
  static Dataset make_empty(double noise_variance) {
    Dataset d;
    d.noise_variance = noise_variance;
    return d;
  }

  PosteriorState post_;
};

py::dict trace_to_dict(const Trace& trace) {
  const py::ssize_t n = static_cast<py::ssize_t>(trace.rows.size());
  const Eigen::Index dim = n > 0 ? trace.rows[0].x.size() : 0;
  Eigen::MatrixXd x(n, dim), x_d(n, dim);
  Eigen::VectorXd t(n), e_norm(n), r(n), u(n), sigma(n), f_hat(n), g_hat(n);
  Eigen::VectorXi kappa(n), event(n);
  for (py::ssize_t i = 0; i < n; ++i) {
    const TraceRow& row = trace.rows[static_cast<std::size_t>(i)];
    x.row(i) = row.x;
    x_d.row(i) = row.x_d;
    t[i] = row.t;
    e_norm[i] = row.e_norm;
    r[i] = row.r;
    u[i] = row.u;
    sigma[i] = row.sigma;
    f_hat[i] = row.f_hat;
    g_hat[i] = row.g_hat;
    kappa[i] = row.kappa;
    event[i] = row.event ? 1 : 0;
  }

  py::list events;
  for (const EventRecord& ev : trace.events.events) {
    events.append(py::make_tuple(ev.time, to_string(ev.kind), ev.dataset_size));
  }

  const MetricsSummary m = summarize(trace);
  py::dict metrics;
  metrics["event_count"] = m.event_count;
  metrics["final_dataset_size"] = m.final_dataset_size;
  metrics["max_dataset_size"] = m.max_dataset_size;
  metrics["min_inter_event_time"] = m.min_inter_event_time;
  metrics["mean_inter_event_time"] = m.mean_inter_event_time;
  metrics["final_error_norm"] = m.final_error_norm;
  metrics["max_error_norm_late"] = m.max_error_norm_late;
  metrics["wall_clock_seconds"] = m.wall_clock_seconds;

  py::dict out;
  out["t"] = t;
  out["x"] = x;
  out["x_d"] = x_d;
  out["e_norm"] = e_norm;
  out["r"] = r;
  out["u"] = u;
  out["sigma"] = sigma;
  out["f_hat"] = f_hat;
  out["g_hat"] = g_hat;
  out["kappa"] = kappa;
  out["event"] = event;
  out["events"] = events;
  out["metrics"] = metrics;
  out["aborted"] = trace.aborted;
  out["fault"] = trace.fault;
  out["final_log_params"] = trace.final_log_params;
  return out;
}

RunConfig config_from(const std::string& text,
                      const std::vector<std::string>& overrides) {
  return apply_overrides(parse_config(text), overrides);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online-learning feedback linearization with Gaussian processes";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<NumericalDegeneracy>(m, "NumericalDegeneracy",
                                              PyExc_RuntimeError);

  py::class_<PyKernel>(m, "Kernel");
  m.def("se_kernel", &make_se, py::arg("lengthscales"), py::arg("signal_variance"),
        "Squared-exponential ARD kernel");
  m.def(
      "sum_kernel",
      [](const PyKernel& a, const PyKernel& b) {
        return PyKernel{std::make_shared<SumKernel>(a.ptr, b.ptr)};
      },
      py::arg("a"), py::arg("b"));
  m.def(
      "kernel_eval",
      [](const PyKernel& k, const Eigen::VectorXd& x, const Eigen::VectorXd& xp) {
        return k.ptr->eval(x, xp);
      },
      py::arg("kernel"), py::arg("x"), py::arg("x_prime"));

  py::class_<GP>(m, "GP")
      .def(py::init<const PyKernel&, double>(), py::arg("kernel"),
           py::arg("noise_variance"))
      .def("add", &GP::add, py::arg("x"), py::arg("y"), py::arg("u") = 1.0)
      .def("remove", &GP::remove, py::arg("index"))
      .def("predict", &GP::predict, py::arg("x"), py::arg("u") = 1.0,
           "Posterior (mean, variance) at x")
      .def("log_marginal_likelihood", &GP::log_marginal_likelihood)
      .def("optimize", &GP::optimize, py::arg("n_restarts") = 2, py::arg("seed") = 0,
           "Multi-start likelihood ascent; returns the best log likelihood")
      .def_property("log_params", &GP::log_params, &GP::set_log_params)
      .def("__len__", &GP::size);

  m.def("preset_names", &preset_names);
  m.def(
      "preset_text",
      [](const std::string& name) { return serialize_config(preset_config(name)); },
      py::arg("name"), "Full key=value config document for a named preset");
  m.def(
      "validate_config",
      [](const std::string& text) { parse_config(text).validate(); },
      py::arg("text"), "Raises ConfigError on an invalid config document");
  m.def(
      "run",
      [](const std::string& config_text, const std::vector<std::string>& overrides) {
        return trace_to_dict(run_closed_loop(config_from(config_text, overrides)));
      },
      py::arg("config_text"), py::arg("overrides") = std::vector<std::string>{},
      "Closed-loop simulation; returns trace arrays, events, and metrics");
  m.def(
      "run_preset",
      [](const std::string& name, const std::vector<std::string>& overrides) {
        return trace_to_dict(run_closed_loop(
            apply_overrides(preset_config(name), overrides)));
      },
      py::arg("name"), py::arg("overrides") = std::vector<std::string>{});
}
