#include "colmg/cvar.hpp"
#include "colmg/experiment.hpp"
#include "colmg/mesh.hpp"
#include "colmg/spectral.hpp"

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;

namespace {

py::dict spectrum_dict(const colmg::SpectrumReport& s) {
  py::dict d;
  d["source"] = s.source;
  d["values"] = s.values;
  d["max_modulus"] = s.max_modulus();
  return d;
}

colmg::ModelProblem1D model(int nh, int samples, double nu, std::uint64_t seed) {
  colmg::ModelProblem1D mp = colmg::ModelProblem1D::with_random_eta(nh, samples, nu, seed);
  mp.validate();
  return mp;
}

}  // namespace

PYBIND11_MODULE(_colmg, m) {
  m.doc() = "Collective multigrid for optimal control under uncertainty";

  py::register_exception<colmg::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<colmg::ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);

  m.def("g_eps", &colmg::g_eps, py::arg("x"), py::arg("eps"), "C2 smoothing of max(0, x)");
  m.def("g_eps_prime", &colmg::g_eps_prime, py::arg("x"), py::arg("eps"));
  m.def("g_eps_second", &colmg::g_eps_second, py::arg("x"), py::arg("eps"));
  m.def("empirical_cvar", &colmg::empirical_cvar, py::arg("values"), py::arg("level"),
        "CVaR of equally weighted samples");

  m.def(
      "free_nodes",
      [](const std::string& domain, int level) { return colmg::build_level(colmg::parse_domain(domain), level).num_free(); },
      py::arg("domain"), py::arg("level"), "Number of interior nodes of a structured mesh level");

  m.def(
      "model_r", [](int nh, int samples, double nu, std::uint64_t seed) { return colmg::model_r(model(nh, samples, nu, seed)); },
      py::arg("nh") = 31, py::arg("samples") = 10, py::arg("nu") = 1e-2, py::arg("seed") = 7);

  m.def(
      "two_level_spectrum",
      [](int nh, int samples, double nu, std::uint64_t seed, int n1, int n2, double theta) {
        const colmg::ModelProblem1D mp = model(nh, samples, nu, seed);
        py::dict out;
        out["analytic"] = spectrum_dict(colmg::two_level_spectrum_analytic(mp, n1, n2, theta));
        out["oracle"] = spectrum_dict(colmg::oracle_spectrum(colmg::model_two_level_matrix(mp, n1, n2, theta)));
        return out;
      },
      py::arg("nh") = 31, py::arg("samples") = 10, py::arg("nu") = 1e-2, py::arg("seed") = 7, py::arg("n1") = 1,
      py::arg("n2") = 1, py::arg("theta") = 1.0,
      "Two-level iteration spectrum of the 1D model: closed form and dense eigensolve");

  m.def(
      "smoother_spectrum",
      [](int nh, int samples, double nu, std::uint64_t seed, double theta) {
        const colmg::ModelProblem1D mp = model(nh, samples, nu, seed);
        py::dict out;
        out["analytic"] = spectrum_dict(colmg::smoother_spectrum_G(mp, theta));
        out["oracle"] = spectrum_dict(colmg::oracle_spectrum(colmg::model_smoother_matrix(mp, theta)));
        return out;
      },
      py::arg("nh") = 31, py::arg("samples") = 10, py::arg("nu") = 1e-2, py::arg("seed") = 7, py::arg("theta") = 1.0);

  m.def(
      "spectrum_mismatch",
      [](const std::vector<colmg::Complex>& a, const std::vector<colmg::Complex>& b) {
        return colmg::spectrum_mismatch(a, b);
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "check_config",
      [](const std::string& path) {
        const colmg::ExperimentConfig c = colmg::load_config(path);
        py::dict d;
        d["command"] = std::string(colmg::to_string(c.command));
        d["name"] = c.name;
        d["output_dir"] = c.output_dir;
        return d;
      },
      py::arg("path"), "Parses a configuration file and raises ConfigError on problems");

  m.def(
      "run",
      [](const std::string& path, const std::string& output, std::optional<std::uint64_t> seed, bool verbose) {
        colmg::ExperimentConfig cfg = colmg::load_config(path);
        colmg::RunOptions opt{output, seed, verbose};
        py::gil_scoped_release release;
        colmg::run_experiment(std::move(cfg), opt);
      },
      py::arg("config"), py::arg("output") = "", py::arg("seed") = py::none(), py::arg("verbose") = false,
      "Runs an experiment configuration and writes its artifacts");
}
