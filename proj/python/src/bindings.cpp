#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mobfgd/curve_fit.hpp"
#include "mobfgd/entropy.hpp"
#include "mobfgd/fgd_model.hpp"
#include "mobfgd/interval_stats.hpp"
#include "mobfgd/markov.hpp"
#include "mobfgd/pipeline.hpp"
#include "mobfgd/synthgen.hpp"

namespace py = pybind11;
using namespace mobfgd;

namespace {

std::vector<DataPoint> to_points(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DomainError("x and y differ in length");
  std::vector<DataPoint> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = {x[i], y[i]};
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Entropy, prediction and accuracy-distribution modelling of mobility traces";
  m.attr("__version__") = MOBFGD_VERSION;

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def("random_entropy", [](const std::vector<Symbol>& s) { return random_entropy(s); }, py::arg("sequence"));
  m.def("uncorrelated_entropy", [](const std::vector<Symbol>& s) { return uncorrelated_entropy(s); },
        py::arg("sequence"));
  m.def("real_entropy", [](const std::vector<Symbol>& s) { return real_entropy_lz(s); }, py::arg("sequence"),
        "Lempel-Ziv entropy-rate estimate in bits.");

  py::class_<PredictionResult>(m, "PredictionResult")
      .def_readonly("attempts", &PredictionResult::attempts)
      .def_readonly("hits", &PredictionResult::hits)
      .def_readonly("unpredicted", &PredictionResult::unpredicted)
      .def_readonly("accuracy", &PredictionResult::accuracy);
  m.def(
      "predict_accuracy",
      [](const std::vector<Symbol>& sequence, std::size_t order) {
        EvaluationOptions options;
        options.order = order;
        return evaluate_prequential("", sequence, options);
      },
      py::arg("sequence"), py::arg("order") = 2);

  py::class_<KsResult>(m, "KsResult")
      .def_readonly("statistic", &KsResult::statistic)
      .def_readonly("p_value", &KsResult::p_value)
      .def_readonly("passed", &KsResult::pass);
  m.def(
      "ks_test",
      [](const std::vector<double>& samples, double mu, double sigma, double alpha) {
        return ks_test(samples, mu, sigma, alpha);
      },
      py::arg("samples"), py::arg("mu"), py::arg("sigma"), py::arg("alpha") = 0.05);

  m.def(
      "ols_linear",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto fit = ols_linear(to_points(x, y));
        return py::make_tuple(fit.a, fit.b);
      },
      py::arg("x"), py::arg("y"), "Least squares line; returns (slope, intercept).");
  m.def(
      "fit_gaussian_curve",
      [](const std::vector<double>& x, const std::vector<double>& y) {
        const auto fit = lm_gaussian(to_points(x, y));
        return py::make_tuple(fit.amplitude, fit.center, fit.width, fit.solver.converged);
      },
      py::arg("x"), py::arg("y"), "A exp(-((s - m) / w)^2) fit; returns (A, m, w, converged).");

  py::class_<FunctionalGaussianModel>(m, "Model")
      .def_static("from_json", &FunctionalGaussianModel::deserialize, py::arg("text"))
      .def("to_json", &FunctionalGaussianModel::serialize)
      .def_property_readonly("truncated", &FunctionalGaussianModel::truncated)
      .def("domain", &FunctionalGaussianModel::domain)
      .def("mu", &FunctionalGaussianModel::mu_of, py::arg("s"), py::arg("extrapolate") = false)
      .def("sigma", &FunctionalGaussianModel::sigma_of, py::arg("s"), py::arg("extrapolate") = false)
      .def("pdf", &FunctionalGaussianModel::pdf, py::arg("x"), py::arg("s"), py::arg("extrapolate") = false)
      .def("cdf", &FunctionalGaussianModel::cdf, py::arg("x"), py::arg("s"), py::arg("extrapolate") = false)
      .def("probability", &FunctionalGaussianModel::probability, py::arg("lo"), py::arg("hi"), py::arg("s"),
           py::arg("extrapolate") = false, py::arg("tolerance") = 1e-9)
      .def("sample", &FunctionalGaussianModel::sample, py::arg("s"), py::arg("count"), py::arg("seed"),
           py::arg("extrapolate") = false);
  m.def(
      "make_model",
      [](double a, double b, double amplitude, double center, double width, bool truncated) {
        LinearFit mu;
        mu.a = a;
        mu.b = b;
        GaussianCurveFit sigma;
        sigma.amplitude = amplitude;
        sigma.center = center;
        sigma.width = width;
        return FunctionalGaussianModel(mu, sigma, {}, truncated);
      },
      py::arg("a"), py::arg("b"), py::arg("A"), py::arg("m"), py::arg("w"), py::arg("truncated") = false);

  m.def(
      "generate",
      [](std::size_t n_users, std::size_t seq_length, std::size_t n_locations, std::size_t tour_period,
         double noise_min, double noise_max, std::uint64_t seed) {
        GeneratorConfig config;
        config.n_users = n_users;
        config.seq_length = seq_length;
        config.n_locations = n_locations;
        config.tour_period = tour_period;
        config.noise_min = noise_min;
        config.noise_max = noise_max;
        config.seed = seed;
        const auto corpus = generate(config);
        py::list users;
        for (std::size_t i = 0; i < corpus.trajectories.size(); ++i) {
          const auto encoded = encode_locations(corpus.trajectories[i]);
          users.append(py::make_tuple(corpus.trajectories[i].user_id(), encoded.symbols, corpus.noise[i]));
        }
        return users;
      },
      py::arg("n_users"), py::arg("seq_length"), py::arg("n_locations") = 16, py::arg("tour_period") = 8,
      py::arg("noise_min") = 0.0, py::arg("noise_max") = 1.0, py::arg("seed") = 1,
      "Synthetic users as (user_id, symbol sequence, noise) tuples.");

  m.def("fixture_points", [](const std::string& name) {
    py::list out;
    for (const auto& p : fixture_points(name)) out.append(py::make_tuple(p.s, p.mu, p.sigma));
    return out;
  });
}
