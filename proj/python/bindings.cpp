#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bop2dc/decision.hpp"
#include "bop2dc/engine.hpp"
#include "bop2dc/posterior.hpp"

namespace py = pybind11;
using namespace bop2dc;

namespace {

// Config errors surface as ValueError with one "path: message" line each.
DesignConfig load(const std::string& text) {
    auto outcome = parse_config(text);
    if (!outcome.ok()) {
        std::string msg;
        for (const auto& e : outcome.errors) {
            if (!msg.empty()) msg += "\n";
            msg += (e.path.empty() ? "" : e.path + ": ") + e.message;
        }
        throw py::value_error(msg);
    }
    return *outcome.config;
}

EngineOptions options(int threads, std::function<void(double)> progress) {
    EngineOptions opt;
    opt.threads = threads;
    if (progress)
        opt.progress = [progress](double f) {
            py::gil_scoped_acquire gil;
            progress(f);
        };
    return opt;
}

}  // namespace

PYBIND11_MODULE(_bop2dc, m) {
    m.attr("__version__") = kVersion;

    m.def("validate", [](const std::string& text) { return dump_payload(validation_payload(parse_config(text))); },
          py::arg("config"));

    m.def(
        "calibrate",
        [](const std::string& text, int threads, std::function<void(double)> progress) {
            auto config = load(text);
            auto opt = options(threads, std::move(progress));
            CalibrationRun run;
            {
                py::gil_scoped_release nogil;
                run = run_calibration(config, opt);
            }
            return py::make_tuple(dump_payload(run.payload), run.summary);
        },
        py::arg("config"), py::arg("threads") = 0, py::arg("progress") = nullptr);

    m.def(
        "simulate",
        [](const std::string& text, int threads) {
            auto config = load(text);
            if (!config.design) throw py::value_error("design: required for simulation");
            SimulationRun run;
            {
                py::gil_scoped_release nogil;
                run = run_simulation(config, options(threads, nullptr));
            }
            return py::make_tuple(dump_payload(run.payload), run.csv);
        },
        py::arg("config"), py::arg("threads") = 0);

    m.def(
        "decision_table",
        [](const std::string& text) {
            auto config = load(text);
            if (!config.design) throw py::value_error("design: required for a decision table");
            return dump_payload(run_decision_table(config));
        },
        py::arg("config"));

    m.def(
        "tail_prob_binary",
        [](int n, int y, double t, double a, double b) { return tail_prob_binary({n, y}, {a, b}, t); },
        py::arg("n"), py::arg("y"), py::arg("t"), py::arg("a") = 0.1, py::arg("b") = 0.1);

    m.def(
        "tail_prob_continuous",
        [](int n, double mean, double sum_sq_dev, double t, double theta0, double n0, double a, double b) {
            return tail_prob_continuous({n, mean, sum_sq_dev}, {theta0, n0, a, b}, t);
        },
        py::arg("n"), py::arg("mean"), py::arg("sum_sq_dev"), py::arg("t"), py::arg("theta0") = 0.0,
        py::arg("n0") = 1e-3, py::arg("a") = 1e-6, py::arg("b") = 1e-6);

    m.def(
        "tail_prob_tte",
        [](int n, int d, double total_time, double t, double a, double b) {
            return tail_prob_tte({n, d, total_time}, {a, b}, t);
        },
        py::arg("n"), py::arg("events"), py::arg("total_time"), py::arg("t"), py::arg("a") = 1e-6,
        py::arg("b") = 1e-6);

    m.def(
        "tail_prob_categorical",
        [](std::vector<int> counts, std::vector<int> selector, double t, std::vector<double> alpha) {
            CategoricalPrior prior = alpha.empty() ? CategoricalPrior::vague(counts.size()) : CategoricalPrior{alpha};
            return tail_prob_linear({std::move(counts)}, prior, {std::move(selector)}, t);
        },
        py::arg("counts"), py::arg("selector"), py::arg("t"), py::arg("alpha") = std::vector<double>{});

    m.def(
        "tail_prob_difference_binary",
        [](int n_e, int y_e, int n_c, int y_c, double t, double a, double b) {
            const BinaryPrior prior{a, b};
            return tail_prob_difference_quadrature(posterior_binary({n_e, y_e}, prior),
                                                   posterior_binary({n_c, y_c}, prior), t);
        },
        py::arg("n_e"), py::arg("y_e"), py::arg("n_c"), py::arg("y_c"), py::arg("t") = 0.0, py::arg("a") = 0.1,
        py::arg("b") = 0.1);

    m.def("graduate_cutoff", &graduate_cutoff, py::arg("lam"), py::arg("n"), py::arg("max_n"));
    m.def(
        "interim_cutoffs",
        [](double lambda_lrv, double lambda_cmv, double gamma_lrv, double gamma_cmv, int n, int max_n) {
            return interim_cutoffs({lambda_lrv, lambda_cmv, gamma_lrv, gamma_cmv}, n, max_n);
        },
        py::arg("lambda_lrv"), py::arg("lambda_cmv"), py::arg("gamma_lrv"), py::arg("gamma_cmv"), py::arg("n"),
        py::arg("max_n"));
}
