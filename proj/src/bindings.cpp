// Python bindings for the main operations: simulate, solve, estimate,
// forecast, and the alternative frequency-severity model.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "oprisk/altmodel.hpp"
#include "oprisk/analytic.hpp"
#include "oprisk/estimate.hpp"
#include "oprisk/forecast.hpp"
#include "oprisk/io.hpp"
#include "oprisk/simulate.hpp"

namespace py = pybind11;
using namespace oprisk;

namespace {

ModelParams make_params(int n, const std::vector<std::tuple<int, int, double>>& coupling,
                        const std::vector<double>& theta,
                        const std::vector<double>& noise_rates,
                        const std::vector<std::tuple<int, int, int>>& corr_times) {
    SquareMatrix<double> j(n, 0.0);
    for (const auto& [i, k, v] : coupling) j(i, k) = v;
    SquareMatrix<int> t(n, 0);
    for (const auto& [i, k, v] : corr_times) t(i, k) = v;
    return ModelParams(n, j, theta, noise_rates, t);
}

std::vector<std::vector<double>> trajectory_rows(const LossTrajectory& traj) {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(traj.n_steps()));
    for (int t = 1; t <= traj.n_steps(); ++t) {
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(traj.n_processes()));
        for (int i = 0; i < traj.n_processes(); ++i) row.push_back(traj.at(t, i));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

PYBIND11_MODULE(_oprisk, m) {
    m.doc() = "Dynamical operational-loss model: simulation, exact moments, "
              "estimation, forecasting";

    py::register_exception<Error>(m, "EngineError");

    py::class_<ModelParams>(m, "ModelParams")
        .def(py::init(&make_params), py::arg("n_processes"),
             py::arg("coupling"), py::arg("theta"), py::arg("noise_rates"),
             py::arg("corr_times"))
        .def_readonly("n_processes", &ModelParams::n_processes)
        .def("coupling",
             [](const ModelParams& p, int i, int j) { return p.coupling(i, j); })
        .def("corr_time",
             [](const ModelParams& p, int i, int j) { return p.corr_times(i, j); })
        .def_readonly("theta", &ModelParams::theta)
        .def_readonly("noise_rates", &ModelParams::noise_rates)
        .def("validate", &ModelParams::validate);

    py::class_<LossTrajectory>(m, "LossTrajectory")
        .def_property_readonly("n_steps", &LossTrajectory::n_steps)
        .def_property_readonly("n_processes", &LossTrajectory::n_processes)
        .def_property_readonly("model_tag", &LossTrajectory::model_tag)
        .def("at", &LossTrajectory::at, py::arg("t"), py::arg("i"))
        .def("rows", &trajectory_rows)
        .def("cumulative", &cumulative_loss, py::arg("i"), py::arg("t"));

    m.def(
        "simulate",
        [](const ModelParams& params, int horizon, std::uint64_t seed,
           int trajectory_index) {
            SimulationConfig config;
            config.horizon = horizon;
            config.seed = seed;
            return run_trajectory(params, config, trajectory_index);
        },
        py::arg("params"), py::arg("horizon"), py::arg("seed") = 0,
        py::arg("trajectory_index") = 0);

    m.def(
        "simulate_alt_constrained",
        [](const ModelParams& params, int horizon, std::uint64_t seed,
           int trajectory_index) {
            SimulationConfig config;
            config.horizon = horizon;
            config.seed = seed;
            return simulate_alt(params, SeveritySpec::constrained_to_primary(),
                                config, trajectory_index);
        },
        py::arg("params"), py::arg("horizon"), py::arg("seed") = 0,
        py::arg("trajectory_index") = 0);

    py::class_<Moments>(m, "Moments")
        .def_readonly("mean", &Moments::mean)
        .def_readonly("variance", &Moments::variance)
        .def_readonly("loss_probability", &Moments::loss_probability)
        .def_readonly("computed_via", &Moments::computed_via);

    m.def(
        "moments",
        [](const ModelParams& params, int process) {
            return MomentSolver(params).moments(process);
        },
        py::arg("params"), py::arg("process"));

    m.def(
        "solve",
        [](const ModelParams& params, double horizon, double confidence) {
            MomentReport report = solve_model(params, horizon, confidence);
            py::list out;
            for (const auto& e : report.entries) {
                py::dict d;
                d["process"] = e.process;
                d["mean_l"] = e.mean_l;
                d["var_l"] = e.var_l;
                d["loss_probability"] = e.loss_probability;
                d["mean_z"] = e.mean_z;
                d["var_z"] = e.var_z;
                d["var_value"] = e.var_value;
                d["computed_via"] = e.computed_via;
                out.append(d);
            }
            return out;
        },
        py::arg("params"), py::arg("horizon"), py::arg("confidence") = 0.99865);

    m.def("gaussian_var",
          [](double mean_z, double var_z, double confidence) {
              return gaussian_var(mean_z, var_z, confidence).value;
          },
          py::arg("mean_z"), py::arg("var_z"), py::arg("confidence") = 0.99865);

    m.def(
        "estimate",
        [](const LossTrajectory& db, const ModelParams& structure_params,
           std::optional<std::vector<double>> lambda_prior) {
            CouplingStructure structure =
                CouplingStructure::from_params(structure_params);
            EstimationOptions options;
            if (lambda_prior) options.lambda_prior = std::move(*lambda_prior);
            EstimationResult r = estimate_all(db, structure, options);
            py::dict d;
            d["theta"] = r.theta;
            d["lambda"] = r.lambda;
            py::list couplings;
            for (const auto& c : r.couplings) {
                py::dict e;
                e["i"] = c.i;
                e["j"] = c.j;
                e["aggregate"] = c.aggregate;
                e["candidates"] = c.candidates;
                e["feasible"] = c.feasible;
                e["low_confidence"] = c.low_confidence;
                couplings.append(e);
            }
            d["couplings"] = couplings;
            d["warnings"] = r.warnings;
            return d;
        },
        py::arg("db"), py::arg("structure"),
        py::arg("lambda_prior") = std::nullopt);

    m.def(
        "forecast",
        [](const LossTrajectory& db, const ModelParams& structure_params,
           std::vector<double> fractions, double confidence) {
            CouplingStructure structure =
                CouplingStructure::from_params(structure_params);
            ForecastOptions options;
            options.confidence = confidence;
            ForecastReport r =
                run_forecast(db, structure, std::move(fractions), options);
            py::dict d;
            d["horizon"] = r.horizon;
            d["z_star_at_horizon"] = r.z_star_at_horizon;
            py::list fits;
            for (std::size_t k = 0; k < r.fits.size(); ++k) {
                py::dict f;
                f["fraction"] = r.fits[k].fraction;
                f["var_values"] = r.fits[k].var_values;
                f["delta_var_vs_f1"] = r.delta_var[k];
                fits.append(f);
            }
            d["fits"] = fits;
            return d;
        },
        py::arg("db"), py::arg("structure"),
        py::arg("fractions") = std::vector<double>{1.0},
        py::arg("confidence") = 0.99865);

    m.def("save_database",
          [](const LossTrajectory& db, const std::string& path) {
              save_database(db, path);
          },
          py::arg("db"), py::arg("path"));
    m.def("load_database",
          [](const std::string& path) { return load_database(path).trajectory; },
          py::arg("path"));
}
