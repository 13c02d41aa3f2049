// Command-line front end: simulation, exact solution, estimation, the
// fraction-f forecasting protocol, the published five-process benchmark,
// and a self-check suite.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oprisk/altmodel.hpp"
#include "oprisk/analytic.hpp"
#include "oprisk/estimate.hpp"
#include "oprisk/forecast.hpp"
#include "oprisk/io.hpp"
#include "oprisk/simulate.hpp"

namespace {

using nlohmann::json;
using namespace oprisk;

// The five-process benchmark configuration: processes 0 and 1 free,
// 2 <- 0, 3 <- 2, 4 <- {0, 1}; every window five steps long.
ModelParams benchmark_params() {
    const int n = 5;
    SquareMatrix<double> j(n, 0.0);
    SquareMatrix<int> t_star(n, 0);
    j(2, 0) = 0.1;
    j(3, 2) = 0.15;
    j(4, 0) = 0.1;
    j(4, 1) = 0.1;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            if (j(i, k) != 0.0) t_star(i, k) = 5;
    return ModelParams(n, j, std::vector<double>(n, -1.0), {2, 3, 5, 5, 5},
                       t_star);
}

int exit_code_for(const std::string& category) {
    if (category == "parameter") return 2;
    if (category == "data") return 3;
    if (category == "classification") return 4;
    if (category == "resource") return 5;
    if (category == "insufficient-events") return 6;
    if (category == "unsupported") return 7;
    return 1;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << body;
    if (!out) throw DataError("write failed: " + path);
}

std::string with_index(const std::string& path, int k) {
    if (k == 0) return path;
    std::size_t dot = path.rfind('.');
    if (dot == std::string::npos || path.find('/', dot) != std::string::npos)
        return path + "." + std::to_string(k);
    return path.substr(0, dot) + "." + std::to_string(k) + path.substr(dot);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double percentile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

int cmd_simulate(const std::string& config_path, const std::string& output,
                 std::optional<std::uint64_t> seed, std::optional<int> horizon,
                 std::optional<int> trajectories) {
    ModelConfig config = load_config(config_path);
    if (seed) config.seed = *seed;
    if (horizon) config.horizon = *horizon;
    if (trajectories) config.trajectories = *trajectories;

    SimulationConfig sim;
    sim.horizon = config.horizon;
    sim.n_trajectories = config.trajectories;
    sim.seed = config.seed;
    for (int k = 0; k < config.trajectories; ++k) {
        LossTrajectory traj = run_trajectory(config.params, sim, k);
        std::map<std::string, std::string> meta;
        meta["seed"] = std::to_string(config.seed);
        meta["trajectory"] = std::to_string(k);
        save_database(traj, with_index(output, k), meta, config.params);
    }
    std::cout << "wrote " << config.trajectories << " database file(s) to "
              << output << "\n";
    return 0;
}

int cmd_solve(const std::string& config_path, const std::string& output,
              std::optional<int> horizon, std::optional<double> confidence) {
    ModelConfig config = load_config(config_path);
    if (horizon) config.horizon = *horizon;
    if (confidence) config.confidence = *confidence;

    MomentReport report =
        solve_model(config.params, config.horizon, config.confidence);
    std::string body = moment_report_json(report);
    if (!output.empty()) write_text(output, body);
    std::cout << body << "\n";
    return 0;
}

int cmd_estimate(const std::string& db_path, const std::string& config_path,
                 const std::string& output,
                 const std::vector<double>& lambda_prior) {
    LoadedDatabase db = load_database(db_path);
    ModelConfig config = load_config(config_path);
    CouplingStructure structure = CouplingStructure::from_params(config.params);

    EstimationOptions options;
    if (!lambda_prior.empty()) options.lambda_prior = lambda_prior;
    EstimationResult result = estimate_all(db.trajectory, structure, options);
    std::string body = estimation_json(result);
    if (!output.empty()) write_text(output, body);
    std::cout << body << "\n";
    return 0;
}

int cmd_forecast(const std::string& db_path, const std::string& config_path,
                 std::vector<double> fractions, double confidence,
                 int trajectories, bool mc_fallback, const std::string& output,
                 const std::string& plot_path, const std::string& summary_path) {
    LoadedDatabase db = load_database(db_path);
    ModelConfig config = load_config(config_path);
    CouplingStructure structure = CouplingStructure::from_params(config.params);
    if (fractions.empty()) fractions = config.fractions;

    ForecastOptions options;
    options.confidence = confidence;
    options.mc_trajectories = trajectories;
    if (!mc_fallback && !structure.graph().acyclic)
        throw UnsupportedError(
            "the declared graph has causal loops; re-run with --mc-fallback");

    ForecastReport report =
        run_forecast(db.trajectory, structure, fractions, options, db.truth);
    std::string body = forecast_report_json(report);
    if (!output.empty()) write_text(output, body);
    if (!plot_path.empty()) write_plot_series(report, db.trajectory, plot_path);
    if (!summary_path.empty()) write_summary_table(report, summary_path);
    std::cout << body << "\n";
    return 0;
}

int cmd_reproduce(int n_seeds, std::uint64_t base_seed, int horizon,
                  double confidence, const std::string& output) {
    const ModelParams truth = benchmark_params();
    CouplingStructure structure = CouplingStructure::from_params(truth);
    const int n = truth.n_processes;

    // Per seed: the published protocol. Simulate T steps, fit on the full
    // history and on the first 75%, compare VaR and parameters.
    std::vector<std::vector<double>> delta_var(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> theta_err(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> lambda_err(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> var_f1(static_cast<std::size_t>(n));
    std::map<std::string, std::vector<double>> coupling_err;

    for (int s = 0; s < n_seeds; ++s) {
        SimulationConfig sim;
        sim.horizon = horizon;
        sim.seed = base_seed + static_cast<std::uint64_t>(s);
        LossTrajectory db = run_trajectory(truth, sim, 0);

        ForecastOptions options;
        options.confidence = confidence;
        ForecastReport report =
            run_forecast(db, structure, {1.0, 0.75}, options, truth);
        for (int i = 0; i < n; ++i) {
            var_f1[static_cast<std::size_t>(i)].push_back(
                report.fits[0].var_values[static_cast<std::size_t>(i)]);
            delta_var[static_cast<std::size_t>(i)].push_back(
                report.delta_var[1][static_cast<std::size_t>(i)]);
            theta_err[static_cast<std::size_t>(i)].push_back(
                report.truth_errors[0].theta[static_cast<std::size_t>(i)]);
            lambda_err[static_cast<std::size_t>(i)].push_back(
                report.truth_errors[0].lambda[static_cast<std::size_t>(i)]);
        }
        const auto& fit1 = report.fits[0];
        for (std::size_t k = 0; k < fit1.estimation.couplings.size(); ++k) {
            const auto& c = fit1.estimation.couplings[k];
            std::string key =
                "J(" + std::to_string(c.i) + "," + std::to_string(c.j) + ")";
            coupling_err[key].push_back(report.truth_errors[0].coupling[k]);
        }
    }

    json j;
    j["seeds"] = n_seeds;
    j["base_seed"] = base_seed;
    j["horizon"] = horizon;
    j["confidence"] = confidence;

    std::ostringstream table;
    table << "process  VaR_f1(median)  delta_VaR(median)  delta_VaR(p90)  "
             "d_theta(median)  d_lambda(median)\n";
    for (int i = 0; i < n; ++i) {
        auto& dv = delta_var[static_cast<std::size_t>(i)];
        char line[256];
        std::snprintf(line, sizeof(line),
                      "%7d  %14.2f  %17.2e  %14.2e  %15.2e  %16.2e\n", i,
                      median(var_f1[static_cast<std::size_t>(i)]), median(dv),
                      percentile(dv, 0.9),
                      median(theta_err[static_cast<std::size_t>(i)]),
                      median(lambda_err[static_cast<std::size_t>(i)]));
        table << line;
        j["processes"].push_back(
            {{"process", i},
             {"var_f1_median", median(var_f1[static_cast<std::size_t>(i)])},
             {"delta_var_median", median(dv)},
             {"delta_var_p90", percentile(dv, 0.9)},
             {"theta_error_median",
              median(theta_err[static_cast<std::size_t>(i)])},
             {"lambda_error_median",
              median(lambda_err[static_cast<std::size_t>(i)])}});
    }
    for (auto& [key, errs] : coupling_err) {
        table << key << " relative error median " << median(errs) << "\n";
        j["couplings"].push_back(
            {{"edge", key}, {"error_median", median(errs)}});
    }
    std::cout << table.str();
    if (!output.empty()) write_text(output, j.dump(2));
    return 0;
}

struct CheckReport {
    int failures = 0;
    void check(const std::string& name, bool ok) {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name << "\n";
        if (!ok) ++failures;
    }
};

int cmd_validate() {
    CheckReport rep;

    // Closed forms against the general enumeration on the benchmark graph.
    const ModelParams p = benchmark_params();
    MomentSolver solver(p);
    bool closed_ok = true;
    for (int i = 0; i < p.n_processes; ++i) {
        Moments a = solver.moments(i);
        Moments b = solver.moments_general(i);
        closed_ok = closed_ok &&
                    std::abs(a.mean - b.mean) <= 1e-12 * std::abs(b.mean) &&
                    std::abs(a.variance - b.variance) <=
                        1e-12 * std::abs(b.variance);
    }
    rep.check("closed forms match the general enumeration", closed_ok);

    // Binomial weight normalization.
    bool binom_ok = true;
    RngStream rng(7, 0, 0);
    for (int k = 0; k < 1000; ++k) {
        int n = 1 + static_cast<int>(rng.next_uniform() * 20);
        double prob = rng.next_uniform();
        double sum = 0.0;
        for (double w : binomial_weights(n, prob)) sum += w;
        binom_ok = binom_ok && std::abs(sum - 1.0) <= 1e-12;
    }
    rep.check("binomial mixture weights sum to one", binom_ok);

    // Simulation invariants on a short benchmark run.
    SimulationConfig sim;
    sim.horizon = 2000;
    sim.seed = 99;
    LossTrajectory traj = run_trajectory(p, sim, 0);
    bool nonneg = true;
    for (int t = 1; t <= sim.horizon; ++t)
        for (int i = 0; i < p.n_processes; ++i)
            nonneg = nonneg && traj.at(t, i) >= 0.0;
    rep.check("losses are non-negative", nonneg);

    LossTrajectory again = run_trajectory(p, sim, 0);
    bool det = true;
    for (int t = 1; t <= sim.horizon; ++t)
        for (int i = 0; i < p.n_processes; ++i)
            det = det && traj.at(t, i) == again.at(t, i);
    rep.check("trajectories are reproducible from the seed", det);

    // Database roundtrip.
    const std::string tmp = "/tmp/oprisk_validate_db.csv";
    save_database(traj, tmp, {}, p);
    LoadedDatabase loaded = load_database(tmp);
    bool roundtrip = loaded.truth.has_value();
    for (int t = 1; roundtrip && t <= sim.horizon; ++t)
        for (int i = 0; i < p.n_processes; ++i)
            roundtrip = roundtrip && loaded.trajectory.at(t, i) == traj.at(t, i);
    rep.check("database save/load roundtrip is lossless", roundtrip);
    std::remove(tmp.c_str());

    // VaR quantile factor at the published confidence level.
    double q = gaussian_quantile(0.99865);
    rep.check("0.99865 quantile is the 3-sigma factor",
              std::abs(q - 3.0) <= 1e-3 * 3.0);

    std::cout << (rep.failures == 0 ? "all checks passed"
                                    : "some checks FAILED")
              << "\n";
    return rep.failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Operational-loss dynamics engine"};
    app.require_subcommand(1);

    std::string config_path, db_path, output, plot_path, summary_path;
    std::vector<double> fractions, lambda_prior;
    std::optional<std::uint64_t> seed_opt;
    std::optional<int> horizon_opt, traj_opt;
    double confidence = 0.99865;
    int trajectories = 10000;
    bool mc_fallback = false;
    int n_seeds = 20;
    std::uint64_t base_seed = 1;
    int bench_horizon = 200000;

    auto* sim = app.add_subcommand("simulate", "simulate loss databases");
    sim->add_option("--config", config_path, "model config file")->required();
    sim->add_option("--output", output, "database CSV path")->required();
    sim->add_option("--seed", seed_opt, "override the config seed");
    sim->add_option("--horizon", horizon_opt, "override the config horizon");
    sim->add_option("--trajectories", traj_opt, "override the trajectory count");

    auto* solve = app.add_subcommand("solve", "exact moments and VaR");
    solve->add_option("--config", config_path, "model config file")->required();
    solve->add_option("--output", output, "report JSON path");
    solve->add_option("--horizon", horizon_opt, "override the config horizon");
    std::optional<double> conf_opt;
    solve->add_option("--confidence", conf_opt, "VaR confidence level");

    auto* est = app.add_subcommand("estimate", "fit parameters to a database");
    est->add_option("--database", db_path, "loss database CSV")->required();
    est->add_option("--config", config_path,
                    "config declaring the zero pattern and windows")
        ->required();
    est->add_option("--output", output, "result JSON path");
    est->add_option("--lambda-prior", lambda_prior,
                    "supplied noise rates (required under causal loops)");

    auto* fc = app.add_subcommand("forecast", "fraction-f forecasting protocol");
    fc->add_option("--database", db_path, "loss database CSV")->required();
    fc->add_option("--config", config_path,
                   "config declaring the zero pattern and windows")
        ->required();
    fc->add_option("--fraction", fractions,
                   "history fraction to fit on (repeatable; default from config)");
    fc->add_option("--confidence", confidence, "VaR confidence level")
        ->capture_default_str();
    fc->add_option("--trajectories", trajectories,
                   "Monte Carlo trajectories for the loop fallback")
        ->capture_default_str();
    fc->add_flag("--mc-fallback", mc_fallback,
                 "allow Monte Carlo bands when the graph has loops");
    fc->add_option("--output", output, "report JSON path");
    fc->add_option("--plot-series", plot_path, "plot-ready CSV path");
    fc->add_option("--summary", summary_path, "VaR summary table path");

    auto* rep = app.add_subcommand(
        "reproduce-paper", "run the published five-process benchmark");
    rep->add_option("--seeds", n_seeds, "number of seeds")->capture_default_str();
    rep->add_option("--seed", base_seed, "first seed")->capture_default_str();
    rep->add_option("--horizon", bench_horizon, "steps per realization")
        ->capture_default_str();
    rep->add_option("--confidence", confidence, "VaR confidence level")
        ->capture_default_str();
    rep->add_option("--output", output, "report JSON path");

    auto* val = app.add_subcommand("validate", "run the self-check suite");
    (void)val;

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed())
            return cmd_simulate(config_path, output, seed_opt, horizon_opt,
                                traj_opt);
        if (solve->parsed())
            return cmd_solve(config_path, output, horizon_opt, conf_opt);
        if (est->parsed())
            return cmd_estimate(db_path, config_path, output, lambda_prior);
        if (fc->parsed())
            return cmd_forecast(db_path, config_path, fractions, confidence,
                                trajectories, mc_fallback, output, plot_path,
                                summary_path);
        if (rep->parsed())
            return cmd_reproduce(n_seeds, base_seed, bench_horizon, confidence,
                                 output);
        if (val->parsed()) return cmd_validate();
    } catch (const oprisk::Error& e) {
        std::cerr << "error category=" << e.category() << ": " << e.what()
                  << "\n";
        return exit_code_for(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error category=internal: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
