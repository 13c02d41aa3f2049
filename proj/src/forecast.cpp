#include "oprisk/forecast.hpp"

#include <algorithm>
#include <cmath>

#include "oprisk/simulate.hpp"

namespace oprisk {

double ForecastBand::mean_at(double t) const {
    if (!mc_based) return t * mean_l;
    if (grid_t.empty()) throw ParameterError("empty Monte Carlo band");
    // Linear interpolation on the sampled grid.
    if (t <= grid_t.front())
        return grid_mean.front() * (t / grid_t.front());
    for (std::size_t k = 1; k < grid_t.size(); ++k) {
        if (t <= grid_t[k]) {
            double w = (t - grid_t[k - 1]) /
                       static_cast<double>(grid_t[k] - grid_t[k - 1]);
            return grid_mean[k - 1] + w * (grid_mean[k] - grid_mean[k - 1]);
        }
    }
    return grid_mean.back();
}

double ForecastBand::sigma_at(double t) const {
    if (!mc_based) return std::sqrt(t * var_l);
    if (grid_t.empty()) throw ParameterError("empty Monte Carlo band");
    if (t <= grid_t.front())
        return std::sqrt(grid_var.front() * (t / grid_t.front()));
    for (std::size_t k = 1; k < grid_t.size(); ++k) {
        if (t <= grid_t[k]) {
            double w = (t - grid_t[k - 1]) /
                       static_cast<double>(grid_t[k] - grid_t[k - 1]);
            return std::sqrt(grid_var[k - 1] + w * (grid_var[k] - grid_var[k - 1]));
        }
    }
    return std::sqrt(grid_var.back());
}

EstimationResult split_fit(const LossTrajectory& db,
                           const CouplingStructure& structure, double fraction,
                           const EstimationOptions& options) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw ParameterError("fraction must lie in (0, 1]");
    const int keep = static_cast<int>(fraction * db.n_steps());
    return estimate_all(db.truncated(keep), structure, options);
}

std::vector<ForecastBand> forecast_cumulative(const ModelParams& fitted,
                                              int horizon,
                                              const ForecastOptions& options) {
    if (horizon < 1) throw ParameterError("horizon must be positive");
    const int n = fitted.n_processes;
    CouplingGraph graph = build_graph(fitted);

    std::vector<ForecastBand> bands(static_cast<std::size_t>(n));
    if (graph.acyclic) {
        MomentSolver solver(fitted, options.max_terms);
        for (int i = 0; i < n; ++i) {
            Moments m = solver.moments(i);
            bands[static_cast<std::size_t>(i)].process = i;
            bands[static_cast<std::size_t>(i)].mean_l = m.mean;
            bands[static_cast<std::size_t>(i)].var_l = m.variance;
        }
        return bands;
    }

    // Causal loops: no exact solution; sample trajectories instead.
    const int n_traj = std::max(2, options.mc_trajectories);
    std::vector<int> grid;
    for (int k = 1; k <= 20; ++k)
        grid.push_back(std::max(1, horizon * k / 20));
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::vector<std::vector<double>> sum(static_cast<std::size_t>(n),
                                         std::vector<double>(grid.size(), 0.0));
    std::vector<std::vector<double>> sum_sq = sum;
    SimulationConfig config;
    config.horizon = horizon;
    config.n_trajectories = n_traj;
    config.seed = options.mc_seed;
    for (int r = 0; r < n_traj; ++r) {
        LossTrajectory traj = run_trajectory(fitted, config, r);
        for (int i = 0; i < n; ++i) {
            std::vector<double> z = cumulative_series(traj, i);
            for (std::size_t g = 0; g < grid.size(); ++g) {
                double v = z[static_cast<std::size_t>(grid[g] - 1)];
                sum[static_cast<std::size_t>(i)][g] += v;
                sum_sq[static_cast<std::size_t>(i)][g] += v * v;
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        ForecastBand& b = bands[static_cast<std::size_t>(i)];
        b.process = i;
        b.mc_based = true;
        b.grid_t = grid;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double mean = sum[static_cast<std::size_t>(i)][g] / n_traj;
            double var = sum_sq[static_cast<std::size_t>(i)][g] / n_traj - mean * mean;
            b.grid_mean.push_back(mean);
            b.grid_var.push_back(std::max(0.0, var));
        }
        b.mean_l = b.grid_mean.back() / horizon;
        b.var_l = b.grid_var.back() / horizon;
    }
    return bands;
}

ForecastReport run_forecast(const LossTrajectory& db,
                            const CouplingStructure& structure,
                            std::vector<double> fractions,
                            const ForecastOptions& options,
                            const std::optional<ModelParams>& truth) {
    if (fractions.empty()) fractions = {1.0};
    // The f = 1 fit anchors the delta-VaR denominators.
    if (std::find(fractions.begin(), fractions.end(), 1.0) == fractions.end())
        fractions.insert(fractions.begin(), 1.0);
    std::sort(fractions.begin(), fractions.end(), std::greater<>());

    const int T = db.n_steps();
    const int n = db.n_processes();

    ForecastReport report;
    report.horizon = T;
    report.confidence = options.confidence;
    for (int i = 0; i < n; ++i)
        report.z_star_at_horizon.push_back(cumulative_loss(db, i, T));

    for (double f : fractions) {
        FractionFit fit;
        fit.fraction = f;
        fit.estimation = split_fit(db, structure, f, options.estimation);
        ModelParams fitted = fit.estimation.to_params(structure);
        fit.bands = forecast_cumulative(fitted, T, options);
        for (int i = 0; i < n; ++i) {
            const ForecastBand& b = fit.bands[static_cast<std::size_t>(i)];
            double sigma = b.sigma_at(T);
            fit.var_values.push_back(
                gaussian_var(b.mean_at(T), sigma * sigma, options.confidence, i,
                             T).value);
        }
        if (truth) {
            ForecastReport::TruthErrors err;
            for (int i = 0; i < n; ++i) {
                err.theta.push_back(
                    std::abs(fit.estimation.theta[static_cast<std::size_t>(i)] -
                             truth->theta[static_cast<std::size_t>(i)]) /
                    std::abs(truth->theta[static_cast<std::size_t>(i)]));
                err.lambda.push_back(
                    std::abs(fit.estimation.lambda[static_cast<std::size_t>(i)] -
                             truth->noise_rates[static_cast<std::size_t>(i)]) /
                    truth->noise_rates[static_cast<std::size_t>(i)]);
            }
            for (const auto& c : fit.estimation.couplings) {
                double true_j = truth->coupling(c.i, c.j);
                err.coupling.push_back(true_j != 0.0
                                           ? std::abs(c.aggregate - true_j) /
                                                 std::abs(true_j)
                                           : std::abs(c.aggregate));
            }
            report.truth_errors.push_back(std::move(err));
        }
        report.fits.push_back(std::move(fit));
    }

    const FractionFit& anchor = report.fits.front(); // the f = 1 fit
    for (const FractionFit& fit : report.fits) {
        std::vector<double> delta;
        for (int i = 0; i < n; ++i) {
            double v1 = anchor.var_values[static_cast<std::size_t>(i)];
            delta.push_back(std::abs(fit.var_values[static_cast<std::size_t>(i)] - v1) /
                            v1);
        }
        report.delta_var.push_back(std::move(delta));
    }
    return report;
}

double band_overlap_fraction(const ForecastBand& a, const ForecastBand& b,
                             double t) {
    double a_lo = a.mean_at(t) - a.sigma_at(t), a_hi = a.mean_at(t) + a.sigma_at(t);
    double b_lo = b.mean_at(t) - b.sigma_at(t), b_hi = b.mean_at(t) + b.sigma_at(t);
    double inter = std::min(a_hi, b_hi) - std::max(a_lo, b_lo);
    double narrower = std::min(a_hi - a_lo, b_hi - b_lo);
    if (narrower <= 0.0) return 0.0;
    return std::max(0.0, inter) / narrower;
}

} // namespace oprisk
