#ifndef OPRISK_FORECAST_HPP
#define OPRISK_FORECAST_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "oprisk/analytic.hpp"
#include "oprisk/core.hpp"
#include "oprisk/estimate.hpp"

namespace oprisk {

struct ForecastOptions {
    double confidence = 0.99865; // the 3-sigma level; 0.999 available via flag
    int mc_trajectories = 10000; // used only by the causal-loop fallback
    std::uint64_t mc_seed = 20120517;
    EstimationOptions estimation;
    std::size_t max_terms = MomentSolver::kDefaultMaxTerms;
};

// Cumulative-loss band of one process under a fitted parameter set.
// Analytic bands are linear in t (mean) and in t (variance); the Monte
// Carlo fallback stores a sampled grid instead.
struct ForecastBand {
    int process = -1;
    bool mc_based = false;
    double mean_l = 0.0;
    double var_l = 0.0;
    std::vector<int> grid_t; // MC fallback only
    std::vector<double> grid_mean;
    std::vector<double> grid_var;

    double mean_at(double t) const;
    double sigma_at(double t) const;
};

struct FractionFit {
    double fraction = 1.0;
    EstimationResult estimation;
    std::vector<ForecastBand> bands;
    std::vector<double> var_values; // per process, at the report's horizon
};

struct ForecastReport {
    int horizon = 0;
    double confidence = 0.0;
    std::vector<double> z_star_at_horizon;  // actual cumulative losses
    std::vector<FractionFit> fits;          // one per requested fraction
    // delta_var[f][i] = |VaR^{f} - VaR^{f=1}| / VaR^{f=1}, the f=1 fit
    // fixing the denominator.
    std::vector<std::vector<double>> delta_var;
    // Relative parameter errors vs the generating truth, when known:
    // per fit, theta errors then lambda errors per process and one entry
    // per declared edge.
    struct TruthErrors {
        std::vector<double> theta;
        std::vector<double> lambda;
        std::vector<double> coupling; // aligned with the fit's coupling list
    };
    std::vector<TruthErrors> truth_errors; // empty when truth unknown
};

// Estimation on the first floor(f * T) steps of the database.
EstimationResult split_fit(const LossTrajectory& db,
                           const CouplingStructure& structure, double fraction,
                           const EstimationOptions& options = {});

// Bands over t in [1, horizon] under the fitted parameters; falls back to
// Monte Carlo when the fitted graph has causal loops.
std::vector<ForecastBand> forecast_cumulative(const ModelParams& fitted,
                                              int horizon,
                                              const ForecastOptions& options = {});

// Full protocol: fit each fraction, forecast on the full horizon, compute
// VaR and the pairwise deltas against the f = 1 fit.
ForecastReport run_forecast(const LossTrajectory& db,
                            const CouplingStructure& structure,
                            std::vector<double> fractions,
                            const ForecastOptions& options = {},
                            const std::optional<ModelParams>& truth = std::nullopt);

// Intersection width of the two +-1 sigma bands at time t, as a fraction
// of the narrower band width.
double band_overlap_fraction(const ForecastBand& a, const ForecastBand& b,
                             double t);

} // namespace oprisk

#endif
