#ifndef OPRISK_ALTMODEL_HPP
#define OPRISK_ALTMODEL_HPP

#include <functional>
#include <vector>

#include "oprisk/analytic.hpp"
#include "oprisk/core.hpp"
#include "oprisk/simulate.hpp"

namespace oprisk {

// Frequency-severity dynamics: the loss is severity times the Heaviside of
// the same ramp argument as the primary model.
struct SeveritySpec {
    enum class Mode {
        ConstrainedToPrimary, // severity matched so losses equal the primary
                              // model in distribution; needs full parameters
        MeanConstrained,      // only the severity mean is pinned
        Arbitrary,            // any positive distribution; breaks lambda
                              // estimation and is tagged as such
    };

    using Sampler = std::function<double(int process, RngStream&)>;

    Mode mode = Mode::ConstrainedToPrimary;
    Sampler sampler; // required for MeanConstrained / Arbitrary

    static SeveritySpec constrained_to_primary();
    static SeveritySpec mean_constrained(Sampler sampler);
    static SeveritySpec arbitrary(Sampler sampler);
};

// Severity sampler for one process whose survival function is
// Pr[l_i > x] / Pr[l_i > 0] under the primary model. Free processes get the
// closed form (the excess of the noise over the threshold); other loop-free
// nodes invert the mixture survival numerically.
class ConstrainedSeveritySampler {
public:
    ConstrainedSeveritySampler(const ModelParams& params, int process,
                               std::size_t max_terms = MomentSolver::kDefaultMaxTerms);

    double sample(RngStream& rng) const;
    // Survival Pr[s > x]; exposed for distribution-level tests.
    double survival(double x) const;

private:
    double rate_ = 0.0;
    double theta_ = 0.0;
    bool free_ = false;
    std::vector<std::pair<double, double>> mixture; // (weight, ramp argument)
    double loss_probability_ = 0.0;
    double upper_bracket_ = 0.0;
};

// l̂_i(t) = s_i(t) * n_i(t); the indicator process shares the primary
// model's noise stream, so the support pattern is bit-identical to
// run_trajectory under the same seed.
LossTrajectory simulate_alt(const ModelParams& params,
                            const SeveritySpec& severity,
                            const SimulationConfig& config,
                            int trajectory_index = 0,
                            const NoiseModel& noise = NoiseModel::exponential());

struct MeanConstraintVerdict {
    int process = -1;
    long long n_events = 0;
    double empirical_mean = 0.0;
    double expected_mean = 0.0; // <l> / <n>
    double standard_error = 0.0;
    bool pass = false;
};

// Checks mean(nonzero losses) against <l>/<n> within the given number of
// standard errors; for free processes the expectation is 1/lambda.
std::vector<MeanConstraintVerdict> check_mean_constraint(
    const LossTrajectory& db_alt, const ModelParams& params,
    double tolerance_se = 4.0);

} // namespace oprisk

#endif
