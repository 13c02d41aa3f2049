#include "oprisk/altmodel.hpp"

#include <algorithm>
#include <cmath>

#include "oprisk/graph.hpp"

namespace oprisk {

SeveritySpec SeveritySpec::constrained_to_primary() {
    return SeveritySpec{Mode::ConstrainedToPrimary, {}};
}

SeveritySpec SeveritySpec::mean_constrained(Sampler sampler) {
    if (!sampler) throw ParameterError("mean-constrained severity needs a sampler");
    return SeveritySpec{Mode::MeanConstrained, std::move(sampler)};
}

SeveritySpec SeveritySpec::arbitrary(Sampler sampler) {
    if (!sampler) throw ParameterError("arbitrary severity needs a sampler");
    return SeveritySpec{Mode::Arbitrary, std::move(sampler)};
}

ConstrainedSeveritySampler::ConstrainedSeveritySampler(const ModelParams& params,
                                                       int process,
                                                       std::size_t max_terms) {
    params.validate();
    if (process < 0 || process >= params.n_processes)
        throw ParameterError("process index out of range");
    rate_ = params.noise_rates[static_cast<std::size_t>(process)];
    theta_ = params.theta[static_cast<std::size_t>(process)];

    MomentSolver solver(params, max_terms);
    const SubgraphClass& cls = solver.classification(process);
    if (cls.kind == SubgraphKind::HasCausalLoop)
        throw UnsupportedError(
            "constrained severity is undefined under causal loops");
    if (cls.kind == SubgraphKind::Free) {
        free_ = true;
        loss_probability_ = free_loss_probability(theta_, rate_);
        upper_bracket_ = ramp(theta_) + 80.0 / rate_;
        return;
    }
    mixture = solver.argument_mixture(process);
    double p = 0.0;
    double max_arg = theta_;
    for (auto [w, a] : mixture) {
        p += w * free_loss_probability(a, rate_);
        max_arg = std::max(max_arg, a);
    }
    loss_probability_ = p;
    upper_bracket_ = ramp(max_arg) + 80.0 / rate_;
}

double ConstrainedSeveritySampler::survival(double x) const {
    if (x <= 0.0) return 1.0;
    if (free_) {
        double base = ramp(theta_);
        return x <= base ? 1.0 : std::exp(-rate_ * (x - base));
    }
    double s = 0.0;
    for (auto [w, a] : mixture)
        s += w * (x - a <= 0.0 ? 1.0 : std::exp(-rate_ * (x - a)));
    return s / loss_probability_;
}

double ConstrainedSeveritySampler::sample(RngStream& rng) const {
    if (free_) {
        // Excess of the exponential noise over the threshold: memoryless,
        // so exponential again, shifted by ramp(theta) when theta >= 0.
        return ramp(theta_) + rng.next_exponential(rate_);
    }
    const double u = rng.next_uniform();
    double lo = 0.0, hi = upper_bracket_;
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + hi); ++it) {
        double mid = 0.5 * (lo + hi);
        if (survival(mid) > u)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

LossTrajectory simulate_alt(const ModelParams& params,
                            const SeveritySpec& severity,
                            const SimulationConfig& config,
                            int trajectory_index, const NoiseModel& noise) {
    params.validate();
    if (config.horizon < 1) throw ParameterError("horizon must be positive");

    const int n = params.n_processes;

    // Indicator dynamics: reuse the primary engine and keep only the
    // support pattern, so noise streams stay aligned with run_trajectory.
    LossTrajectory primary = run_trajectory(params, config, trajectory_index, noise);

    std::vector<ConstrainedSeveritySampler> constrained;
    if (severity.mode == SeveritySpec::Mode::ConstrainedToPrimary) {
        constrained.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) constrained.emplace_back(params, i);
    } else if (!severity.sampler) {
        throw ParameterError("this severity mode needs a sampler");
    }

    // Severity streams are keyed past the noise streams (processes N..2N-1)
    // so severities are independent of the noise.
    std::vector<RngStream> streams;
    streams.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        streams.emplace_back(config.seed,
                             static_cast<std::uint64_t>(trajectory_index),
                             static_cast<std::uint64_t>(n + i));

    LossTrajectory out(config.horizon, n, TrajectoryOrigin::Simulated);
    switch (severity.mode) {
        case SeveritySpec::Mode::ConstrainedToPrimary:
            out.set_model_tag("alt-constrained");
            break;
        case SeveritySpec::Mode::MeanConstrained:
            out.set_model_tag("alt-mean-constrained");
            break;
        case SeveritySpec::Mode::Arbitrary:
            out.set_model_tag("alt-arbitrary");
            break;
    }

    for (int t = 1; t <= config.horizon; ++t) {
        for (int i = 0; i < n; ++i) {
            if (primary.at(t, i) <= 0.0) continue; // indicator is zero
            double s = severity.mode == SeveritySpec::Mode::ConstrainedToPrimary
                           ? constrained[static_cast<std::size_t>(i)].sample(
                                 streams[static_cast<std::size_t>(i)])
                           : severity.sampler(i, streams[static_cast<std::size_t>(i)]);
            if (!(s > 0.0))
                throw ParameterError("severity samples must be strictly positive");
            out.set(t, i, s);
        }
    }
    return out;
}

std::vector<MeanConstraintVerdict> check_mean_constraint(
    const LossTrajectory& db_alt, const ModelParams& params,
    double tolerance_se) {
    params.validate();
    if (db_alt.n_processes() != params.n_processes)
        throw DataError("database and parameters disagree on the process count");

    MomentSolver solver(params);
    std::vector<MeanConstraintVerdict> verdicts;
    for (int i = 0; i < params.n_processes; ++i) {
        MeanConstraintVerdict v;
        v.process = i;
        double sum = 0.0, sum_sq = 0.0;
        long long count = 0;
        for (int t = 1; t <= db_alt.n_steps(); ++t) {
            double l = db_alt.at(t, i);
            if (l <= 0.0) continue;
            sum += l;
            sum_sq += l * l;
            ++count;
        }
        if (count == 0)
            throw DataError("no nonzero losses: the severity mean is undefined");
        v.n_events = count;
        v.empirical_mean = sum / static_cast<double>(count);
        double var = sum_sq / static_cast<double>(count) -
                     v.empirical_mean * v.empirical_mean;
        v.standard_error = std::sqrt(std::max(0.0, var) / static_cast<double>(count));

        Moments m = solver.moments(i);
        v.expected_mean = m.mean / m.loss_probability;
        v.pass = std::abs(v.empirical_mean - v.expected_mean) <=
                 tolerance_se * v.standard_error;
        verdicts.push_back(v);
    }
    return verdicts;
}

} // namespace oprisk
