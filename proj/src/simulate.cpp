#include "oprisk/simulate.hpp"

#include <algorithm>
#include <sstream>

namespace oprisk {

namespace {

double history_at(const LossTrajectory& traj, const InitialWindow& initial,
                  int t, int j) {
    if (t >= 1) return traj.at(t, j);
    if (initial.depth() == 0 || t <= -initial.depth()) {
        std::ostringstream os;
        os << "insufficient history: step " << t << " not covered";
        throw ParameterError(os.str());
    }
    return initial.at(t, j);
}

} // namespace

int count_triggers(const LossTrajectory& traj, int j, int t, int t_star,
                   const InitialWindow& initial) {
    if (t < 1) throw ParameterError("time step must be >= 1");
    if (t_star < 0) throw ParameterError("t_star must be non-negative");
    int count = 0;
    for (int s = 1; s <= t_star; ++s)
        if (history_at(traj, initial, t - s, j) > 0.0) ++count;
    return count;
}

std::vector<double> step(const ModelParams& params, const LossTrajectory& traj,
                         int t, std::span<const double> noise_draws,
                         const InitialWindow& initial) {
    params.validate();
    const int n = params.n_processes;
    if (static_cast<int>(noise_draws.size()) != n)
        throw ParameterError("need one noise draw per process");
    for (double xi : noise_draws)
        if (!(xi > 0.0)) throw ParameterError("noise draws must be strictly positive");

    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        double arg = params.theta[i] + noise_draws[i];
        for (int j = 0; j < n; ++j) {
            if (params.coupling(i, j) == 0.0) continue;
            arg += params.coupling(i, j) *
                   count_triggers(traj, j, t, params.corr_times(i, j), initial);
        }
        out[i] = ramp(arg);
    }
    return out;
}

LossTrajectory run_trajectory(const ModelParams& params,
                              const SimulationConfig& config,
                              int trajectory_index, const NoiseModel& noise) {
    params.validate();
    if (config.horizon < 1) throw ParameterError("horizon must be positive");
    if (trajectory_index < 0 || trajectory_index >= config.n_trajectories)
        throw ParameterError("trajectory index out of range");

    const int n = params.n_processes;
    const int window = params.max_corr_time();

    InitialWindow initial = config.initial;
    if (initial.depth() == 0 && initial.n_processes() == 0)
        initial = InitialWindow(window, n);
    if (initial.depth() != window || initial.n_processes() != n)
        throw ParameterError("initial window must cover max t* steps for every process");

    const int T = config.horizon;
    LossTrajectory traj(T, n, TrajectoryOrigin::Simulated);
    traj.set_model_tag(noise.is_exponential() ? "primary"
                                              : "primary-" + noise.name());

    std::vector<RngStream> streams;
    streams.reserve(n);
    for (int i = 0; i < n; ++i)
        streams.emplace_back(config.seed,
                             static_cast<std::uint64_t>(trajectory_index),
                             static_cast<std::uint64_t>(i));

    // Indicator history with `window` pseudo-steps in front; index t maps to
    // slot t + window - 1.
    std::vector<std::vector<std::uint8_t>> indicator(
        n, std::vector<std::uint8_t>(static_cast<std::size_t>(T + window), 0));
    for (int j = 0; j < n; ++j)
        for (int s = 0; s < window; ++s)
            indicator[j][s] = initial.at(-(window - 1 - s), j) > 0.0 ? 1 : 0;

    // Running trigger counters per nonzero edge, seeded from the window.
    struct Edge {
        int i, j, t_star;
        double j_value;
    };
    std::vector<Edge> edges;
    std::vector<int> counter; // parallel to edges
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (params.coupling(i, j) == 0.0) continue;
            edges.push_back({i, j, params.corr_times(i, j), params.coupling(i, j)});
            int c = 0;
            for (int s = 1; s <= params.corr_times(i, j); ++s)
                c += indicator[j][static_cast<std::size_t>(window - s)];
            counter.push_back(c);
        }
    }

    std::vector<double> coupling_term(n);
    for (int t = 1; t <= T; ++t) {
        std::fill(coupling_term.begin(), coupling_term.end(), 0.0);
        for (std::size_t e = 0; e < edges.size(); ++e)
            coupling_term[edges[e].i] += edges[e].j_value * counter[e];

        for (int i = 0; i < n; ++i) {
            double xi = noise.sample(params.noise_rates[i], streams[i]);
            double l = ramp(coupling_term[i] + params.theta[i] + xi);
            traj.set(t, i, l);
            indicator[i][static_cast<std::size_t>(t + window - 1)] = l > 0.0 ? 1 : 0;
        }

        // Slide every window forward past step t.
        for (std::size_t e = 0; e < edges.size(); ++e) {
            const Edge& ed = edges[e];
            counter[e] += indicator[ed.j][static_cast<std::size_t>(t + window - 1)];
            counter[e] -= indicator[ed.j][static_cast<std::size_t>(t + window - 1 - ed.t_star)];
        }
    }
    return traj;
}

double cumulative_loss(const LossTrajectory& traj, int i, int t) {
    if (t < 0 || t > traj.n_steps())
        throw ParameterError("time step out of range");
    double z = 0.0;
    for (int s = 1; s <= t; ++s) z += traj.at(s, i);
    return z;
}

std::vector<double> cumulative_series(const LossTrajectory& traj, int i) {
    std::vector<double> z(static_cast<std::size_t>(traj.n_steps()));
    double acc = 0.0;
    for (int t = 1; t <= traj.n_steps(); ++t) {
        acc += traj.at(t, i);
        z[static_cast<std::size_t>(t - 1)] = acc;
    }
    return z;
}

} // namespace oprisk
