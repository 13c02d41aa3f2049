#ifndef OPRISK_SIMULATE_HPP
#define OPRISK_SIMULATE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "oprisk/core.hpp"

namespace oprisk {

// Losses at the pseudo-steps 0, -1, ..., -(depth-1) preceding the first
// simulated step. The dynamics needs a window of max t* steps; the default
// all-zero window models processes that start out perfectly functional.
class InitialWindow {
public:
    InitialWindow() : depth_(0), n_processes_(0) {}
    InitialWindow(int depth, int n_processes)
        : depth_(depth), n_processes_(n_processes),
          data_(static_cast<std::size_t>(depth) * n_processes, 0.0) {}

    int depth() const { return depth_; }
    int n_processes() const { return n_processes_; }

    // pseudo_t in (-depth, 0].
    double at(int pseudo_t, int i) const {
        if (pseudo_t > 0 || pseudo_t <= -depth_)
            throw ParameterError("initial window does not cover this step");
        if (i < 0 || i >= n_processes_)
            throw ParameterError("process index out of range");
        return data_[static_cast<std::size_t>(-pseudo_t) * n_processes_ + i];
    }

    void set(int pseudo_t, int i, double value) {
        if (pseudo_t > 0 || pseudo_t <= -depth_)
            throw ParameterError("initial window does not cover this step");
        if (value < 0.0) throw ParameterError("losses must be non-negative");
        data_[static_cast<std::size_t>(-pseudo_t) * n_processes_ + i] = value;
    }

private:
    int depth_;
    int n_processes_;
    std::vector<double> data_;
};

struct SimulationConfig {
    int horizon = 0;          // T
    int n_trajectories = 1;
    std::uint64_t seed = 0;
    InitialWindow initial;    // empty -> all-zero window of depth max t*
};

// Number of nonzero losses of process j in the window [t - t_star, t - 1].
// Steps <= 0 are read from the initial window; asking past it is a
// contract violation.
int count_triggers(const LossTrajectory& traj, int j, int t, int t_star,
                   const InitialWindow& initial = {});

// One application of the equation of motion: l_i(t) = ramp(sum_j J_ij
// C_ij(t) + theta_i + xi_i). `history` must expose losses back to
// t - max t*.
std::vector<double> step(const ModelParams& params, const LossTrajectory& traj,
                         int t, std::span<const double> noise_draws,
                         const InitialWindow& initial = {});

// Full trajectory, deterministic given (seed, trajectory_index). Trigger
// counters are maintained incrementally; bit-equivalence with the direct
// window scan is a test.
LossTrajectory run_trajectory(const ModelParams& params,
                              const SimulationConfig& config,
                              int trajectory_index = 0,
                              const NoiseModel& noise = NoiseModel::exponential());

// z_i(t) = sum of losses of process i up to step t.
double cumulative_loss(const LossTrajectory& traj, int i, int t);

// All of z_i(1..T) in one pass.
std::vector<double> cumulative_series(const LossTrajectory& traj, int i);

} // namespace oprisk

#endif
