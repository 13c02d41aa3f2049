#include "oprisk/core.hpp"

#include <algorithm>
#include <sstream>

namespace oprisk {

ModelParams::ModelParams(int n, SquareMatrix<double> j, std::vector<double> th,
                         std::vector<double> rates, SquareMatrix<int> tstar)
    : n_processes(n),
      coupling(std::move(j)),
      theta(std::move(th)),
      noise_rates(std::move(rates)),
      corr_times(std::move(tstar)) {
    validate();
}

void ModelParams::validate() const {
    if (n_processes < 1) throw ParameterError("need at least one process");
    if (coupling.size() != n_processes || corr_times.size() != n_processes)
        throw ParameterError("coupling and corr_times must be N x N");
    if (static_cast<int>(theta.size()) != n_processes)
        throw ParameterError("theta must have length N");
    if (static_cast<int>(noise_rates.size()) != n_processes)
        throw ParameterError("noise_rates must have length N");
    for (double rate : noise_rates)
        if (!(rate > 0.0)) throw ParameterError("all noise rates must be positive");
    for (int i = 0; i < n_processes; ++i) {
        for (int j = 0; j < n_processes; ++j) {
            if (coupling(i, j) != 0.0) {
                if (corr_times(i, j) < 1) {
                    std::ostringstream os;
                    os << "corr_times(" << i << "," << j
                       << ") must be >= 1 where the coupling is nonzero";
                    throw ParameterError(os.str());
                }
            } else if (corr_times(i, j) != 0) {
                std::ostringstream os;
                os << "corr_times(" << i << "," << j
                   << ") must be stored as 0 where the coupling is zero";
                throw ParameterError(os.str());
            }
        }
    }
}

int ModelParams::max_corr_time() const {
    int m = 0;
    for (int i = 0; i < n_processes; ++i)
        for (int j = 0; j < n_processes; ++j)
            if (corr_times(i, j) > m) m = corr_times(i, j);
    return m;
}

LossTrajectory::LossTrajectory(int n_steps, int n_processes,
                               TrajectoryOrigin origin)
    : n_steps_(n_steps), n_processes_(n_processes), origin_(origin) {
    if (n_steps < 0) throw ParameterError("trajectory length must be non-negative");
    if (n_processes < 1) throw ParameterError("need at least one process");
    losses_.assign(static_cast<std::size_t>(n_steps) * n_processes, 0.0);
}

std::size_t LossTrajectory::idx(int t, int i) const {
    if (t < 1 || t > n_steps_)
        throw ParameterError("time step out of range");
    if (i < 0 || i >= n_processes_)
        throw ParameterError("process index out of range");
    return static_cast<std::size_t>(t - 1) * n_processes_ + i;
}

void LossTrajectory::set(int t, int i, double value) {
    if (value < 0.0) throw ParameterError("losses must be non-negative");
    losses_[idx(t, i)] = value;
}

LossTrajectory LossTrajectory::truncated(int keep) const {
    if (keep < 0 || keep > n_steps_)
        throw ParameterError("truncation length out of range");
    LossTrajectory out(keep, n_processes_, origin_);
    out.model_tag_ = model_tag_;
    std::copy(losses_.begin(),
              losses_.begin() + static_cast<std::size_t>(keep) * n_processes_,
              out.losses_.begin());
    return out;
}

} // namespace oprisk
