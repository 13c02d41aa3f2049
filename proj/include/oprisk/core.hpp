#ifndef OPRISK_CORE_HPP
#define OPRISK_CORE_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "oprisk/errors.hpp"

namespace oprisk {

// Ramp nonlinearity of the equation of motion: x for x > 0, else 0.
inline double ramp(double x) { return x > 0.0 ? x : 0.0; }

// Pr[xi > threshold] for an exponential noise with the given rate.
// Noise has positive support, so any non-positive threshold gives 1.
inline double noise_tail_probability(double rate, double threshold) {
    if (rate <= 0.0) throw ParameterError("noise rate must be positive");
    return threshold > 0.0 ? std::exp(-rate * threshold) : 1.0;
}

// Counter-based random stream. Each (master seed, trajectory, process)
// triple names an independent substream, so parallel trajectory workers
// produce identical draws regardless of scheduling order. The generator
// is splitmix64 over a keyed starting state.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t trajectory,
              std::uint64_t process)
        : state_(derive_key(master_seed, trajectory, process)) {}

    explicit RngStream(std::uint64_t raw_state) : state_(raw_state) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in the open interval (0, 1).
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Exponential draw with the given rate; strictly positive.
    double next_exponential(double rate) {
        if (rate <= 0.0) throw ParameterError("noise rate must be positive");
        return -std::log(next_uniform()) / rate;
    }

private:
    static std::uint64_t derive_key(std::uint64_t master, std::uint64_t traj,
                                    std::uint64_t proc) {
        std::uint64_t k = mix(master ^ 0x8A5CD789635D2DFFULL);
        k = mix(k ^ (0x9E3779B97F4A7C15ULL * (traj + 1)));
        k = mix(k ^ (0xD1B54A32D192ED03ULL * (proc + 1)));
        return k;
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDULL;
        z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ULL;
        return z ^ (z >> 33);
    }

    std::uint64_t state_;
};

// Draw from density rate * exp(-rate * x) on (0, inf).
inline double sample_noise(double rate, RngStream& stream) {
    return stream.next_exponential(rate);
}

// Noise abstraction. The exponential is the default and the only kind with
// analytic support; anything else is Monte-Carlo-only and the analytic
// solver refuses it.
class NoiseModel {
public:
    using Sampler = std::function<double(double rate, RngStream&)>;

    static NoiseModel exponential() { return NoiseModel{}; }

    static NoiseModel custom(std::string name, Sampler sampler) {
        NoiseModel m;
        m.name_ = std::move(name);
        m.sampler_ = std::move(sampler);
        return m;
    }

    bool is_exponential() const { return !sampler_; }
    const std::string& name() const { return name_; }

    double sample(double rate, RngStream& stream) const {
        double x = sampler_ ? sampler_(rate, stream) : sample_noise(rate, stream);
        if (!(x > 0.0))
            throw ParameterError("noise sample must be strictly positive");
        return x;
    }

private:
    NoiseModel() : name_("exponential") {}

    std::string name_;
    Sampler sampler_; // empty for the exponential default
};

// Square matrix stored row-major; entry (i, j) is the influence of
// process j on process i.
template <typename T>
class SquareMatrix {
public:
    SquareMatrix() : n_(0) {}
    explicit SquareMatrix(int n, T fill = T{})
        : n_(n), data_(static_cast<std::size_t>(n) * n, fill) {}

    int size() const { return n_; }
    T& operator()(int i, int j) { return data_[idx(i, j)]; }
    const T& operator()(int i, int j) const { return data_[idx(i, j)]; }

    bool operator==(const SquareMatrix&) const = default;

private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(i) * n_ + j;
    }

    int n_;
    std::vector<T> data_;
};

// Full parameter set of the model. Currency quantities are doubles; the
// correlation times t* are integer step counts, ignored (stored as 0)
// wherever the corresponding coupling is zero.
struct ModelParams {
    int n_processes = 0;
    SquareMatrix<double> coupling;   // J
    std::vector<double> theta;       // field
    std::vector<double> noise_rates; // lambda
    SquareMatrix<int> corr_times;    // t*

    ModelParams() = default;
    ModelParams(int n, SquareMatrix<double> j, std::vector<double> th,
                std::vector<double> rates, SquareMatrix<int> tstar);

    // Throws ParameterError on any invariant violation.
    void validate() const;

    int max_corr_time() const;
};

enum class TrajectoryOrigin { Simulated, Ingested };

// Rectangular T x N grid of non-negative losses; zeros are explicit.
class LossTrajectory {
public:
    LossTrajectory() : n_steps_(0), n_processes_(0) {}
    LossTrajectory(int n_steps, int n_processes,
                   TrajectoryOrigin origin = TrajectoryOrigin::Simulated);

    int n_steps() const { return n_steps_; }
    int n_processes() const { return n_processes_; }
    TrajectoryOrigin origin() const { return origin_; }
    void set_origin(TrajectoryOrigin o) { origin_ = o; }

    const std::string& model_tag() const { return model_tag_; }
    void set_model_tag(std::string tag) { model_tag_ = std::move(tag); }

    // Time steps are 1-based, matching the dynamics.
    double at(int t, int i) const { return losses_[idx(t, i)]; }
    void set(int t, int i, double value);

    // First `keep` steps as a new trajectory.
    LossTrajectory truncated(int keep) const;

private:
    std::size_t idx(int t, int i) const;

    int n_steps_;
    int n_processes_;
    TrajectoryOrigin origin_ = TrajectoryOrigin::Simulated;
    std::string model_tag_ = "primary";
    std::vector<double> losses_;
};

} // namespace oprisk

#endif
