#ifndef OPRISK_ANALYTIC_HPP
#define OPRISK_ANALYTIC_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "oprisk/core.hpp"
#include "oprisk/graph.hpp"

namespace oprisk {

// m^(n)F(x): n-th moment of ramp(x + xi) over exponential noise with the
// given rate. Orders 1 and 2 are supported.
double free_moment(int order, double shift, double rate);

// p^F(x) = Pr[ramp(x + xi) > 0] for exponential noise.
double free_loss_probability(double shift, double rate);

// Noise-specific ingredients of the mixture formulas. The analytic results
// depend on the noise distribution only through these three functions, so
// swapping them generalizes every formula to a different noise.
struct FreeKernel {
    std::function<double(double)> m1; // m^F(x)
    std::function<double(double)> m2; // m^(2)F(x)
    std::function<double(double)> p;  // p^F(x)
};

FreeKernel exponential_kernel(double rate);

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    double loss_probability = 0.0;
    std::string computed_via;
};

// Exact per-step moments of l_i for causal-loop-free graphs. The general
// configuration enumeration is the single source of truth; the closed-form
// classes are fast paths validated against it.
class MomentSolver {
public:
    static constexpr std::size_t kDefaultMaxTerms = std::size_t{1} << 24;

    explicit MomentSolver(const ModelParams& params,
                          std::size_t max_terms = kDefaultMaxTerms);

    // Generalization hook: one kernel per process replaces the exponential
    // closed forms in every mixture formula.
    MomentSolver(const ModelParams& params, std::vector<FreeKernel> kernels,
                 std::size_t max_terms = kDefaultMaxTerms);

    const CouplingGraph& graph() const { return graph_; }
    const SubgraphClass& classification(int i) const;

    // Dispatch on the subgraph class; throws UnsupportedError on loops.
    Moments moments(int i) const;

    Moments moments_free(int i) const;
    Moments moments_single_parent(int i) const;
    Moments moments_chain(int i) const;
    Moments moments_multi_parent(int i) const;
    Moments moments_general(int i) const;

    // Weighted mixture of (probability, ramp-argument) pairs describing
    // l_i's distribution; used by the severity sampler.
    std::vector<std::pair<double, double>> argument_mixture(int i) const;

private:
    struct Cone;
    Cone build_cone(int i) const;

    ModelParams params_;
    CouplingGraph graph_;
    std::vector<SubgraphClass> classes_;
    std::vector<FreeKernel> kernels_;
    std::size_t max_terms_;
};

// Binomial weights Binom(n, c) p^c (1-p)^(n-c), computed in log space.
// They sum to 1 up to rounding.
std::vector<double> binomial_weights(int n, double p);

struct CumulativeMoments {
    double mean_z = 0.0;
    double var_z = 0.0;
};

// Eq.-of-motion losses are i.i.d. in time on loop-free graphs, so the
// cumulative moments are linear in t.
CumulativeMoments cumulative_moments(double mean_l, double var_l, double t);

struct VarEstimate {
    int process = -1;
    double horizon = 0.0;
    double confidence = 0.0;
    double value = 0.0;
    std::string method = "gaussian-quantile";
};

// Inverse standard normal CDF.
double gaussian_quantile(double p);

VarEstimate gaussian_var(double mean_z, double var_z, double confidence,
                         int process = -1, double horizon = 0.0);

struct MomentReport {
    struct Entry {
        int process = -1;
        double mean_l = 0.0;
        double var_l = 0.0;
        double loss_probability = 0.0;
        double mean_z = 0.0;
        double var_z = 0.0;
        double var_value = 0.0; // VaR of z at the report's confidence
        std::string computed_via;
    };
    double horizon = 0.0;
    double confidence = 0.0;
    std::vector<Entry> entries;
};

MomentReport solve_model(const ModelParams& params, double horizon,
                         double confidence,
                         std::size_t max_terms = MomentSolver::kDefaultMaxTerms);

} // namespace oprisk

#endif
