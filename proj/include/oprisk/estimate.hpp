#ifndef OPRISK_ESTIMATE_HPP
#define OPRISK_ESTIMATE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "oprisk/analytic.hpp"
#include "oprisk/core.hpp"
#include "oprisk/graph.hpp"

namespace oprisk {

// Prior knowledge required by the estimators: which couplings are zero and
// the correlation times of the declared edges. Never the values of J.
struct CouplingStructure {
    int n_processes = 0;
    std::vector<std::vector<int>> parents; // declared in-edges per process
    SquareMatrix<int> corr_times;

    static CouplingStructure from_params(const ModelParams& params);

    void validate() const;
    // Longest look-back window among the declared in-edges of process i.
    int row_max_corr(int i) const;
    CouplingGraph graph() const;
};

// Moving-window event counts. A window at steps [t - t*, t - 1] decides the
// conditioning; the outcome l_i(t) at the following step decides the
// zero-count.
struct EventCounts {
    struct EdgeCounts {
        int i = -1;
        int j = -1;
        int t_star = 0;
        // Indexed by the trigger level c = 1..t_star at position c-1.
        std::vector<long long> n;
        std::vector<long long> n_zero;
    };

    std::vector<long long> n_base;      // per process: C_ij = 0 for all j
    std::vector<long long> n_base_zero; // ... and l_i = 0 at the outcome step
    std::vector<EdgeCounts> edges;

    const EdgeCounts& edge(int i, int j) const;
};

EventCounts scan_events(const LossTrajectory& db,
                        const CouplingStructure& structure);

// --- frequency-level estimators (exact-input oracles feed these directly) ---

// theta = log(1 - zero_frequency) / rate; negative on valid input.
double theta_from_zero_frequency(double zero_frequency, double rate);

// J(c) = (1/c) [ -theta + log(1 - zero_frequency) / rate ].
double coupling_candidate(int level, double theta_hat, double rate,
                          double zero_frequency);

// Free process: lambda = (T / z_T) * (1 - base_zero_frequency).
double lambda_from_free_frequency(double base_zero_frequency, double z_over_t);

// Single free parent: lambda = (T / z_T) * binomial mixture of the
// complement conditional frequencies, weighted by the parent's loss
// probability. complements[c] = 1 - Pr[l_i = 0 | C_ij = c, others 0].
double lambda_from_single_parent_frequencies(
    const std::vector<double>& complements, double parent_loss_probability,
    double z_over_t);

// --- database-level estimators ---

enum class CouplingAggregation { Mean, CountWeighted, Sample };

struct EstimationOptions {
    CouplingAggregation aggregation = CouplingAggregation::Mean;
    long long min_events = 30; // below this a low-confidence flag is raised
    // Supplied noise rates; required when the graph has causal loops,
    // optional otherwise (estimated from the data when absent).
    std::optional<std::vector<double>> lambda_prior;
    std::uint64_t sample_seed = 0; // used by the Sample aggregation
    std::size_t max_terms = MomentSolver::kDefaultMaxTerms;
};

struct CouplingEstimate {
    int i = -1;
    int j = -1;
    std::vector<int> levels;        // usable trigger levels
    std::vector<double> candidates; // one per usable level
    std::vector<long long> level_counts;
    std::vector<int> skipped_levels;
    double aggregate = 0.0;
    bool feasible = false; // t* J < |theta|
    bool low_confidence = false;
};

struct EstimationResult {
    std::vector<double> theta;
    std::vector<double> lambda;
    std::vector<bool> lambda_estimated; // false where the prior was used
    std::vector<bool> theta_low_confidence;
    std::vector<CouplingEstimate> couplings;
    EventCounts counts;
    std::vector<std::string> warnings;

    const CouplingEstimate& coupling(int i, int j) const;
    // Fitted parameter set, ready for simulation or the analytic solver.
    ModelParams to_params(const CouplingStructure& structure) const;
};

double estimate_theta(const EventCounts& counts, int i, double rate);

CouplingEstimate estimate_coupling(const EventCounts& counts, int i, int j,
                                   double theta_hat, double rate,
                                   const EstimationOptions& options = {});

// Full pipeline in topological order: counts -> lambda -> theta -> J.
EstimationResult estimate_all(const LossTrajectory& db,
                              const CouplingStructure& structure,
                              const EstimationOptions& options = {});

} // namespace oprisk

#endif
