#include "oprisk/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oprisk/simulate.hpp"

namespace oprisk {

CouplingStructure CouplingStructure::from_params(const ModelParams& params) {
    params.validate();
    CouplingStructure s;
    s.n_processes = params.n_processes;
    s.parents.assign(static_cast<std::size_t>(params.n_processes), {});
    s.corr_times = params.corr_times;
    for (int i = 0; i < params.n_processes; ++i)
        for (int j = 0; j < params.n_processes; ++j)
            if (params.coupling(i, j) != 0.0)
                s.parents[static_cast<std::size_t>(i)].push_back(j);
    return s;
}

void CouplingStructure::validate() const {
    if (n_processes < 1) throw ParameterError("need at least one process");
    if (static_cast<int>(parents.size()) != n_processes)
        throw ParameterError("parent list must have one entry per process");
    if (corr_times.size() != n_processes)
        throw ParameterError("corr_times must be N x N");
    for (int i = 0; i < n_processes; ++i) {
        for (int j : parents[static_cast<std::size_t>(i)]) {
            if (j < 0 || j >= n_processes)
                throw ParameterError("edge endpoint out of range");
            if (corr_times(i, j) < 1) {
                std::ostringstream os;
                os << "declared edge (" << i << "," << j
                   << ") needs a correlation time >= 1";
                throw ParameterError(os.str());
            }
        }
    }
}

int CouplingStructure::row_max_corr(int i) const {
    int m = 0;
    for (int j : parents[static_cast<std::size_t>(i)])
        m = std::max(m, corr_times(i, j));
    return m;
}

CouplingGraph CouplingStructure::graph() const {
    validate();
    return build_graph_from_pattern(n_processes, parents);
}

const EventCounts::EdgeCounts& EventCounts::edge(int i, int j) const {
    for (const auto& e : edges)
        if (e.i == i && e.j == j) return e;
    throw ParameterError("no counts for this edge");
}

EventCounts scan_events(const LossTrajectory& db,
                        const CouplingStructure& structure) {
    structure.validate();
    if (db.n_processes() != structure.n_processes)
        throw DataError("database and structure disagree on the process count");

    const int n = structure.n_processes;
    const int T = db.n_steps();
    int max_t_star = 0;
    for (int i = 0; i < n; ++i) max_t_star = std::max(max_t_star, structure.row_max_corr(i));
    if (T <= max_t_star)
        throw DataError("database shorter than the longest window plus one step");

    EventCounts counts;
    counts.n_base.assign(static_cast<std::size_t>(n), 0);
    counts.n_base_zero.assign(static_cast<std::size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        for (int j : structure.parents[static_cast<std::size_t>(i)]) {
            EventCounts::EdgeCounts e;
            e.i = i;
            e.j = j;
            e.t_star = structure.corr_times(i, j);
            e.n.assign(static_cast<std::size_t>(e.t_star), 0);
            e.n_zero.assign(static_cast<std::size_t>(e.t_star), 0);
            counts.edges.push_back(std::move(e));
        }
    }

    std::vector<std::vector<std::size_t>> row_edges(static_cast<std::size_t>(n));
    for (std::size_t e = 0; e < counts.edges.size(); ++e)
        row_edges[static_cast<std::size_t>(counts.edges[e].i)].push_back(e);

    for (int i = 0; i < n; ++i) {
        // The first full window ends just before step row_max + 1; the
        // counting starts from the first time step of the database.
        const int start = structure.row_max_corr(i) + 1;
        for (int t = start; t <= T; ++t) {
            int nonzero_edges = 0;
            std::size_t the_edge = 0;
            int the_level = 0;
            for (std::size_t e : row_edges[static_cast<std::size_t>(i)]) {
                int c = 0;
                const int t_star = counts.edges[e].t_star;
                for (int s = 1; s <= t_star; ++s)
                    if (db.at(t - s, counts.edges[e].j) > 0.0) ++c;
                if (c > 0) {
                    ++nonzero_edges;
                    the_edge = e;
                    the_level = c;
                }
            }
            const bool zero_outcome = db.at(t, i) == 0.0;
            if (nonzero_edges == 0) {
                ++counts.n_base[static_cast<std::size_t>(i)];
                if (zero_outcome) ++counts.n_base_zero[static_cast<std::size_t>(i)];
            } else if (nonzero_edges == 1) {
                auto& e = counts.edges[the_edge];
                ++e.n[static_cast<std::size_t>(the_level - 1)];
                if (zero_outcome) ++e.n_zero[static_cast<std::size_t>(the_level - 1)];
            }
        }
    }
    return counts;
}

double theta_from_zero_frequency(double zero_frequency, double rate) {
    if (rate <= 0.0) throw ParameterError("noise rate must be positive");
    if (zero_frequency >= 1.0)
        throw DataError("no losses ever observed: theta estimate diverges");
    if (zero_frequency <= 0.0)
        throw UnsupportedError(
            "losses at every step: the inversion cannot estimate theta >= 0");
    return std::log1p(-zero_frequency) / rate;
}

double coupling_candidate(int level, double theta_hat, double rate,
                          double zero_frequency) {
    if (level < 1) throw ParameterError("trigger level must be >= 1");
    if (rate <= 0.0) throw ParameterError("noise rate must be positive");
    if (zero_frequency <= 0.0 || zero_frequency >= 1.0)
        throw DataError("conditional zero-frequency must lie strictly in (0,1)");
    return (-theta_hat + std::log1p(-zero_frequency) / rate) / level;
}

double lambda_from_free_frequency(double base_zero_frequency, double z_over_t) {
    if (z_over_t <= 0.0)
        throw DataError("cumulative loss is zero: lambda estimate diverges");
    return (1.0 - base_zero_frequency) / z_over_t;
}

double lambda_from_single_parent_frequencies(
    const std::vector<double>& complements, double parent_loss_probability,
    double z_over_t) {
    if (z_over_t <= 0.0)
        throw DataError("cumulative loss is zero: lambda estimate diverges");
    const int t_star = static_cast<int>(complements.size()) - 1;
    if (t_star < 0) throw ParameterError("need complements for c = 0..t*");
    std::vector<double> w = binomial_weights(t_star, parent_loss_probability);
    double acc = 0.0;
    for (int c = 0; c <= t_star; ++c)
        acc += complements[static_cast<std::size_t>(c)] * w[static_cast<std::size_t>(c)];
    return acc / z_over_t;
}

double estimate_theta(const EventCounts& counts, int i, double rate) {
    if (i < 0 || i >= static_cast<int>(counts.n_base.size()))
        throw ParameterError("process index out of range");
    const long long n = counts.n_base[static_cast<std::size_t>(i)];
    if (n == 0)
        throw InsufficientEventsError(
            "no base events (all windows carry triggers)");
    const double freq =
        static_cast<double>(counts.n_base_zero[static_cast<std::size_t>(i)]) /
        static_cast<double>(n);
    return theta_from_zero_frequency(freq, rate);
}

CouplingEstimate estimate_coupling(const EventCounts& counts, int i, int j,
                                   double theta_hat, double rate,
                                   const EstimationOptions& options) {
    const auto& e = counts.edge(i, j);
    CouplingEstimate out;
    out.i = i;
    out.j = j;
    for (int c = 1; c <= e.t_star; ++c) {
        const long long n_c = e.n[static_cast<std::size_t>(c - 1)];
        if (n_c == 0) {
            out.skipped_levels.push_back(c);
            continue;
        }
        const double freq =
            static_cast<double>(e.n_zero[static_cast<std::size_t>(c - 1)]) /
            static_cast<double>(n_c);
        if (freq <= 0.0 || freq >= 1.0) {
            out.skipped_levels.push_back(c);
            continue;
        }
        out.levels.push_back(c);
        out.level_counts.push_back(n_c);
        out.candidates.push_back(coupling_candidate(c, theta_hat, rate, freq));
        if (n_c < options.min_events) out.low_confidence = true;
    }
    if (out.candidates.empty())
        throw InsufficientEventsError(
            "no usable trigger levels for this coupling");

    switch (options.aggregation) {
        case CouplingAggregation::Mean: {
            double sum = 0.0;
            for (double v : out.candidates) sum += v;
            out.aggregate = sum / static_cast<double>(out.candidates.size());
            break;
        }
        case CouplingAggregation::CountWeighted: {
            double sum = 0.0, wsum = 0.0;
            for (std::size_t k = 0; k < out.candidates.size(); ++k) {
                sum += out.candidates[k] * static_cast<double>(out.level_counts[k]);
                wsum += static_cast<double>(out.level_counts[k]);
            }
            out.aggregate = sum / wsum;
            break;
        }
        case CouplingAggregation::Sample: {
            RngStream rng(options.sample_seed, 0x5A11,
                          static_cast<std::uint64_t>(i) * 4096 + j);
            std::size_t pick = static_cast<std::size_t>(
                rng.next_uniform() * static_cast<double>(out.candidates.size()));
            pick = std::min(pick, out.candidates.size() - 1);
            out.aggregate = out.candidates[pick];
            break;
        }
    }
    out.feasible = e.t_star * out.aggregate < -theta_hat;
    return out;
}

const CouplingEstimate& EstimationResult::coupling(int i, int j) const {
    for (const auto& c : couplings)
        if (c.i == i && c.j == j) return c;
    throw ParameterError("no estimate for this edge");
}

ModelParams EstimationResult::to_params(const CouplingStructure& structure) const {
    const int n = structure.n_processes;
    SquareMatrix<double> j_hat(n, 0.0);
    for (const auto& c : couplings) j_hat(c.i, c.j) = c.aggregate;
    return ModelParams(n, j_hat, theta, lambda, structure.corr_times);
}

namespace {

// The fitted theta and J of a node both scale as 1/lambda, so the exact
// mean of l_i depends on lambda_i only through an overall 1/lambda_i
// factor. Matching the self-averaged z_i(T)/T is therefore a monotone 1-D
// problem; bisect in log space.
double solve_lambda_general(
    const CouplingStructure& structure, int i,
    const std::vector<double>& theta_fitted, const std::vector<double>& lambda_fitted,
    const std::vector<bool>& have_fit,
    const EstimationOptions& options, double log_complement_base,
    const std::vector<std::vector<double>>& edge_log_terms, double z_over_t) {
    if (z_over_t <= 0.0)
        throw DataError("cumulative loss is zero: lambda estimate diverges");

    const int n = structure.n_processes;
    auto mean_at = [&](double lambda_i) {
        SquareMatrix<double> j_hat(n, 0.0);
        std::vector<double> theta(static_cast<std::size_t>(n), -1.0);
        std::vector<double> lambda(static_cast<std::size_t>(n), 1.0);
        for (int u = 0; u < n; ++u) {
            if (u == i || !have_fit[static_cast<std::size_t>(u)]) continue;
            theta[static_cast<std::size_t>(u)] = theta_fitted[static_cast<std::size_t>(u)];
            lambda[static_cast<std::size_t>(u)] = lambda_fitted[static_cast<std::size_t>(u)];
        }
        lambda[static_cast<std::size_t>(i)] = lambda_i;
        theta[static_cast<std::size_t>(i)] = log_complement_base / lambda_i;
        // Couplings of fitted ancestors.
        for (const auto& c : edge_log_terms) {
            // encoded as {i, j, lambda*J}
            int ei = static_cast<int>(c[0]);
            int ej = static_cast<int>(c[1]);
            double scaled = c[2];
            if (ei == i)
                j_hat(ei, ej) = scaled / lambda_i;
            else
                j_hat(ei, ej) = scaled; // already an absolute value
        }
        SquareMatrix<int> t_star(n, 0);
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v)
                if (j_hat(u, v) != 0.0) t_star(u, v) = structure.corr_times(u, v);
        ModelParams p(n, j_hat, theta, lambda, t_star);
        MomentSolver solver(p, options.max_terms);
        return solver.moments_general(i).mean;
    };

    double lo = 1e-12, hi = 1e12;
    // mean is decreasing in lambda; make sure the target is bracketed.
    if (mean_at(lo) < z_over_t || mean_at(hi) > z_over_t)
        throw DataError("lambda solve target outside the bracketed range");
    while (hi / lo - 1.0 > 1e-13) {
        double mid = std::sqrt(lo * hi);
        if (mean_at(mid) > z_over_t)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

} // namespace

EstimationResult estimate_all(const LossTrajectory& db,
                              const CouplingStructure& structure,
                              const EstimationOptions& options) {
    structure.validate();
    CouplingGraph graph = structure.graph();
    const int n = structure.n_processes;
    const int T = db.n_steps();

    if (options.lambda_prior &&
        static_cast<int>(options.lambda_prior->size()) != n)
        throw ParameterError("lambda prior must have length N");
    if (!graph.acyclic && !options.lambda_prior)
        throw UnsupportedError(
            "the coupling graph has causal loops: lambda cannot be estimated "
            "from data and must be supplied");
    // Arbitrary severities break the link between loss sizes and the noise
    // rate; such databases support frequency-only estimation at best.
    if (db.model_tag() == "alt-arbitrary" && !options.lambda_prior)
        throw UnsupportedError(
            "database was generated with arbitrary severities: lambda cannot "
            "be estimated from the amounts and must be supplied");

    EstimationResult result;
    result.counts = scan_events(db, structure);
    result.theta.assign(static_cast<std::size_t>(n), 0.0);
    result.lambda.assign(static_cast<std::size_t>(n), 0.0);
    result.lambda_estimated.assign(static_cast<std::size_t>(n), false);
    result.theta_low_confidence.assign(static_cast<std::size_t>(n), false);

    std::vector<int> order;
    if (graph.acyclic)
        order = graph.topo_order;
    else
        for (int i = 0; i < n; ++i) order.push_back(i);

    std::vector<bool> have_fit(static_cast<std::size_t>(n), false);

    for (int i : order) {
        const auto& parents = structure.parents[static_cast<std::size_t>(i)];
        const long long n_base = result.counts.n_base[static_cast<std::size_t>(i)];
        if (n_base == 0)
            throw InsufficientEventsError("no base events for a process");
        const double freq_base =
            static_cast<double>(result.counts.n_base_zero[static_cast<std::size_t>(i)]) /
            static_cast<double>(n_base);
        if (n_base < options.min_events) {
            result.theta_low_confidence[static_cast<std::size_t>(i)] = true;
            std::ostringstream os;
            os << "process " << i << ": only " << n_base
               << " base events; theta/lambda estimates are low-confidence";
            result.warnings.push_back(os.str());
        }

        const double z_over_t = cumulative_loss(db, i, T) / static_cast<double>(T);

        // lambda first: the theta and J inversions need it, while Eq.-style
        // lambda estimators use only frequencies and z(T).
        double lambda_i;
        if (options.lambda_prior) {
            lambda_i = (*options.lambda_prior)[static_cast<std::size_t>(i)];
            if (lambda_i <= 0.0) throw ParameterError("lambda prior must be positive");
        } else {
            SubgraphClass cls = classify_subgraph(graph, i);
            if (cls.kind == SubgraphKind::Free) {
                lambda_i = lambda_from_free_frequency(freq_base, z_over_t);
            } else {
                // Any parented node: solve for the lambda under which the
                // exact mean of the fully fitted model reproduces the
                // self-averaged z_i/T. On exact frequencies this coincides
                // with the mixture inversion of the single-parent formula;
                // on sampled data it additionally keeps the forecast mean
                // pinned to the observed average even when the per-level
                // coupling candidates are noisy, which the plain mixture
                // inversion does not.
                const double log_base = std::log1p(-freq_base);
                std::vector<std::vector<double>> edge_terms;
                for (int u = 0; u < n; ++u) {
                    if (u != i && !have_fit[static_cast<std::size_t>(u)]) continue;
                    for (int v : structure.parents[static_cast<std::size_t>(u)]) {
                        if (u == i) {
                            // lambda-scaled candidate mean for the edge (i, v)
                            const auto& e = result.counts.edge(i, v);
                            double scaled = 0.0;
                            int usable = 0;
                            for (int c = 1; c <= e.t_star; ++c) {
                                const long long n_c = e.n[static_cast<std::size_t>(c - 1)];
                                if (n_c == 0) continue;
                                double f =
                                    static_cast<double>(
                                        e.n_zero[static_cast<std::size_t>(c - 1)]) /
                                    static_cast<double>(n_c);
                                if (f <= 0.0 || f >= 1.0) continue;
                                scaled += (-log_base + std::log1p(-f)) / c;
                                ++usable;
                            }
                            if (usable == 0)
                                throw InsufficientEventsError(
                                    "no usable trigger levels for an edge of a "
                                    "lambda solve");
                            edge_terms.push_back(
                                {static_cast<double>(u), static_cast<double>(v),
                                 scaled / usable});
                        } else {
                            // Ancestor edge: use its already-fitted value.
                            double fitted = 0.0;
                            for (const auto& ce : result.couplings)
                                if (ce.i == u && ce.j == v) fitted = ce.aggregate;
                            edge_terms.push_back(
                                {static_cast<double>(u), static_cast<double>(v),
                                 fitted});
                        }
                    }
                }
                lambda_i = solve_lambda_general(
                    structure, i, result.theta, result.lambda, have_fit,
                    options, log_base, edge_terms, z_over_t);
            }
            result.lambda_estimated[static_cast<std::size_t>(i)] = true;
        }
        result.lambda[static_cast<std::size_t>(i)] = lambda_i;

        result.theta[static_cast<std::size_t>(i)] =
            estimate_theta(result.counts, i, lambda_i);

        for (int j : parents) {
            CouplingEstimate ce = estimate_coupling(
                result.counts, i, j, result.theta[static_cast<std::size_t>(i)],
                lambda_i, options);
            if (ce.low_confidence) {
                std::ostringstream os;
                os << "edge (" << i << "," << j
                   << "): some trigger levels have few events; the coupling "
                      "estimate is low-confidence";
                result.warnings.push_back(os.str());
            }
            if (!ce.feasible) {
                std::ostringstream os;
                os << "edge (" << i << "," << j
                   << "): fitted coupling violates t* J < |theta|";
                result.warnings.push_back(os.str());
            }
            result.couplings.push_back(std::move(ce));
        }
        have_fit[static_cast<std::size_t>(i)] = true;
    }
    return result;
}

} // namespace oprisk
