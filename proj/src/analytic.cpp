#include "oprisk/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

namespace oprisk {

double free_moment(int order, double shift, double rate) {
    if (rate <= 0.0) throw ParameterError("noise rate must be positive");
    if (order == 1) {
        return shift < 0.0 ? std::exp(rate * shift) / rate : shift + 1.0 / rate;
    }
    if (order == 2) {
        return shift < 0.0
                   ? 2.0 * std::exp(rate * shift) / (rate * rate)
                   : shift * shift + 2.0 * shift / rate + 2.0 / (rate * rate);
    }
    throw ParameterError("only moment orders 1 and 2 are supported");
}

double free_loss_probability(double shift, double rate) {
    if (rate <= 0.0) throw ParameterError("noise rate must be positive");
    return shift < 0.0 ? std::exp(rate * shift) : 1.0;
}

FreeKernel exponential_kernel(double rate) {
    if (rate <= 0.0) throw ParameterError("noise rate must be positive");
    return FreeKernel{
        [rate](double x) { return free_moment(1, x, rate); },
        [rate](double x) { return free_moment(2, x, rate); },
        [rate](double x) { return free_loss_probability(x, rate); },
    };
}

std::vector<double> binomial_weights(int n, double p) {
    if (n < 0) throw ParameterError("binomial count must be non-negative");
    if (p < 0.0 || p > 1.0) throw ParameterError("probability out of [0,1]");
    std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
    if (p == 0.0) {
        w[0] = 1.0;
        return w;
    }
    if (p == 1.0) {
        w[static_cast<std::size_t>(n)] = 1.0;
        return w;
    }
    const double logp = std::log(p);
    const double log1mp = std::log1p(-p);
    const double lg_n = std::lgamma(n + 1.0);
    for (int c = 0; c <= n; ++c) {
        double logw = lg_n - std::lgamma(c + 1.0) - std::lgamma(n - c + 1.0) +
                      c * logp + (n - c) * log1mp;
        w[static_cast<std::size_t>(c)] = std::exp(logw);
    }
    return w;
}

namespace {

// Compensated accumulator; keeps parallel and serial sums in agreement.
class KahanSum {
public:
    void add(double x) {
        double y = x - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

Moments finish(double mean, double m2, double p, std::string via) {
    Moments m;
    m.mean = mean;
    m.variance = std::max(0.0, m2 - mean * mean);
    m.loss_probability = std::min(1.0, std::max(0.0, p));
    m.computed_via = std::move(via);
    return m;
}

} // namespace

struct MomentSolver::Cone {
    struct Var {
        int node = -1;
        int offset = 0;
        double base = 0.0; // theta of the node
        // (dependent var index or -1 for the target, coupling value): set
        // bits of this var feed those ramp arguments.
        std::vector<std::pair<int, double>> feeds;
    };
    int target = -1;
    std::vector<Var> vars; // sorted so that every var precedes its dependents
};

MomentSolver::MomentSolver(const ModelParams& params, std::size_t max_terms)
    : params_(params), graph_(build_graph(params)), max_terms_(max_terms) {
    classes_.reserve(params_.n_processes);
    for (int i = 0; i < params_.n_processes; ++i)
        classes_.push_back(classify_subgraph(graph_, i));
    kernels_.reserve(params_.n_processes);
    for (int i = 0; i < params_.n_processes; ++i)
        kernels_.push_back(exponential_kernel(params_.noise_rates[i]));
}

MomentSolver::MomentSolver(const ModelParams& params,
                           std::vector<FreeKernel> kernels,
                           std::size_t max_terms)
    : params_(params), graph_(build_graph(params)),
      kernels_(std::move(kernels)), max_terms_(max_terms) {
    if (static_cast<int>(kernels_.size()) != params_.n_processes)
        throw ParameterError("need one kernel per process");
    classes_.reserve(params_.n_processes);
    for (int i = 0; i < params_.n_processes; ++i)
        classes_.push_back(classify_subgraph(graph_, i));
}

const SubgraphClass& MomentSolver::classification(int i) const {
    if (i < 0 || i >= params_.n_processes)
        throw ParameterError("process index out of range");
    return classes_[static_cast<std::size_t>(i)];
}

Moments MomentSolver::moments(int i) const {
    switch (classification(i).kind) {
        case SubgraphKind::Free:
            return moments_free(i);
        case SubgraphKind::SingleFreeParent:
            return moments_single_parent(i);
        case SubgraphKind::ChainOfFreeRoot:
            if (classification(i).nodes.size() == 3) return moments_chain(i);
            return moments_general(i);
        case SubgraphKind::MultipleFreeParents:
            return moments_multi_parent(i);
        case SubgraphKind::GeneralAcyclic:
            return moments_general(i);
        case SubgraphKind::HasCausalLoop:
            break;
    }
    std::ostringstream os;
    os << "process " << i
       << " has a causal loop; exact moments are undefined, use Monte Carlo";
    throw UnsupportedError(os.str());
}

Moments MomentSolver::moments_free(int i) const {
    if (classification(i).kind != SubgraphKind::Free)
        throw ClassificationError("process is not free");
    const FreeKernel& k = kernels_[static_cast<std::size_t>(i)];
    double th = params_.theta[static_cast<std::size_t>(i)];
    return finish(k.m1(th), k.m2(th), k.p(th), "free");
}

Moments MomentSolver::moments_single_parent(int i) const {
    const SubgraphClass& cls = classification(i);
    if (cls.kind != SubgraphKind::SingleFreeParent)
        throw ClassificationError("process is not influenced by a single free process");
    const int j = cls.nodes[0];
    const int t_star = params_.corr_times(i, j);
    const double coupling = params_.coupling(i, j);
    const double theta_i = params_.theta[static_cast<std::size_t>(i)];
    const FreeKernel& ki = kernels_[static_cast<std::size_t>(i)];
    const FreeKernel& kj = kernels_[static_cast<std::size_t>(j)];

    std::vector<double> w =
        binomial_weights(t_star, kj.p(params_.theta[static_cast<std::size_t>(j)]));
    KahanSum mean, m2, p;
    for (int c = 0; c <= t_star; ++c) {
        double arg = c * coupling + theta_i;
        mean.add(w[static_cast<std::size_t>(c)] * ki.m1(arg));
        m2.add(w[static_cast<std::size_t>(c)] * ki.m2(arg));
        p.add(w[static_cast<std::size_t>(c)] * ki.p(arg));
    }
    return finish(mean.value(), m2.value(), p.value(), "single-free-parent");
}

Moments MomentSolver::moments_chain(int i) const {
    const SubgraphClass& cls = classification(i);
    if (cls.kind != SubgraphKind::ChainOfFreeRoot || cls.nodes.size() != 3)
        throw ClassificationError("process is not the end of a 3-node chain");
    const int k = cls.nodes[0]; // free root
    const int j = cls.nodes[1];
    const int t_ij = params_.corr_times(i, j);
    const int t_jk = params_.corr_times(j, k);
    const double j_ij = params_.coupling(i, j);
    const double j_jk = params_.coupling(j, k);
    const double theta_i = params_.theta[static_cast<std::size_t>(i)];
    const double theta_j = params_.theta[static_cast<std::size_t>(j)];
    const FreeKernel& ker_i = kernels_[static_cast<std::size_t>(i)];
    const FreeKernel& ker_j = kernels_[static_cast<std::size_t>(j)];
    const FreeKernel& ker_k = kernels_[static_cast<std::size_t>(k)];

    // Bits: c_s = indicator of the middle process at lag s (s = 1..t_ij),
    // d_r = indicator of the root at lag r (r = 2..t_ij + t_jk).
    const int n_c = t_ij;
    const int n_d = t_ij + t_jk - 1;
    if (n_c + n_d >= 63 ||
        (std::size_t{1} << (n_c + n_d)) > max_terms_) {
        throw ResourceError(
            "chain enumeration exceeds the term budget; use Monte Carlo");
    }

    const double p_root = ker_k.p(params_.theta[static_cast<std::size_t>(k)]);
    KahanSum mean, m2, p;
    std::vector<int> lag_count(static_cast<std::size_t>(t_ij) + 1, 0);
    for (std::uint64_t dmask = 0; dmask < (std::uint64_t{1} << n_d); ++dmask) {
        double w_d = 1.0;
        for (int b = 0; b < n_d; ++b)
            w_d *= (dmask >> b) & 1 ? p_root : 1.0 - p_root;
        if (w_d == 0.0) continue;

        // lag_count[s] = number of root losses inside the window of the
        // middle process at lag s, i.e. sum of d_r for r = s+1 .. s+t_jk.
        for (int s = 1; s <= t_ij; ++s) {
            int cnt = 0;
            for (int r = s + 1; r <= s + t_jk; ++r)
                cnt += static_cast<int>((dmask >> (r - 2)) & 1);
            lag_count[static_cast<std::size_t>(s)] = cnt;
        }

        for (std::uint64_t cmask = 0; cmask < (std::uint64_t{1} << n_c); ++cmask) {
            double w = w_d;
            int c_total = 0;
            for (int s = 1; s <= t_ij; ++s) {
                double pj = ker_j.p(j_jk * lag_count[static_cast<std::size_t>(s)] +
                                    theta_j);
                if ((cmask >> (s - 1)) & 1) {
                    w *= pj;
                    ++c_total;
                } else {
                    w *= 1.0 - pj;
                }
                if (w == 0.0) break;
            }
            if (w == 0.0) continue;
            double arg = j_ij * c_total + theta_i;
            mean.add(w * ker_i.m1(arg));
            m2.add(w * ker_i.m2(arg));
            p.add(w * ker_i.p(arg));
        }
    }
    return finish(mean.value(), m2.value(), p.value(), "chain-of-free-root");
}

Moments MomentSolver::moments_multi_parent(int i) const {
    const SubgraphClass& cls = classification(i);
    // A single free parent is the one-parent degenerate case of the same
    // product mixture.
    if (cls.kind != SubgraphKind::MultipleFreeParents &&
        cls.kind != SubgraphKind::SingleFreeParent)
        throw ClassificationError("process is not influenced by free processes only");
    const std::vector<int>& parents = graph_.parents[static_cast<std::size_t>(i)];
    const double theta_i = params_.theta[static_cast<std::size_t>(i)];
    const FreeKernel& ker_i = kernels_[static_cast<std::size_t>(i)];

    std::vector<std::vector<double>> weights;
    std::vector<double> couplings;
    std::size_t terms = 1;
    for (int j : parents) {
        const FreeKernel& ker_j = kernels_[static_cast<std::size_t>(j)];
        weights.push_back(binomial_weights(
            params_.corr_times(i, j),
            ker_j.p(params_.theta[static_cast<std::size_t>(j)])));
        couplings.push_back(params_.coupling(i, j));
        terms *= weights.back().size();
        if (terms > max_terms_)
            throw ResourceError(
                "mixture enumeration exceeds the term budget; use Monte Carlo");
    }

    // Mixed-radix counter over the joint trigger levels (c_1, c_2, ...).
    std::vector<std::size_t> level(parents.size(), 0);
    KahanSum mean, m2, p;
    while (true) {
        double w = 1.0;
        double arg = theta_i;
        for (std::size_t m = 0; m < parents.size(); ++m) {
            w *= weights[m][level[m]];
            arg += couplings[m] * static_cast<double>(level[m]);
        }
        mean.add(w * ker_i.m1(arg));
        m2.add(w * ker_i.m2(arg));
        p.add(w * ker_i.p(arg));

        std::size_t m = 0;
        while (m < parents.size() && ++level[m] == weights[m].size()) {
            level[m] = 0;
            ++m;
        }
        if (m == parents.size()) break;
    }
    return finish(mean.value(), m2.value(), p.value(), "multiple-free-parents");
}

MomentSolver::Cone MomentSolver::build_cone(int i) const {
    Cone cone;
    cone.target = i;

    // Collect every (ancestor, lag) whose loss indicator can reach l_i(t).
    std::vector<std::pair<int, int>> pending{{i, 0}};
    std::vector<std::pair<int, int>> seen;
    auto known = [&seen](int node, int offset) {
        return std::find(seen.begin(), seen.end(),
                         std::make_pair(node, offset)) != seen.end();
    };
    while (!pending.empty()) {
        auto [u, off] = pending.back();
        pending.pop_back();
        for (int parent : graph_.parents[static_cast<std::size_t>(u)]) {
            for (int s = 1; s <= params_.corr_times(u, parent); ++s) {
                int o = off - s;
                if (!known(parent, o)) {
                    seen.emplace_back(parent, o);
                    pending.emplace_back(parent, o);
                }
            }
        }
        if (seen.size() > 64)
            throw ResourceError(
                "dependency cone exceeds the term budget; use Monte Carlo");
    }

    std::sort(seen.begin(), seen.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second < b.second : a.first < b.first;
    });

    if (seen.size() >= 63 || (std::size_t{1} << seen.size()) > max_terms_)
        throw ResourceError(
            "cone enumeration exceeds the term budget; use Monte Carlo");

    auto index_of = [&seen](int node, int offset) {
        auto it = std::find(seen.begin(), seen.end(),
                            std::make_pair(node, offset));
        return static_cast<int>(it - seen.begin());
    };

    cone.vars.resize(seen.size());
    for (std::size_t v = 0; v < seen.size(); ++v) {
        auto [node, offset] = seen[v];
        cone.vars[v].node = node;
        cone.vars[v].offset = offset;
        cone.vars[v].base = params_.theta[static_cast<std::size_t>(node)];
    }
    // Every var feeds the windows that look back onto it.
    for (std::size_t v = 0; v < seen.size(); ++v) {
        auto [node, offset] = seen[v];
        // Dependents inside the cone.
        for (std::size_t w = 0; w < seen.size(); ++w) {
            auto [dep_node, dep_offset] = seen[w];
            double jval = params_.coupling(dep_node, node);
            if (jval == 0.0) continue;
            int lag = dep_offset - offset;
            if (lag >= 1 && lag <= params_.corr_times(dep_node, node))
                cone.vars[v].feeds.emplace_back(static_cast<int>(w), jval);
        }
        // The target itself.
        double jval = params_.coupling(i, node);
        if (jval != 0.0 && -offset >= 1 && -offset <= params_.corr_times(i, node))
            cone.vars[v].feeds.emplace_back(-1, jval);
    }
    return cone;
}

Moments MomentSolver::moments_general(int i) const {
    const SubgraphClass& cls = classification(i);
    if (cls.kind == SubgraphKind::HasCausalLoop)
        throw UnsupportedError(
            "process has a causal loop; exact moments are undefined");

    Cone cone = build_cone(i);
    const FreeKernel& ker_i = kernels_[static_cast<std::size_t>(i)];
    const std::size_t n_vars = cone.vars.size();

    // Running ramp arguments for every cone variable and for the target.
    std::vector<double> arg(n_vars);
    for (std::size_t v = 0; v < n_vars; ++v) arg[v] = cone.vars[v].base;
    double arg_target = params_.theta[static_cast<std::size_t>(i)];

    KahanSum mean, m2, p;
    auto recurse = [&](auto&& self, std::size_t v, double prob) -> void {
        if (v == n_vars) {
            mean.add(prob * ker_i.m1(arg_target));
            m2.add(prob * ker_i.m2(arg_target));
            p.add(prob * ker_i.p(arg_target));
            return;
        }
        const Cone::Var& var = cone.vars[v];
        double pv = kernels_[static_cast<std::size_t>(var.node)].p(arg[v]);
        if (pv < 1.0) self(self, v + 1, prob * (1.0 - pv));
        if (pv > 0.0) {
            for (auto [dep, jval] : var.feeds) {
                if (dep < 0)
                    arg_target += jval;
                else
                    arg[static_cast<std::size_t>(dep)] += jval;
            }
            self(self, v + 1, prob * pv);
            for (auto [dep, jval] : var.feeds) {
                if (dep < 0)
                    arg_target -= jval;
                else
                    arg[static_cast<std::size_t>(dep)] -= jval;
            }
        }
    };
    recurse(recurse, 0, 1.0);
    return finish(mean.value(), m2.value(), p.value(), "general-enumeration");
}

std::vector<std::pair<double, double>> MomentSolver::argument_mixture(int i) const {
    const SubgraphClass& cls = classification(i);
    if (cls.kind == SubgraphKind::HasCausalLoop)
        throw UnsupportedError(
            "process has a causal loop; the argument mixture is undefined");

    Cone cone = build_cone(i);
    const std::size_t n_vars = cone.vars.size();
    std::vector<double> arg(n_vars);
    for (std::size_t v = 0; v < n_vars; ++v) arg[v] = cone.vars[v].base;
    double arg_target = params_.theta[static_cast<std::size_t>(i)];

    // Collapse configurations sharing the same target argument.
    std::vector<std::pair<double, double>> mixture; // (weight, argument)
    auto deposit = [&mixture](double w, double a) {
        for (auto& [weight, argument] : mixture) {
            if (argument == a) {
                weight += w;
                return;
            }
        }
        mixture.emplace_back(w, a);
    };
    auto recurse = [&](auto&& self, std::size_t v, double prob) -> void {
        if (v == n_vars) {
            deposit(prob, arg_target);
            return;
        }
        const Cone::Var& var = cone.vars[v];
        double pv = kernels_[static_cast<std::size_t>(var.node)].p(arg[v]);
        if (pv < 1.0) self(self, v + 1, prob * (1.0 - pv));
        if (pv > 0.0) {
            for (auto [dep, jval] : var.feeds) {
                if (dep < 0)
                    arg_target += jval;
                else
                    arg[static_cast<std::size_t>(dep)] += jval;
            }
            self(self, v + 1, prob * pv);
            for (auto [dep, jval] : var.feeds) {
                if (dep < 0)
                    arg_target -= jval;
                else
                    arg[static_cast<std::size_t>(dep)] -= jval;
            }
        }
    };
    recurse(recurse, 0, 1.0);
    std::sort(mixture.begin(), mixture.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    return mixture;
}

CumulativeMoments cumulative_moments(double mean_l, double var_l, double t) {
    if (var_l < 0.0) throw ParameterError("variance must be non-negative");
    if (t < 0.0) throw ParameterError("horizon must be non-negative");
    return {t * mean_l, t * var_l};
}

double gaussian_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw ParameterError("confidence level must lie in (0,1)");
    static const boost::math::normal_distribution<double> unit_normal;
    return boost::math::quantile(unit_normal, p);
}

VarEstimate gaussian_var(double mean_z, double var_z, double confidence,
                         int process, double horizon) {
    if (var_z < 0.0) throw ParameterError("variance must be non-negative");
    VarEstimate v;
    v.process = process;
    v.horizon = horizon;
    v.confidence = confidence;
    v.value = mean_z + gaussian_quantile(confidence) * std::sqrt(var_z);
    return v;
}

MomentReport solve_model(const ModelParams& params, double horizon,
                         double confidence, std::size_t max_terms) {
    MomentSolver solver(params, max_terms);
    MomentReport report;
    report.horizon = horizon;
    report.confidence = confidence;
    for (int i = 0; i < params.n_processes; ++i) {
        Moments m = solver.moments(i);
        CumulativeMoments z = cumulative_moments(m.mean, m.variance, horizon);
        MomentReport::Entry e;
        e.process = i;
        e.mean_l = m.mean;
        e.var_l = m.variance;
        e.loss_probability = m.loss_probability;
        e.mean_z = z.mean_z;
        e.var_z = z.var_z;
        e.var_value = gaussian_var(z.mean_z, z.var_z, confidence, i, horizon).value;
        e.computed_via = m.computed_via;
        report.entries.push_back(std::move(e));
    }
    return report;
}

} // namespace oprisk
