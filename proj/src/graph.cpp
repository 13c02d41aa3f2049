#include "oprisk/graph.hpp"

#include <algorithm>
#include <deque>
#include <ostream>

namespace oprisk {

const char* to_string(SubgraphKind kind) {
    switch (kind) {
        case SubgraphKind::Free: return "free";
        case SubgraphKind::SingleFreeParent: return "single-free-parent";
        case SubgraphKind::ChainOfFreeRoot: return "chain-of-free-root";
        case SubgraphKind::MultipleFreeParents: return "multiple-free-parents";
        case SubgraphKind::GeneralAcyclic: return "general-acyclic";
        case SubgraphKind::HasCausalLoop: return "has-causal-loop";
    }
    return "?";
}

namespace {

// Kahn's algorithm; fills topo_order iff the graph is acyclic.
void decide_acyclicity(CouplingGraph& g) {
    std::vector<int> in_degree(g.n_nodes);
    for (int i = 0; i < g.n_nodes; ++i)
        in_degree[i] = static_cast<int>(g.parents[i].size());

    std::deque<int> queue;
    for (int i = 0; i < g.n_nodes; ++i)
        if (in_degree[i] == 0) queue.push_back(i);

    std::vector<int> order;
    order.reserve(g.n_nodes);
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        order.push_back(u);
        for (int v : g.children[u])
            if (--in_degree[v] == 0) queue.push_back(v);
    }

    g.acyclic = static_cast<int>(order.size()) == g.n_nodes;
    if (g.acyclic) g.topo_order = std::move(order);
}

} // namespace

CouplingGraph build_graph(const ModelParams& params) {
    params.validate();
    std::vector<std::vector<int>> parents(params.n_processes);
    for (int i = 0; i < params.n_processes; ++i)
        for (int j = 0; j < params.n_processes; ++j)
            if (params.coupling(i, j) != 0.0) parents[i].push_back(j);
    return build_graph_from_pattern(params.n_processes, parents);
}

CouplingGraph build_graph_from_pattern(
    int n, const std::vector<std::vector<int>>& parents) {
    if (n < 1) throw ParameterError("need at least one node");
    if (static_cast<int>(parents.size()) != n)
        throw ParameterError("parent list must have one entry per node");
    CouplingGraph g;
    g.n_nodes = n;
    g.parents = parents;
    g.children.assign(n, {});
    for (int i = 0; i < n; ++i) {
        for (int j : parents[i]) {
            if (j < 0 || j >= n) throw ParameterError("edge endpoint out of range");
            g.children[j].push_back(i);
        }
    }
    decide_acyclicity(g);
    return g;
}

std::vector<int> ancestors(const CouplingGraph& graph, int node) {
    if (node < 0 || node >= graph.n_nodes)
        throw ParameterError("node index out of range");
    std::vector<bool> seen(graph.n_nodes, false);
    std::deque<int> queue(graph.parents[node].begin(), graph.parents[node].end());
    std::vector<int> out;
    while (!queue.empty()) {
        int u = queue.front();
        queue.pop_front();
        if (seen[u]) continue;
        seen[u] = true;
        out.push_back(u);
        for (int p : graph.parents[u])
            if (!seen[p]) queue.push_back(p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

SubgraphClass classify_subgraph(const CouplingGraph& graph, int node) {
    if (node < 0 || node >= graph.n_nodes)
        throw ParameterError("node index out of range");

    std::vector<int> anc = ancestors(graph, node);

    // A cycle reaches the node iff the node or one of its ancestors lies on
    // a cycle among {ancestors, node}.
    {
        std::vector<bool> in_cone(graph.n_nodes, false);
        in_cone[node] = true;
        for (int a : anc) in_cone[a] = true;
        // Kahn restricted to the cone.
        std::vector<int> in_degree(graph.n_nodes, 0);
        int cone_size = 0;
        for (int u = 0; u < graph.n_nodes; ++u) {
            if (!in_cone[u]) continue;
            ++cone_size;
            for (int p : graph.parents[u])
                if (in_cone[p]) ++in_degree[u];
        }
        std::deque<int> queue;
        for (int u = 0; u < graph.n_nodes; ++u)
            if (in_cone[u] && in_degree[u] == 0) queue.push_back(u);
        int removed = 0;
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            ++removed;
            for (int v : graph.children[u])
                if (in_cone[v] && --in_degree[v] == 0) queue.push_back(v);
        }
        if (removed != cone_size) return {SubgraphKind::HasCausalLoop, {}};
    }

    const auto& parents = graph.parents[node];
    if (parents.empty()) return {SubgraphKind::Free, {}};

    auto is_free = [&](int u) { return graph.parents[u].empty(); };

    if (parents.size() == 1 && is_free(parents[0]))
        return {SubgraphKind::SingleFreeParent, {parents[0]}};

    // Simple path ending at the node: every node in the cone has at most one
    // parent and the ancestors form a chain root -> ... -> node.
    if (parents.size() == 1) {
        std::vector<int> path{node};
        int u = node;
        bool chain = true;
        while (!graph.parents[u].empty()) {
            if (graph.parents[u].size() != 1) {
                chain = false;
                break;
            }
            u = graph.parents[u][0];
            path.push_back(u);
        }
        if (chain) {
            std::reverse(path.begin(), path.end());
            return {SubgraphKind::ChainOfFreeRoot, path};
        }
    }

    if (parents.size() >= 2 &&
        std::all_of(parents.begin(), parents.end(), is_free)) {
        return {SubgraphKind::MultipleFreeParents, parents};
    }

    return {SubgraphKind::GeneralAcyclic, anc};
}

void export_edges(const CouplingGraph& graph, std::ostream& out) {
    for (int j = 0; j < graph.n_nodes; ++j)
        for (int i : graph.children[j]) out << j << " -> " << i << "\n";
}

} // namespace oprisk
