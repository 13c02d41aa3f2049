#ifndef OPRISK_GRAPH_HPP
#define OPRISK_GRAPH_HPP

#include <iosfwd>
#include <vector>

#include "oprisk/core.hpp"

namespace oprisk {

// Directed influence graph derived from the zero pattern of J: an edge
// j -> i exists iff J_ij != 0. The nonzero test is exact; J is a model
// input, not a measurement.
struct CouplingGraph {
    int n_nodes = 0;
    std::vector<std::vector<int>> parents;  // parents[i] = {j : J_ij != 0}
    std::vector<std::vector<int>> children; // children[j] = {i : J_ij != 0}
    bool acyclic = false;
    std::vector<int> topo_order; // present iff acyclic; parents precede children
};

enum class SubgraphKind {
    Free,
    SingleFreeParent,
    ChainOfFreeRoot,
    MultipleFreeParents,
    GeneralAcyclic,
    HasCausalLoop,
};

// Shape of the ancestor subgraph of one node; `nodes` carries the free
// parent, the root-to-node path, or the free parents depending on kind.
struct SubgraphClass {
    SubgraphKind kind = SubgraphKind::Free;
    std::vector<int> nodes;
};

const char* to_string(SubgraphKind kind);

CouplingGraph build_graph(const ModelParams& params);
CouplingGraph build_graph_from_pattern(int n,
                                       const std::vector<std::vector<int>>& parents);

SubgraphClass classify_subgraph(const CouplingGraph& graph, int node);

// All nodes with a directed path to `node`, excluding the node itself
// unless it lies on a cycle through itself.
std::vector<int> ancestors(const CouplingGraph& graph, int node);

// Plain-text adjacency list, one `j -> i` line per edge.
void export_edges(const CouplingGraph& graph, std::ostream& out);

} // namespace oprisk

#endif
