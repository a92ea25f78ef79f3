#pragma once

#include <string>
#include <vector>

namespace knet {

struct Edge {
    int src = 0;
    int dst = 0;

    bool operator==(const Edge&) const = default;
};

// Directed multigraph over the non-ground nodes of one layer. The ground node
// is implicit: it never appears in `edges`; nodes carrying a learnable device
// to ground are listed in `ground_edges`. Edge order is load-bearing
// (parameter vectors index into it positionally).
struct Topology {
    int num_nodes = 0;
    std::vector<Edge> edges;
    std::vector<int> ground_edges;

    bool operator==(const Topology&) const = default;
};

// All ordered pairs (i,j), i != j, each `repeat` times.
Topology fc_topo(int num_node, int repeat);

// k x k kernel sliding with stride 1 over a c-channel w x h grid; all nodes
// covered by a kernel position are pairwise connected in both directions.
// Nodes are indexed channel-major, row-major.
Topology ne_topo(int c, int w, int h, int k, int repeat);

// ne_topo edges plus n_proj projected nodes (indexed after the c*w*h grid
// nodes), each connected bidirectionally to every grid node. Projected nodes
// are never connected to each other.
Topology proj_topo(int c, int w, int h, int k, int n_proj, int repeat_ne, int repeat_proj);

// First invariant violation as text; empty string when the topology is valid.
std::string validate(const Topology& topo);

// Line-oriented text form: "nodes <N>", then "edge <src> <dst>" lines in
// order, then "gedge <node>" lines.
std::string to_text(const Topology& topo);
Topology from_text(const std::string& text);

}  // namespace knet
