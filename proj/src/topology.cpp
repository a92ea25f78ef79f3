#include "knet/topology.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace knet {

Topology fc_topo(int num_node, int repeat) {
    if (num_node < 1 || repeat < 1)
        throw std::invalid_argument("fc_topo: num_node and repeat must be >= 1");
    Topology t;
    t.num_nodes = num_node;
    t.edges.reserve(static_cast<size_t>(num_node) * (num_node - 1) * repeat);
    for (int i = 0; i < num_node; ++i)
        for (int j = 0; j < num_node; ++j) {
            if (i == j) continue;
            for (int r = 0; r < repeat; ++r) t.edges.push_back({i, j});
        }
    return t;
}

Topology ne_topo(int c, int w, int h, int k, int repeat) {
    if (c < 1 || w < 1 || h < 1 || repeat < 1)
        throw std::invalid_argument("ne_topo: sizes and repeat must be >= 1");
    if (k < 1 || k > std::min(w, h))
        throw std::invalid_argument("ne_topo: kernel must satisfy 1 <= k <= min(w, h)");
    Topology t;
    t.num_nodes = c * w * h;
    const int cols = c * k * k;
    // Covered node indices for one kernel position, in unfold row order:
    // channel-major, then kernel row, then kernel column.
    std::vector<int> window(cols);
    for (int a = 0; a + k <= w; ++a)
        for (int b = 0; b + k <= h; ++b) {
            int r = 0;
            for (int ch = 0; ch < c; ++ch)
                for (int di = 0; di < k; ++di)
                    for (int dj = 0; dj < k; ++dj)
                        window[r++] = ch * w * h + (a + di) * h + (b + dj);
            for (int j = 0; j < cols; ++j)
                for (int l = 0; l < cols; ++l) {
                    if (j == l) continue;
                    for (int rep = 0; rep < repeat; ++rep)
                        t.edges.push_back({window[j], window[l]});
                }
        }
    return t;
}

Topology proj_topo(int c, int w, int h, int k, int n_proj, int repeat_ne, int repeat_proj) {
    if (n_proj < 1) throw std::invalid_argument("proj_topo: n_proj must be >= 1");
    if (repeat_proj < 1) throw std::invalid_argument("proj_topo: repeat_proj must be >= 1");
    Topology t = ne_topo(c, w, h, k, repeat_ne);
    const int grid = c * w * h;
    t.num_nodes = grid + n_proj;
    t.edges.reserve(t.edges.size() + static_cast<size_t>(n_proj) * grid * 2 * repeat_proj);
    for (int p = grid; p < grid + n_proj; ++p)
        for (int g = 0; g < grid; ++g)
            for (int rep = 0; rep < repeat_proj; ++rep) {
                t.edges.push_back({p, g});
                t.edges.push_back({g, p});
            }
    return t;
}

std::string validate(const Topology& topo) {
    for (size_t e = 0; e < topo.edges.size(); ++e) {
        const Edge& ed = topo.edges[e];
        if (ed.src < 0 || ed.src >= topo.num_nodes || ed.dst < 0 || ed.dst >= topo.num_nodes)
            return "edge " + std::to_string(e) + ": node index out of range";
        if (ed.src == ed.dst) return "edge " + std::to_string(e) + ": self-loop";
    }
    for (size_t i = 0; i < topo.ground_edges.size(); ++i) {
        const int g = topo.ground_edges[i];
        if (g < 0 || g >= topo.num_nodes)
            return "ground edge " + std::to_string(i) + ": node index out of range";
    }
    return "";
}

std::string to_text(const Topology& topo) {
    std::ostringstream os;
    os << "nodes " << topo.num_nodes << "\n";
    for (const Edge& e : topo.edges) os << "edge " << e.src << " " << e.dst << "\n";
    for (int g : topo.ground_edges) os << "gedge " << g << "\n";
    return os.str();
}

Topology from_text(const std::string& text) {
    Topology t;
    std::istringstream is(text);
    std::string line;
    bool saw_nodes = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "nodes") {
            ls >> t.num_nodes;
            saw_nodes = true;
        } else if (word == "edge") {
            Edge e;
            ls >> e.src >> e.dst;
            t.edges.push_back(e);
        } else if (word == "gedge") {
            int g = 0;
            ls >> g;
            t.ground_edges.push_back(g);
        } else {
            throw std::invalid_argument("topology text: unknown line '" + line + "'");
        }
        if (ls.fail()) throw std::invalid_argument("topology text: malformed line '" + line + "'");
    }
    if (!saw_nodes) throw std::invalid_argument("topology text: missing 'nodes' line");
    return t;
}

}  // namespace knet
