#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "knet/topology.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

using namespace knet;

namespace {

// Number of k x k windows covering both spatial positions (row, col pairs).
int covering_windows(int w, int h, int k, int x1, int y1, int x2, int y2) {
    const int alo = std::max(0, std::max(x1, x2) - k + 1);
    const int ahi = std::min({x1, x2, w - k});
    const int blo = std::max(0, std::max(y1, y2) - k + 1);
    const int bhi = std::min({y1, y2, h - k});
    return std::max(0, ahi - alo + 1) * std::max(0, bhi - blo + 1);
}

std::map<std::pair<int, int>, int> edge_counts(const Topology& t) {
    std::map<std::pair<int, int>, int> m;
    for (const Edge& e : t.edges) ++m[{e.src, e.dst}];
    return m;
}

}  // namespace

TEST_CASE("fc_topo enumerates ordered pairs in loop order") {
    Topology t = fc_topo(2, 1);
    REQUIRE(t.num_nodes == 2);
    REQUIRE(t.edges == std::vector<Edge>{{0, 1}, {1, 0}});
    CHECK(t.ground_edges.empty());

    CHECK(fc_topo(1, 1).edges.empty());

    t = fc_topo(3, 2);
    REQUIRE(t.edges.size() == 12);
    // Each of the 6 ordered pairs appears exactly twice, adjacently.
    auto counts = edge_counts(t);
    CHECK(counts.size() == 6);
    for (const auto& [pair, n] : counts) CHECK(n == 2);
    for (size_t i = 0; i < t.edges.size(); i += 2) CHECK(t.edges[i] == t.edges[i + 1]);
    CHECK(t.edges[0] == Edge{0, 1});
    CHECK(t.edges[2] == Edge{0, 2});
    CHECK(t.edges[4] == Edge{1, 0});
}

TEST_CASE("fc_topo rejects zero arguments") {
    CHECK_THROWS_AS(fc_topo(0, 1), std::invalid_argument);
    CHECK_THROWS_AS(fc_topo(2, 0), std::invalid_argument);
}

TEST_CASE("fc_topo edge count is n(n-1)r") {
    for (int n = 1; n <= 50; ++n)
        for (int r = 1; r <= 4; ++r)
            CHECK(fc_topo(n, r).edges.size() == static_cast<size_t>(n) * (n - 1) * r);
}

TEST_CASE("ne_topo frozen edge counts") {
    CHECK(ne_topo(1, 3, 3, 2, 1).edges.size() == 48);
    CHECK(ne_topo(1, 3, 3, 1, 1).edges.empty());
    CHECK(ne_topo(1, 3, 3, 3, 1).edges.size() == 72);
}

TEST_CASE("ne_topo rejects bad kernels") {
    CHECK_THROWS_AS(ne_topo(1, 3, 3, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(ne_topo(1, 3, 3, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(ne_topo(0, 3, 3, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(ne_topo(1, 3, 3, 2, 0), std::invalid_argument);
}

TEST_CASE("ne_topo with a single full-grid kernel equals fc_topo") {
    for (int side = 1; side <= 3; ++side)
        for (int r = 1; r <= 2; ++r) {
            Topology ne = ne_topo(1, side, side, side, r);
            Topology fc = fc_topo(side * side, r);
            // Single kernel position covers nodes 0..n-1 in index order, so
            // even the edge order coincides.
            CHECK(ne.edges == fc.edges);
            CHECK(ne.num_nodes == fc.num_nodes);
        }
}

TEST_CASE("ne_topo multiplicity matches window co-occupancy counts") {
    for (int c = 1; c <= 2; ++c)
        for (int w = 1; w <= 5; ++w)
            for (int h = 1; h <= 5; ++h)
                for (int k = 1; k <= std::min(w, h); ++k)
                    for (int r = 1; r <= 2; ++r) {
                        Topology t = ne_topo(c, w, h, k, r);
                        const size_t want = static_cast<size_t>((w - k + 1) * (h - k + 1)) *
                                            (c * k * k) * (c * k * k - 1) * r;
                        REQUIRE(t.edges.size() == want);
                        auto counts = edge_counts(t);
                        const int n = c * w * h;
                        for (int u = 0; u < n; ++u)
                            for (int v = 0; v < n; ++v) {
                                if (u == v) continue;
                                const int x1 = (u % (w * h)) / h, y1 = u % h;
                                const int x2 = (v % (w * h)) / h, y2 = v % h;
                                const int windows = covering_windows(w, h, k, x1, y1, x2, y2);
                                auto it = counts.find({u, v});
                                const int got = it == counts.end() ? 0 : it->second;
                                REQUIRE(got == windows * r);
                            }
                    }
}

TEST_CASE("ne_topo never links nodes outside a shared window") {
    // 3x3 grid, k=2: corners on the same diagonal share no window.
    Topology t = ne_topo(1, 3, 3, 2, 1);
    for (const Edge& e : t.edges) {
        CHECK(!(e.src == 0 && e.dst == 8));
        CHECK(!(e.src == 8 && e.dst == 0));
        CHECK(!(e.src == 2 && e.dst == 6));
        CHECK(!(e.src == 6 && e.dst == 2));
    }
}

TEST_CASE("proj_topo frozen shapes") {
    Topology t = proj_topo(1, 2, 2, 2, 1, 1, 1);
    CHECK(t.num_nodes == 5);
    REQUIRE(t.edges.size() == 20);
    // NE block first, then (proj, grid) pairs appended as (p,g),(g,p).
    CHECK(t.edges[12] == Edge{4, 0});
    CHECK(t.edges[13] == Edge{0, 4});
    CHECK(t.edges[14] == Edge{4, 1});
    CHECK(t.edges[19] == Edge{3, 4});

    t = proj_topo(1, 3, 3, 1, 2, 1, 1);
    CHECK(t.num_nodes == 11);
    CHECK(t.edges.size() == 36);

    CHECK(proj_topo(1, 2, 2, 2, 1, 1, 3).edges.size() == 36);
}

TEST_CASE("proj_topo never links projected nodes to each other") {
    Topology t = proj_topo(1, 2, 2, 2, 3, 1, 2);
    const int grid = 4;
    for (const Edge& e : t.edges) CHECK((e.src < grid || e.dst < grid));
}

TEST_CASE("proj_topo rejects zero projected nodes") {
    CHECK_THROWS_AS(proj_topo(1, 2, 2, 2, 0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(proj_topo(1, 2, 2, 2, 1, 1, 0), std::invalid_argument);
}

TEST_CASE("builders are deterministic") {
    CHECK(fc_topo(7, 3) == fc_topo(7, 3));
    CHECK(ne_topo(2, 4, 5, 2, 2) == ne_topo(2, 4, 5, 2, 2));
    CHECK(proj_topo(1, 3, 3, 2, 4, 1, 2) == proj_topo(1, 3, 3, 2, 4, 1, 2));
}

TEST_CASE("validate reports the first violation") {
    CHECK(validate(fc_topo(3, 1)).empty());

    Topology self;
    self.num_nodes = 1;
    self.edges = {{0, 0}};
    CHECK(validate(self).find("self-loop") != std::string::npos);

    Topology oob;
    oob.num_nodes = 3;
    oob.edges = {{0, 5}};
    CHECK(validate(oob).find("out of range") != std::string::npos);

    Topology gbad;
    gbad.num_nodes = 2;
    gbad.ground_edges = {2};
    CHECK(validate(gbad).find("ground edge") != std::string::npos);
}

TEST_CASE("text round-trip preserves topology") {
    Topology t = fc_topo(3, 1);
    t.ground_edges = {0, 2};
    const std::string text = to_text(t);
    CHECK(text.substr(0, 8) == "nodes 3\n");
    CHECK(text.find("edge 0 1\n") != std::string::npos);
    CHECK(text.find("gedge 2\n") != std::string::npos);
    CHECK(from_text(text) == t);

    CHECK_THROWS_AS(from_text("edge 0 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(from_text("nodes 2\nbogus 1\n"), std::invalid_argument);
}
