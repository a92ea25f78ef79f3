#pragma once

// Shared helpers for the test binaries.

#include "knet/dynamics.hpp"

#include <random>
#include <vector>

inline knet::LayerDynamics random_layer(std::mt19937_64& rng, int n, int n_edges,
                                        knet::DeviceKind kind, int n_gedges = 0,
                                        double scale = 1.0) {
    knet::LayerDynamics dyn;
    dyn.kind = kind;
    dyn.topo.num_nodes = n;
    std::uniform_int_distribution<int> node(0, n - 1);
    for (int e = 0; e < n_edges; ++e) {
        int s = node(rng), d = node(rng);
        while (d == s) d = node(rng);
        dyn.topo.edges.push_back({s, d});
    }
    for (int g = 0; g < n_gedges; ++g) dyn.topo.ground_edges.push_back(node(rng));
    std::uniform_real_distribution<double> u(-scale, scale);
    dyn.params.resize(dyn.param_dim());
    for (double& p : dyn.params) p = u(rng);
    return dyn;
}

inline std::vector<double> random_state(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}
