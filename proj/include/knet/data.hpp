#pragma once

#include "knet/train.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace knet {

// Feature matrix plus, depending on the task, regression targets or integer
// class labels (the unused one stays empty).
struct Dataset {
    Matrix features;
    Matrix targets;
    std::vector<int> labels;

    size_t size() const { return features.size(); }
    size_t dim() const { return features.empty() ? 0 : features.front().size(); }
};

struct SplitDataset {
    Dataset train;
    Dataset test;
};

// Seeded shuffle, then the first ceil((1-test_fraction)*n) rows train and the
// rest test: disjoint and covering.
SplitDataset split_dataset(const Dataset& d, double test_fraction, std::uint64_t seed);

// Two-dimensional generation testbenches. Every point is one seeded draw;
// class structure alternates by sample index. Closed forms:
//   moons:        t~U(0,pi); arc (cos t, sin t) or (1-cos t, 0.5-sin t),
//                 plus N(0, 0.1^2) per coordinate, then x*2 + (-1, -0.2)
//   2spirals:     t = sqrt(U)*3pi; +-(-cos(t)*t + U*0.5, sin(t)*t + U*0.5)/3
//                 plus N(0, 0.1^2)
//   circles:      radius 1 or 0.5 at U(0,2pi), plus N(0, 0.08^2), times 3
//   8gaussians:   mean on the radius-2 circle at angle (i%8)*pi/4, sigma 0.5
//   pinwheel:     f = (1 + 0.3 N, 0.1 N), a = (i%5)*2pi/5 + 0.25*exp(f0),
//                 x = 2*(f0 cos a + f1 sin a, -f0 sin a + f1 cos a)
//   checkerboard: x1 = U(-2,2), x2 = U(0,1) - 2*(i%2) + (floor(x1) mod 2),
//                 times 2
Dataset gen2d(const std::string& name, int n, std::uint64_t seed);
const std::vector<std::string>& gen2d_names();

// y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 on U[0,1]^5 features.
double friedman_y(std::span<const double> x);

// Synthetic Friedman regression: features and targets standardized to zero
// mean / unit variance using train-split statistics.
SplitDataset gen_friedman(int n, double noise_sd, std::uint64_t seed,
                          double test_fraction = 0.2);

// CSV with a header row; the named column becomes the (single) target, the
// rest become features in header order.
Dataset load_csv(const std::string& path, const std::string& target_column);
void save_csv(const std::string& path, const Dataset& d, const std::string& target_column = "y");

// IDX image/label pair (big-endian magics 0x803 / 0x801); pixels scaled to
// [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Named 2-D density targets for distribution matching:
//   gaussian:       standard normal
//   mixture2:       0.5 N((1.5,0), 0.25 I) + 0.5 N((-1.5,0), 0.25 I)
//   fig9-ring-like: ring of radius 2 (radial sigma 0.4) with four angular
//                   lobes, normalized in closed form
DensityFn density_target(const std::string& name);
const std::vector<std::string>& density_target_names();

}  // namespace knet
