#include "knet/data.hpp"

#include "knet/errors.hpp"
#include "knet/fsio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace knet {

namespace {

Dataset take_rows(const Dataset& d, const std::vector<int>& idx, size_t lo, size_t hi) {
    Dataset out;
    out.features.reserve(hi - lo);
    for (size_t i = lo; i < hi; ++i) {
        out.features.push_back(d.features[idx[i]]);
        if (!d.targets.empty()) out.targets.push_back(d.targets[idx[i]]);
        if (!d.labels.empty()) out.labels.push_back(d.labels[idx[i]]);
    }
    return out;
}

}  // namespace

SplitDataset split_dataset(const Dataset& d, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0) || !(test_fraction < 1.0))
        throw std::invalid_argument("split_dataset: test_fraction must be in [0, 1)");
    const size_t n = d.size();
    if (n == 0) throw std::invalid_argument("split_dataset: empty dataset");
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const size_t n_test = static_cast<size_t>(std::floor(test_fraction * n));
    const size_t n_train = n - n_test;
    return {take_rows(d, idx, 0, n_train), take_rows(d, idx, n_train, n)};
}

Dataset gen2d(const std::string& name, int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen2d: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Dataset d;
    d.features.reserve(n);
    d.labels.reserve(n);

    if (name == "moons") {
        for (int i = 0; i < n; ++i) {
            const int cls = i % 2;
            const double t = uni(rng) * std::numbers::pi;
            double x = cls == 0 ? std::cos(t) : 1.0 - std::cos(t);
            double y = cls == 0 ? std::sin(t) : 0.5 - std::sin(t);
            x += normal(rng) * 0.1;
            y += normal(rng) * 0.1;
            d.features.push_back({x * 2.0 - 1.0, y * 2.0 - 0.2});
            d.labels.push_back(cls);
        }
    } else if (name == "2spirals") {
        for (int i = 0; i < n; ++i) {
            const int cls = i % 2;
            const double t = std::sqrt(uni(rng)) * 3.0 * std::numbers::pi;
            const double sgn = cls == 0 ? 1.0 : -1.0;
            const double x = sgn * (-std::cos(t) * t + uni(rng) * 0.5) / 3.0;
            const double y = sgn * (std::sin(t) * t + uni(rng) * 0.5) / 3.0;
            d.features.push_back({x + normal(rng) * 0.1, y + normal(rng) * 0.1});
            d.labels.push_back(cls);
        }
    } else if (name == "circles") {
        for (int i = 0; i < n; ++i) {
            const int cls = i % 2;
            const double r = cls == 0 ? 1.0 : 0.5;
            const double t = uni(rng) * 2.0 * std::numbers::pi;
            const double x = r * std::cos(t) + normal(rng) * 0.08;
            const double y = r * std::sin(t) + normal(rng) * 0.08;
            d.features.push_back({x * 3.0, y * 3.0});
            d.labels.push_back(cls);
        }
    } else if (name == "8gaussians") {
        for (int i = 0; i < n; ++i) {
            const int cls = i % 8;
            const double a = cls * std::numbers::pi / 4.0;
            d.features.push_back({2.0 * std::cos(a) + normal(rng) * 0.5,
                                  2.0 * std::sin(a) + normal(rng) * 0.5});
            d.labels.push_back(cls);
        }
    } else if (name == "pinwheel") {
        for (int i = 0; i < n; ++i) {
            const int cls = i % 5;
            const double f0 = 1.0 + normal(rng) * 0.3;
            const double f1 = normal(rng) * 0.1;
            const double a = cls * 2.0 * std::numbers::pi / 5.0 + 0.25 * std::exp(f0);
            d.features.push_back({2.0 * (f0 * std::cos(a) + f1 * std::sin(a)),
                                  2.0 * (-f0 * std::sin(a) + f1 * std::cos(a))});
            d.labels.push_back(cls);
        }
    } else if (name == "checkerboard") {
        for (int i = 0; i < n; ++i) {
            const int cls = i % 2;
            const double x1 = uni(rng) * 4.0 - 2.0;
            const int cell = ((static_cast<int>(std::floor(x1)) % 2) + 2) % 2;
            const double x2 = uni(rng) - 2.0 * cls + cell;
            d.features.push_back({x1 * 2.0, x2 * 2.0});
            d.labels.push_back(cls);
        }
    } else {
        throw std::invalid_argument("gen2d: unknown dataset '" + name + "'");
    }
    return d;
}

const std::vector<std::string>& gen2d_names() {
    static const std::vector<std::string> names = {"moons",      "2spirals", "circles",
                                                   "8gaussians", "pinwheel", "checkerboard"};
    return names;
}

double friedman_y(std::span<const double> x) {
    if (x.size() != 5) throw std::invalid_argument("friedman_y: needs 5 features");
    return 10.0 * std::sin(std::numbers::pi * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) +
           10.0 * x[3] + 5.0 * x[4];
}

namespace {

// Column-wise zero-mean / unit-variance using the train rows; applied to both
// splits. Population variance, so the train contract is exact.
void standardize(SplitDataset& s) {
    auto stats = [](const Matrix& m, size_t col) {
        double mean = 0.0;
        for (const auto& row : m) mean += row[col];
        mean /= static_cast<double>(m.size());
        double var = 0.0;
        for (const auto& row : m) var += (row[col] - mean) * (row[col] - mean);
        var /= static_cast<double>(m.size());
        return std::pair<double, double>(mean, std::sqrt(std::max(var, 1e-30)));
    };
    for (size_t c = 0; c < s.train.dim(); ++c) {
        const auto [mean, sd] = stats(s.train.features, c);
        for (auto& row : s.train.features) row[c] = (row[c] - mean) / sd;
        for (auto& row : s.test.features) row[c] = (row[c] - mean) / sd;
    }
    const auto [mean, sd] = stats(s.train.targets, 0);
    for (auto& row : s.train.targets) row[0] = (row[0] - mean) / sd;
    for (auto& row : s.test.targets) row[0] = (row[0] - mean) / sd;
}

}  // namespace

SplitDataset gen_friedman(int n, double noise_sd, std::uint64_t seed, double test_fraction) {
    if (n < 2) throw std::invalid_argument("gen_friedman: n must be >= 2");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    Dataset d;
    d.features.reserve(n);
    d.targets.reserve(n);
    for (int i = 0; i < n; ++i) {
        std::vector<double> x(5);
        for (double& v : x) v = uni(rng);
        d.features.push_back(x);
        d.targets.push_back({friedman_y(x) + noise_sd * normal(rng)});
    }
    SplitDataset s = split_dataset(d, test_fraction, seed ^ 0xda3e39cb94b95bdbull);
    standardize(s);
    return s;
}

Dataset load_csv(const std::string& path, const std::string& target_column) {
    std::istringstream in(read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw config_error("csv '" + path + "': empty file");

    auto split_fields = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == ',') {
                out.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        out.push_back(cur);
        return out;
    };

    const std::vector<std::string> header = split_fields(line);
    int target_idx = -1;
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == target_column) target_idx = static_cast<int>(i);
    if (target_idx < 0)
        throw config_error("csv '" + path + "': no column named '" + target_column + "'");

    Dataset d;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != header.size())
            throw config_error("csv '" + path + "' line " + std::to_string(line_no) +
                               ": expected " + std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(header.size() - 1);
        double target = 0.0;
        for (size_t i = 0; i < fields.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(fields[i].c_str(), &end);
            if (end == fields[i].c_str() || *end != '\0')
                throw config_error("csv '" + path + "' line " + std::to_string(line_no) +
                                   ": bad number '" + fields[i] + "'");
            if (static_cast<int>(i) == target_idx)
                target = v;
            else
                row.push_back(v);
        }
        d.features.push_back(std::move(row));
        d.targets.push_back({target});
    }
    if (d.features.empty()) throw config_error("csv '" + path + "': no data rows");
    return d;
}

void save_csv(const std::string& path, const Dataset& d, const std::string& target_column) {
    if (d.features.empty()) throw std::invalid_argument("save_csv: empty dataset");
    std::ostringstream out;
    for (size_t c = 0; c < d.dim(); ++c) out << "x" << c << ",";
    out << target_column << "\n";
    char buf[64];
    for (size_t i = 0; i < d.size(); ++i) {
        for (double v : d.features[i]) {
            std::snprintf(buf, sizeof(buf), "%.17g,", v);
            out << buf;
        }
        const double t = d.targets.empty() ? 0.0 : d.targets[i][0];
        std::snprintf(buf, sizeof(buf), "%.17g\n", t);
        out << buf;
    }
    write_text_atomic(path, out.str());
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw config_error("idx '" + path + "': truncated header");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw config_error("idx '" + images_path + "': cannot open");
    if (const std::uint32_t magic = read_be32(img, images_path); magic != 0x00000803u)
        throw config_error("idx '" + images_path + "': bad image magic " + std::to_string(magic));
    const std::uint32_t n = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    const size_t dim = static_cast<size_t>(rows) * cols;

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw config_error("idx '" + labels_path + "': cannot open");
    if (const std::uint32_t magic = read_be32(lab, labels_path); magic != 0x00000801u)
        throw config_error("idx '" + labels_path + "': bad label magic " + std::to_string(magic));
    if (const std::uint32_t n_lab = read_be32(lab, labels_path); n_lab != n)
        throw config_error("idx: image count " + std::to_string(n) + " != label count " +
                           std::to_string(n_lab));

    Dataset d;
    d.features.reserve(n);
    d.labels.reserve(n);
    std::vector<unsigned char> pix(dim);
    for (std::uint32_t i = 0; i < n; ++i) {
        img.read(reinterpret_cast<char*>(pix.data()), static_cast<std::streamsize>(dim));
        if (!img)
            throw config_error("idx '" + images_path + "': truncated at sample " +
                               std::to_string(i));
        std::vector<double> row(dim);
        for (size_t j = 0; j < dim; ++j) row[j] = pix[j] / 255.0;
        d.features.push_back(std::move(row));
        char c = 0;
        lab.read(&c, 1);
        if (!lab)
            throw config_error("idx '" + labels_path + "': truncated at sample " +
                               std::to_string(i));
        d.labels.push_back(static_cast<unsigned char>(c));
    }
    return d;
}

namespace {

double normal2_density(std::span<const double> x, double mx, double my, double var) {
    const double dx = x[0] - mx;
    const double dy = x[1] - my;
    return std::exp(-(dx * dx + dy * dy) / (2.0 * var)) / (2.0 * std::numbers::pi * var);
}

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

DensityFn density_target(const std::string& name) {
    if (name == "gaussian")
        return [](std::span<const double> x) { return normal2_density(x, 0.0, 0.0, 1.0); };
    if (name == "mixture2")
        return [](std::span<const double> x) {
            return 0.5 * normal2_density(x, 1.5, 0.0, 0.25) +
                   0.5 * normal2_density(x, -1.5, 0.0, 0.25);
        };
    if (name == "fig9-ring-like") {
        // Radius-2 ring, radial sigma 0.4, four angular lobes; the closed-form
        // normalizer keeps it a proper density.
        constexpr double mu = 2.0, sigma = 0.4;
        const double radial = sigma * sigma * std::exp(-mu * mu / (2.0 * sigma * sigma)) +
                              mu * sigma * std::sqrt(2.0 * std::numbers::pi) *
                                  std_normal_cdf(mu / sigma);
        const double z0 = 2.0 * std::numbers::pi * radial;
        return [z0](std::span<const double> x) {
            const double r = std::hypot(x[0], x[1]);
            const double phi = std::atan2(x[1], x[0]);
            const double dr = (r - mu) / sigma;
            return std::exp(-0.5 * dr * dr) * (1.0 + 0.9 * std::cos(4.0 * phi)) / z0;
        };
    }
    throw std::invalid_argument("density_target: unknown target '" + name + "'");
}

const std::vector<std::string>& density_target_names() {
    static const std::vector<std::string> names = {"gaussian", "mixture2", "fig9-ring-like"};
    return names;
}

}  // namespace knet
