#pragma once
// Shared fixtures and brute-force oracles for the test binaries. The oracles
// are written from the definitions, not from the library code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "spdnet/grid.hpp"

namespace spdnet::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("spdnet_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline LabelMap random_labels(std::mt19937_64& rng, std::int64_t rows, std::int64_t cols, int classes,
                              double fill = 0.5) {
    LabelMap m{Grid<std::uint8_t>(rows, cols), classes, Spacing{}};
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> k(1, classes - 1);
    for (auto& v : m.labels.data) v = u(rng) < fill ? static_cast<std::uint8_t>(k(rng)) : 0;
    return m;
}

struct SetCounts {
    std::int64_t a = 0, b = 0, both = 0, either = 0;
};

inline SetCounts set_counts(const LabelMap& a, const LabelMap& b, int cls) {
    SetCounts s;
    for (std::int64_t r = 0; r < a.rows(); ++r)
        for (std::int64_t c = 0; c < a.cols(); ++c) {
            const bool in_a = a.labels.at(r, c) == cls;
            const bool in_b = b.labels.at(r, c) == cls;
            s.a += in_a;
            s.b += in_b;
            s.both += in_a && in_b;
            s.either += in_a || in_b;
        }
    return s;
}

inline double oracle_dice(const LabelMap& a, const LabelMap& b, int cls) {
    const auto s = set_counts(a, b, cls);
    if (s.a + s.b == 0) return 1.0;
    return 2.0 * static_cast<double>(s.both) / static_cast<double>(s.a + s.b);
}

inline double oracle_jaccard(const LabelMap& a, const LabelMap& b, int cls) {
    const auto s = set_counts(a, b, cls);
    if (s.either == 0) return 1.0;
    return static_cast<double>(s.both) / static_cast<double>(s.either);
}

// Pixels of the class with a 4-neighbour outside it; the grid edge counts as outside.
inline std::vector<std::pair<std::int64_t, std::int64_t>> oracle_boundary(const LabelMap& m, int cls) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    auto in = [&](std::int64_t r, std::int64_t c) {
        return r >= 0 && c >= 0 && r < m.rows() && c < m.cols() && m.labels.at(r, c) == cls;
    };
    const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
    for (std::int64_t r = 0; r < m.rows(); ++r)
        for (std::int64_t c = 0; c < m.cols(); ++c) {
            if (!in(r, c)) continue;
            bool edge = false;
            for (int k = 0; k < 4; ++k) edge = edge || !in(r + dr[k], c + dc[k]);
            if (edge) out.emplace_back(r, c);
        }
    return out;
}

// All-pairs symmetric Hausdorff distance between class boundaries, in mm.
// Both empty -> 0, exactly one empty -> image diagonal.
inline double oracle_hausdorff(const LabelMap& a, const LabelMap& b, int cls, const Spacing& sp) {
    const auto pa = oracle_boundary(a, cls), pb = oracle_boundary(b, cls);
    if (pa.empty() && pb.empty()) return 0.0;
    if (pa.empty() || pb.empty())
        return std::sqrt(std::pow(static_cast<double>(a.rows()) * sp.row_mm, 2) +
                         std::pow(static_cast<double>(a.cols()) * sp.col_mm, 2));
    auto directed = [&](const auto& from, const auto& to) {
        double worst = 0.0;
        for (const auto& [r1, c1] : from) {
            double best = INFINITY;
            for (const auto& [r2, c2] : to) {
                const double dy = static_cast<double>(r1 - r2) * sp.row_mm;
                const double dx = static_cast<double>(c1 - c2) * sp.col_mm;
                best = std::min(best, std::sqrt(dy * dy + dx * dx));
            }
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(pa, pb), directed(pb, pa));
}

// Relative error with an absolute floor so exactly-zero gradients compare sanely.
inline double rel_error(double analytic, double numeric, double floor = 1e-8) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / scale;
}

}  // namespace spdnet::testing
