#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdnet/error.hpp"

namespace spdnet {

// Row-major 2-D grid.
template <class T>
struct Grid {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<T> data;

    Grid() = default;
    Grid(std::int64_t r, std::int64_t c, T fill = T{})
        : rows(r), cols(c), data(static_cast<std::size_t>(r * c), fill) {}

    T& at(std::int64_t r, std::int64_t c) { return data[static_cast<std::size_t>(r * cols + c)]; }
    const T& at(std::int64_t r, std::int64_t c) const {
        return data[static_cast<std::size_t>(r * cols + c)];
    }
    bool in_bounds(std::int64_t r, std::int64_t c) const {
        return r >= 0 && c >= 0 && r < rows && c < cols;
    }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Grid<auto>& other) const { return rows == other.rows && cols == other.cols; }
    bool operator==(const Grid&) const = default;
};

// Physical pixel size in millimetres.
struct Spacing {
    double row_mm = 1.0;
    double col_mm = 1.0;
    bool operator==(const Spacing&) const = default;
};

struct Image {
    Grid<float> pixels;
    Spacing spacing;

    std::int64_t rows() const { return pixels.rows; }
    std::int64_t cols() const { return pixels.cols; }
};

struct LabelMap {
    Grid<std::uint8_t> labels;
    int num_classes = 2;
    Spacing spacing;

    std::int64_t rows() const { return labels.rows; }
    std::int64_t cols() const { return labels.cols; }
};

struct Case {
    Image image;
    LabelMap label;
    std::string case_id;
};

enum class Split { Train, Test };

struct Dataset {
    std::vector<Case> cases;
    Split split = Split::Train;

    int num_classes() const { return cases.empty() ? 0 : cases.front().label.num_classes; }
    // Throws if case ids repeat or class counts disagree.
    void validate() const;
};

inline void require_same_shape(const Image& img, const LabelMap& lbl, const char* where) {
    if (img.rows() != lbl.rows() || img.cols() != lbl.cols()) {
        throw ShapeMismatch(std::string(where) + ": image " + std::to_string(img.rows()) + "x" +
                            std::to_string(img.cols()) + " vs label " + std::to_string(lbl.rows()) +
                            "x" + std::to_string(lbl.cols()));
    }
}

}  // namespace spdnet
