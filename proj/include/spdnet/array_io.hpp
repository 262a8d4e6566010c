#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spdnet/grid.hpp"

namespace spdnet::io {

// Dense array loaded from disk; values are widened to double, C order.
struct NdArray {
    std::vector<std::int64_t> shape;
    std::vector<double> values;
    std::string descr;  // numpy dtype string, e.g. "<f4"
};

// NumPy .npy (format 1.0), little-endian, C order.
void write_npy(const std::filesystem::path& path, std::span<const std::int64_t> shape,
               std::span<const float> values);
void write_npy(const std::filesystem::path& path, std::span<const std::int64_t> shape,
               std::span<const std::uint8_t> values);
void write_npy(const std::filesystem::path& path, const Grid<float>& grid);
void write_npy(const std::filesystem::path& path, const Grid<std::uint8_t>& grid);
NdArray read_npy(const std::filesystem::path& path);

Grid<float> read_npy_image(const std::filesystem::path& path);
Grid<std::uint8_t> read_npy_labels(const std::filesystem::path& path);

// NIfTI-1 volume (.nii or .nii.gz). Voxels are x-fastest; scl_slope/inter applied on read.
struct Volume {
    std::array<std::int64_t, 3> dims{1, 1, 1};
    std::array<double, 3> spacing{1.0, 1.0, 1.0};
    std::vector<double> voxels;

    double at(std::int64_t x, std::int64_t y, std::int64_t z) const {
        return voxels[static_cast<std::size_t>((z * dims[1] + y) * dims[0] + x)];
    }
};

enum class NiftiType : std::int16_t { UInt8 = 2, Int16 = 4, Int32 = 8, Float32 = 16, Float64 = 64, UInt16 = 512 };

Volume read_nifti(const std::filesystem::path& path);
void write_nifti(const std::filesystem::path& path, const Volume& vol, NiftiType type);

// Whole-file helpers; throw IoError.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace spdnet::io
