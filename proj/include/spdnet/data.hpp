#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "spdnet/grid.hpp"

namespace spdnet::data {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Synthetic cardiac phantoms
// ---------------------------------------------------------------------------

// Class 1 is always the fat crescent. With num_classes >= 3 the myocardial ring
// becomes class 2, and with 4 the blood pool becomes class 3.
struct PhantomConfig {
    int image_size = 64;
    double motion_blur_prob = 0.25;
    int motion_blur_extent_px = 3;
    double effusion_prob = 0.5;
    double effusion_intensity_delta = 0.02;
    int num_classes = 2;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PhantomInfo {
    bool motion_blur = false;
    bool effusion = false;
    double blur_angle_deg = 0.0;
};

struct Phantom {
    Image image;
    LabelMap label;
    PhantomInfo info;
    Grid<std::uint8_t> effusion_mask;  // 1 where the effusion region was painted
};

// Minimum side that still holds the full set of structures.
inline constexpr int kMinPhantomSize = 32;

Phantom generate_phantom(const PhantomConfig& cfg, Rng& rng);

// Intensity levels used by the generator (before the optional blur).
struct PhantomIntensities {
    static constexpr float background = 0.0f;
    static constexpr float body = 0.2f;
    static constexpr float blood = 0.4f;
    static constexpr float myocardium = 0.8f;
    static constexpr float fat = 0.55f;
};

// ---------------------------------------------------------------------------
// Intensity and geometry
// ---------------------------------------------------------------------------

// Min-max scaling to [0,1]; constant images map to zeros.
Image normalize(const Image& img);

struct AugConfig {
    double rotation_max_deg = 15.0;
    bool flip_x = true;
    bool flip_y = true;
    double skew_max_deg = 5.0;
    std::uint64_t seed = 0;

    void validate() const;
};

// One concrete draw of the augmentation. Applied as flip, then skew, then
// rotation, all about the grid centre ((rows-1)/2, (cols-1)/2).
// Rotation maps offset (dx, dy) to (dx cos - dy sin, dx sin + dy cos) with
// dx along columns and dy along rows.
struct GeometricTransform {
    double rotation_deg = 0.0;
    bool flip_x = false;  // mirror columns
    bool flip_y = false;  // mirror rows
    double skew_deg = 0.0;  // horizontal shear: dx += tan(skew) * dy
};

GeometricTransform draw_transform(const AugConfig& cfg, Rng& rng);

// Bilinear for the image, nearest-neighbour for labels; outside samples are 0.
std::pair<Image, LabelMap> apply_transform(const Image& img, const LabelMap& lbl, const GeometricTransform& t);

std::pair<Image, LabelMap> augment(const Image& img, const LabelMap& lbl, const AugConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Padding
// ---------------------------------------------------------------------------

// Location of the original content inside a padded grid.
struct PadInfo {
    std::int64_t top = 0;
    std::int64_t left = 0;
    std::int64_t rows = 0;
    std::int64_t cols = 0;
};

// Smallest square side >= max(rows, cols) divisible by `multiple`.
std::int64_t padded_side(std::int64_t rows, std::int64_t cols, std::int64_t multiple);

// Centred zero padding (or centred crop when the target is smaller).
Image pad_image(const Image& img, std::int64_t rows, std::int64_t cols, PadInfo* info = nullptr);
LabelMap pad_labels(const LabelMap& lbl, std::int64_t rows, std::int64_t cols);

template <class T>
Grid<T> crop(const Grid<T>& g, const PadInfo& info) {
    Grid<T> out(info.rows, info.cols);
    for (std::int64_t r = 0; r < info.rows; ++r)
        for (std::int64_t c = 0; c < info.cols; ++c) out.at(r, c) = g.at(r + info.top, c + info.left);
    return out;
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

struct Batch {
    std::vector<std::size_t> indices;  // into Dataset::cases
    std::vector<std::string> case_ids;
    std::vector<Image> images;  // padded to a common shape
    std::vector<LabelMap> labels;
};

// Seeded permutation split into consecutive batches; the last one may be short.
std::vector<Batch> make_batches(const Dataset& ds, std::size_t batch_size, std::uint64_t shuffle_seed);

// Same partition without materialising the padded grids.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t num_cases, std::size_t batch_size,
                                                    std::uint64_t shuffle_seed);

Batch assemble_batch(const std::vector<Image>& images, const std::vector<LabelMap>& labels,
                     std::vector<std::size_t> indices, std::vector<std::string> case_ids);

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

// One case directory of the ACDC distribution: <id>_frameNN.nii.gz with a
// matching <id>_frameNN_gt.nii.gz. Every short-axis slice of every labelled
// frame becomes one Case with id "<id>_frameNN_sliceKK".
std::vector<Case> load_acdc_case(const std::filesystem::path& dir);

inline constexpr int kAcdcClasses = 4;  // background, RV, Myo, LV

struct ManifestEntry {
    std::string case_id;
    std::string image_path;  // relative to the manifest directory, or absolute
    std::string label_path;
    Split split = Split::Train;
};

std::string split_name(Split s);
Split parse_split(const std::string& s);

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest_path);
void write_manifest(const std::filesystem::path& manifest_path, const std::vector<ManifestEntry>& entries);

// Hash-ranked split: the round(n * test_fraction) ids with the lowest seeded
// hash go to the test split.
std::vector<Split> assign_splits(const std::vector<std::string>& case_ids, double test_fraction, std::uint64_t seed);

struct Preprocessing {
    std::int64_t pad_multiple = 64;
    bool normalize = true;
};

// Loads the entries of `split` from <dir>/manifest.json. Entries pointing at
// NIfTI volumes expand into one case per slice. Missing manifest -> IoError.
Dataset load_dataset(const std::filesystem::path& dir, Split split, const Preprocessing& prep);

// Writes <dir>/<id>_image.npy, <id>_label.npy and the <id>.json sidecar.
ManifestEntry export_phantom(const std::filesystem::path& dir, const std::string& case_id, const Phantom& p,
                             std::uint64_t seed);

// Loads one 2-D image (.npy) or the first slice of a NIfTI volume.
Image load_image(const std::filesystem::path& path);

}  // namespace spdnet::data
