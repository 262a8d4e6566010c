#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spdnet/config.hpp"
#include "spdnet/metrics.hpp"

namespace spdnet::pipeline {

inline constexpr const char* kResolvedConfigName = "config.resolved.json";

struct SynthResult {
    std::size_t train = 0, test = 0;
};
// `count` phantoms named phantom_NNNN plus manifest.json; each case's seed is
// derived from data.phantom.seed and its index.
SynthResult synth(const RunConfig& cfg, const std::filesystem::path& out_dir, std::size_t count);

struct TrainResult {
    std::filesystem::path checkpoint;
    std::int64_t epochs = 0;
    std::int64_t steps = 0;
    double final_rec = 0;
};
// Trains on the train split, validating on the test split when present.
// `resume` continues from a checkpoint with its stored config.
TrainResult train(const RunConfig& cfg, const std::filesystem::path& data_dir, const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& resume = std::nullopt);

// Method label for reports: "segmentor", "segmentor+probabilistic" or "spdnet".
std::string method_name(const RunConfig& cfg);

// Scores the test split (or `split`). Latent mode and sample count come from
// `mc`. Returns the report also written to out_dir.
metrics::MetricsReport eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
                            const std::filesystem::path& out_dir, const MetricsConfig& mc,
                            Split split = Split::Test);

struct SegmentResult {
    std::filesystem::path labels;
    std::optional<std::filesystem::path> uncertainty;
};
// samples == 1 uses the prior mean; samples > 1 averages that many prior draws
// and writes the per-pixel variance map next to the labels as
// <stem>_uncertainty.npy.
SegmentResult segment(const std::filesystem::path& checkpoint, const std::filesystem::path& image,
                      const std::filesystem::path& out_path, std::int64_t samples, std::uint64_t seed);

// Side-by-side table of one or more reports; writes table.txt and boxplot.csv
// when out_dir is given.
std::string report(const std::vector<std::filesystem::path>& reports,
                   const std::optional<std::filesystem::path>& out_dir);

// Writes manifest.json for an ACDC tree (one patient directory per case).
std::size_t index_acdc(const std::filesystem::path& root, const std::filesystem::path& out_dir, double test_fraction,
                       std::uint64_t seed);

// Checkpoint whose predictions equal the ground truth.
void write_truth_echo(const RunConfig& cfg, const std::filesystem::path& path);

void write_resolved_config(const RunConfig& cfg, const std::filesystem::path& dir);

}  // namespace spdnet::pipeline
