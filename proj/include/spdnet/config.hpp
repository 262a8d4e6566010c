#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spdnet/data.hpp"

namespace spdnet {

enum class LatentInjection { All, Last };
enum class FusionMode { Multiply, Concat };
enum class LatentMode { PriorMean, PriorSample };

struct SegmentorConfig {
    std::int64_t in_channels = 1;
    std::int64_t patch_size = 2;
    std::vector<std::int64_t> stage_channels{48, 96, 192, 384};
    std::vector<std::int64_t> stage_depths{2, 2, 6, 2};
    std::int64_t window_size = 7;
    std::int64_t num_classes = 2;
    std::int64_t latent_channels_per_scale = 1;  // 0 = no latent inputs
    LatentInjection latent_injection = LatentInjection::All;
    double mlp_ratio = 4.0;

    void validate() const;
    std::int64_t num_stages() const { return static_cast<std::int64_t>(stage_channels.size()); }
    // Spatial side of pyramid level i for a given input side.
    std::int64_t level_side(std::int64_t input_side, std::int64_t level) const {
        return input_side / (patch_size << level);
    }
    // Input sides must be divisible by this so every level tiles into windows.
    std::int64_t required_multiple() const { return patch_size * (std::int64_t{1} << (num_stages() - 1)) * window_size; }
    std::int64_t heads(std::int64_t stage) const {
        return std::max<std::int64_t>(1, stage_channels[static_cast<std::size_t>(stage)] / 16);
    }
};

struct ProbabilisticConfig {
    std::vector<std::int64_t> channels{16, 32, 64, 128};

    void validate() const;
};

struct DiscriminatorConfig {
    std::int64_t num_layers = 5;
    std::int64_t base_channels = 32;
    double leaky_slope = 0.2;
    FusionMode fusion = FusionMode::Multiply;
    // Discriminator weights are clamped to [-clip, clip] after every update; 0 disables.
    double weight_clip = 0.05;

    void validate() const;
};

struct LossWeights {
    double alpha = 0.6;
    double beta = 10.0;

    void validate() const;
};

struct Ablation {
    bool probabilistic = true;
    bool discriminator = true;
};

struct TrainConfig {
    std::int64_t epochs = 100;
    std::int64_t batch_size = 8;
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    Ablation ablation;
    std::int64_t checkpoint_every = 10;  // epochs; 0 = final only
    std::int64_t disc_steps_per_seg_step = 1;
    std::int64_t adv_warmup = 0;  // segmentor steps before discriminator updates begin
    data::AugConfig aug;

    void validate() const;
};

struct MetricsConfig {
    LatentMode latent_mode = LatentMode::PriorMean;
    std::int64_t samples = 1;
};

struct DataConfig {
    data::PhantomConfig phantom;
    double test_fraction = 0.25;
    std::int64_t pad_multiple = 0;  // 0 = derive from the segmentor geometry
    bool normalize = true;
};

struct RunConfig {
    std::string preset = "paper";
    DataConfig data;
    SegmentorConfig segmentor;
    ProbabilisticConfig probabilistic;
    DiscriminatorConfig discriminator;
    LossWeights losses;
    TrainConfig train;
    MetricsConfig metrics;

    void validate() const;
    std::int64_t pad_multiple() const;
    int num_classes() const { return static_cast<int>(segmentor.num_classes); }
    data::Preprocessing preprocessing() const { return {pad_multiple(), data.normalize}; }
};

// Values from the paper-scale training protocol.
RunConfig paper_preset();
// 64x64 phantoms, slim channels; trains on a CPU in minutes.
RunConfig desk_preset();
RunConfig preset_by_name(const std::string& name);

// Strict parse: unknown keys or wrong types -> SchemaError. Missing keys keep
// the values of `base`.
RunConfig config_from_json(const std::string& text, const RunConfig& base);
std::string config_to_json(const RunConfig& cfg);

// Precedence: preset defaults < config file < explicit overrides (JSON patch
// in the same schema).
RunConfig resolve_config(const std::optional<std::string>& preset, const std::optional<std::filesystem::path>& file,
                         const std::optional<std::string>& overrides_json);

std::string latent_mode_name(LatentMode m);

}  // namespace spdnet
