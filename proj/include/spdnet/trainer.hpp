#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spdnet/checkpoint.hpp"
#include "spdnet/metrics.hpp"
#include "spdnet/model.hpp"

namespace spdnet {

struct StepRecord {
    std::int64_t step = 0;
    std::int64_t epoch = 0;
    double rec = 0, ce = 0, dice = 0;
    std::vector<double> kl_per_scale;
    double msl = 0;         // as seen by the segmentor step
    double disc_msl = 0;    // as seen by the last discriminator step
    double seg_total = 0;
    double disc_total = 0;
};

struct EpochRecord {
    std::int64_t epoch = 0;
    std::int64_t steps = 0;
    double mean_rec = 0, mean_seg_total = 0;
    std::optional<metrics::MetricSummaries> validation;
    double wall_seconds = 0;  // since fit() started
    std::string timestamp;    // UTC, ISO 8601
};

struct RunHistory {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
};

std::string to_jsonl(const StepRecord& r);
std::string to_jsonl(const EpochRecord& r);

struct SegStepResult {
    double msl = 0, elbo = 0, rec = 0, ce = 0, dice = 0, seg_total = 0;
    std::vector<double> kl_per_scale;
};

struct FitOptions {
    std::optional<std::filesystem::path> out_dir;  // checkpoints and history.jsonl; nothing persisted when unset
    std::optional<std::int64_t> stop_after_epoch;  // stop early (still checkpointing) after this epoch count
    std::function<void(const EpochRecord&)> on_epoch;
};

// Owns the networks, both Adam optimisers and the latent generator. Network
// initialisation, batch order, augmentation and latent draws are all derived
// from train.seed.
class Trainer {
public:
    explicit Trainer(const RunConfig& cfg);
    // Continues from a checkpoint written by this class.
    explicit Trainer(const Checkpoint& ck);

    const RunConfig& config() const { return cfg_; }
    SpdNetImpl& model() { return *model_; }
    SpdNet& model_holder() { return model_; }
    at::Generator& generator() { return gen_; }
    std::int64_t epoch() const { return epoch_; }
    std::int64_t step() const { return step_; }

    // Segmentor and latent nets frozen; one Adam step of the discriminator on
    // -msl. Returns msl before the update.
    double train_step_discriminator(const torch::Tensor& img, const torch::Tensor& labels);
    // Discriminator frozen (its running statistics included); one Adam step of
    // segmentor and latent nets on msl + elbo.
    SegStepResult train_step_segmentor(const torch::Tensor& img, const torch::Tensor& labels);

    // Runs epochs [epoch(), train.epochs). Throws NumericalError naming the
    // last checkpoint written when a loss goes non-finite.
    RunHistory fit(const Dataset& train, const Dataset* val, const FitOptions& opts = {});

    Checkpoint snapshot() const;
    std::optional<std::filesystem::path> last_checkpoint() const { return last_checkpoint_; }

private:
    void build();
    bool adversarial_active() const;

    RunConfig cfg_;
    SpdNet model_{nullptr};
    std::unique_ptr<torch::optim::Adam> opt_gen_, opt_disc_;
    at::Generator gen_;
    std::int64_t epoch_ = 0, step_ = 0;
    std::optional<std::filesystem::path> last_checkpoint_;
};

// Stateless seed mixing (splitmix64 finaliser over the combined words).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

// Validation/evaluation predictor: prior-mean or N-sample averaged argmax.
metrics::Predictor make_predictor(SpdNetImpl& m, const MetricsConfig& mc, std::uint64_t seed);
metrics::MetricsReport evaluate_model(SpdNetImpl& m, const Dataset& ds, const MetricsConfig& mc, std::uint64_t seed,
                                      const std::string& method);

}  // namespace spdnet
