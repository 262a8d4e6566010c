#pragma once

#include <torch/torch.h>

#include <optional>
#include <string>
#include <vector>

#include "spdnet/adversarial.hpp"
#include "spdnet/config.hpp"
#include "spdnet/probabilistic.hpp"
#include "spdnet/segmentor.hpp"

namespace spdnet {

// Segmentor configuration actually instantiated: without the latent nets the
// decoder takes no latent channels.
SegmentorConfig effective_segmentor(const RunConfig& cfg);

// The trainable networks of one run. Components switched off by the ablation
// flags are never constructed.
class SpdNetImpl : public torch::nn::Module {
public:
    explicit SpdNetImpl(const RunConfig& cfg);

    const RunConfig& config() const { return cfg_; }
    bool has_latents() const { return static_cast<bool>(prior_); }
    bool has_discriminator() const { return static_cast<bool>(disc_); }

    seg::Segmentor& segmentor() { return seg_; }
    prob::LatentNet& prior() { return prior_; }
    prob::LatentNet& posterior() { return posterior_; }
    adv::Discriminator& discriminator() { return disc_; }

    // Parameters updated by the segmentor step (segmentor + both latent nets).
    std::vector<torch::Tensor> generator_parameters() const;
    std::vector<torch::Tensor> discriminator_parameters() const;

    // Named tensors (parameters and buffers) per component, in registration order.
    std::vector<std::pair<std::string, torch::Tensor>> named_state() const;
    std::vector<std::string> components() const;

private:
    RunConfig cfg_;
    seg::Segmentor seg_{nullptr};
    prob::LatentNet prior_{nullptr}, posterior_{nullptr};
    adv::Discriminator disc_{nullptr};
};
TORCH_MODULE(SpdNet);

struct ParameterCensus {
    std::int64_t segmentor = 0, prior = 0, posterior = 0, discriminator = 0;
    std::int64_t total() const { return segmentor + prior + posterior + discriminator; }
};
ParameterCensus census(const SpdNetImpl& m);

// Per-pixel prediction for a batch.
struct Prediction {
    torch::Tensor probs;        // (B,C,H,W); mean over draws
    torch::Tensor uncertainty;  // (B,H,W) probability variance across draws, mean over classes; zero for one draw
};

// Prior-mean mode runs once with z = mu. Prior-sample mode draws `samples`
// latent hierarchies from the prior. Without latent nets both reduce to one pass.
Prediction predict(SpdNetImpl& m, const torch::Tensor& img, LatentMode mode, std::int64_t samples, at::Generator& gen);

at::Generator make_generator(std::uint64_t seed);

}  // namespace spdnet
