#pragma once

#include <torch/torch.h>

#include <optional>
#include <vector>

#include "spdnet/config.hpp"

namespace spdnet::prob {

inline constexpr double kSigmaFloor = 1e-6;

// Pixel-wise diagonal Gaussian at one scale; mu and sigma are (B,k,H,W).
struct GaussianGrid {
    torch::Tensor mu;
    torch::Tensor sigma;
    std::int64_t scale_index = 0;  // 0 = coarsest
};

struct LatentSample {
    torch::Tensor z;
    std::int64_t scale_index = 0;
};

// Grids ordered coarse -> fine; the joint factorises across scales.
using LatentHierarchy = std::vector<GaussianGrid>;

// z = mu + sigma * eps with eps ~ N(0, I) drawn from `gen`; differentiable in mu and sigma.
LatentSample sample_latent(const GaussianGrid& g, at::Generator& gen);

// Closed-form KL(q || p) between diagonal Gaussians, summed over every element.
torch::Tensor kl_divergence(const GaussianGrid& q, const GaussianGrid& p);

// Per-scale KL, batch-averaged (sum over grid elements / batch size).
std::vector<torch::Tensor> hierarchy_kl(const LatentHierarchy& q, const LatentHierarchy& p);

enum class Draw { Sample, Mean };

struct HierarchyOutput {
    LatentHierarchy grids;
    std::vector<torch::Tensor> samples;  // the latents concatenated inside the net, coarse -> fine
};

// U-Net style extractor whose decoder emits (mu, sigma) at every scale by a
// 1x1 convolution. The latent drawn at a scale (or an injected one) is
// concatenated to that scale's features before upsampling, so coarser samples
// condition finer distributions. Scale i (coarse -> fine) has side
// input/(patch * 2^(L-1-i)), matching the segmentor pyramid.
class LatentNetImpl : public torch::nn::Module {
public:
    LatentNetImpl(std::int64_t in_channels, std::int64_t patch, std::vector<std::int64_t> channels,
                  std::int64_t latent_channels);

    // `injected` (coarse -> fine) replaces the net's own draws, so a prior can
    // be evaluated along posterior samples.
    HierarchyOutput forward(const torch::Tensor& input, Draw draw, at::Generator* gen,
                            const std::optional<std::vector<torch::Tensor>>& injected = std::nullopt);

    std::int64_t in_channels() const { return in_channels_; }
    std::int64_t num_scales() const { return static_cast<std::int64_t>(channels_.size()); }

private:
    std::int64_t in_channels_, patch_, latent_channels_;
    std::vector<std::int64_t> channels_;
    torch::nn::Conv2d stem_{nullptr};
    std::vector<torch::nn::Sequential> down_;  // down_[i]: level i-1 -> i (identity-free for i = 0)
    std::vector<torch::nn::Sequential> enc_;
    std::vector<torch::nn::Sequential> dec_;  // dec_[i] fuses upsampled coarser features with enc level i
    std::vector<torch::nn::Conv2d> heads_;  // per level, 2k channels: mu and raw sigma
};
TORCH_MODULE(LatentNet);

// p(z | x): input is the image.
LatentNet make_prior(const SegmentorConfig& seg, const ProbabilisticConfig& cfg);
// q(z | x, y): input is the image concatenated with one-hot labels.
LatentNet make_posterior(const SegmentorConfig& seg, const ProbabilisticConfig& cfg);

HierarchyOutput prior_forward(LatentNet& prior, const torch::Tensor& img, Draw draw, at::Generator* gen,
                              const std::optional<std::vector<torch::Tensor>>& injected = std::nullopt);
// labels: (B,H,W) int64 class ids.
HierarchyOutput posterior_forward(LatentNet& posterior, const torch::Tensor& img, const torch::Tensor& labels,
                                  std::int64_t num_classes, Draw draw, at::Generator* gen);

}  // namespace spdnet::prob
