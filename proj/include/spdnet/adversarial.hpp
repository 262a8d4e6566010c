#pragma once

#include <torch/torch.h>

#include <vector>

#include "spdnet/config.hpp"

namespace spdnet::adv {

// img (B,1,H,W) with a class mask (B,C,H,W), either one-hot truth or a soft
// probability map. Multiply gives img * mask[:,c] per channel; Concat stacks
// the image in front of the mask channels.
torch::Tensor fuse(const torch::Tensor& img, const torch::Tensor& mask, FusionMode mode = FusionMode::Multiply);

std::int64_t fused_channels(std::int64_t num_classes, FusionMode mode);

// How the batch-normalised layers treat statistics.
enum class NormMode {
    Train,   // batch statistics, running averages updated
    Frozen,  // batch statistics, running averages left untouched
    Eval,    // running averages
};

// Stack of stride-2 4x4 convolutions with leaky activations; the last two
// layers are batch-normalised. Layer i has base * 2^i channels.
class DiscriminatorImpl : public torch::nn::Module {
public:
    DiscriminatorImpl(const DiscriminatorConfig& cfg, std::int64_t in_channels);

    // One feature grid per layer, after the activation.
    std::vector<torch::Tensor> features(const torch::Tensor& x, NormMode mode);

    // Clamps every parameter to [-weight_clip, weight_clip]; applied at
    // construction and after each update so the weights never leave the box.
    void clip_weights();

    const DiscriminatorConfig& config() const { return cfg_; }
    std::int64_t in_channels() const { return in_channels_; }

private:
    DiscriminatorConfig cfg_;
    std::int64_t in_channels_;
    std::vector<torch::nn::Conv2d> convs_;
    // Affine parameters and running statistics of the normalised layers.
    std::vector<torch::Tensor> bn_weight_, bn_bias_, bn_mean_, bn_var_;
};
TORCH_MODULE(Discriminator);

struct PairedFeatures {
    std::vector<torch::Tensor> real, fake;
};

// Runs real and fake through one forward pass so both halves share the same
// batch statistics, then splits the features.
PairedFeatures paired_features(Discriminator& d, const torch::Tensor& real, const torch::Tensor& fake, NormMode mode);

// Mean over layers of the mean absolute feature difference.
torch::Tensor multiscale_loss(const std::vector<torch::Tensor>& real, const std::vector<torch::Tensor>& fake);

}  // namespace spdnet::adv
