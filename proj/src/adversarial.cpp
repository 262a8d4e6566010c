#include "spdnet/adversarial.hpp"

namespace spdnet::adv {
namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {
constexpr double kBnMomentum = 0.1;
constexpr double kBnEps = 1e-5;
}  // namespace

torch::Tensor fuse(const torch::Tensor& img, const torch::Tensor& mask, FusionMode mode) {
    if (img.dim() != 4 || mask.dim() != 4 || img.size(1) != 1 || img.size(0) != mask.size(0) ||
        img.size(2) != mask.size(2) || img.size(3) != mask.size(3))
        throw ShapeMismatch("fuse: image " + c10::str(img.sizes()) + " and mask " + c10::str(mask.sizes()) +
                            " do not line up");
    if (mode == FusionMode::Concat) return torch::cat({img, mask}, 1);
    return img * mask;
}

std::int64_t fused_channels(std::int64_t num_classes, FusionMode mode) {
    return mode == FusionMode::Concat ? num_classes + 1 : num_classes;
}

DiscriminatorImpl::DiscriminatorImpl(const DiscriminatorConfig& cfg, std::int64_t in_channels)
    : cfg_(cfg), in_channels_(in_channels) {
    cfg_.validate();
    std::int64_t in = in_channels;
    for (std::int64_t i = 0; i < cfg_.num_layers; ++i) {
        const auto out = cfg_.base_channels << i;
        const bool normed = i >= cfg_.num_layers - 2;
        // Normalised layers carry their own shift, so the conv bias is redundant.
        convs_.push_back(register_module("conv" + std::to_string(i),
                                         nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(2).padding(1).bias(!normed))));
        if (normed) {
            const auto tag = std::to_string(i);
            bn_weight_.push_back(register_parameter("bn" + tag + "_weight", torch::ones({out})));
            bn_bias_.push_back(register_parameter("bn" + tag + "_bias", torch::zeros({out})));
            bn_mean_.push_back(register_buffer("bn" + tag + "_running_mean", torch::zeros({out})));
            bn_var_.push_back(register_buffer("bn" + tag + "_running_var", torch::ones({out})));
        }
        in = out;
    }
    clip_weights();
}

void DiscriminatorImpl::clip_weights() {
    if (cfg_.weight_clip <= 0) return;
    torch::NoGradGuard no_grad;
    for (auto& p : parameters()) p.clamp_(-cfg_.weight_clip, cfg_.weight_clip);
}

std::vector<torch::Tensor> DiscriminatorImpl::features(const torch::Tensor& x, NormMode mode) {
    const auto min_side = std::int64_t{1} << cfg_.num_layers;
    if (x.dim() != 4 || x.size(1) != in_channels_)
        throw ShapeMismatch("discriminator expects (B," + std::to_string(in_channels_) + ",H,W), got " +
                            c10::str(x.sizes()));
    if (x.size(2) < min_side || x.size(3) < min_side)
        throw ShapeMismatch("discriminator input " + c10::str(x.sizes()) + " is smaller than " +
                            std::to_string(min_side) + " per side");
    std::vector<torch::Tensor> feats;
    auto h = x;
    const auto first_normed = cfg_.num_layers - 2;
    for (std::int64_t i = 0; i < cfg_.num_layers; ++i) {
        h = convs_[static_cast<std::size_t>(i)](h);
        if (i >= first_normed) {
            const auto k = static_cast<std::size_t>(i - first_normed);
            switch (mode) {
                case NormMode::Train:
                    h = torch::batch_norm(h, bn_weight_[k], bn_bias_[k], bn_mean_[k], bn_var_[k], true, kBnMomentum,
                                          kBnEps, false);
                    break;
                case NormMode::Frozen:
                    h = torch::batch_norm(h, bn_weight_[k], bn_bias_[k], {}, {}, true, kBnMomentum, kBnEps, false);
                    break;
                case NormMode::Eval:
                    h = torch::batch_norm(h, bn_weight_[k], bn_bias_[k], bn_mean_[k], bn_var_[k], false, kBnMomentum,
                                          kBnEps, false);
                    break;
            }
        }
        h = F::leaky_relu(h, F::LeakyReLUFuncOptions().negative_slope(cfg_.leaky_slope));
        feats.push_back(h);
    }
    return feats;
}

PairedFeatures paired_features(Discriminator& d, const torch::Tensor& real, const torch::Tensor& fake, NormMode mode) {
    if (!real.sizes().equals(fake.sizes()))
        throw ShapeMismatch("real and fake discriminator inputs differ in shape");
    const auto b = real.size(0);
    auto all = d->features(torch::cat({real, fake}, 0), mode);
    PairedFeatures out;
    for (auto& f : all) {
        out.real.push_back(f.narrow(0, 0, b));
        out.fake.push_back(f.narrow(0, b, b));
    }
    return out;
}

torch::Tensor multiscale_loss(const std::vector<torch::Tensor>& real, const std::vector<torch::Tensor>& fake) {
    if (real.size() != fake.size() || real.empty())
        throw ShapeMismatch("multiscale_loss needs two equal-length, non-empty feature lists");
    std::vector<torch::Tensor> terms;
    for (std::size_t i = 0; i < real.size(); ++i) {
        if (!real[i].sizes().equals(fake[i].sizes()))
            throw ShapeMismatch("multiscale_loss: layer " + std::to_string(i) + " shapes differ");
        terms.push_back((real[i] - fake[i]).abs().mean());
    }
    return torch::stack(terms).mean();
}

}  // namespace spdnet::adv
