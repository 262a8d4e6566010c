#include "spdnet/probabilistic.hpp"

#include "spdnet/tensor_ops.hpp"

namespace spdnet::prob {
namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {

nn::Sequential conv_block(std::int64_t in, std::int64_t out) {
    return nn::Sequential(nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1)),
                          nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.1)),
                          nn::Conv2d(nn::Conv2dOptions(out, out, 3).padding(1)),
                          nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.1)));
}

void require_same(const GaussianGrid& a, const GaussianGrid& b) {
    if (!a.mu.sizes().equals(b.mu.sizes()) || !a.sigma.sizes().equals(b.sigma.sizes()) ||
        !a.mu.sizes().equals(a.sigma.sizes()))
        throw ShapeMismatch("kl_divergence: grids differ in shape (" + c10::str(a.mu.sizes()) + " vs " +
                            c10::str(b.mu.sizes()) + ")");
}

}  // namespace

LatentSample sample_latent(const GaussianGrid& g, at::Generator& gen) {
    auto eps = at::randn(g.mu.sizes(), gen, g.mu.options());
    return LatentSample{g.mu + g.sigma * eps, g.scale_index};
}

torch::Tensor kl_divergence(const GaussianGrid& q, const GaussianGrid& p) {
    require_same(q, p);
    auto var_q = q.sigma * q.sigma;
    auto var_p = p.sigma * p.sigma;
    auto diff = q.mu - p.mu;
    return (torch::log(p.sigma / q.sigma) + (var_q + diff * diff) / (2 * var_p) - 0.5).sum();
}

std::vector<torch::Tensor> hierarchy_kl(const LatentHierarchy& q, const LatentHierarchy& p) {
    if (q.size() != p.size()) throw ShapeMismatch("hierarchies differ in depth");
    std::vector<torch::Tensor> out;
    for (std::size_t i = 0; i < q.size(); ++i)
        out.push_back(kl_divergence(q[i], p[i]) / static_cast<double>(q[i].mu.size(0)));
    return out;
}

LatentNetImpl::LatentNetImpl(std::int64_t in_channels, std::int64_t patch, std::vector<std::int64_t> channels,
                             std::int64_t latent_channels)
    : in_channels_(in_channels), patch_(patch), latent_channels_(latent_channels), channels_(std::move(channels)) {
    if (channels_.empty()) throw InvalidArgument("latent net needs at least one scale");
    if (latent_channels_ < 1) throw InvalidArgument("latent net needs latent_channels >= 1");
    const auto levels = channels_.size();
    stem_ = register_module("stem", patch_ > 1 ? nn::Conv2d(nn::Conv2dOptions(in_channels, channels_[0], patch_).stride(patch_))
                                               : nn::Conv2d(nn::Conv2dOptions(in_channels, channels_[0], 3).padding(1)));
    for (std::size_t i = 0; i < levels; ++i) {
        if (i > 0)
            down_.push_back(register_module(
                "down" + std::to_string(i),
                nn::Sequential(nn::Conv2d(nn::Conv2dOptions(channels_[i - 1], channels_[i], 3).stride(2).padding(1)),
                               nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.1)))));
        enc_.push_back(register_module("enc" + std::to_string(i), conv_block(channels_[i], channels_[i])));
        heads_.push_back(register_module("head" + std::to_string(i),
                                         nn::Conv2d(nn::Conv2dOptions(channels_[i], 2 * latent_channels_, 1))));
    }
    for (std::size_t i = 0; i + 1 < levels; ++i)
        dec_.push_back(register_module("dec" + std::to_string(i),
                                       conv_block(channels_[i + 1] + latent_channels_ + channels_[i], channels_[i])));
}

HierarchyOutput LatentNetImpl::forward(const torch::Tensor& input, Draw draw, at::Generator* gen,
                                       const std::optional<std::vector<torch::Tensor>>& injected) {
    if (input.dim() != 4 || input.size(1) != in_channels_)
        throw ShapeMismatch("latent net expects (B," + std::to_string(in_channels_) + ",H,W), got " +
                            c10::str(input.sizes()));
    const auto levels = channels_.size();
    const auto unit = patch_ << (levels - 1);
    if (input.size(2) % unit != 0 || input.size(3) % unit != 0)
        throw ShapeMismatch("latent net input sides must be multiples of " + std::to_string(unit));
    if (injected && injected->size() != levels)
        throw ShapeMismatch("expected " + std::to_string(levels) + " injected latents");
    if (draw == Draw::Sample && !gen && !injected) throw InvalidArgument("sampling requires a generator");

    std::vector<torch::Tensor> enc(levels);
    auto x = stem_(input);
    for (std::size_t i = 0; i < levels; ++i) {
        if (i > 0) x = down_[i - 1]->forward(x);
        x = enc_[i]->forward(x);
        enc[i] = x;
    }

    HierarchyOutput out;
    torch::Tensor carry;
    for (std::size_t i = levels; i-- > 0;) {
        torch::Tensor h = enc[i];
        if (i + 1 < levels) {
            auto up = F::interpolate(carry, F::InterpolateFuncOptions()
                                                .size(std::vector<std::int64_t>{enc[i].size(2), enc[i].size(3)})
                                                .mode(torch::kBilinear)
                                                .align_corners(false));
            h = dec_[i]->forward(torch::cat({up, enc[i]}, 1));
        }
        auto stats = heads_[i](h);
        GaussianGrid g{stats.slice(1, 0, latent_channels_),
                       F::softplus(stats.slice(1, latent_channels_, 2 * latent_channels_)) + kSigmaFloor,
                       static_cast<std::int64_t>(levels - 1 - i)};
        torch::Tensor z;
        if (injected) {
            z = (*injected)[levels - 1 - i];
            if (!z.sizes().equals(g.mu.sizes()))
                throw ShapeMismatch("injected latent " + c10::str(z.sizes()) + " does not match " + c10::str(g.mu.sizes()));
        } else if (draw == Draw::Mean) {
            z = g.mu;
        } else {
            z = sample_latent(g, *gen).z;
        }
        carry = torch::cat({h, z}, 1);
        out.grids.push_back(std::move(g));
        out.samples.push_back(z);
    }
    return out;
}

LatentNet make_prior(const SegmentorConfig& seg, const ProbabilisticConfig& cfg) {
    return LatentNet(seg.in_channels, seg.patch_size, cfg.channels, std::max<std::int64_t>(1, seg.latent_channels_per_scale));
}

LatentNet make_posterior(const SegmentorConfig& seg, const ProbabilisticConfig& cfg) {
    return LatentNet(seg.in_channels + seg.num_classes, seg.patch_size, cfg.channels,
                     std::max<std::int64_t>(1, seg.latent_channels_per_scale));
}

HierarchyOutput prior_forward(LatentNet& prior, const torch::Tensor& img, Draw draw, at::Generator* gen,
                              const std::optional<std::vector<torch::Tensor>>& injected) {
    return prior->forward(img, draw, gen, injected);
}

HierarchyOutput posterior_forward(LatentNet& posterior, const torch::Tensor& img, const torch::Tensor& labels,
                                  std::int64_t num_classes, Draw draw, at::Generator* gen) {
    if (posterior->in_channels() != img.size(1) + num_classes)
        throw SchemaError("posterior net built for " + std::to_string(posterior->in_channels() - img.size(1)) +
                          " classes, labels carry " + std::to_string(num_classes));
    if (labels.dim() != 3 || labels.size(1) != img.size(2) || labels.size(2) != img.size(3))
        throw ShapeMismatch("posterior labels must be (B,H,W) matching the image");
    if (labels.numel() > 0 && labels.max().item<std::int64_t>() >= num_classes)
        throw SchemaError("label value exceeds num_classes");
    auto y = one_hot_classes(labels, num_classes).to(img.dtype());
    return posterior->forward(torch::cat({img, y}, 1), draw, gen);
}

}  // namespace spdnet::prob
