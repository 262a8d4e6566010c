#include "spdnet/model.hpp"

#include <ATen/CPUGeneratorImpl.h>

namespace spdnet {

SegmentorConfig effective_segmentor(const RunConfig& cfg) {
    auto s = cfg.segmentor;
    if (!cfg.train.ablation.probabilistic) s.latent_channels_per_scale = 0;
    return s;
}

SpdNetImpl::SpdNetImpl(const RunConfig& cfg) : cfg_(cfg) {
    const auto seg_cfg = effective_segmentor(cfg_);
    seg_ = register_module("segmentor", seg::Segmentor(seg_cfg));
    if (cfg_.train.ablation.probabilistic) {
        if (cfg_.probabilistic.channels.size() != cfg_.segmentor.stage_channels.size())
            throw SchemaError("probabilistic.channels must have one entry per segmentor stage");
        prior_ = register_module("prior", prob::make_prior(seg_cfg, cfg_.probabilistic));
        posterior_ = register_module("posterior", prob::make_posterior(seg_cfg, cfg_.probabilistic));
    }
    if (cfg_.train.ablation.discriminator)
        disc_ = register_module("discriminator",
                                adv::Discriminator(cfg_.discriminator,
                                                   adv::fused_channels(seg_cfg.num_classes, cfg_.discriminator.fusion)));
}

std::vector<torch::Tensor> SpdNetImpl::generator_parameters() const {
    auto out = seg_->parameters();
    if (prior_) {
        for (auto& p : prior_->parameters()) out.push_back(p);
        for (auto& p : posterior_->parameters()) out.push_back(p);
    }
    return out;
}

std::vector<torch::Tensor> SpdNetImpl::discriminator_parameters() const {
    return disc_ ? disc_->parameters() : std::vector<torch::Tensor>{};
}

std::vector<std::pair<std::string, torch::Tensor>> SpdNetImpl::named_state() const {
    std::vector<std::pair<std::string, torch::Tensor>> out;
    for (const auto& kv : named_parameters(true)) out.emplace_back(kv.key(), kv.value());
    for (const auto& kv : named_buffers(true)) out.emplace_back(kv.key(), kv.value());
    return out;
}

std::vector<std::string> SpdNetImpl::components() const {
    std::vector<std::string> out{"segmentor"};
    if (prior_) {
        out.emplace_back("prior");
        out.emplace_back("posterior");
    }
    if (disc_) out.emplace_back("discriminator");
    return out;
}

namespace {
std::int64_t count(const std::vector<torch::Tensor>& ps) {
    std::int64_t n = 0;
    for (const auto& p : ps) n += p.numel();
    return n;
}
}  // namespace

ParameterCensus census(const SpdNetImpl& m) {
    auto& mm = const_cast<SpdNetImpl&>(m);
    ParameterCensus c;
    c.segmentor = count(mm.segmentor()->parameters());
    if (m.has_latents()) {
        c.prior = count(mm.prior()->parameters());
        c.posterior = count(mm.posterior()->parameters());
    }
    if (m.has_discriminator()) c.discriminator = count(mm.discriminator()->parameters());
    return c;
}

Prediction predict(SpdNetImpl& m, const torch::Tensor& img, LatentMode mode, std::int64_t samples, at::Generator& gen) {
    torch::NoGradGuard no_grad;
    if (samples < 1) throw InvalidArgument("samples must be >= 1");
    auto pyr = m.segmentor()->encode(img);
    auto run = [&](prob::Draw draw) {
        std::vector<torch::Tensor> z;
        if (m.has_latents()) z = prob::prior_forward(m.prior(), img, draw, &gen).samples;
        return m.segmentor()->decode(pyr, z);
    };
    const bool sampling = mode == LatentMode::PriorSample && m.has_latents();
    if (!sampling || samples == 1) {
        auto p = run(sampling ? prob::Draw::Sample : prob::Draw::Mean);
        return {p, torch::zeros({p.size(0), p.size(2), p.size(3)}, p.options())};
    }
    std::vector<torch::Tensor> draws;
    for (std::int64_t i = 0; i < samples; ++i) draws.push_back(run(prob::Draw::Sample));
    auto stack = torch::stack(draws);  // (N,B,C,H,W)
    return {stack.mean(0), stack.var(0, false).mean(1)};
}

at::Generator make_generator(std::uint64_t seed) { return at::make_generator<at::CPUGeneratorImpl>(seed); }

}  // namespace spdnet
