#include "spdnet/segmentor.hpp"

#include <cmath>

namespace spdnet::seg {
namespace nn = torch::nn;
namespace F = torch::nn::functional;

void trunc_normal_(torch::Tensor& t, double std) {
    torch::NoGradGuard guard;
    t.normal_(0.0, std);
    auto redraw = torch::empty_like(t);
    for (auto bad = t.abs() > 2 * std; bad.any().item<bool>(); bad = t.abs() > 2 * std) {
        redraw.normal_(0.0, std);
        t.copy_(torch::where(bad, redraw, t));
    }
}

torch::Tensor window_partition(const torch::Tensor& x, std::int64_t window) {
    const auto b = x.size(0), h = x.size(1), w = x.size(2), c = x.size(3);
    return x.view({b, h / window, window, w / window, window, c})
        .permute({0, 1, 3, 2, 4, 5})
        .contiguous()
        .view({-1, window * window, c});
}

torch::Tensor window_reverse(const torch::Tensor& windows, std::int64_t window, std::int64_t batch, std::int64_t rows,
                             std::int64_t cols) {
    const auto c = windows.size(-1);
    return windows.view({batch, rows / window, cols / window, window, window, c})
        .permute({0, 1, 3, 2, 4, 5})
        .contiguous()
        .view({batch, rows, cols, c});
}

torch::Tensor shifted_window_mask(std::int64_t rows, std::int64_t cols, std::int64_t window, std::int64_t shift,
                                  const torch::TensorOptions& opts) {
    auto regions = torch::zeros({1, rows, cols, 1}, torch::kFloat32);
    const std::int64_t row_cuts[] = {0, rows - window, rows - shift, rows};
    const std::int64_t col_cuts[] = {0, cols - window, cols - shift, cols};
    float id = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            regions.slice(1, row_cuts[i], row_cuts[i + 1]).slice(2, col_cuts[j], col_cuts[j + 1]).fill_(id++);
    auto ids = window_partition(regions, window).squeeze(-1);  // (nW, N)
    auto diff = ids.unsqueeze(1) - ids.unsqueeze(2);
    auto mask = torch::zeros(diff.sizes(), opts);
    return mask.masked_fill(diff != 0, -std::numeric_limits<double>::infinity());
}

WindowAttentionImpl::WindowAttentionImpl(std::int64_t dim, std::int64_t window, std::int64_t heads)
    : dim_(dim), window_(window), heads_(heads) {
    if (dim % heads != 0)
        throw InvalidArgument("attention dim " + std::to_string(dim) + " not divisible by " + std::to_string(heads) +
                              " heads");
    scale_ = 1.0 / std::sqrt(static_cast<double>(dim / heads));
    qkv_ = register_module("qkv", nn::Linear(dim, 3 * dim));
    proj_ = register_module("proj", nn::Linear(dim, dim));
    const auto span = 2 * window - 1;
    bias_table_ = register_parameter("relative_position_bias_table", torch::zeros({span * span, heads}));
    trunc_normal_(bias_table_, 0.02);

    const auto n = window * window;
    bias_index_ = torch::empty({n * n}, torch::kInt64);
    auto* idx = bias_index_.data_ptr<std::int64_t>();
    for (std::int64_t a = 0; a < n; ++a)
        for (std::int64_t b = 0; b < n; ++b) {
            const auto dr = a / window - b / window + window - 1;
            const auto dc = a % window - b % window + window - 1;
            idx[a * n + b] = dr * span + dc;
        }
}

torch::Tensor WindowAttentionImpl::forward(const torch::Tensor& x, const torch::Tensor& mask, torch::Tensor* weights) {
    const auto bw = x.size(0), n = x.size(1), c = x.size(2);
    auto qkv = qkv_(x).reshape({bw, n, 3, heads_, c / heads_}).permute({2, 0, 3, 1, 4});
    auto q = qkv[0] * scale_;
    auto k = qkv[1];
    auto v = qkv[2];
    auto attn = q.matmul(k.transpose(-2, -1));
    auto bias = bias_table_.index_select(0, bias_index_).view({n, n, heads_}).permute({2, 0, 1});
    attn = attn + bias.unsqueeze(0);
    if (mask.defined()) {
        const auto nw = mask.size(0);
        attn = attn.view({bw / nw, nw, heads_, n, n}) + mask.unsqueeze(1).unsqueeze(0);
        attn = attn.view({bw, heads_, n, n});
    }
    attn = torch::softmax(attn, -1);
    if (weights) *weights = attn;
    auto out = attn.matmul(v).transpose(1, 2).reshape({bw, n, c});
    return proj_(out);
}

SwinBlockImpl::SwinBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t window, bool shifted, double mlp_ratio)
    : window_(window), shifted_(shifted) {
    norm1_ = register_module("norm1", nn::LayerNorm(nn::LayerNormOptions({dim})));
    attn_ = register_module("attn", WindowAttention(dim, window, heads));
    norm2_ = register_module("norm2", nn::LayerNorm(nn::LayerNormOptions({dim})));
    const auto hidden = static_cast<std::int64_t>(std::llround(dim * mlp_ratio));
    fc1_ = register_module("fc1", nn::Linear(dim, hidden));
    fc2_ = register_module("fc2", nn::Linear(hidden, dim));
}

std::int64_t SwinBlockImpl::effective_shift(std::int64_t rows, std::int64_t cols) const {
    if (!shifted_ || (rows <= window_ && cols <= window_)) return 0;
    return window_ / 2;
}

torch::Tensor SwinBlockImpl::attend(const torch::Tensor& x, torch::Tensor* weights) {
    if (x.dim() != 4) throw ShapeMismatch("swin block expects (B,H,W,C)");
    const auto b = x.size(0), h = x.size(1), w = x.size(2);
    if (h % window_ != 0 || w % window_ != 0)
        throw ShapeMismatch("feature grid " + std::to_string(h) + "x" + std::to_string(w) +
                            " not divisible by window " + std::to_string(window_));
    const auto shift = effective_shift(h, w);
    auto y = norm1_(x);
    if (shift) y = torch::roll(y, {-shift, -shift}, {1, 2});
    torch::Tensor mask;
    if (shift) mask = shifted_window_mask(h, w, window_, shift, y.options());
    auto out = attn_(window_partition(y, window_), mask, weights);
    out = window_reverse(out, window_, b, h, w);
    if (shift) out = torch::roll(out, {shift, shift}, {1, 2});
    return out;
}

torch::Tensor SwinBlockImpl::forward(const torch::Tensor& x) {
    auto y = x + attend(x, nullptr);
    return y + fc2_(F::gelu(fc1_(norm2_(y))));
}

torch::Tensor SwinBlockImpl::attention_weights(const torch::Tensor& x) {
    torch::Tensor w;
    attend(x, &w);
    return w;
}

PatchPartitionImpl::PatchPartitionImpl(std::int64_t in_channels, std::int64_t patch, std::int64_t dim) : patch_(patch) {
    embed_ = register_module("embed", nn::Conv2d(nn::Conv2dOptions(in_channels, dim, patch).stride(patch)));
}

torch::Tensor PatchPartitionImpl::forward(const torch::Tensor& img) {
    if (img.size(2) % patch_ != 0 || img.size(3) % patch_ != 0)
        throw ShapeMismatch("image " + std::to_string(img.size(2)) + "x" + std::to_string(img.size(3)) +
                            " not divisible by patch size " + std::to_string(patch_));
    return embed_(img).permute({0, 2, 3, 1});
}

PatchMergingImpl::PatchMergingImpl(std::int64_t dim, std::int64_t out_dim) {
    norm_ = register_module("norm", nn::LayerNorm(nn::LayerNormOptions({4 * dim})));
    reduction_ = register_module("reduction", nn::Linear(nn::LinearOptions(4 * dim, out_dim).bias(false)));
}

torch::Tensor PatchMergingImpl::forward(const torch::Tensor& x) {
    const auto h = x.size(1), w = x.size(2);
    if (h % 2 != 0 || w % 2 != 0)
        throw ShapeMismatch("patch merging needs even sides, got " + std::to_string(h) + "x" + std::to_string(w));
    auto x0 = x.slice(1, 0, h, 2).slice(2, 0, w, 2);
    auto x1 = x.slice(1, 1, h, 2).slice(2, 0, w, 2);
    auto x2 = x.slice(1, 0, h, 2).slice(2, 1, w, 2);
    auto x3 = x.slice(1, 1, h, 2).slice(2, 1, w, 2);
    return reduction_(norm_(torch::cat({x0, x1, x2, x3}, -1)));
}

ResConvBlockImpl::ResConvBlockImpl(std::int64_t in, std::int64_t out) {
    auto conv = [](std::int64_t i, std::int64_t o, std::int64_t k) {
        return nn::Conv2d(nn::Conv2dOptions(i, o, k).padding(k / 2).bias(false));
    };
    auto norm = [](std::int64_t c) { return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(c).affine(true)); };
    conv1_ = register_module("conv1", conv(in, out, 3));
    norm1_ = register_module("norm1", norm(out));
    conv2_ = register_module("conv2", conv(out, out, 3));
    norm2_ = register_module("norm2", norm(out));
    skip_ = register_module("skip", conv(in, out, 1));
    norm_skip_ = register_module("norm_skip", norm(out));
}

torch::Tensor ResConvBlockImpl::forward(const torch::Tensor& x) {
    auto y = F::leaky_relu(norm1_(conv1_(x)), F::LeakyReLUFuncOptions().negative_slope(0.01));
    y = norm2_(conv2_(y));
    return F::leaky_relu(y + norm_skip_(skip_(x)), F::LeakyReLUFuncOptions().negative_slope(0.01));
}

SegmentorImpl::SegmentorImpl(SegmentorConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto& ch = cfg_.stage_channels;
    const auto levels = ch.size();
    partition_ = register_module("patch_partition", PatchPartition(cfg_.in_channels, cfg_.patch_size, ch[0]));
    for (std::size_t s = 0; s < levels; ++s) {
        if (s > 0) merges_.push_back(register_module("merge" + std::to_string(s), PatchMerging(ch[s - 1], ch[s])));
        std::vector<SwinBlock> blocks;
        for (std::int64_t j = 0; j < cfg_.stage_depths[s]; ++j)
            blocks.push_back(register_module(
                "stage" + std::to_string(s) + "_block" + std::to_string(j),
                SwinBlock(ch[s], cfg_.heads(static_cast<std::int64_t>(s)), cfg_.window_size, j % 2 == 1, cfg_.mlp_ratio)));
        stages_.push_back(std::move(blocks));
    }
    for (std::size_t i = 0; i < levels; ++i) {
        std::int64_t in = ch[i];
        if (i + 1 < levels) in += ch[i];
        if (i == 0) in += ch[0];
        if (injects(i)) in += cfg_.latent_channels_per_scale;
        dec_blocks_.push_back(register_module("decoder" + std::to_string(i), ResConvBlock(in, ch[i])));
    }
    for (std::size_t i = 0; i + 1 < levels; ++i)
        ups_.push_back(register_module(
            "up" + std::to_string(i),
            nn::ConvTranspose2d(nn::ConvTranspose2dOptions(ch[i + 1], ch[i], 2).stride(2).bias(false))));
    input_block_ = register_module("input_block", ResConvBlock(cfg_.in_channels, ch[0]));
    head_block_ = register_module("head_block", ResConvBlock(2 * ch[0], ch[0]));
    if (cfg_.patch_size > 1)
        head_up_ = register_module(
            "head_up", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(ch[0], ch[0], cfg_.patch_size).stride(cfg_.patch_size)));
    head_out_ = register_module("head_out", nn::Conv2d(nn::Conv2dOptions(ch[0], cfg_.num_classes, 1)));

    torch::NoGradGuard guard;
    for (auto& m : modules(/*include_self=*/false)) {
        if (auto* lin = m->as<nn::Linear>()) {
            trunc_normal_(lin->weight, 0.02);
            if (lin->bias.defined()) lin->bias.zero_();
        }
    }
}

bool SegmentorImpl::injects(std::size_t level) const {
    return cfg_.latent_channels_per_scale > 0 && (cfg_.latent_injection == LatentInjection::All || level == 0);
}

FeaturePyramid SegmentorImpl::encode(const torch::Tensor& img) {
    if (img.dim() != 4 || img.size(1) != cfg_.in_channels)
        throw ShapeMismatch("segmentor expects (B," + std::to_string(cfg_.in_channels) + ",H,W) input");
    FeaturePyramid pyr;
    pyr.input = input_block_(img);
    auto x = partition_(img);
    pyr.embed = x.permute({0, 3, 1, 2});
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        if (s > 0) x = merges_[s - 1](x);
        for (auto& blk : stages_[s]) x = blk(x);
        pyr.levels.push_back(x.permute({0, 3, 1, 2}));
    }
    return pyr;
}

torch::Tensor SegmentorImpl::decode(const FeaturePyramid& pyr, const std::vector<torch::Tensor>& latents) {
    const auto levels = pyr.levels.size();
    if (levels != stages_.size()) throw ShapeMismatch("feature pyramid has the wrong number of levels");
    const std::size_t expected = cfg_.latent_channels_per_scale > 0 ? levels : 0;
    if (latents.size() != expected)
        throw ShapeMismatch("decoder expects " + std::to_string(expected) + " latent samples, got " +
                            std::to_string(latents.size()));
    auto latent_at = [&](std::size_t level) {
        const auto& z = latents[levels - 1 - level];
        const auto& f = pyr.levels[level];
        if (z.dim() != 4 || z.size(0) != f.size(0) || z.size(1) != cfg_.latent_channels_per_scale ||
            z.size(2) != f.size(2) || z.size(3) != f.size(3))
            throw ShapeMismatch("latent sample for level " + std::to_string(level) + " has shape " +
                                c10::str(z.sizes()) + ", level features are " + c10::str(f.sizes()));
        return z;
    };
    torch::Tensor d;
    for (std::size_t i = levels; i-- > 0;) {
        std::vector<torch::Tensor> parts;
        if (i + 1 < levels) parts.push_back(ups_[i](d));
        parts.push_back(pyr.levels[i]);
        if (i == 0) parts.push_back(pyr.embed);
        if (injects(i)) parts.push_back(latent_at(i));
        d = dec_blocks_[i](torch::cat(parts, 1));
    }
    if (head_up_) d = F::leaky_relu(head_up_(d), F::LeakyReLUFuncOptions().negative_slope(0.01));
    d = head_block_(torch::cat({d, pyr.input}, 1));
    return torch::softmax(head_out_(d), 1);
}

torch::Tensor SegmentorImpl::forward(const torch::Tensor& img, const std::vector<torch::Tensor>& latents) {
    return decode(encode(img), latents);
}

}  // namespace spdnet::seg
