#pragma once

#include <torch/torch.h>

#include <vector>

#include "spdnet/config.hpp"

namespace spdnet::seg {

// Truncated normal in [-2 std, 2 std] by rejection.
void trunc_normal_(torch::Tensor& t, double std);

// (B,H,W,C) -> (B*nW, w*w, C), windows in row-major order.
torch::Tensor window_partition(const torch::Tensor& x, std::int64_t window);
torch::Tensor window_reverse(const torch::Tensor& windows, std::int64_t window, std::int64_t batch, std::int64_t rows,
                             std::int64_t cols);
// Additive (nW, N, N) mask: 0 within a shifted region, -inf across regions.
torch::Tensor shifted_window_mask(std::int64_t rows, std::int64_t cols, std::int64_t window, std::int64_t shift,
                                  const torch::TensorOptions& opts);

// Multi-head self-attention over the tokens of one window, with a learned
// relative position bias.
class WindowAttentionImpl : public torch::nn::Module {
public:
    WindowAttentionImpl(std::int64_t dim, std::int64_t window, std::int64_t heads);

    // x: (B*nW, N, C). mask: optional (nW, N, N). When `weights` is non-null it
    // receives the softmax attention (B*nW, heads, N, N).
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& mask = {}, torch::Tensor* weights = nullptr);

    std::int64_t heads() const { return heads_; }

private:
    std::int64_t dim_, window_, heads_;
    double scale_;
    torch::nn::Linear qkv_{nullptr}, proj_{nullptr};
    torch::Tensor bias_table_;
    torch::Tensor bias_index_;
};
TORCH_MODULE(WindowAttention);

// Pre-norm windowed attention + MLP, each with a residual connection. Odd
// blocks of a stage shift the window grid by window/2.
class SwinBlockImpl : public torch::nn::Module {
public:
    SwinBlockImpl(std::int64_t dim, std::int64_t heads, std::int64_t window, bool shifted, double mlp_ratio);

    // x: (B,H,W,C); H and W must be multiples of the window.
    torch::Tensor forward(const torch::Tensor& x);
    // Softmax weights the block's attention produces for x.
    torch::Tensor attention_weights(const torch::Tensor& x);

    std::int64_t window() const { return window_; }
    // Shift applied at this resolution (0 when one window spans the grid).
    std::int64_t effective_shift(std::int64_t rows, std::int64_t cols) const;

private:
    torch::Tensor attend(const torch::Tensor& x, torch::Tensor* weights);

    std::int64_t window_;
    bool shifted_;
    torch::nn::LayerNorm norm1_{nullptr}, norm2_{nullptr};
    WindowAttention attn_{nullptr};
    torch::nn::Linear fc1_{nullptr}, fc2_{nullptr};
};
TORCH_MODULE(SwinBlock);

// Non-overlapping patch x patch tiles, linearly embedded: (B,Cin,H,W) -> (B,H/p,W/p,C).
class PatchPartitionImpl : public torch::nn::Module {
public:
    PatchPartitionImpl(std::int64_t in_channels, std::int64_t patch, std::int64_t dim);
    torch::Tensor forward(const torch::Tensor& img);

private:
    std::int64_t patch_;
    torch::nn::Conv2d embed_{nullptr};
};
TORCH_MODULE(PatchPartition);

// 2x2 neighbourhood concatenation + LayerNorm + linear reduction: (B,H,W,C) -> (B,H/2,W/2,out).
class PatchMergingImpl : public torch::nn::Module {
public:
    PatchMergingImpl(std::int64_t dim, std::int64_t out_dim);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::LayerNorm norm_{nullptr};
    torch::nn::Linear reduction_{nullptr};
};
TORCH_MODULE(PatchMerging);

// Two 3x3 conv + instance-norm + leaky-ReLU layers with a projected residual.
class ResConvBlockImpl : public torch::nn::Module {
public:
    ResConvBlockImpl(std::int64_t in, std::int64_t out);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr}, skip_{nullptr};
    torch::nn::InstanceNorm2d norm1_{nullptr}, norm2_{nullptr}, norm_skip_{nullptr};
};
TORCH_MODULE(ResConvBlock);

// Encoder output. All grids are NCHW; levels[i] has side input/(patch*2^i)
// and stage_channels[i] channels.
struct FeaturePyramid {
    torch::Tensor input;  // full-resolution convolutional features of the image
    torch::Tensor embed;  // patch-partition features, before any attention block
    std::vector<torch::Tensor> levels;
};

// Swin-style encoder with a convolutional decoder that concatenates, per
// level, the upsampled features, the encoder skip and the latent sample. A
// residual block on the raw image feeds the full-resolution head.
class SegmentorImpl : public torch::nn::Module {
public:
    explicit SegmentorImpl(SegmentorConfig cfg);

    FeaturePyramid encode(const torch::Tensor& img);
    // latents are ordered coarse -> fine: latents[j] matches levels[L-1-j].
    // Empty when latent_channels_per_scale == 0. Returns (B,C,H,W) softmax probabilities.
    torch::Tensor decode(const FeaturePyramid& pyr, const std::vector<torch::Tensor>& latents);
    torch::Tensor forward(const torch::Tensor& img, const std::vector<torch::Tensor>& latents);

    const SegmentorConfig& config() const { return cfg_; }
    // Block j of stage s.
    SwinBlock block(std::size_t stage, std::size_t j) const { return stages_[stage][j]; }
    PatchPartition patch_partition() const { return partition_; }

private:
    bool injects(std::size_t level) const;

    SegmentorConfig cfg_;
    PatchPartition partition_{nullptr};
    std::vector<PatchMerging> merges_;  // merges_[s-1] precedes stage s
    std::vector<std::vector<SwinBlock>> stages_;
    std::vector<ResConvBlock> dec_blocks_;  // per level
    std::vector<torch::nn::ConvTranspose2d> ups_;  // ups_[i] takes level i+1 -> i
    ResConvBlock input_block_{nullptr}, head_block_{nullptr};
    torch::nn::ConvTranspose2d head_up_{nullptr};
    torch::nn::Conv2d head_out_{nullptr};
};
TORCH_MODULE(Segmentor);

}  // namespace spdnet::seg
