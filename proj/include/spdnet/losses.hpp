#pragma once

#include <torch/torch.h>

#include <vector>

#include "spdnet/config.hpp"

namespace spdnet::loss {

inline constexpr double kProbClamp = 1e-7;
inline constexpr double kDiceSmooth = 1e-6;
// KL values below this are treated as an upstream bug rather than round-off.
inline constexpr double kKlTolerance = 1e-6;

// p: (B,C,H,W) probabilities; y: (B,H,W) int64 class ids.
//
// Log-likelihood form: mean over pixels of sum_c [y ln p + (1-y) ln(1-p)],
// with p clamped to [1e-7, 1-1e-7]. Non-positive.
torch::Tensor cross_entropy(const torch::Tensor& p, const torch::Tensor& y);

// Soft Dice loss per sample and foreground class, averaged over both.
torch::Tensor dice_loss(const torch::Tensor& p, const torch::Tensor& y);

struct RecTerms {
    torch::Tensor ce, dice, rec;
};

// rec = -alpha * ce + (1 - alpha) * dice.
RecTerms rec_terms(const torch::Tensor& p, const torch::Tensor& y, const LossWeights& w);
torch::Tensor rec_loss(const torch::Tensor& p, const torch::Tensor& y, const LossWeights& w);

// rec + beta * sum(kls). A KL term below -1e-6 throws InvalidArgument.
torch::Tensor elbo_loss(const torch::Tensor& rec, const std::vector<torch::Tensor>& kls, const LossWeights& w);

struct Objective {
    torch::Tensor segmentor;      // msl + elbo, minimised
    torch::Tensor discriminator;  // -msl, minimised
};

// Non-finite inputs throw NumericalError.
Objective total_objective(const torch::Tensor& msl, const torch::Tensor& elbo);

}  // namespace spdnet::loss
