#include "spdnet/losses.hpp"

#include "spdnet/tensor_ops.hpp"

namespace spdnet::loss {

namespace {

torch::Tensor target_like(const torch::Tensor& p, const torch::Tensor& y) {
    if (p.dim() != 4 || y.dim() != 3 || p.size(0) != y.size(0) || p.size(2) != y.size(1) || p.size(3) != y.size(2))
        throw ShapeMismatch("loss: probabilities " + c10::str(p.sizes()) + " vs labels " + c10::str(y.sizes()));
    if (y.numel() > 0 && (y.min().item<std::int64_t>() < 0 || y.max().item<std::int64_t>() >= p.size(1)))
        throw ShapeMismatch("loss: label ids outside [0, " + std::to_string(p.size(1)) + ")");
    return one_hot_classes(y, p.size(1)).to(p.dtype());
}

}  // namespace

torch::Tensor cross_entropy(const torch::Tensor& p, const torch::Tensor& y) {
    auto t = target_like(p, y);
    auto pc = p.clamp(kProbClamp, 1.0 - kProbClamp);
    return (t * torch::log(pc) + (1 - t) * torch::log(1 - pc)).sum(1).mean();
}

torch::Tensor dice_loss(const torch::Tensor& p, const torch::Tensor& y) {
    auto t = target_like(p, y);
    if (p.size(1) < 2) throw InvalidArgument("dice_loss needs at least one foreground class");
    auto pf = p.slice(1, 1).flatten(2);
    auto tf = t.slice(1, 1).flatten(2);
    auto inter = (pf * tf).sum(2);
    auto denom = pf.sum(2) + tf.sum(2);
    return (1 - (2 * inter + kDiceSmooth) / (denom + kDiceSmooth)).mean();
}

RecTerms rec_terms(const torch::Tensor& p, const torch::Tensor& y, const LossWeights& w) {
    RecTerms r{cross_entropy(p, y), dice_loss(p, y), {}};
    r.rec = -w.alpha * r.ce + (1 - w.alpha) * r.dice;
    return r;
}

torch::Tensor rec_loss(const torch::Tensor& p, const torch::Tensor& y, const LossWeights& w) {
    return rec_terms(p, y, w).rec;
}

torch::Tensor elbo_loss(const torch::Tensor& rec, const std::vector<torch::Tensor>& kls, const LossWeights& w) {
    auto total = rec;
    if (kls.empty()) return total;
    for (std::size_t i = 0; i < kls.size(); ++i) {
        const double v = kls[i].item<double>();
        if (v < -kKlTolerance)
            throw InvalidArgument("elbo_loss: KL term " + std::to_string(i) + " is negative (" + std::to_string(v) + ")");
    }
    return total + w.beta * torch::stack(kls).sum();
}

Objective total_objective(const torch::Tensor& msl, const torch::Tensor& elbo) {
    if (!all_finite(msl) || !all_finite(elbo))
        throw NumericalError("non-finite objective (msl=" + std::to_string(msl.item<double>()) +
                             ", elbo=" + std::to_string(elbo.item<double>()) + ")");
    return {msl + elbo, -msl};
}

}  // namespace spdnet::loss
