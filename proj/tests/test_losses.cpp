#include <doctest.h>

#include "spdnet/losses.hpp"
#include "torch_support.hpp"

using namespace spdnet;
namespace st = spdnet::testing;

namespace {

const auto f64 = torch::TensorOptions().dtype(torch::kFloat64);

// Independent per-pixel loop over the definitions.
double oracle_ce(const torch::Tensor& p, const torch::Tensor& y) {
    const auto B = p.size(0), C = p.size(1), H = p.size(2), W = p.size(3);
    double total = 0;
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t i = 0; i < H; ++i)
            for (std::int64_t j = 0; j < W; ++j)
                for (std::int64_t c = 0; c < C; ++c) {
                    const double q = std::clamp(p[b][c][i][j].item<double>(), 1e-7, 1 - 1e-7);
                    const bool on = y[b][i][j].item<std::int64_t>() == c;
                    total += on ? std::log(q) : std::log(1 - q);
                }
    return total / static_cast<double>(B * H * W);
}

double oracle_dice_loss(const torch::Tensor& p, const torch::Tensor& y) {
    const auto B = p.size(0), C = p.size(1), H = p.size(2), W = p.size(3);
    double sum = 0;
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t c = 1; c < C; ++c) {
            double inter = 0, ps = 0, ys = 0;
            for (std::int64_t i = 0; i < H; ++i)
                for (std::int64_t j = 0; j < W; ++j) {
                    const double q = p[b][c][i][j].item<double>();
                    const double t = y[b][i][j].item<std::int64_t>() == c;
                    inter += q * t;
                    ps += q;
                    ys += t;
                }
            sum += 1 - (2 * inter + 1e-6) / (ps + ys + 1e-6);
        }
    return sum / static_cast<double>(B * (C - 1));
}

}  // namespace

TEST_CASE("cross entropy and Dice loss match per-pixel oracles") {
    torch::manual_seed(1);
    for (int classes : {2, 4}) {
        auto p = torch::softmax(torch::randn({2, classes, 5, 6}, f64), 1);
        auto y = torch::randint(0, classes, {2, 5, 6}, torch::kInt64);
        CHECK(loss::cross_entropy(p, y).item<double>() == doctest::Approx(oracle_ce(p, y)).epsilon(1e-12));
        CHECK(loss::dice_loss(p, y).item<double>() == doctest::Approx(oracle_dice_loss(p, y)).epsilon(1e-12));
    }
}

TEST_CASE("cross entropy is non-positive and maximal at the truth") {
    torch::manual_seed(2);
    auto y = torch::randint(0, 3, {1, 4, 4}, torch::kInt64);
    auto perfect = torch::one_hot(y, 3).permute({0, 3, 1, 2}).to(torch::kFloat64);
    const double top = loss::cross_entropy(perfect, y).item<double>();
    CHECK(top <= 0);
    CHECK(top == doctest::Approx(3 * std::log(1 - 1e-7)));
    for (int t = 0; t < 10; ++t) {
        auto p = torch::softmax(torch::randn({1, 3, 4, 4}, f64), 1);
        CHECK(loss::cross_entropy(p, y).item<double>() < top);
    }
    CHECK(std::isfinite(loss::cross_entropy(1 - perfect, y).item<double>()));
}

TEST_CASE("Dice loss is 0 for a perfect map and 1 for a disjoint one") {
    auto y = torch::zeros({1, 4, 4}, torch::kInt64);
    y.slice(1, 0, 2).fill_(1);
    auto perfect = torch::one_hot(y, 2).permute({0, 3, 1, 2}).to(torch::kFloat64);
    CHECK(loss::dice_loss(perfect, y).item<double>() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(loss::dice_loss(1 - perfect, y).item<double>() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("rec and elbo combine their terms exactly") {
    torch::manual_seed(3);
    auto p = torch::softmax(torch::randn({2, 2, 4, 4}, f64), 1);
    auto y = torch::randint(0, 2, {2, 4, 4}, torch::kInt64);
    const LossWeights w{0.3, 2.5};
    const auto t = loss::rec_terms(p, y, w);
    CHECK(t.rec.item<double>() == -0.3 * t.ce.item<double>() + (1 - 0.3) * t.dice.item<double>());
    CHECK(loss::rec_loss(p, y, w).item<double>() == t.rec.item<double>());
    std::vector<torch::Tensor> kls{torch::tensor(0.5, f64), torch::tensor(1.5, f64)};
    CHECK(loss::elbo_loss(t.rec, kls, w).item<double>() == t.rec.item<double>() + 2.5 * 2.0);
    CHECK(loss::elbo_loss(t.rec, {}, w).item<double>() == t.rec.item<double>());
}

TEST_CASE("a materially negative KL is rejected") {
    const LossWeights w;
    auto rec = torch::tensor(1.0, f64);
    CHECK_THROWS_AS(loss::elbo_loss(rec, {torch::tensor(-1e-3, f64)}, w), InvalidArgument);
    CHECK_NOTHROW(loss::elbo_loss(rec, {torch::tensor(-1e-9, f64)}, w));
}

TEST_CASE("total objective: segmentor minimises msl + elbo, discriminator maximises msl") {
    auto msl = torch::tensor(0.25, f64), elbo = torch::tensor(2.0, f64);
    const auto o = loss::total_objective(msl, elbo);
    CHECK(o.segmentor.item<double>() == 2.25);
    CHECK(o.discriminator.item<double>() == -0.25);
    CHECK_THROWS_AS(loss::total_objective(torch::tensor(NAN, f64), elbo), NumericalError);
    CHECK_THROWS_AS(loss::total_objective(msl, torch::tensor(INFINITY, f64)), NumericalError);
}

TEST_CASE("loss gradients match finite differences") {
    torch::manual_seed(4);
    auto y = torch::randint(0, 3, {2, 3, 3}, torch::kInt64);
    auto p = torch::softmax(0.5 * torch::randn({2, 3, 3, 3}, f64), 1).detach().requires_grad_(true);
    const LossWeights w;
    CHECK(st::fd_max_rel_error([&] { return loss::cross_entropy(p, y); }, p, 0, 1e-6) < 1e-6);
    CHECK(st::fd_max_rel_error([&] { return loss::dice_loss(p, y); }, p, 0, 1e-6) < 1e-6);
    CHECK(st::fd_max_rel_error([&] { return loss::rec_loss(p, y, w); }, p, 0, 1e-6) < 1e-6);
}

TEST_CASE("loss inputs are validated") {
    auto p = torch::full({1, 2, 3, 3}, 0.5, f64);
    CHECK_THROWS_AS(loss::cross_entropy(p, torch::zeros({1, 4, 4}, torch::kInt64)), ShapeMismatch);
    CHECK_THROWS_AS(loss::dice_loss(p, torch::full({1, 3, 3}, 5, torch::kInt64)), ShapeMismatch);
}
