#include <doctest.h>

#include "spdnet/adversarial.hpp"
#include "spdnet/tensor_ops.hpp"
#include "torch_support.hpp"

using namespace spdnet;

namespace {

DiscriminatorConfig small_disc(double clip = 0.0) {
    DiscriminatorConfig c;
    c.num_layers = 3;
    c.base_channels = 4;
    c.weight_clip = clip;
    return c;
}

}  // namespace

TEST_CASE("fusion modes") {
    auto img = torch::full({1, 1, 2, 2}, 2.0);
    auto mask = torch::tensor({0.25f, 0.75f, 1.0f, 0.0f, 0.5f, 0.5f, 0.0f, 1.0f}).reshape({1, 2, 2, 2});
    auto m = adv::fuse(img, mask, FusionMode::Multiply);
    CHECK(torch::equal(m, mask * 2.0));
    auto c = adv::fuse(img, mask, FusionMode::Concat);
    CHECK(c.size(1) == 3);
    CHECK(torch::equal(c.slice(1, 0, 1), img));
    CHECK(adv::fused_channels(2, FusionMode::Multiply) == 2);
    CHECK(adv::fused_channels(2, FusionMode::Concat) == 3);
}

TEST_CASE("discriminator feature pyramid halves per layer with doubling width") {
    torch::manual_seed(1);
    adv::Discriminator d(small_disc(), 2);
    auto f = d->features(torch::rand({2, 2, 32, 32}), adv::NormMode::Train);
    REQUIRE(f.size() == 3);
    CHECK(f[0].sizes() == torch::IntArrayRef({2, 4, 16, 16}));
    CHECK(f[1].sizes() == torch::IntArrayRef({2, 8, 8, 8}));
    CHECK(f[2].sizes() == torch::IntArrayRef({2, 16, 4, 4}));
    CHECK_THROWS_AS(d->features(torch::rand({1, 2, 4, 4}), adv::NormMode::Eval), ShapeMismatch);
    CHECK_THROWS_AS(d->features(torch::rand({1, 3, 32, 32}), adv::NormMode::Eval), ShapeMismatch);
}

TEST_CASE("norm modes: only Train touches the running statistics") {
    torch::manual_seed(2);
    adv::Discriminator d(small_disc(), 2);
    auto snapshot = [&] {
        std::vector<torch::Tensor> out;
        for (auto& b : d->buffers()) out.push_back(b.clone());
        return out;
    };
    auto same = [](const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
        for (std::size_t i = 0; i < a.size(); ++i)
            if (!torch::equal(a[i], b[i])) return false;
        return true;
    };
    auto x = torch::rand({4, 2, 32, 32}) * 3;
    const auto before = snapshot();
    d->features(x, adv::NormMode::Frozen);
    CHECK(same(before, snapshot()));
    d->features(x, adv::NormMode::Eval);
    CHECK(same(before, snapshot()));
    d->features(x, adv::NormMode::Train);
    CHECK_FALSE(same(before, snapshot()));
}

TEST_CASE("Eval mode is per-sample; batch modes couple the batch") {
    torch::manual_seed(3);
    adv::Discriminator d(small_disc(), 2);
    auto x = torch::rand({4, 2, 32, 32});
    auto full = d->features(x, adv::NormMode::Eval).back();
    auto part = d->features(x.slice(0, 0, 2), adv::NormMode::Eval).back();
    CHECK(torch::allclose(full.slice(0, 0, 2), part, 1e-5, 1e-6));
    auto bfull = d->features(x, adv::NormMode::Frozen).back();
    auto bpart = d->features(x.slice(0, 0, 2), adv::NormMode::Frozen).back();
    CHECK_FALSE(torch::allclose(bfull.slice(0, 0, 2), bpart, 1e-5, 1e-6));
}

TEST_CASE("paired features share batch statistics") {
    torch::manual_seed(4);
    adv::Discriminator d(small_disc(), 2);
    auto real = torch::rand({2, 2, 32, 32}), fake = torch::rand({2, 2, 32, 32});
    auto pf = adv::paired_features(d, real, fake, adv::NormMode::Frozen);
    auto joint = d->features(torch::cat({real, fake}, 0), adv::NormMode::Frozen);
    for (std::size_t i = 0; i < joint.size(); ++i) {
        CHECK(torch::allclose(pf.real[i], joint[i].slice(0, 0, 2)));
        CHECK(torch::allclose(pf.fake[i], joint[i].slice(0, 2, 4)));
    }
}

TEST_CASE("multiscale loss is the mean over layers of mean absolute differences") {
    std::vector<torch::Tensor> a{torch::zeros({1, 1, 2, 2}), torch::zeros({1, 2, 1, 1})};
    std::vector<torch::Tensor> b{torch::ones({1, 1, 2, 2}), torch::full({1, 2, 1, 1}, 3.0)};
    CHECK(adv::multiscale_loss(a, b).item<float>() == doctest::Approx(2.0));
    CHECK(adv::multiscale_loss(a, a).item<float>() == 0.0f);
    CHECK_THROWS(adv::multiscale_loss(a, {b[0]}));
}

TEST_CASE("property: multiscale loss is symmetric and non-negative") {
    torch::manual_seed(5);
    adv::Discriminator d(small_disc(), 2);
    for (int t = 0; t < 10; ++t) {
        auto pf = adv::paired_features(d, torch::rand({1, 2, 32, 32}), torch::rand({1, 2, 32, 32}), adv::NormMode::Frozen);
        const auto ab = adv::multiscale_loss(pf.real, pf.fake).item<float>();
        CHECK(ab >= 0.0f);
        CHECK(ab == doctest::Approx(adv::multiscale_loss(pf.fake, pf.real).item<float>()));
    }
}

TEST_CASE("weight clipping bounds every parameter from construction on") {
    adv::Discriminator d(small_disc(0.01), 2);
    for (const auto& p : d->parameters()) CHECK(p.abs().max().item<float>() <= 0.01f);
    {
        torch::NoGradGuard ng;
        for (auto& p : d->parameters()) p.mul_(100);
    }
    d->clip_weights();
    for (const auto& p : d->parameters()) CHECK(p.abs().max().item<float>() <= 0.01f);
    adv::Discriminator free(small_disc(0.0), 2);
    bool any_large = false;
    for (const auto& p : free->parameters()) any_large = any_large || p.abs().max().item<float>() > 0.5f;
    CHECK(any_large);  // batch-norm scales start at 1
}
