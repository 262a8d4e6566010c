#include "spdnet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <json.hpp>

#include "spdnet/losses.hpp"
#include "spdnet/tensor_ops.hpp"

namespace spdnet {
using nlohmann::json;

namespace {

constexpr std::uint64_t kLatentStream = 0x6c6174656e74ULL;
constexpr std::uint64_t kOrderStream = 0x6f72646572ULL;
constexpr std::uint64_t kEvalStream = 0x6576616cULL;

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json summary_to_json(const metrics::Summary& s) {
    return {{"n", s.n}, {"mean", s.mean}, {"median", s.median}, {"q1", s.q1}, {"q3", s.q3}};
}

std::vector<double> to_doubles(const std::vector<torch::Tensor>& ts) {
    std::vector<double> out;
    for (const auto& t : ts) out.push_back(t.item<double>());
    return out;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    auto fin = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return fin(fin(fin(a) ^ b) ^ c);
}

std::string to_jsonl(const StepRecord& r) {
    json j{{"type", "step"},        {"step", r.step},         {"epoch", r.epoch},
           {"rec", r.rec},          {"ce", r.ce},             {"dice", r.dice},
           {"kl_per_scale", r.kl_per_scale},                  {"msl", r.msl},
           {"disc_msl", r.disc_msl}, {"seg_total", r.seg_total}, {"disc_total", r.disc_total}};
    return j.dump();
}

std::string to_jsonl(const EpochRecord& r) {
    json j{{"type", "epoch"},
           {"epoch", r.epoch},
           {"steps", r.steps},
           {"mean_rec", r.mean_rec},
           {"mean_seg_total", r.mean_seg_total},
           {"wall_seconds", r.wall_seconds},
           {"timestamp", r.timestamp}};
    if (r.validation)
        j["validation"] = {{"dice", summary_to_json(r.validation->dice)},
                           {"jaccard", summary_to_json(r.validation->jaccard)},
                           {"hd_mm", summary_to_json(r.validation->hausdorff_mm)}};
    else
        j["validation"] = nullptr;
    return j.dump();
}

Trainer::Trainer(const RunConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    build();
}

Trainer::Trainer(const Checkpoint& ck) : cfg_(ck.config) {
    if (ck.kind != kKindModel) throw SchemaError("cannot resume from a '" + ck.kind + "' checkpoint");
    cfg_.validate();
    build();
    restore_model(*model_, ck);
    restore_adam(*opt_gen_, "opt_gen", ck);
    if (opt_disc_) restore_adam(*opt_disc_, "opt_disc", ck);
    restore_generator(gen_, ck);
    epoch_ = ck.epoch;
    step_ = ck.step;
}

void Trainer::build() {
    torch::manual_seed(cfg_.train.seed);
    model_ = SpdNet(cfg_);
    const auto opts = torch::optim::AdamOptions(cfg_.train.learning_rate)
                          .betas({cfg_.train.adam_beta1, cfg_.train.adam_beta2})
                          .eps(cfg_.train.adam_eps);
    opt_gen_ = std::make_unique<torch::optim::Adam>(model_->generator_parameters(), opts);
    if (model_->has_discriminator())
        opt_disc_ = std::make_unique<torch::optim::Adam>(model_->discriminator_parameters(), opts);
    gen_ = make_generator(mix_seed(cfg_.train.seed, kLatentStream));
}

bool Trainer::adversarial_active() const { return model_->has_discriminator() && step_ >= cfg_.train.adv_warmup; }

double Trainer::train_step_discriminator(const torch::Tensor& img, const torch::Tensor& labels) {
    if (!model_->has_discriminator()) throw InvalidArgument("discriminator is ablated");
    torch::Tensor probs;
    {
        torch::NoGradGuard no_grad;
        std::vector<torch::Tensor> z;
        if (model_->has_latents())
            z = prob::posterior_forward(model_->posterior(), img, labels, cfg_.segmentor.num_classes, prob::Draw::Sample,
                                        &gen_)
                    .samples;
        probs = model_->segmentor()->forward(img, z);
    }
    const auto mode = cfg_.discriminator.fusion;
    auto real = adv::fuse(img, one_hot_classes(labels, cfg_.segmentor.num_classes).to(img.dtype()), mode);
    auto fake = adv::fuse(img, probs, mode);
    auto feats = adv::paired_features(model_->discriminator(), real, fake, adv::NormMode::Train);
    auto msl = adv::multiscale_loss(feats.real, feats.fake);
    if (!all_finite(msl))
        throw NumericalError("discriminator loss is not finite at step " + std::to_string(step_),
                             last_checkpoint_ ? last_checkpoint_->string() : "");
    opt_disc_->zero_grad();
    (-msl).backward();
    opt_disc_->step();
    model_->discriminator()->clip_weights();
    return msl.item<double>();
}

SegStepResult Trainer::train_step_segmentor(const torch::Tensor& img, const torch::Tensor& labels) {
    std::vector<torch::Tensor> z, kls;
    if (model_->has_latents()) {
        auto q = prob::posterior_forward(model_->posterior(), img, labels, cfg_.segmentor.num_classes, prob::Draw::Sample,
                                         &gen_);
        auto p = prob::prior_forward(model_->prior(), img, prob::Draw::Sample, nullptr, q.samples);
        kls = prob::hierarchy_kl(q.grids, p.grids);
        z = std::move(q.samples);
    }
    auto probs = model_->segmentor()->forward(img, z);
    auto terms = loss::rec_terms(probs, labels, cfg_.losses);
    auto elbo = loss::elbo_loss(terms.rec, kls, cfg_.losses);

    auto msl = torch::zeros({}, probs.options());
    if (adversarial_active()) {
        const auto mode = cfg_.discriminator.fusion;
        auto real = adv::fuse(img, one_hot_classes(labels, cfg_.segmentor.num_classes).to(img.dtype()), mode);
        auto fake = adv::fuse(img, probs, mode);
        auto feats = adv::paired_features(model_->discriminator(), real, fake, adv::NormMode::Frozen);
        msl = adv::multiscale_loss(feats.real, feats.fake);
    }
    loss::Objective obj;
    try {
        obj = loss::total_objective(msl, elbo);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at step " + std::to_string(step_),
                             last_checkpoint_ ? last_checkpoint_->string() : "");
    }
    opt_gen_->zero_grad();
    obj.segmentor.backward();
    opt_gen_->step();
    // The discriminator's gradients from this pass are discarded; its own step
    // zeroes them before use.
    if (opt_disc_) opt_disc_->zero_grad();
    ++step_;

    SegStepResult r;
    r.msl = msl.item<double>();
    r.elbo = elbo.item<double>();
    r.rec = terms.rec.item<double>();
    r.ce = terms.ce.item<double>();
    r.dice = terms.dice.item<double>();
    r.seg_total = obj.segmentor.item<double>();
    r.kl_per_scale = to_doubles(kls);
    return r;
}

Checkpoint Trainer::snapshot() const {
    Checkpoint ck;
    ck.kind = kKindModel;
    ck.config = cfg_;
    ck.epoch = epoch_;
    ck.step = step_;
    store_model(ck, *model_);
    store_adam(ck, "opt_gen", *opt_gen_);
    if (opt_disc_) store_adam(ck, "opt_disc", *opt_disc_);
    store_generator(ck, gen_);
    return ck;
}

RunHistory Trainer::fit(const Dataset& train, const Dataset* val, const FitOptions& opts) {
    if (train.cases.empty()) throw InvalidArgument("training set is empty");
    train.validate();
    if (train.num_classes() != cfg_.segmentor.num_classes)
        throw SchemaError("dataset has " + std::to_string(train.num_classes()) + " classes, config expects " +
                          std::to_string(cfg_.segmentor.num_classes));
    if (val && !val->cases.empty() && val->num_classes() != cfg_.segmentor.num_classes)
        throw SchemaError("validation set class count differs from the config");

    const auto& tc = cfg_.train;
    std::ofstream history;
    if (opts.out_dir) {
        std::filesystem::create_directories(*opts.out_dir);
        history.open(*opts.out_dir / "history.jsonl", epoch_ > 0 ? std::ios::app : std::ios::trunc);
        if (!history) throw IoError("cannot write " + (*opts.out_dir / "history.jsonl").string());
    }
    auto save = [&](const std::filesystem::path& p) {
        write_checkpoint(p, snapshot());
        last_checkpoint_ = p;
    };

    RunHistory out;
    const auto start = std::chrono::steady_clock::now();
    const auto last_epoch = opts.stop_after_epoch ? std::min(*opts.stop_after_epoch, tc.epochs) : tc.epochs;
    for (; epoch_ < last_epoch;) {
        EpochRecord er;
        er.epoch = epoch_;
        const auto order = data::batch_indices(train.cases.size(), static_cast<std::size_t>(tc.batch_size),
                                               mix_seed(tc.seed, kOrderStream, static_cast<std::uint64_t>(epoch_)));
        for (const auto& idx : order) {
            std::vector<Image> imgs;
            std::vector<LabelMap> lbls;
            for (auto i : idx) {
                data::Rng rng(mix_seed(tc.seed ^ tc.aug.seed, static_cast<std::uint64_t>(epoch_), i));
                auto [im, lb] = data::augment(train.cases[i].image, train.cases[i].label, tc.aug, rng);
                imgs.push_back(std::move(im));
                lbls.push_back(std::move(lb));
            }
            auto img = images_to_tensor(imgs);
            auto lbl = labels_to_tensor(lbls);

            StepRecord sr;
            sr.epoch = epoch_;
            if (adversarial_active()) {
                for (std::int64_t k = 0; k < tc.disc_steps_per_seg_step; ++k) sr.disc_msl = train_step_discriminator(img, lbl);
                sr.disc_total = -sr.disc_msl;
            }
            auto res = train_step_segmentor(img, lbl);
            sr.step = step_;
            sr.rec = res.rec;
            sr.ce = res.ce;
            sr.dice = res.dice;
            sr.kl_per_scale = res.kl_per_scale;
            sr.msl = res.msl;
            sr.seg_total = res.seg_total;
            er.mean_rec += res.rec;
            er.mean_seg_total += res.seg_total;
            ++er.steps;
            if (history) history << to_jsonl(sr) << '\n';
            out.steps.push_back(std::move(sr));
        }
        er.mean_rec /= static_cast<double>(er.steps);
        er.mean_seg_total /= static_cast<double>(er.steps);
        ++epoch_;

        if (val && !val->cases.empty()) {
            const MetricsConfig mean_mode{LatentMode::PriorMean, 1};
            er.validation = evaluate_model(*model_, *val, mean_mode, tc.seed, "validation").pooled;
        }
        er.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        er.timestamp = utc_now();
        if (history) history << to_jsonl(er) << '\n' << std::flush;

        if (opts.out_dir) {
            const bool periodic = tc.checkpoint_every > 0 && epoch_ % tc.checkpoint_every == 0;
            if (periodic) {
                char name[32];
                std::snprintf(name, sizeof name, "epoch_%04lld.ckpt", static_cast<long long>(epoch_));
                save(*opts.out_dir / "checkpoints" / name);
            }
            if (epoch_ == last_epoch) save(*opts.out_dir / "model.ckpt");
        }
        if (opts.on_epoch) opts.on_epoch(er);
        out.epochs.push_back(std::move(er));
    }
    return out;
}

metrics::Predictor make_predictor(SpdNetImpl& m, const MetricsConfig& mc, std::uint64_t seed) {
    auto gen = std::make_shared<at::Generator>(make_generator(mix_seed(seed, kEvalStream)));
    return [&m, mc, gen](const Case& c) {
        auto img = images_to_tensor({c.image});
        auto pred = predict(m, img, mc.latent_mode, mc.samples, *gen);
        auto lbl = argmax_labels(pred.probs, c.image.spacing);
        lbl.num_classes = static_cast<int>(m.config().segmentor.num_classes);
        return lbl;
    };
}

metrics::MetricsReport evaluate_model(SpdNetImpl& m, const Dataset& ds, const MetricsConfig& mc, std::uint64_t seed,
                                      const std::string& method) {
    if (!ds.cases.empty() && ds.num_classes() != m.config().segmentor.num_classes)
        throw SchemaError("dataset has " + std::to_string(ds.num_classes()) + " classes, model predicts " +
                          std::to_string(m.config().segmentor.num_classes));
    return metrics::evaluate(make_predictor(m, mc, seed), ds, method);
}

}  // namespace spdnet
