// Command-line front end. Talks to the library only through spdnet.h.
#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <json.hpp>
#include <memory>
#include <string>
#include <vector>

#include "spdnet/spdnet.h"

namespace {

struct Common {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> ablate;
    std::optional<std::int64_t> samples;
    std::optional<std::int64_t> epochs;
    std::optional<std::int64_t> adv_warmup;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "run configuration (JSON)");
    cmd->add_option("--preset", c.preset, "defaults to start from")->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--seed", c.seed, "seed for data, initialisation and sampling");
    cmd->add_option("--ablate", c.ablate, "drop a component")
        ->check(CLI::IsMember({"probabilistic", "discriminator"}))
        ->take_all();
}

// Flags win over the config file; they travel as a JSON patch.
std::string overrides(const Common& c) {
    nlohmann::json o = nlohmann::json::object();
    if (c.seed) {
        o["train"]["seed"] = *c.seed;
        o["data"]["phantom"]["seed"] = *c.seed;
    }
    for (const auto& a : c.ablate) o["train"]["ablation"][a] = false;
    if (c.samples) {
        o["metrics"]["samples"] = *c.samples;
        o["metrics"]["latent_mode"] = *c.samples > 1 ? "prior_sample" : "prior_mean";
    }
    if (c.epochs) o["train"]["epochs"] = *c.epochs;
    if (c.adv_warmup) o["train"]["adv_warmup"] = *c.adv_warmup;
    return o.empty() ? std::string{} : o.dump();
}

int exit_code(spdnet_status s) {
    switch (s) {
        case SPDNET_OK: return 0;
        case SPDNET_E_IO:
        case SPDNET_E_CORRUPT_FILE: return 2;
        case SPDNET_E_NUMERICAL: return 3;
        case SPDNET_E_SCHEMA:
        case SPDNET_E_VERSION:
        case SPDNET_E_MISSING_COMPONENT:
        case SPDNET_E_SHAPE_MISMATCH:
        case SPDNET_E_UNLABELED_CASE: return 4;
        default: return 1;
    }
}

int fail(spdnet_status s) {
    std::fprintf(stderr, "error: %s\n", spdnet_last_error());
    if (s == SPDNET_E_NUMERICAL) {
        const std::string ck = spdnet_last_checkpoint();
        std::fprintf(stderr, "last checkpoint: %s\n", ck.empty() ? "(none written)" : ck.c_str());
    }
    return exit_code(s);
}

struct ContextDeleter {
    void operator()(spdnet_context* c) const { spdnet_context_destroy(c); }
};
using Context = std::unique_ptr<spdnet_context, ContextDeleter>;

spdnet_status make_context(const Common& c, Context& out) {
    spdnet_context* raw = nullptr;
    const auto patch = overrides(c);
    const auto s = spdnet_context_create(c.preset.empty() ? nullptr : c.preset.c_str(),
                                         c.config.empty() ? nullptr : c.config.c_str(),
                                         patch.empty() ? nullptr : patch.c_str(), &raw);
    out.reset(raw);
    return s;
}

std::string take(char* s) {
    std::string out = s ? s : "";
    spdnet_string_free(s);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SPDNet: probabilistic, adversarially trained segmentation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(spdnet_version()));

    const char* env_root = std::getenv("SPDNET_DATA_ROOT");
    const std::string data_default = env_root ? env_root : "";

    Common common;
    std::string out, data = data_default, checkpoint, image, resume, root, split = "test";
    std::size_t count = 32;
    std::vector<std::string> reports;

    auto* synth = app.add_subcommand("synth", "write a synthetic phantom dataset");
    add_common(synth, common);
    synth->add_option("--out", out, "output directory")->required();
    synth->add_option("--count", count, "number of phantoms")->check(CLI::PositiveNumber);

    auto* train = app.add_subcommand("train", "fit the networks on the train split");
    add_common(train, common);
    train->add_option("--data", data, "dataset directory (default: $SPDNET_DATA_ROOT)");
    train->add_option("--out", out, "run directory")->required();
    train->add_option("--resume", resume, "continue from this checkpoint");
    train->add_option("--epochs", common.epochs, "override train.epochs");
    train->add_option("--adv-warmup", common.adv_warmup, "segmentor steps before the discriminator joins")
        ->check(CLI::NonNegativeNumber);

    auto* eval = app.add_subcommand("eval", "score a checkpoint on the test split");
    add_common(eval, common);
    eval->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    eval->add_option("--data", data, "dataset directory (default: $SPDNET_DATA_ROOT)");
    eval->add_option("--out", out, "report directory")->required();
    eval->add_option("--samples", common.samples, "prior draws per image (1 = prior mean)")->check(CLI::PositiveNumber);
    eval->add_option("--split", split, "which manifest split to score")->check(CLI::IsMember({"train", "test"}));

    auto* segment = app.add_subcommand("segment", "label one image");
    add_common(segment, common);
    segment->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    segment->add_option("--image", image, ".npy or NIfTI image")->required();
    segment->add_option("--out", out, "output label .npy")->required();
    segment->add_option("--samples", common.samples, "prior draws (1 = prior mean)")->check(CLI::PositiveNumber);

    auto* report = app.add_subcommand("report", "compare evaluation reports");
    report->add_option("reports", reports, "report directories or files")->required();
    report->add_option("--out", out, "where to write table.txt and boxplot.csv");

    auto* acdc = app.add_subcommand("index-acdc", "write a manifest for an ACDC directory tree");
    add_common(acdc, common);
    acdc->add_option("--root", root, "directory holding patientNNN folders")->required();
    acdc->add_option("--out", out, "where manifest.json goes")->required();

    CLI11_PARSE(app, argc, argv);

    if (*report) {
        std::vector<const char*> paths;
        for (const auto& r : reports) paths.push_back(r.c_str());
        char* table = nullptr;
        const auto s = spdnet_report(paths.data(), paths.size(), out.empty() ? nullptr : out.c_str(), &table);
        if (s != SPDNET_OK) return fail(s);
        std::fputs(take(table).c_str(), stdout);
        return 0;
    }

    Context ctx;
    if (auto s = make_context(common, ctx); s != SPDNET_OK) return fail(s);

    if ((*train || *eval) && data.empty()) {
        std::fprintf(stderr, "error: --data not given and SPDNET_DATA_ROOT is unset\n");
        return 2;
    }

    spdnet_status s = SPDNET_OK;
    if (*synth) {
        std::size_t n_train = 0, n_test = 0;
        s = spdnet_synth(ctx.get(), out.c_str(), count, &n_train, &n_test);
        if (s == SPDNET_OK) std::printf("wrote %zu phantoms (%zu train, %zu test) to %s\n", count, n_train, n_test, out.c_str());
    } else if (*train) {
        char* ck = nullptr;
        s = spdnet_train(ctx.get(), data.c_str(), out.c_str(), resume.empty() ? nullptr : resume.c_str(), &ck);
        if (s == SPDNET_OK) std::printf("checkpoint: %s\n", take(ck).c_str());
    } else if (*eval) {
        char* table = nullptr;
        s = spdnet_eval(ctx.get(), checkpoint.c_str(), data.c_str(), out.c_str(), split.c_str(), &table);
        if (s == SPDNET_OK) std::fputs(take(table).c_str(), stdout);
    } else if (*segment) {
        char* unc = nullptr;
        s = spdnet_segment(ctx.get(), checkpoint.c_str(), image.c_str(), out.c_str(), common.samples.value_or(1), &unc);
        if (s == SPDNET_OK) {
            std::printf("labels: %s\n", out.c_str());
            if (unc) std::printf("uncertainty: %s\n", take(unc).c_str());
        }
    } else if (*acdc) {
        std::size_t n = 0;
        s = spdnet_index_acdc(ctx.get(), root.c_str(), out.c_str(), &n);
        if (s == SPDNET_OK) std::printf("indexed %zu labelled frames\n", n);
    }
    return s == SPDNET_OK ? 0 : fail(s);
}
