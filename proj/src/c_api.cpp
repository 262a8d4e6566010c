#include "spdnet/spdnet.h"

#include <cstring>
#include <string>

#include "spdnet/checkpoint.hpp"
#include "spdnet/config.hpp"
#include "spdnet/pipeline.hpp"

struct spdnet_context {
    spdnet::RunConfig cfg;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_checkpoint;

char* dup(const std::string& s) {
    auto* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p) std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

std::optional<std::string> opt(const char* s) {
    if (!s || !*s) return std::nullopt;
    return std::string(s);
}

template <class F>
spdnet_status guarded(F&& f) {
    g_error.clear();
    g_checkpoint.clear();
    try {
        f();
        return SPDNET_OK;
    } catch (const spdnet::NumericalError& e) {
        g_error = e.what();
        g_checkpoint = e.last_checkpoint;
        return SPDNET_E_NUMERICAL;
    } catch (const spdnet::Error& e) {
        g_error = e.what();
        return static_cast<spdnet_status>(static_cast<int>(e.code()));
    } catch (const std::filesystem::filesystem_error& e) {
        g_error = e.what();
        return SPDNET_E_IO;
    } catch (const std::exception& e) {
        g_error = e.what();
        return SPDNET_E_INTERNAL;
    } catch (...) {
        g_error = "unknown failure";
        return SPDNET_E_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p) throw spdnet::InvalidArgument(std::string(what) + " must not be NULL");
}

}  // namespace

extern "C" {

const char* spdnet_version(void) { return "1.0.0"; }
const char* spdnet_last_error(void) { return g_error.c_str(); }
const char* spdnet_last_checkpoint(void) { return g_checkpoint.c_str(); }
void spdnet_string_free(char* s) { std::free(s); }

spdnet_status spdnet_context_create(const char* preset, const char* config_path, const char* overrides_json,
                                    spdnet_context** out) {
    return guarded([&] {
        require(out, "out");
        *out = nullptr;
        std::optional<std::filesystem::path> file;
        if (auto p = opt(config_path)) file = *p;
        auto cfg = spdnet::resolve_config(opt(preset), file, opt(overrides_json));
        *out = new spdnet_context{std::move(cfg)};
    });
}

void spdnet_context_destroy(spdnet_context* ctx) { delete ctx; }

spdnet_status spdnet_context_config_json(const spdnet_context* ctx, char** out) {
    return guarded([&] {
        require(ctx, "ctx");
        require(out, "out");
        *out = dup(spdnet::config_to_json(ctx->cfg));
    });
}

spdnet_status spdnet_synth(const spdnet_context* ctx, const char* out_dir, size_t count, size_t* n_train,
                           size_t* n_test) {
    return guarded([&] {
        require(ctx, "ctx");
        require(out_dir, "out_dir");
        const auto r = spdnet::pipeline::synth(ctx->cfg, out_dir, count);
        if (n_train) *n_train = r.train;
        if (n_test) *n_test = r.test;
    });
}

spdnet_status spdnet_train(const spdnet_context* ctx, const char* data_dir, const char* out_dir, const char* resume,
                           char** checkpoint_out) {
    return guarded([&] {
        require(ctx, "ctx");
        require(data_dir, "data_dir");
        require(out_dir, "out_dir");
        std::optional<std::filesystem::path> from;
        if (auto r = opt(resume)) from = *r;
        const auto res = spdnet::pipeline::train(ctx->cfg, data_dir, out_dir, from);
        if (checkpoint_out) *checkpoint_out = dup(res.checkpoint.string());
    });
}

spdnet_status spdnet_eval(const spdnet_context* ctx, const char* checkpoint, const char* data_dir, const char* out_dir,
                          const char* split, char** table_out) {
    return guarded([&] {
        require(ctx, "ctx");
        require(checkpoint, "checkpoint");
        require(data_dir, "data_dir");
        require(out_dir, "out_dir");
        const auto which = split ? spdnet::data::parse_split(split) : spdnet::Split::Test;
        const auto rep = spdnet::pipeline::eval(checkpoint, data_dir, out_dir, ctx->cfg.metrics, which);
        if (table_out) *table_out = dup(spdnet::metrics::format_table({rep}));
    });
}

spdnet_status spdnet_segment(const spdnet_context* ctx, const char* checkpoint, const char* image,
                             const char* out_path, int64_t samples, char** uncertainty_out) {
    return guarded([&] {
        require(ctx, "ctx");
        require(checkpoint, "checkpoint");
        require(image, "image");
        require(out_path, "out_path");
        const auto r = spdnet::pipeline::segment(checkpoint, image, out_path, samples, ctx->cfg.train.seed);
        if (uncertainty_out) *uncertainty_out = r.uncertainty ? dup(r.uncertainty->string()) : nullptr;
    });
}

spdnet_status spdnet_report(const char* const* report_paths, size_t count, const char* out_dir, char** table_out) {
    return guarded([&] {
        if (count > 0) require(report_paths, "report_paths");
        std::vector<std::filesystem::path> paths;
        for (size_t i = 0; i < count; ++i) {
            require(report_paths[i], "report path");
            paths.emplace_back(report_paths[i]);
        }
        std::optional<std::filesystem::path> out;
        if (auto o = opt(out_dir)) out = *o;
        const auto table = spdnet::pipeline::report(paths, out);
        if (table_out) *table_out = dup(table);
    });
}

spdnet_status spdnet_index_acdc(const spdnet_context* ctx, const char* root, const char* out_dir, size_t* entries) {
    return guarded([&] {
        require(ctx, "ctx");
        require(root, "root");
        require(out_dir, "out_dir");
        const auto n = spdnet::pipeline::index_acdc(root, out_dir, ctx->cfg.data.test_fraction, ctx->cfg.data.phantom.seed);
        if (entries) *entries = n;
    });
}

spdnet_status spdnet_write_truth_echo(const spdnet_context* ctx, const char* path) {
    return guarded([&] {
        require(ctx, "ctx");
        require(path, "path");
        spdnet::pipeline::write_truth_echo(ctx->cfg, path);
    });
}

spdnet_status spdnet_checkpoint_census(const char* checkpoint, spdnet_census* out) {
    return guarded([&] {
        require(checkpoint, "checkpoint");
        require(out, "out");
        const auto ck = spdnet::read_checkpoint(checkpoint);
        *out = spdnet_census{0, 0, 0, 0};
        if (ck.kind != spdnet::kKindModel) return;
        const auto m = spdnet::model_from_checkpoint(ck);
        const auto c = spdnet::census(*m);
        *out = spdnet_census{c.segmentor, c.prior, c.posterior, c.discriminator};
    });
}

}  // extern "C"
