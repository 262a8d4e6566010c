#include "spdnet/pipeline.hpp"

#include <cstdio>
#include <regex>
#include <set>

#include "spdnet/array_io.hpp"
#include "spdnet/checkpoint.hpp"
#include "spdnet/tensor_ops.hpp"
#include "spdnet/trainer.hpp"

namespace spdnet::pipeline {
namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

bool has_split(const fs::path& data_dir, Split s) {
    for (const auto& e : data::read_manifest(data_dir / "manifest.json"))
        if (e.split == s) return true;
    return false;
}

}  // namespace

void write_resolved_config(const RunConfig& cfg, const fs::path& dir) {
    ensure_dir(dir);
    io::write_text(dir / kResolvedConfigName, config_to_json(cfg) + "\n");
}

SynthResult synth(const RunConfig& cfg, const fs::path& out_dir, std::size_t count) {
    if (count == 0) throw InvalidArgument("synth needs count >= 1");
    ensure_dir(out_dir);
    std::vector<std::string> ids;
    std::vector<data::ManifestEntry> entries;
    for (std::size_t i = 0; i < count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "phantom_%04zu", i);
        auto pc = cfg.data.phantom;
        pc.seed = mix_seed(cfg.data.phantom.seed, i);
        data::Rng rng(pc.seed);
        const auto ph = data::generate_phantom(pc, rng);
        entries.push_back(data::export_phantom(out_dir, id, ph, pc.seed));
        ids.emplace_back(id);
    }
    const auto splits = data::assign_splits(ids, cfg.data.test_fraction, cfg.data.phantom.seed);
    SynthResult r;
    for (std::size_t i = 0; i < count; ++i) {
        entries[i].split = splits[i];
        (splits[i] == Split::Test ? r.test : r.train)++;
    }
    data::write_manifest(out_dir / "manifest.json", entries);
    write_resolved_config(cfg, out_dir);
    return r;
}

TrainResult train(const RunConfig& cfg_in, const fs::path& data_dir, const fs::path& out_dir,
                  const std::optional<fs::path>& resume) {
    std::unique_ptr<Trainer> trainer;
    if (resume)
        trainer = std::make_unique<Trainer>(read_checkpoint(*resume));
    else
        trainer = std::make_unique<Trainer>(cfg_in);
    const auto& cfg = trainer->config();
    const auto prep = cfg.preprocessing();
    const auto train_ds = data::load_dataset(data_dir, Split::Train, prep);
    std::optional<Dataset> val;
    if (has_split(data_dir, Split::Test)) val = data::load_dataset(data_dir, Split::Test, prep);
    write_resolved_config(cfg, out_dir);

    FitOptions opts;
    opts.out_dir = out_dir;
    const auto hist = trainer->fit(train_ds, val ? &*val : nullptr, opts);
    TrainResult r;
    r.checkpoint = out_dir / "model.ckpt";
    r.epochs = trainer->epoch();
    r.steps = trainer->step();
    if (!hist.steps.empty()) r.final_rec = hist.steps.back().rec;
    if (!fs::exists(r.checkpoint)) write_checkpoint(r.checkpoint, trainer->snapshot());
    return r;
}

std::string method_name(const RunConfig& cfg) {
    const auto& a = cfg.train.ablation;
    if (!a.probabilistic && !a.discriminator) return "segmentor";
    if (a.probabilistic && !a.discriminator) return "segmentor+probabilistic";
    if (!a.probabilistic) return "segmentor+discriminator";
    return "spdnet";
}

metrics::MetricsReport eval(const fs::path& checkpoint, const fs::path& data_dir, const fs::path& out_dir,
                            const MetricsConfig& mc, Split split) {
    const auto ck = read_checkpoint(checkpoint);
    auto cfg = ck.config;
    cfg.metrics = mc;
    const auto ds = data::load_dataset(data_dir, split, cfg.preprocessing());
    if (ds.num_classes() != cfg.segmentor.num_classes)
        throw SchemaError("data has " + std::to_string(ds.num_classes()) + " classes, checkpoint predicts " +
                          std::to_string(cfg.segmentor.num_classes));
    metrics::MetricsReport rep;
    if (ck.kind == kKindTruthEcho) {
        rep = metrics::evaluate([](const Case& c) { return c.label; }, ds, "truth_echo");
    } else {
        auto model = model_from_checkpoint(ck);
        model->eval();
        rep = evaluate_model(*model, ds, mc, cfg.train.seed, method_name(cfg));
    }
    metrics::write_report(rep, out_dir);
    write_resolved_config(cfg, out_dir);
    return rep;
}

SegmentResult segment(const fs::path& checkpoint, const fs::path& image, const fs::path& out_path,
                      std::int64_t samples, std::uint64_t seed) {
    if (samples < 1) throw InvalidArgument("--samples must be >= 1");
    const auto ck = read_checkpoint(checkpoint);
    auto img = data::load_image(image);
    if (ck.config.data.normalize) img = data::normalize(img);
    data::PadInfo pad;
    const auto side = data::padded_side(img.rows(), img.cols(), ck.config.pad_multiple());
    const auto padded = data::pad_image(img, side, side, &pad);

    Grid<std::uint8_t> labels;
    Grid<float> variance(pad.rows, pad.cols, 0.0f);
    if (ck.kind == kKindTruthEcho) {
        throw SchemaError("a truth_echo checkpoint cannot segment unlabeled images");
    } else {
        auto model = model_from_checkpoint(ck);
        model->eval();
        auto gen = make_generator(mix_seed(seed, 0x7365676dULL));
        const auto mode = samples > 1 ? LatentMode::PriorSample : LatentMode::PriorMean;
        auto pred = predict(*model, images_to_tensor({padded}), mode, samples, gen);
        labels = data::crop(argmax_labels(pred.probs, img.spacing).labels, pad);
        variance = data::crop(tensor_to_grid(pred.uncertainty), pad);
    }
    if (out_path.has_parent_path()) ensure_dir(out_path.parent_path());
    io::write_npy(out_path, labels);
    SegmentResult r{out_path, std::nullopt};
    if (samples > 1) {
        auto up = out_path.parent_path() / (out_path.stem().string() + "_uncertainty.npy");
        io::write_npy(up, variance);
        r.uncertainty = up;
    }
    return r;
}

std::string report(const std::vector<fs::path>& reports, const std::optional<fs::path>& out_dir) {
    if (reports.empty()) throw InvalidArgument("report needs at least one input");
    std::vector<metrics::MetricsReport> reps;
    for (const auto& p : reports) reps.push_back(metrics::read_report(p));
    for (const auto& r : reps)
        if (r.per_case.empty()) throw SchemaError("report '" + r.method + "' has no rows");
    const auto table = metrics::format_table(reps);
    if (out_dir) {
        ensure_dir(*out_dir);
        io::write_text(*out_dir / "table.txt", table);
        io::write_text(*out_dir / "boxplot.csv", metrics::boxplot_csv(reps));
    }
    return table;
}

std::size_t index_acdc(const fs::path& root, const fs::path& out_dir, double test_fraction, std::uint64_t seed) {
    if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
    static const std::regex gt_re(R"((.+_frame\d+)_gt\.nii(\.gz)?)");
    std::vector<fs::path> patients;
    for (const auto& d : fs::directory_iterator(root))
        if (d.is_directory()) patients.push_back(d.path());
    std::sort(patients.begin(), patients.end());

    std::vector<std::string> patient_ids;
    std::vector<std::vector<data::ManifestEntry>> per_patient;
    for (const auto& dir : patients) {
        std::vector<data::ManifestEntry> frames;
        std::vector<fs::path> files;
        for (const auto& f : fs::directory_iterator(dir)) files.push_back(f.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            std::smatch m;
            const auto name = f.filename().string();
            if (!std::regex_match(name, m, gt_re)) continue;
            const auto image = dir / (m[1].str() + ".nii" + m[2].str());
            if (!fs::exists(image)) continue;
            frames.push_back({m[1].str(), fs::absolute(image).string(), fs::absolute(f).string(), Split::Train});
        }
        if (frames.empty()) continue;
        patient_ids.push_back(dir.filename().string());
        per_patient.push_back(std::move(frames));
    }
    if (per_patient.empty()) throw IoError("no labelled frames under " + root.string());
    const auto splits = data::assign_splits(patient_ids, test_fraction, seed);
    std::vector<data::ManifestEntry> entries;
    for (std::size_t i = 0; i < per_patient.size(); ++i)
        for (auto& e : per_patient[i]) {
            e.split = splits[i];
            entries.push_back(std::move(e));
        }
    ensure_dir(out_dir);
    data::write_manifest(out_dir / "manifest.json", entries);
    return entries.size();
}

void write_truth_echo(const RunConfig& cfg, const fs::path& path) {
    Checkpoint ck;
    ck.kind = kKindTruthEcho;
    ck.config = cfg;
    write_checkpoint(path, ck);
}

}  // namespace spdnet::pipeline
