#include "spdnet/config.hpp"

#include <functional>
#include <map>

#include <json.hpp>

#include "spdnet/array_io.hpp"

namespace spdnet {
using json = nlohmann::json;

void SegmentorConfig::validate() const {
    if (stage_channels.empty()) throw InvalidArgument("segmentor needs at least one stage");
    if (stage_channels.size() != stage_depths.size())
        throw InvalidArgument("stage_channels and stage_depths differ in length");
    for (auto c : stage_channels)
        if (c < 1) throw InvalidArgument("stage channels must be positive");
    for (auto d : stage_depths)
        if (d < 1) throw InvalidArgument("stage depths must be positive");
    if (patch_size < 1) throw InvalidArgument("patch_size must be >= 1");
    if (window_size < 1) throw InvalidArgument("window_size must be >= 1");
    if (num_classes < 2) throw InvalidArgument("num_classes must be >= 2");
    if (latent_channels_per_scale < 0) throw InvalidArgument("latent_channels_per_scale must be >= 0");
    if (in_channels < 1) throw InvalidArgument("in_channels must be >= 1");
    if (!(mlp_ratio > 0)) throw InvalidArgument("mlp_ratio must be positive");
}

void ProbabilisticConfig::validate() const {
    if (channels.empty()) throw InvalidArgument("probabilistic net needs channels");
    for (auto c : channels)
        if (c < 1) throw InvalidArgument("probabilistic channels must be positive");
}

void DiscriminatorConfig::validate() const {
    if (num_layers < 3) throw InvalidArgument("discriminator needs at least 3 layers");
    if (base_channels < 1) throw InvalidArgument("discriminator base_channels must be positive");
    if (!(leaky_slope >= 0 && leaky_slope < 1)) throw InvalidArgument("leaky_slope must lie in [0,1)");
    if (!(weight_clip >= 0)) throw InvalidArgument("weight_clip must be >= 0");
}

void LossWeights::validate() const {
    if (!(alpha >= 0 && alpha <= 1)) throw InvalidArgument("alpha must lie in [0,1]");
    if (!(beta >= 0)) throw InvalidArgument("beta must be >= 0");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (!(learning_rate > 0)) throw InvalidArgument("learning_rate must be > 0");
    if (checkpoint_every < 0) throw InvalidArgument("checkpoint_every must be >= 0");
    if (disc_steps_per_seg_step < 1) throw InvalidArgument("disc_steps_per_seg_step must be >= 1");
    if (adv_warmup < 0) throw InvalidArgument("adv_warmup must be >= 0");
    aug.validate();
}

void RunConfig::validate() const {
    segmentor.validate();
    probabilistic.validate();
    discriminator.validate();
    losses.validate();
    train.validate();
    data.phantom.validate();
    if (data.phantom.num_classes != segmentor.num_classes)
        throw SchemaError("data.phantom.num_classes and segmentor.num_classes disagree");
    if (probabilistic.channels.size() != segmentor.stage_channels.size())
        throw InvalidArgument("probabilistic.channels must have one entry per segmentor stage");
    if (pad_multiple() % segmentor.required_multiple() != 0)
        throw InvalidArgument("data.pad_multiple must be a multiple of " + std::to_string(segmentor.required_multiple()));
    if (!(data.test_fraction >= 0 && data.test_fraction <= 1)) throw InvalidArgument("test_fraction must lie in [0,1]");
    if (metrics.samples < 1) throw InvalidArgument("metrics.samples must be >= 1");
}

std::int64_t RunConfig::pad_multiple() const {
    return data.pad_multiple > 0 ? data.pad_multiple : segmentor.required_multiple();
}

RunConfig paper_preset() {
    RunConfig c;
    c.preset = "paper";
    c.data.phantom.image_size = 224;
    c.data.phantom.motion_blur_extent_px = 9;
    c.segmentor.window_size = 7;
    c.probabilistic.channels = {32, 64, 128, 256};
    c.discriminator.weight_clip = 0.0;
    return c;
}

RunConfig desk_preset() {
    RunConfig c;
    c.preset = "desk";
    c.data.phantom.image_size = 64;
    c.data.phantom.motion_blur_extent_px = 3;
    c.segmentor.stage_channels = {16, 32, 64, 128};
    c.segmentor.stage_depths = {2, 2, 2, 2};
    c.segmentor.window_size = 4;
    c.probabilistic.channels = {8, 16, 32, 64};
    c.discriminator.base_channels = 16;
    c.train.epochs = 200;
    c.train.batch_size = 4;
    c.train.learning_rate = 1e-3;
    c.train.checkpoint_every = 50;
    c.train.aug.rotation_max_deg = 10.0;
    c.train.aug.skew_max_deg = 5.0;
    return c;
}

RunConfig preset_by_name(const std::string& name) {
    if (name == "paper") return paper_preset();
    if (name == "desk") return desk_preset();
    throw SchemaError("unknown preset '" + name + "' (expected desk|paper)");
}

std::string latent_mode_name(LatentMode m) { return m == LatentMode::PriorMean ? "prior_mean" : "prior_sample"; }

namespace {

using Handler = std::function<void(const json&)>;

// Applies handlers for the keys present in `j`; any other key is rejected.
void read_object(const json& j, const std::string& where, const std::map<std::string, Handler>& handlers) {
    if (!j.is_object()) throw SchemaError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        auto it = handlers.find(key);
        if (it == handlers.end()) throw SchemaError("unknown key '" + where + "." + key + "'");
        try {
            it->second(value);
        } catch (const json::exception& e) {
            throw SchemaError("bad value for '" + where + "." + key + "': " + e.what());
        }
    }
}

template <class T>
Handler set(T& field) {
    return [&field](const json& v) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw SchemaError("expected a boolean");
        } else if constexpr (std::is_arithmetic_v<T>) {
            if (!v.is_number()) throw SchemaError("expected a number");
        }
        field = v.get<T>();
    };
}

Handler set_int(int& field) {
    return [&field](const json& v) {
        if (!v.is_number_integer()) throw SchemaError("expected an integer");
        field = v.get<int>();
    };
}

template <class E>
Handler set_enum(E& field, std::map<std::string, E> names) {
    return [&field, names](const json& v) {
        const auto s = v.get<std::string>();
        auto it = names.find(s);
        if (it == names.end()) throw SchemaError("unknown value '" + s + "'");
        field = it->second;
    };
}

void apply_json(const json& doc, RunConfig& c) {
    read_object(doc, "config",
                {{"preset", [&](const json& v) { c.preset = v.get<std::string>(); }},
                 {"data",
                  [&](const json& v) {
                      read_object(v, "data",
                                  {{"phantom",
                                    [&](const json& p) {
                                        auto& ph = c.data.phantom;
                                        read_object(p, "data.phantom",
                                                    {{"image_size", set_int(ph.image_size)},
                                                     {"motion_blur_prob", set(ph.motion_blur_prob)},
                                                     {"motion_blur_extent_px", set_int(ph.motion_blur_extent_px)},
                                                     {"effusion_prob", set(ph.effusion_prob)},
                                                     {"effusion_intensity_delta", set(ph.effusion_intensity_delta)},
                                                     {"num_classes", set_int(ph.num_classes)},
                                                     {"seed", set(ph.seed)}});
                                    }},
                                   {"test_fraction", set(c.data.test_fraction)},
                                   {"pad_multiple", set(c.data.pad_multiple)},
                                   {"normalize", set(c.data.normalize)}});
                  }},
                 {"segmentor",
                  [&](const json& v) {
                      auto& s = c.segmentor;
                      read_object(v, "segmentor",
                                  {{"in_channels", set(s.in_channels)},
                                   {"patch_size", set(s.patch_size)},
                                   {"stage_channels", set(s.stage_channels)},
                                   {"stage_depths", set(s.stage_depths)},
                                   {"window_size", set(s.window_size)},
                                   {"num_classes", set(s.num_classes)},
                                   {"latent_channels_per_scale", set(s.latent_channels_per_scale)},
                                   {"latent_injection",
                                    set_enum(s.latent_injection,
                                             {{"all", LatentInjection::All}, {"last", LatentInjection::Last}})},
                                   {"mlp_ratio", set(s.mlp_ratio)}});
                  }},
                 {"probabilistic",
                  [&](const json& v) {
                      read_object(v, "probabilistic", {{"channels", set(c.probabilistic.channels)}});
                  }},
                 {"discriminator",
                  [&](const json& v) {
                      auto& d = c.discriminator;
                      read_object(v, "discriminator",
                                  {{"num_layers", set(d.num_layers)},
                                   {"base_channels", set(d.base_channels)},
                                   {"leaky_slope", set(d.leaky_slope)},
                                   {"weight_clip", set(d.weight_clip)},
                                   {"fusion", set_enum(d.fusion, {{"multiply", FusionMode::Multiply},
                                                                  {"concat", FusionMode::Concat}})}});
                  }},
                 {"losses",
                  [&](const json& v) {
                      read_object(v, "losses", {{"alpha", set(c.losses.alpha)}, {"beta", set(c.losses.beta)}});
                  }},
                 {"train",
                  [&](const json& v) {
                      auto& t = c.train;
                      read_object(
                          v, "train",
                          {{"epochs", set(t.epochs)},
                           {"batch_size", set(t.batch_size)},
                           {"learning_rate", set(t.learning_rate)},
                           {"adam_beta1", set(t.adam_beta1)},
                           {"adam_beta2", set(t.adam_beta2)},
                           {"adam_eps", set(t.adam_eps)},
                           {"seed", set(t.seed)},
                           {"checkpoint_every", set(t.checkpoint_every)},
                           {"disc_steps_per_seg_step", set(t.disc_steps_per_seg_step)},
                           {"adv_warmup", set(t.adv_warmup)},
                           {"ablation",
                            [&](const json& a) {
                                read_object(a, "train.ablation",
                                            {{"probabilistic", set(t.ablation.probabilistic)},
                                             {"discriminator", set(t.ablation.discriminator)}});
                            }},
                           {"aug", [&](const json& a) {
                                read_object(a, "train.aug",
                                            {{"rotation_max_deg", set(t.aug.rotation_max_deg)},
                                             {"flip_x", set(t.aug.flip_x)},
                                             {"flip_y", set(t.aug.flip_y)},
                                             {"skew_max_deg", set(t.aug.skew_max_deg)},
                                             {"seed", set(t.aug.seed)}});
                            }}});
                  }},
                 {"metrics", [&](const json& v) {
                      read_object(v, "metrics",
                                  {{"latent_mode", set_enum(c.metrics.latent_mode,
                                                            {{"prior_mean", LatentMode::PriorMean},
                                                             {"prior_sample", LatentMode::PriorSample}})},
                                   {"samples", set(c.metrics.samples)}});
                  }}});
}

json parse_doc(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw SchemaError("malformed JSON in " + origin + ": " + e.what());
    }
}

}  // namespace

RunConfig config_from_json(const std::string& text, const RunConfig& base) {
    RunConfig c = base;
    apply_json(parse_doc(text, "config"), c);
    return c;
}

std::string config_to_json(const RunConfig& c) {
    const auto& ph = c.data.phantom;
    const auto& s = c.segmentor;
    const auto& d = c.discriminator;
    const auto& t = c.train;
    const json doc = {
        {"preset", c.preset},
        {"data",
         {{"phantom",
           {{"image_size", ph.image_size},
            {"motion_blur_prob", ph.motion_blur_prob},
            {"motion_blur_extent_px", ph.motion_blur_extent_px},
            {"effusion_prob", ph.effusion_prob},
            {"effusion_intensity_delta", ph.effusion_intensity_delta},
            {"num_classes", ph.num_classes},
            {"seed", ph.seed}}},
          {"test_fraction", c.data.test_fraction},
          {"pad_multiple", c.data.pad_multiple},
          {"normalize", c.data.normalize}}},
        {"segmentor",
         {{"in_channels", s.in_channels},
          {"patch_size", s.patch_size},
          {"stage_channels", s.stage_channels},
          {"stage_depths", s.stage_depths},
          {"window_size", s.window_size},
          {"num_classes", s.num_classes},
          {"latent_channels_per_scale", s.latent_channels_per_scale},
          {"latent_injection", s.latent_injection == LatentInjection::All ? "all" : "last"},
          {"mlp_ratio", s.mlp_ratio}}},
        {"probabilistic", {{"channels", c.probabilistic.channels}}},
        {"discriminator",
         {{"num_layers", d.num_layers},
          {"base_channels", d.base_channels},
          {"leaky_slope", d.leaky_slope},
          {"weight_clip", d.weight_clip},
          {"fusion", d.fusion == FusionMode::Multiply ? "multiply" : "concat"}}},
        {"losses", {{"alpha", c.losses.alpha}, {"beta", c.losses.beta}}},
        {"train",
         {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"adam_beta1", t.adam_beta1},
          {"adam_beta2", t.adam_beta2},
          {"adam_eps", t.adam_eps},
          {"seed", t.seed},
          {"checkpoint_every", t.checkpoint_every},
          {"disc_steps_per_seg_step", t.disc_steps_per_seg_step},
          {"adv_warmup", t.adv_warmup},
          {"ablation", {{"probabilistic", t.ablation.probabilistic}, {"discriminator", t.ablation.discriminator}}},
          {"aug",
           {{"rotation_max_deg", t.aug.rotation_max_deg},
            {"flip_x", t.aug.flip_x},
            {"flip_y", t.aug.flip_y},
            {"skew_max_deg", t.aug.skew_max_deg},
            {"seed", t.aug.seed}}}}},
        {"metrics", {{"latent_mode", latent_mode_name(c.metrics.latent_mode)}, {"samples", c.metrics.samples}}}};
    return doc.dump(2) + "\n";
}

RunConfig resolve_config(const std::optional<std::string>& preset, const std::optional<std::filesystem::path>& file,
                         const std::optional<std::string>& overrides_json) {
    std::optional<json> file_doc;
    if (file) file_doc = parse_doc(io::read_text(*file), file->string());
    std::string name = "paper";
    if (file_doc && file_doc->is_object() && file_doc->contains("preset") && (*file_doc)["preset"].is_string())
        name = (*file_doc)["preset"].get<std::string>();
    if (preset) name = *preset;

    RunConfig c = preset_by_name(name);
    if (file_doc) apply_json(*file_doc, c);
    if (overrides_json) apply_json(parse_doc(*overrides_json, "overrides"), c);
    c.preset = name;
    c.validate();
    return c;
}

}  // namespace spdnet
