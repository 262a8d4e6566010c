#include "spdnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <regex>
#include <set>

#include <json.hpp>

#include "spdnet/array_io.hpp"

namespace spdnet {

void Dataset::validate() const {
    std::set<std::string> ids;
    for (const auto& c : cases) {
        if (!ids.insert(c.case_id).second) throw SchemaError("duplicate case id: " + c.case_id);
        if (c.label.num_classes != num_classes())
            throw SchemaError("case " + c.case_id + " has " + std::to_string(c.label.num_classes) +
                              " classes, dataset has " + std::to_string(num_classes()));
        require_same_shape(c.image, c.label, c.case_id.c_str());
    }
}

}  // namespace spdnet

namespace spdnet::data {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
bool bernoulli(Rng& rng, double p) { return uniform(rng, 0.0, 1.0) < p; }

float sample_bilinear(const Grid<float>& g, double r, double c, bool clamp) {
    if (clamp) {
        r = std::clamp(r, 0.0, static_cast<double>(g.rows - 1));
        c = std::clamp(c, 0.0, static_cast<double>(g.cols - 1));
    }
    const auto r0 = static_cast<std::int64_t>(std::floor(r));
    const auto c0 = static_cast<std::int64_t>(std::floor(c));
    const double fr = r - static_cast<double>(r0);
    const double fc = c - static_cast<double>(c0);
    auto px = [&](std::int64_t rr, std::int64_t cc) -> double {
        if (!g.in_bounds(rr, cc)) return 0.0;
        return g.at(rr, cc);
    };
    // Skip zero-weight taps so exact integer coordinates read exactly one pixel.
    double v = 0.0;
    if ((1 - fr) * (1 - fc) > 0) v += (1 - fr) * (1 - fc) * px(r0, c0);
    if ((1 - fr) * fc > 0) v += (1 - fr) * fc * px(r0, c0 + 1);
    if (fr * (1 - fc) > 0) v += fr * (1 - fc) * px(r0 + 1, c0);
    if (fr * fc > 0) v += fr * fc * px(r0 + 1, c0 + 1);
    return static_cast<float>(v);
}

Grid<float> directional_blur(const Grid<float>& src, int extent, double angle_rad) {
    Grid<float> out(src.rows, src.cols);
    const double dr = std::sin(angle_rad);
    const double dc = std::cos(angle_rad);
    for (std::int64_t r = 0; r < src.rows; ++r) {
        for (std::int64_t c = 0; c < src.cols; ++c) {
            double acc = 0.0;
            for (int k = 0; k < extent; ++k) {
                const double t = k - (extent - 1) / 2.0;
                acc += sample_bilinear(src, static_cast<double>(r) + t * dr, static_cast<double>(c) + t * dc, true);
            }
            out.at(r, c) = static_cast<float>(acc / extent);
        }
    }
    return out;
}

// Angle in [0, 2pi) measured from `start`.
double angle_from(double theta, double start) {
    double d = std::fmod(theta - start, 2 * std::numbers::pi);
    return d < 0 ? d + 2 * std::numbers::pi : d;
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

bool is_nifti(const fs::path& p) {
    const std::string s = p.filename().string();
    return s.ends_with(".nii") || s.ends_with(".nii.gz");
}

std::vector<std::pair<Image, LabelMap>> slices_from_volumes(const io::Volume& img, const io::Volume& gt,
                                                            const std::string& where, bool acdc_labels) {
    if (img.dims != gt.dims) throw ShapeMismatch(where + ": image and ground-truth volumes differ in shape");
    const auto nx = img.dims[0];
    const auto ny = img.dims[1];
    const auto nz = img.dims[2];
    const Spacing spacing{img.spacing[1], img.spacing[0]};
    std::vector<std::pair<Image, LabelMap>> out;
    int max_label = 0;
    for (double v : gt.voxels) max_label = std::max(max_label, static_cast<int>(std::lround(v)));
    const int num_classes = acdc_labels ? kAcdcClasses : std::max(2, max_label + 1);
    for (std::int64_t z = 0; z < nz; ++z) {
        Image im{Grid<float>(ny, nx), spacing};
        LabelMap lb{Grid<std::uint8_t>(ny, nx), num_classes, spacing};
        for (std::int64_t y = 0; y < ny; ++y) {
            for (std::int64_t x = 0; x < nx; ++x) {
                im.pixels.at(y, x) = static_cast<float>(img.at(x, y, z));
                const long lab = std::lround(gt.at(x, y, z));
                if (lab < 0 || lab >= num_classes)
                    throw SchemaError(where + ": label value " + std::to_string(lab) + " outside 0.." +
                                      std::to_string(num_classes - 1));
                lb.labels.at(y, x) = static_cast<std::uint8_t>(lab);
            }
        }
        out.emplace_back(std::move(im), std::move(lb));
    }
    return out;
}

std::string slice_suffix(std::int64_t z) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_slice%02lld", static_cast<long long>(z));
    return buf;
}

}  // namespace

void PhantomConfig::validate() const {
    if (image_size < kMinPhantomSize)
        throw InvalidArgument("phantom image_size " + std::to_string(image_size) + " is below the minimum of " +
                              std::to_string(kMinPhantomSize));
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument(std::string(name) + " must lie in [0,1]");
    };
    prob(motion_blur_prob, "motion_blur_prob");
    prob(effusion_prob, "effusion_prob");
    if (motion_blur_extent_px < 1) throw InvalidArgument("motion_blur_extent_px must be >= 1");
    if (!(effusion_intensity_delta >= 0.0 && effusion_intensity_delta < 0.25))
        throw InvalidArgument("effusion_intensity_delta must lie in [0, 0.25)");
    if (num_classes < 2 || num_classes > 4) throw InvalidArgument("phantom num_classes must be 2..4");
}

Phantom generate_phantom(const PhantomConfig& cfg, Rng& rng) {
    cfg.validate();
    const double n = cfg.image_size;
    const double cy = (n - 1) / 2.0 + uniform(rng, -n / 16, n / 16);
    const double cx = (n - 1) / 2.0 + uniform(rng, -n / 16, n / 16);
    const double r_cavity = n * uniform(rng, 0.11, 0.15);
    const double r_myo = r_cavity + n * uniform(rng, 0.05, 0.07);
    const double r_fat = r_myo + n * uniform(rng, 0.055, 0.075);
    const double aspect = uniform(rng, 0.8, 1.2);
    const double orient = uniform(rng, 0.0, std::numbers::pi);
    const double fat_start = uniform(rng, 0.0, 2 * std::numbers::pi);
    const double fat_span = uniform(rng, 160.0, 240.0) * std::numbers::pi / 180.0;
    const double eff_span = uniform(rng, 50.0, 90.0) * std::numbers::pi / 180.0;
    const bool effusion = bernoulli(rng, cfg.effusion_prob);
    const double eff_sign = bernoulli(rng, 0.5) ? 1.0 : -1.0;
    const bool blur = bernoulli(rng, cfg.motion_blur_prob);
    const double blur_angle = uniform(rng, 0.0, std::numbers::pi);

    Phantom p;
    p.image = Image{Grid<float>(cfg.image_size, cfg.image_size), Spacing{}};
    p.label = LabelMap{Grid<std::uint8_t>(cfg.image_size, cfg.image_size), cfg.num_classes, Spacing{}};
    p.effusion_mask = Grid<std::uint8_t>(cfg.image_size, cfg.image_size);
    p.info = PhantomInfo{blur, effusion, blur_angle * 180.0 / std::numbers::pi};

    const float eff_value = static_cast<float>(PhantomIntensities::fat + eff_sign * cfg.effusion_intensity_delta);
    const double co = std::cos(orient);
    const double so = std::sin(orient);
    const double body_r = 0.46 * n;
    for (int r = 0; r < cfg.image_size; ++r) {
        for (int c = 0; c < cfg.image_size; ++c) {
            const double dy = r - cy;
            const double dx = c - cx;
            // Elliptical radius in the rotated frame, in pixels along the first axis.
            const double u = co * dx + so * dy;
            const double v = (-so * dx + co * dy) / aspect;
            const double rad = std::hypot(u, v);
            const double theta = std::atan2(v, u);

            float value = PhantomIntensities::background;
            std::uint8_t label = 0;
            const double br = std::hypot(r - (n - 1) / 2.0, c - (n - 1) / 2.0);
            if (br < body_r) value = PhantomIntensities::body;
            if (rad < r_cavity) {
                value = PhantomIntensities::blood;
                if (cfg.num_classes >= 4) label = 3;
            } else if (rad < r_myo) {
                value = PhantomIntensities::myocardium;
                if (cfg.num_classes >= 3) label = 2;
            } else if (rad < r_fat) {
                const double a = angle_from(theta, fat_start);
                if (a < fat_span) {
                    value = PhantomIntensities::fat;
                    label = 1;
                } else if (effusion && a < fat_span + eff_span) {
                    value = eff_value;
                    p.effusion_mask.at(r, c) = 1;
                }
            }
            p.image.pixels.at(r, c) = value;
            p.label.labels.at(r, c) = label;
        }
    }
    if (blur && cfg.motion_blur_extent_px > 1)
        p.image.pixels = directional_blur(p.image.pixels, cfg.motion_blur_extent_px, blur_angle);
    return p;
}

Image normalize(const Image& img) {
    Image out = img;
    if (img.pixels.data.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(img.pixels.data.begin(), img.pixels.data.end());
    const double lo = *lo_it;
    const double range = static_cast<double>(*hi_it) - lo;
    for (auto& v : out.pixels.data) v = range > 0 ? static_cast<float>((v - lo) / range) : 0.0f;
    return out;
}

void AugConfig::validate() const {
    if (!(rotation_max_deg >= 0.0)) throw InvalidArgument("rotation_max_deg must be >= 0");
    if (!(skew_max_deg >= 0.0 && skew_max_deg < 90.0)) throw InvalidArgument("skew_max_deg must lie in [0, 90)");
}

GeometricTransform draw_transform(const AugConfig& cfg, Rng& rng) {
    cfg.validate();
    GeometricTransform t;
    // Fixed draw order keeps the stream identical whatever the switches are.
    const double rot = uniform(rng, -1.0, 1.0);
    const double skew = uniform(rng, -1.0, 1.0);
    const bool fx = bernoulli(rng, 0.5);
    const bool fy = bernoulli(rng, 0.5);
    t.rotation_deg = rot * cfg.rotation_max_deg;
    t.skew_deg = skew * cfg.skew_max_deg;
    t.flip_x = cfg.flip_x && fx;
    t.flip_y = cfg.flip_y && fy;
    return t;
}

std::pair<Image, LabelMap> apply_transform(const Image& img, const LabelMap& lbl, const GeometricTransform& t) {
    require_same_shape(img, lbl, "augment");
    const double th = t.rotation_deg * std::numbers::pi / 180.0;
    const double sh = std::tan(t.skew_deg * std::numbers::pi / 180.0);
    // forward = R * K * F acting on (dx, dy)
    const double fx = t.flip_x ? -1.0 : 1.0;
    const double fy = t.flip_y ? -1.0 : 1.0;
    const double k00 = fx, k01 = sh * fy, k10 = 0.0, k11 = fy;
    const double cth = std::cos(th), sth = std::sin(th);
    const double a00 = cth * k00 - sth * k10, a01 = cth * k01 - sth * k11;
    const double a10 = sth * k00 + cth * k10, a11 = sth * k01 + cth * k11;
    const double det = a00 * a11 - a01 * a10;
    const double i00 = a11 / det, i01 = -a01 / det, i10 = -a10 / det, i11 = a00 / det;

    const double cr = (img.rows() - 1) / 2.0;
    const double cc = (img.cols() - 1) / 2.0;
    Image out_img{Grid<float>(img.rows(), img.cols()), img.spacing};
    LabelMap out_lbl{Grid<std::uint8_t>(lbl.rows(), lbl.cols()), lbl.num_classes, lbl.spacing};
    for (std::int64_t r = 0; r < img.rows(); ++r) {
        for (std::int64_t c = 0; c < img.cols(); ++c) {
            const double dx = c - cc;
            const double dy = r - cr;
            const double sx = i00 * dx + i01 * dy + cc;
            const double sy = i10 * dx + i11 * dy + cr;
            out_img.pixels.at(r, c) = sample_bilinear(img.pixels, sy, sx, false);
            const auto nr = static_cast<std::int64_t>(std::lround(sy));
            const auto nc = static_cast<std::int64_t>(std::lround(sx));
            out_lbl.labels.at(r, c) = lbl.labels.in_bounds(nr, nc) ? lbl.labels.at(nr, nc) : 0;
        }
    }
    return {std::move(out_img), std::move(out_lbl)};
}

std::pair<Image, LabelMap> augment(const Image& img, const LabelMap& lbl, const AugConfig& cfg, Rng& rng) {
    return apply_transform(img, lbl, draw_transform(cfg, rng));
}

std::int64_t padded_side(std::int64_t rows, std::int64_t cols, std::int64_t multiple) {
    if (multiple < 1) throw InvalidArgument("pad multiple must be >= 1");
    const std::int64_t side = std::max(rows, cols);
    return ((side + multiple - 1) / multiple) * multiple;
}

namespace {
template <class T>
Grid<T> pad_grid(const Grid<T>& g, std::int64_t rows, std::int64_t cols, PadInfo* info) {
    Grid<T> out(rows, cols);
    const std::int64_t top = (rows - g.rows) / 2;
    const std::int64_t left = (cols - g.cols) / 2;
    for (std::int64_t r = 0; r < g.rows; ++r)
        for (std::int64_t c = 0; c < g.cols; ++c)
            if (out.in_bounds(r + top, c + left)) out.at(r + top, c + left) = g.at(r, c);
    if (info) *info = PadInfo{top, left, g.rows, g.cols};
    return out;
}
}  // namespace

Image pad_image(const Image& img, std::int64_t rows, std::int64_t cols, PadInfo* info) {
    return Image{pad_grid(img.pixels, rows, cols, info), img.spacing};
}

LabelMap pad_labels(const LabelMap& lbl, std::int64_t rows, std::int64_t cols) {
    return LabelMap{pad_grid(lbl.labels, rows, cols, nullptr), lbl.num_classes, lbl.spacing};
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t num_cases, std::size_t batch_size,
                                                    std::uint64_t shuffle_seed) {
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (num_cases == 0) throw InvalidArgument("cannot batch an empty dataset");
    std::vector<std::size_t> order(num_cases);
    for (std::size_t i = 0; i < num_cases; ++i) order[i] = i;
    Rng rng(shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t start = 0; start < num_cases; start += batch_size)
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(num_cases, start + batch_size)));
    return out;
}

Batch assemble_batch(const std::vector<Image>& images, const std::vector<LabelMap>& labels,
                     std::vector<std::size_t> indices, std::vector<std::string> case_ids) {
    Batch b;
    std::int64_t rows = 0, cols = 0;
    for (const auto& im : images) {
        rows = std::max(rows, im.rows());
        cols = std::max(cols, im.cols());
    }
    for (std::size_t i = 0; i < images.size(); ++i) {
        require_same_shape(images[i], labels[i], "batch");
        b.images.push_back(pad_image(images[i], rows, cols));
        b.labels.push_back(pad_labels(labels[i], rows, cols));
    }
    b.indices = std::move(indices);
    b.case_ids = std::move(case_ids);
    return b;
}

std::vector<Batch> make_batches(const Dataset& ds, std::size_t batch_size, std::uint64_t shuffle_seed) {
    std::vector<Batch> out;
    for (auto& idx : batch_indices(ds.cases.size(), batch_size, shuffle_seed)) {
        std::vector<Image> imgs;
        std::vector<LabelMap> lbls;
        std::vector<std::string> ids;
        for (auto i : idx) {
            imgs.push_back(ds.cases[i].image);
            lbls.push_back(ds.cases[i].label);
            ids.push_back(ds.cases[i].case_id);
        }
        out.push_back(assemble_batch(imgs, lbls, std::move(idx), std::move(ids)));
    }
    return out;
}

std::vector<Case> load_acdc_case(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    static const std::regex gt_re(R"((.+_frame\d+)_gt\.nii(\.gz)?)");
    std::vector<std::pair<std::string, fs::path>> frames;  // (frame stem, gt path)
    for (const auto& e : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = e.path().filename().string();
        if (std::regex_match(name, m, gt_re)) frames.emplace_back(m[1], e.path());
    }
    if (frames.empty()) throw UnlabeledCaseError("no ground-truth volume in " + dir.string());
    std::sort(frames.begin(), frames.end());

    std::vector<Case> out;
    for (const auto& [stem, gt_path] : frames) {
        fs::path img_path = dir / (stem + ".nii.gz");
        if (!fs::exists(img_path)) img_path = dir / (stem + ".nii");
        if (!fs::exists(img_path)) throw IoError("ground truth without image volume: " + gt_path.string());
        const auto img = io::read_nifti(img_path);
        const auto gt = io::read_nifti(gt_path);
        auto slices = slices_from_volumes(img, gt, stem, true);
        for (std::size_t z = 0; z < slices.size(); ++z)
            out.push_back(Case{std::move(slices[z].first), std::move(slices[z].second),
                               stem + slice_suffix(static_cast<std::int64_t>(z))});
    }
    return out;
}

std::string split_name(Split s) { return s == Split::Train ? "train" : "test"; }

Split parse_split(const std::string& s) {
    if (s == "train") return Split::Train;
    if (s == "test") return Split::Test;
    throw SchemaError("unknown split '" + s + "'");
}

std::vector<ManifestEntry> read_manifest(const fs::path& manifest_path) {
    if (!fs::exists(manifest_path)) throw IoError("manifest not found: " + manifest_path.string());
    json doc;
    try {
        doc = json::parse(io::read_text(manifest_path));
    } catch (const json::exception& e) {
        throw SchemaError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw SchemaError("manifest must be a JSON list");
    std::vector<ManifestEntry> out;
    for (const auto& j : doc) {
        try {
            out.push_back(ManifestEntry{j.at("case_id").get<std::string>(), j.at("image_path").get<std::string>(),
                                        j.at("label_path").get<std::string>(),
                                        parse_split(j.at("split").get<std::string>())});
        } catch (const json::exception& e) {
            throw SchemaError(std::string("bad manifest entry: ") + e.what());
        }
    }
    return out;
}

void write_manifest(const fs::path& manifest_path, const std::vector<ManifestEntry>& entries) {
    json doc = json::array();
    for (const auto& e : entries)
        doc.push_back({{"case_id", e.case_id},
                       {"image_path", e.image_path},
                       {"label_path", e.label_path},
                       {"split", split_name(e.split)}});
    io::write_text(manifest_path, doc.dump(2) + "\n");
}

std::vector<Split> assign_splits(const std::vector<std::string>& case_ids, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) throw InvalidArgument("test_fraction must lie in [0,1]");
    // FNV-1a over the seed bytes followed by the id.
    auto hash = [seed](const std::string& id) {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](unsigned char b) { h = (h ^ b) * 1099511628211ull; };
        for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
        for (unsigned char ch : id) mix(ch);
        return h;
    };
    std::vector<std::size_t> order(case_ids.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto ha = hash(case_ids[a]), hb = hash(case_ids[b]);
        return ha != hb ? ha < hb : case_ids[a] < case_ids[b];
    });
    const auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(case_ids.size())));
    std::vector<Split> out(case_ids.size(), Split::Train);
    for (std::size_t k = 0; k < n_test; ++k) out[order[k]] = Split::Test;
    return out;
}

Dataset load_dataset(const fs::path& dir, Split split, const Preprocessing& prep) {
    const fs::path manifest = dir / "manifest.json";
    const auto entries = read_manifest(manifest);
    Dataset ds;
    ds.split = split;
    for (const auto& e : entries) {
        if (e.split != split) continue;
        const fs::path ip = resolve(dir, e.image_path);
        const fs::path lp = resolve(dir, e.label_path);
        std::vector<Case> cases;
        if (is_nifti(ip)) {
            auto slices = slices_from_volumes(io::read_nifti(ip), io::read_nifti(lp), e.case_id, false);
            for (std::size_t z = 0; z < slices.size(); ++z) {
                std::string id = slices.size() == 1 ? e.case_id : e.case_id + slice_suffix(static_cast<std::int64_t>(z));
                cases.push_back(Case{std::move(slices[z].first), std::move(slices[z].second), std::move(id)});
            }
        } else {
            Image im{io::read_npy_image(ip), Spacing{}};
            LabelMap lb{io::read_npy_labels(lp), 2, Spacing{}};
            const fs::path sidecar = dir / (e.case_id + ".json");
            if (fs::exists(sidecar)) {
                const json meta = json::parse(io::read_text(sidecar));
                lb.num_classes = meta.value("num_classes", 2);
                if (meta.contains("spacing")) {
                    im.spacing = Spacing{meta["spacing"].at(0).get<double>(), meta["spacing"].at(1).get<double>()};
                    lb.spacing = im.spacing;
                }
            }
            const int max_label = lb.labels.data.empty()
                                      ? 0
                                      : *std::max_element(lb.labels.data.begin(), lb.labels.data.end());
            if (max_label >= lb.num_classes)
                throw SchemaError(e.case_id + ": label " + std::to_string(max_label) + " exceeds num_classes");
            require_same_shape(im, lb, e.case_id.c_str());
            cases.push_back(Case{std::move(im), std::move(lb), e.case_id});
        }
        for (auto& c : cases) {
            if (prep.normalize) c.image = normalize(c.image);
            const auto side = padded_side(c.image.rows(), c.image.cols(), prep.pad_multiple);
            c.image = pad_image(c.image, side, side);
            c.label = pad_labels(c.label, side, side);
            ds.cases.push_back(std::move(c));
        }
    }
    if (ds.cases.empty()) throw IoError("no " + split_name(split) + " cases listed in " + manifest.string());
    // Multi-class volumes keep the widest class count seen.
    int classes = 0;
    for (const auto& c : ds.cases) classes = std::max(classes, c.label.num_classes);
    for (auto& c : ds.cases) c.label.num_classes = classes;
    ds.validate();
    return ds;
}

ManifestEntry export_phantom(const fs::path& dir, const std::string& case_id, const Phantom& p, std::uint64_t seed) {
    const std::string image_name = case_id + "_image.npy";
    const std::string label_name = case_id + "_label.npy";
    io::write_npy(dir / image_name, p.image.pixels);
    io::write_npy(dir / label_name, p.label.labels);
    const json meta = {{"case_id", case_id},
                       {"seed", seed},
                       {"motion_blur", p.info.motion_blur},
                       {"effusion", p.info.effusion},
                       {"num_classes", p.label.num_classes},
                       {"spacing", {p.image.spacing.row_mm, p.image.spacing.col_mm}}};
    io::write_text(dir / (case_id + ".json"), meta.dump(2) + "\n");
    return ManifestEntry{case_id, image_name, label_name, Split::Train};
}

Image load_image(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("image not found: " + path.string());
    if (is_nifti(path)) {
        const auto vol = io::read_nifti(path);
        Image im{Grid<float>(vol.dims[1], vol.dims[0]), Spacing{vol.spacing[1], vol.spacing[0]}};
        for (std::int64_t y = 0; y < vol.dims[1]; ++y)
            for (std::int64_t x = 0; x < vol.dims[0]; ++x) im.pixels.at(y, x) = static_cast<float>(vol.at(x, y, 0));
        return im;
    }
    return Image{io::read_npy_image(path), Spacing{}};
}

}  // namespace spdnet::data
