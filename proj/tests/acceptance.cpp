// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed
// here. Criteria listed in kUnattainable are reported faithfully but do not
// change the exit status; every other failure does.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "spdnet/adversarial.hpp"
#include "spdnet/array_io.hpp"
#include "spdnet/losses.hpp"
#include "spdnet/metrics.hpp"
#include "spdnet/pipeline.hpp"
#include "spdnet/probabilistic.hpp"
#include "spdnet/checkpoint.hpp"
#include "spdnet/tensor_ops.hpp"
#include "spdnet/trainer.hpp"
#include "torch_support.hpp"

using namespace spdnet;
namespace fs = std::filesystem;
namespace st = spdnet::testing;

namespace {

// Criterion 2 asks every published row to satisfy J = D/(2-D) within 0.004;
// several rows of the published tables do not.
const std::set<int> kUnattainable = {2};

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------

Outcome c1_metric_oracles() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<int> side(1, 16);
    std::uniform_real_distribution<double> mm(0.5, 2.0), fill(0.0, 0.8);
    int dice_bad = 0, jac_bad = 0, hd_bad = 0;
    double hd_worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto r = side(rng), c = side(rng);
        const int classes = 2 + t % 3;
        auto a = st::random_labels(rng, r, c, classes, fill(rng));
        auto b = st::random_labels(rng, r, c, classes, fill(rng));
        const Spacing sp{mm(rng), mm(rng)};
        for (int cls = 1; cls < classes; ++cls) {
            dice_bad += metrics::dice_score(a, b, cls) != st::oracle_dice(a, b, cls);
            jac_bad += metrics::jaccard(a, b, cls) != st::oracle_jaccard(a, b, cls);
            const double err = std::abs(metrics::hausdorff(a, b, cls, sp).distance_mm - st::oracle_hausdorff(a, b, cls, sp));
            hd_worst = std::max(hd_worst, err);
            hd_bad += err > 1e-9;
        }
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "dice mismatches " << dice_bad << ", jaccard mismatches " << jac_bad << ", HD max |err| " << hd_worst
      << " mm, " << fmt("%.2f", secs) << " s";
    return {dice_bad == 0 && jac_bad == 0 && hd_bad == 0 && secs < 10.0, d.str()};
}

Outcome c2_paper_consistency() {
    struct Row {
        const char* table;
        double dice, jaccard;
    };
    // Published (Dice, Jaccard) pairs, every method row of both comparison tables.
    const Row rows[] = {{"T1", 0.866, 0.771}, {"T1", 0.899, 0.822}, {"T1", 0.906, 0.831}, {"T1", 0.917, 0.849},
                        {"T1", 0.921, 0.855}, {"T1", 0.927, 0.865}, {"T1", 0.933, 0.875}, {"T2", 0.876, 0.786},
                        {"T2", 0.897, 0.824}, {"T2", 0.901, 0.831}, {"T2", 0.912, 0.854}, {"T2", 0.921, 0.864},
                        {"T2", 0.931, 0.873}, {"T2", 0.939, 0.881}};
    // The identity must hold exactly on actual masks before it is applied to the tables.
    std::mt19937_64 rng(7);
    bool identity = true;
    for (int t = 0; t < 50; ++t) {
        auto a = st::random_labels(rng, 12, 12, 2, 0.4), b = st::random_labels(rng, 12, 12, 2, 0.4);
        const double d = metrics::dice_score(a, b, 1), j = metrics::jaccard(a, b, 1);
        identity = identity && std::abs(j - d / (2 - d)) < 1e-9 && std::abs(d - 2 * j / (1 + j)) < 1e-9;
    }
    const double spd = 0.933 / (2 - 0.933);
    const bool headline = std::abs(spd - 0.875) <= 0.001 && std::abs(spd - 0.8744) < 5e-5;
    int within = 0;
    double worst = 0.0;
    std::string misses;
    for (const auto& r : rows) {
        const double err = std::abs(r.dice / (2 - r.dice) - r.jaccard);
        worst = std::max(worst, err);
        if (err <= 0.004) ++within;
        else misses += std::string(" ") + r.table + ":" + fmt("%.3f", r.dice) + "(" + fmt("%.4f", err) + ")";
    }
    std::ostringstream d;
    d << "identity on masks " << (identity ? "ok" : "BROKEN") << "; SPDNet 0.933 -> " << fmt("%.4f", spd)
      << " vs 0.875; rows within 0.004: " << within << "/14, worst " << fmt("%.4f", worst);
    if (!misses.empty()) d << "; outside:" << misses;
    return {identity && headline && within == 14, d.str()};
}

Outcome c3_kl() {
    torch::NoGradGuard ng;
    auto gen = make_generator(33);
    const auto opts = torch::TensorOptions().dtype(torch::kFloat64);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        // Moderate parameters keep the Monte Carlo standard error near 3e-3.
        prob::GaussianGrid q{torch::rand({1, 1, 2, 2}, gen, opts) - 0.5, torch::rand({1, 1, 2, 2}, gen, opts) * 0.6 + 0.7, 0};
        prob::GaussianGrid p{torch::rand({1, 1, 2, 2}, gen, opts) - 0.5, torch::rand({1, 1, 2, 2}, gen, opts) * 0.6 + 0.7, 0};
        const double closed = prob::kl_divergence(q, p).item<double>();
        const std::int64_t n = 100000;
        auto eps = torch::randn({n, 1, 1, 2, 2}, gen, opts);
        auto z = q.mu + q.sigma * eps;
        auto log_q = -torch::log(q.sigma) - 0.5 * torch::pow((z - q.mu) / q.sigma, 2);
        auto log_p = -torch::log(p.sigma) - 0.5 * torch::pow((z - p.mu) / p.sigma, 2);
        const double mc = (log_q - log_p).sum({1, 2, 3, 4}).mean().item<double>();
        worst = std::max(worst, std::abs(closed - mc));
    }
    prob::GaussianGrid g{torch::randn({2, 3, 4, 4}, gen, opts), torch::rand({2, 3, 4, 4}, gen, opts) + 0.1, 0};
    const double self = prob::kl_divergence(g, g).item<double>();
    prob::GaussianGrid one{torch::ones({1, 1, 1, 1}, opts), torch::ones({1, 1, 1, 1}, opts), 0};
    prob::GaussianGrid std_normal{torch::zeros({1, 1, 1, 1}, opts), torch::ones({1, 1, 1, 1}, opts), 0};
    const double half = prob::kl_divergence(one, std_normal).item<double>();
    std::ostringstream d;
    d << "max |closed - MC| " << fmt("%.2e", worst) << " over 20 grids (1e5 draws); KL(q||q) " << self
      << "; KL(N(1,1)||N(0,1)) " << fmt("%.17g", half);
    return {worst <= 1e-2 && std::abs(self) <= 1e-9 && half == 0.5, d.str()};
}

Outcome c4_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto f64 = torch::TensorOptions().dtype(torch::kFloat64);
    torch::manual_seed(4);
    const LossWeights w{0.6, 10.0};
    auto labels = torch::randint(0, 3, {2, 4, 4}, torch::kInt64);
    // Probabilities kept in roughly [0.15, 0.6] so the step-1e-3 truncation error stays small.
    auto logits = 0.4 * torch::randn({2, 3, 4, 4}, f64);
    auto p = torch::softmax(logits, 1).detach().requires_grad_(true);
    const double step = 1e-3;
    const double e_ce = st::fd_max_rel_error([&] { return loss::cross_entropy(p, labels); }, p, 0, step);
    const double e_dice = st::fd_max_rel_error([&] { return loss::dice_loss(p, labels); }, p, 0, step);
    const double e_rec = st::fd_max_rel_error([&] { return loss::rec_loss(p, labels, w); }, p, 0, step);

    auto mq = torch::randn({1, 2, 3, 3}, f64).requires_grad_(true);
    auto sq = (torch::rand({1, 2, 3, 3}, f64) + 1.0).requires_grad_(true);
    auto mp = torch::randn({1, 2, 3, 3}, f64).requires_grad_(true);
    auto sp = (torch::rand({1, 2, 3, 3}, f64) + 1.0).requires_grad_(true);
    auto kl = [&] { return prob::kl_divergence({mq, sq, 0}, {mp, sp, 0}); };
    double e_kl = 0;
    for (auto* leaf : {&mq, &sq, &mp, &sp}) e_kl = std::max(e_kl, st::fd_max_rel_error(kl, *leaf, 0, step));

    // End to end: segmentor weights -> ProbMap -> fused discriminator features -> msl.
    auto cfg = st::tiny_config();
    // Clipping is a projection applied after updates, not part of the function being differentiated.
    cfg.discriminator.weight_clip = 0.0;
    torch::manual_seed(5);
    SpdNet model(cfg);
    model->to(torch::kFloat64);
    auto img = torch::rand({2, 1, 32, 32}, f64);
    auto y = (img > 0.5).to(torch::kInt64).squeeze(1);
    auto gen = make_generator(6);
    std::vector<torch::Tensor> z;
    {
        torch::NoGradGuard ng;
        z = prob::prior_forward(model->prior(), img, prob::Draw::Sample, &gen).samples;
    }
    auto& disc = model->discriminator();
    {
        // Populate running statistics, then evaluate with them.
        torch::NoGradGuard ng;
        disc->features(adv::fuse(img, one_hot_classes(y, 2).to(torch::kFloat64)), adv::NormMode::Train);
    }
    auto e2e = [&] {
        auto probs = model->segmentor()->forward(img, z);
        auto real = disc->features(adv::fuse(img, one_hot_classes(y, 2).to(torch::kFloat64)), adv::NormMode::Eval);
        auto fake = disc->features(adv::fuse(img, probs), adv::NormMode::Eval);
        return adv::multiscale_loss(real, fake);
    };
    st::FdPairs pairs;
    int probed = 0;
    for (auto& kv : model->segmentor()->named_parameters()) {
        auto leaf = kv.value();
        if (leaf.dim() < 2) continue;  // weight tensors only
        st::fd_collect(e2e, leaf, 8, step, 17 + probed, pairs);
        ++probed;
    }
    const double e_e2e = st::norm_rel_error(pairs);
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << "rel err ce " << fmt("%.1e", e_ce) << ", dice " << fmt("%.1e", e_dice) << ", rec " << fmt("%.1e", e_rec)
      << ", kl " << fmt("%.1e", e_kl) << " (<= 1e-4); end-to-end " << fmt("%.1e", e_e2e) << " over " << probed
      << " weight tensors x 8 entries, gradient-vector relative (<= 1e-2); " << fmt("%.1f", secs) << " s";
    const bool ok = e_ce <= 1e-4 && e_dice <= 1e-4 && e_rec <= 1e-4 && e_kl <= 1e-4 && e_e2e <= 1e-2 && secs < 120;
    return {ok, d.str()};
}

Outcome c5_loss_algebra() {
    const auto f64 = torch::TensorOptions().dtype(torch::kFloat64);
    torch::manual_seed(55);
    auto p = torch::softmax(torch::randn({3, 2, 8, 8}, f64), 1);
    auto y = torch::randint(0, 2, {3, 8, 8}, torch::kInt64);
    const auto cfg = resolve_config(std::nullopt, std::nullopt, std::nullopt);
    const auto desk = resolve_config(std::string("desk"), std::nullopt, std::nullopt);
    const auto& w = cfg.losses;
    const bool defaults = w.alpha == 0.6 && w.beta == 10.0 && desk.losses.alpha == 0.6 && desk.losses.beta == 10.0;

    const auto ce = loss::cross_entropy(p, y).item<double>();
    const auto dl = loss::dice_loss(p, y).item<double>();
    const auto rec = loss::rec_loss(p, y, w).item<double>();
    const double rec_expected = -w.alpha * ce + (1 - w.alpha) * dl;

    std::vector<torch::Tensor> kls{torch::tensor(0.01, f64), torch::tensor(0.02, f64), torch::tensor(0.03, f64),
                                   torch::tensor(0.04, f64)};
    const auto rec_t = torch::tensor(rec, f64);
    const double elbo = loss::elbo_loss(rec_t, kls, w).item<double>();
    const double elbo_expected = rec + w.beta * (0.01 + 0.02 + 0.03 + 0.04);
    const double arith = loss::elbo_loss(torch::tensor(0.3, f64), kls, w).item<double>();

    std::ostringstream d;
    d << "defaults alpha=" << w.alpha << " beta=" << w.beta << "; rec " << fmt("%.17g", rec) << " vs "
      << fmt("%.17g", rec_expected) << "; elbo " << fmt("%.17g", elbo) << " vs " << fmt("%.17g", elbo_expected)
      << "; 0.3 + 10*0.1 = " << fmt("%.17g", arith);
    return {defaults && rec == rec_expected && elbo == elbo_expected && std::abs(arith - 1.3) < 1e-12, d.str()};
}

// Shared by criteria 6 and 11.
struct Overfit {
    std::unique_ptr<Trainer> trainer;
    double dice = 0;
    double seconds = 0;
};
Overfit g_overfit;

Outcome c6_overfit() {
    auto cfg = desk_preset();
    cfg.data.test_fraction = 0.0;
    const auto dir = st::scratch_dir("acc6");
    pipeline::synth(cfg, dir / "data", 16);
    const auto ds = data::load_dataset(dir / "data", Split::Train, cfg.preprocessing());
    const auto t0 = std::chrono::steady_clock::now();
    g_overfit.trainer = std::make_unique<Trainer>(cfg);
    g_overfit.trainer->fit(ds, nullptr);
    g_overfit.seconds = seconds_since(t0);
    auto& m = g_overfit.trainer->model();
    m.eval();
    const auto rep = evaluate_model(m, ds, MetricsConfig{LatentMode::PriorMean, 1}, cfg.train.seed, "spdnet");
    g_overfit.dice = rep.pooled.dice.mean;
    std::ostringstream d;
    d << ds.cases.size() << " phantoms, " << cfg.train.epochs << " epochs, full model (params: " << census(m).total()
      << "); train mean Dice " << fmt("%.4f", g_overfit.dice) << " (>= 0.95); " << fmt("%.0f", g_overfit.seconds)
      << " s (<= 900)";
    return {ds.cases.size() == 16 && cfg.train.epochs <= 200 && m.has_latents() && m.has_discriminator() &&
                g_overfit.dice >= 0.95 && g_overfit.seconds <= 900,
            d.str()};
}

bool monotone_ma(const std::vector<double>& v, int window, bool increasing) {
    std::vector<double> ma;
    for (std::size_t i = window - 1; i < v.size(); ++i) {
        double s = 0;
        for (int k = 0; k < window; ++k) s += v[i - k];
        ma.push_back(s / window);
    }
    for (std::size_t i = 1; i < ma.size(); ++i)
        if (increasing ? ma[i] < ma[i - 1] : ma[i] > ma[i - 1]) return false;
    return true;
}

Outcome c7_adversarial_dynamics() {
    auto cfg = desk_preset();
    data::PhantomConfig pc = cfg.data.phantom;
    std::vector<Image> imgs;
    std::vector<LabelMap> lbls;
    for (int i = 0; i < 4; ++i) {
        data::Rng rng(900 + i);
        auto ph = data::generate_phantom(pc, rng);
        imgs.push_back(data::normalize(ph.image));
        lbls.push_back(ph.label);
    }
    auto img = images_to_tensor(imgs);
    auto lbl = labels_to_tensor(lbls);

    Trainer a(cfg);
    std::vector<double> msl;
    for (int i = 0; i < 50; ++i) msl.push_back(a.train_step_discriminator(img, lbl));
    const bool disc_ok = msl.back() > msl.front() && monotone_ma(msl, 10, true);

    Trainer b(cfg);
    std::vector<double> total;
    for (int i = 0; i < 50; ++i) total.push_back(b.train_step_segmentor(img, lbl).seg_total);
    const bool seg_ok = total.back() < total.front() && monotone_ma(total, 10, false);

    std::ostringstream d;
    d << "disc steps: msl " << fmt("%.4g", msl.front()) << " -> " << fmt("%.4g", msl.back())
      << (monotone_ma(msl, 10, true) ? " (MA10 monotone)" : " (MA10 not monotone)") << "; seg steps: msl+elbo "
      << fmt("%.4g", total.front()) << " -> " << fmt("%.4g", total.back())
      << (monotone_ma(total, 10, false) ? " (MA10 monotone)" : " (MA10 not monotone)");
    return {disc_ok && seg_ok, d.str()};
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(SPDNET_CLI_PATH) + " " + args + " > \"" + log.string() + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

Outcome c8_ablation_ladder() {
    const auto dir = st::scratch_dir("acc8");
    const auto conf = dir / "ablation.json";
    io::write_text(conf, R"({"preset": "desk", "train": {"epochs": 2, "checkpoint_every": 0}, "data": {"test_fraction": 0.25}})");
    std::ostringstream d;
    bool ok = run_cli("synth --config " + conf.string() + " --out " + (dir / "data").string() + " --count 8",
                      dir / "synth.log") == 0;
    struct Rung {
        const char* name;
        const char* flags;
        bool prob, disc;
    };
    const Rung rungs[] = {{"segmentor", "--ablate probabilistic discriminator", false, false},
                          {"segmentor+probabilistic", "--ablate discriminator", true, false},
                          {"spdnet", "", true, true}};
    std::vector<std::string> reports;
    for (const auto& r : rungs) {
        const auto run = dir / r.name;
        const int tr = run_cli("train --config " + conf.string() + " " + r.flags + " --data " + (dir / "data").string() +
                                   " --out " + run.string(),
                               dir / (std::string(r.name) + "_train.log"));
        const int ev = run_cli("eval --config " + conf.string() + " --checkpoint " + (run / "model.ckpt").string() +
                                   " --data " + (dir / "data").string() + " --out " + (run / "eval").string(),
                               dir / (std::string(r.name) + "_eval.log"));
        ParameterCensus c;
        try {
            auto net = model_from_checkpoint(read_checkpoint(run / "model.ckpt"));
            c = census(*net);
        } catch (const std::exception&) {
        }
        const bool census_ok = c.segmentor > 0 && (c.prior > 0) == r.prob && (c.posterior > 0) == r.prob &&
                               (c.discriminator > 0) == r.disc;
        bool report_ok = false;
        try {
            const auto rep = metrics::read_report(run / "eval");
            report_ok = rep.method == r.name && rep.per_case.size() == 2 && rep.pooled.dice.n == 2;
        } catch (const std::exception&) {
        }
        ok = ok && tr == 0 && ev == 0 && census_ok && report_ok;
        d << r.name << ": train " << tr << " eval " << ev << " census(seg " << c.segmentor << ", prior " << c.prior
          << ", post " << c.posterior << ", disc " << c.discriminator << ")" << (report_ok ? " report ok" : " report BAD")
          << "; ";
        reports.push_back((run / "eval").string());
    }
    const int rp = run_cli("report " + reports[0] + " " + reports[1] + " " + reports[2] + " --out " +
                               (dir / "compare").string(),
                           dir / "report.log");
    const auto table = io::read_text(dir / "compare" / "table.txt");
    const auto rows = std::count(table.begin(), table.end(), '\n');
    ok = ok && rp == 0 && rows == 5;  // header, rule, three methods
    d << "comparison table rows " << rows - 2;
    return {ok, d.str()};
}

Outcome c9_reparameterization() {
    torch::NoGradGuard ng;
    const auto f64 = torch::TensorOptions().dtype(torch::kFloat64);
    auto gen = make_generator(99);
    prob::GaussianGrid g{torch::tensor({-1.5, 0.0, 0.7, 3.0, -0.2, 1.1}, f64).reshape({1, 1, 2, 3}),
                         torch::tensor({0.1, 1.0, 2.5, 0.5, 1e-3, 4.0}, f64).reshape({1, 1, 2, 3}), 0};
    const std::int64_t n = 100000;
    // One draw per batch row of the broadcast grid.
    prob::GaussianGrid wide{g.mu.expand({n, 1, 2, 3}), g.sigma.expand({n, 1, 2, 3}), 0};
    auto s = prob::sample_latent(wide, gen).z;
    auto mean = s.mean(0, true), sd = s.std(0, true, true);
    auto bound = 4 * g.sigma / std::sqrt(static_cast<double>(n));
    const double mean_excess = ((mean - g.mu).abs() / bound).max().item<double>();
    const double sd_excess = ((sd - g.sigma).abs() / bound).max().item<double>();
    std::ostringstream d;
    d << "max |mean - mu| / (4 sigma/sqrt N) " << fmt("%.4f", mean_excess) << ", max |std - sigma| / (4 sigma/sqrt N) "
      << fmt("%.4f", sd_excess) << " (both <= 1)";
    return {mean_excess <= 1 && sd_excess <= 1, d.str()};
}

std::string step_lines(const fs::path& history) {
    std::ifstream f(history);
    std::string line, out;
    while (std::getline(f, line))
        if (line.find("\"type\":\"step\"") != std::string::npos) out += line + "\n";
    return out;
}

Outcome c10_determinism() {
    const auto dir = st::scratch_dir("acc10");
    auto cfg = desk_preset();
    cfg.train.epochs = 3;
    cfg.train.checkpoint_every = 0;
    pipeline::synth(cfg, dir / "data", 8);
    pipeline::train(cfg, dir / "data", dir / "a");
    pipeline::train(cfg, dir / "data", dir / "b");
    const auto ta = step_lines(dir / "a" / "history.jsonl"), tb = step_lines(dir / "b" / "history.jsonl");
    MetricsConfig mc{LatentMode::PriorSample, 4};
    pipeline::eval(dir / "a" / "model.ckpt", dir / "data", dir / "a" / "eval", mc);
    pipeline::eval(dir / "b" / "model.ckpt", dir / "data", dir / "b" / "eval", mc);
    const auto ca = io::read_text(dir / "a" / "eval" / "report.csv"), cb = io::read_text(dir / "b" / "eval" / "report.csv");
    const auto steps = std::count(ta.begin(), ta.end(), '\n');
    std::ostringstream d;
    d << steps << " step records " << (ta == tb ? "identical" : "DIFFER") << "; evaluation CSVs (4 prior draws) "
      << (ca == cb ? "identical" : "DIFFER");
    return {steps > 0 && ta == tb && ca == cb && !ca.empty(), d.str()};
}

Outcome c11_uncertainty() {
    if (!g_overfit.trainer) return {false, "needs the criterion 6 model"};
    auto& m = g_overfit.trainer->model();
    m.eval();
    auto pc = m.config().data.phantom;
    pc.motion_blur_prob = 1.0;
    auto gen = make_generator(1111);
    double band_sum = 0, interior_sum = 0;
    std::int64_t band_n = 0, interior_n = 0;
    const int phantoms = 8;
    for (int i = 0; i < phantoms; ++i) {
        data::Rng rng(5000 + i);
        auto ph = data::generate_phantom(pc, rng);
        auto img = data::normalize(ph.image);
        const auto side = data::padded_side(img.rows(), img.cols(), m.config().pad_multiple());
        data::PadInfo pad;
        img = data::pad_image(img, side, side, &pad);
        const auto pred = predict(m, images_to_tensor({img}), LatentMode::PriorSample, 16, gen);
        const auto var = data::crop(tensor_to_grid(pred.uncertainty), pad);
        // Band: pixels within 3 px of any label boundary (either side of it).
        Grid<std::uint8_t> edges(ph.label.rows(), ph.label.cols());
        const auto& L = ph.label.labels;
        for (std::int64_t r = 0; r < L.rows; ++r)
            for (std::int64_t c = 0; c < L.cols; ++c) {
                const auto v = L.at(r, c);
                const bool edge = (r > 0 && L.at(r - 1, c) != v) || (r + 1 < L.rows && L.at(r + 1, c) != v) ||
                                  (c > 0 && L.at(r, c - 1) != v) || (c + 1 < L.cols && L.at(r, c + 1) != v);
                edges.at(r, c) = edge;
            }
        const auto dist = metrics::distance_transform(edges, Spacing{});
        for (std::size_t k = 0; k < var.size(); ++k) {
            if (dist.data[k] <= 3.0) {
                band_sum += var.data[k];
                ++band_n;
            } else {
                interior_sum += var.data[k];
                ++interior_n;
            }
        }
    }
    const double band = band_sum / static_cast<double>(band_n);
    const double interior = interior_sum / static_cast<double>(interior_n);
    const double ratio = interior > 0 ? band / interior : (band > 0 ? INFINITY : 0.0);
    std::ostringstream d;
    d << phantoms << " motion-blurred phantoms, 16 prior draws: band variance " << fmt("%.3e", band) << ", interior "
      << fmt("%.3e", interior) << ", ratio " << fmt("%.2f", ratio) << " (>= 2)";
    return {band > 0 && ratio >= 2.0, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
    torch::set_num_threads(1);
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"metric-oracle equivalence", c1_metric_oracles},
        {"paper-consistency J = D/(2-D)", c2_paper_consistency},
        {"KL correctness", c3_kl},
        {"gradient verification", c4_gradients},
        {"loss algebra", c5_loss_algebra},
        {"overfit trend", c6_overfit},
        {"adversarial dynamics", c7_adversarial_dynamics},
        {"ablation ladder structure", c8_ablation_ladder},
        {"reparameterization statistics", c9_reparameterization},
        {"determinism", c10_determinism},
        {"uncertainty signal", c11_uncertainty},
    };
    int hard_failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id) && !(id == 6 && only.count(11))) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const bool known = kUnattainable.count(id) > 0;
        std::printf("[criterion %2d] %s  %s: %s (%.1f s)%s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first,
                    o.detail.c_str(), seconds_since(t0), !o.pass && known ? " [unattainable, see ledger]" : "");
        std::fflush(stdout);
        if (!o.pass && !known) ++hard_failures;
    }
    return hard_failures == 0 ? 0 : 1;
}
