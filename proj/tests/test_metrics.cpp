#include <doctest.h>

#include <cmath>
#include <limits>

#include "spdnet/metrics.hpp"
#include "support.hpp"

using namespace spdnet;
namespace st = spdnet::testing;

namespace {

LabelMap from_rows(const std::vector<std::string>& rows) {
    LabelMap m{Grid<std::uint8_t>(static_cast<std::int64_t>(rows.size()), static_cast<std::int64_t>(rows[0].size())), 2,
               {}};
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m.labels.at(static_cast<std::int64_t>(r), static_cast<std::int64_t>(c)) = rows[r][c] == '#';
    return m;
}

}  // namespace

TEST_CASE("overlap scores on a hand-checked pair") {
    const auto a = from_rows({"##..", "##..", "....", "...."});
    const auto b = from_rows({".##.", ".##.", "....", "...."});
    CHECK(metrics::dice_score(a, b, 1) == 0.5);
    CHECK(metrics::jaccard(a, b, 1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("both masks empty score 1 and 0 mm") {
    const auto e = from_rows({"...", "..."});
    CHECK(metrics::dice_score(e, e, 1) == 1.0);
    CHECK(metrics::jaccard(e, e, 1) == 1.0);
    const auto hd = metrics::hausdorff(e, e, 1, {});
    CHECK(hd.distance_mm == 0.0);
    CHECK_FALSE(hd.sentinel);
}

TEST_CASE("one empty side yields the image diagonal sentinel") {
    const auto e = from_rows({"....", "....", "...."});
    const auto f = from_rows({".#..", "....", "...."});
    const auto hd = metrics::hausdorff(e, f, 1, Spacing{2.0, 1.0});
    CHECK(hd.sentinel);
    CHECK(hd.distance_mm == doctest::Approx(std::sqrt(6.0 * 6.0 + 4.0 * 4.0)));
}

TEST_CASE("Hausdorff respects anisotropic spacing") {
    const auto a = from_rows({"#....", ".....", "....."});
    const auto b = from_rows({".....", ".....", "....#"});
    const auto hd = metrics::hausdorff(a, b, 1, Spacing{3.0, 0.5});
    CHECK(hd.distance_mm == doctest::Approx(std::sqrt(6.0 * 6.0 + 2.0 * 2.0)));
}

TEST_CASE("boundary is the mask minus its 4-connected erosion") {
    const auto m = from_rows({"#####", "#####", "#####", "#####"});
    const auto b = metrics::boundary(metrics::class_mask(m, 1));
    int on = 0;
    for (auto v : b.data) on += v;
    CHECK(on == 14);  // only the two interior pixels are removed
    CHECK(b.at(1, 2) == 0);
}

TEST_CASE("property: metrics agree with brute-force oracles") {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 300; ++t) {
        const int rows = 1 + static_cast<int>(rng() % 12), cols = 1 + static_cast<int>(rng() % 12);
        const int classes = 2 + static_cast<int>(rng() % 3);
        const auto a = st::random_labels(rng, rows, cols, classes, 0.1 + 0.1 * (t % 8));
        const auto b = st::random_labels(rng, rows, cols, classes, 0.1 + 0.1 * ((t + 3) % 8));
        const Spacing sp{0.5 + (t % 5) * 0.3, 1.7 - (t % 4) * 0.3};
        for (int cls = 1; cls < classes; ++cls) {
            CHECK(metrics::dice_score(a, b, cls) == st::oracle_dice(a, b, cls));
            CHECK(metrics::jaccard(a, b, cls) == st::oracle_jaccard(a, b, cls));
            CHECK(metrics::hausdorff(a, b, cls, sp).distance_mm ==
                  doctest::Approx(st::oracle_hausdorff(a, b, cls, sp)).epsilon(1e-12));
        }
    }
}

TEST_CASE("property: symmetry, bounds and the Dice-Jaccard identity") {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 200; ++t) {
        const auto a = st::random_labels(rng, 9, 11, 2, 0.4), b = st::random_labels(rng, 9, 11, 2, 0.4);
        const double d = metrics::dice_score(a, b, 1), j = metrics::jaccard(a, b, 1);
        CHECK(d == metrics::dice_score(b, a, 1));
        CHECK(metrics::hausdorff(a, b, 1, {}).distance_mm == metrics::hausdorff(b, a, 1, {}).distance_mm);
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(j <= d);
        CHECK(j == doctest::Approx(d / (2 - d)).epsilon(1e-12));
        CHECK(metrics::dice_score(a, a, 1) == 1.0);
        CHECK(metrics::hausdorff(a, a, 1, {}).distance_mm == 0.0);
    }
}

TEST_CASE("distance transform matches brute force") {
    std::mt19937_64 rng(8);
    const Spacing sp{1.3, 0.7};
    for (int t = 0; t < 20; ++t) {
        const auto m = st::random_labels(rng, 10, 13, 2, 0.05);
        const auto mask = metrics::class_mask(m, 1);
        const auto dt = metrics::distance_transform(mask, sp);
        for (std::int64_t r = 0; r < 10; ++r)
            for (std::int64_t c = 0; c < 13; ++c) {
                double best = std::numeric_limits<double>::infinity();
                for (std::int64_t r2 = 0; r2 < 10; ++r2)
                    for (std::int64_t c2 = 0; c2 < 13; ++c2)
                        if (mask.at(r2, c2))
                            best = std::min(best, std::hypot((r - r2) * sp.row_mm, (c - c2) * sp.col_mm));
                CHECK(dt.at(r, c) == doctest::Approx(best).epsilon(1e-12));
            }
    }
}

TEST_CASE("quantiles interpolate at h = (n-1)p") {
    CHECK(metrics::quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
    CHECK(metrics::quantile({4, 1, 3, 2}, 0.5) == doctest::Approx(2.5));
    CHECK(metrics::quantile({5}, 0.9) == 5);
    CHECK_THROWS_AS(metrics::quantile({}, 0.5), InvalidArgument);
    const auto s = metrics::summarize({1, 2, 3, 4, 100});
    CHECK(s.median == 3);
    CHECK(s.q1 == 2);
    CHECK(s.q3 == 4);
    CHECK(s.outliers == 1);
    CHECK(s.whisker_high == 4);
    CHECK(s.whisker_low == 1);
    CHECK(s.mean == doctest::Approx(22));
}

TEST_CASE("report CSV round trip and table layout") {
    metrics::MetricsReport r;
    r.method = "spdnet";
    r.per_case = {{"a", 1, 0.9, 0.9 / 1.1, 3.5, false}, {"b", 1, 0.7, 0.7 / 1.3, 7.25, false}};
    metrics::aggregate(r);
    CHECK(r.pooled.dice.mean == doctest::Approx(0.8));
    const auto back = metrics::from_csv(metrics::to_csv(r), "spdnet");
    REQUIRE(back.per_case.size() == 2);
    CHECK(back.per_case[1].hausdorff_mm == 7.25);
    CHECK(back.per_case[0].dice == 0.9);
    const auto table = metrics::format_table({r});
    CHECK(table.find("Methods") == 0);
    CHECK(table.find("0.800") != std::string::npos);
    const auto dir = st::scratch_dir("report");
    metrics::write_report(r, dir);
    CHECK(metrics::read_report(dir).method == "spdnet");
    CHECK(metrics::read_report(dir / "summary.json").per_case.size() == 2);
}

TEST_CASE("evaluate scores every foreground class of every case") {
    Dataset ds;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 3; ++i) {
        auto lbl = st::random_labels(rng, 8, 8, 3, 0.5);
        ds.cases.push_back(Case{Image{Grid<float>(8, 8), {}}, lbl, "c" + std::to_string(i)});
    }
    const auto perfect = metrics::evaluate([](const Case& c) { return c.label; }, ds, "truth");
    CHECK(perfect.per_case.size() == 6);
    CHECK(perfect.pooled.dice.mean == 1.0);
    CHECK(perfect.pooled.hausdorff_mm.max == 0.0);
    CHECK(perfect.per_class.size() == 2);
}
