#include "spdnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "spdnet/array_io.hpp"

namespace spdnet::metrics {
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Counts {
    std::int64_t pred = 0, truth = 0, both = 0;
};

Counts count(const LabelMap& pred, const LabelMap& truth, int cls) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw ShapeMismatch("metric inputs differ in shape");
    Counts k;
    for (std::size_t i = 0; i < pred.labels.size(); ++i) {
        const bool a = pred.labels.data[i] == cls;
        const bool b = truth.labels.data[i] == cls;
        k.pred += a;
        k.truth += b;
        k.both += a && b;
    }
    return k;
}

constexpr double kFar = 1e20;

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) on sites spaced `step` apart.
void edt_1d(const std::vector<double>& f, double step, std::vector<double>& d) {
    const std::size_t n = f.size();
    std::vector<std::size_t> v(n);
    std::vector<double> z(n + 1);
    std::size_t k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    auto pos = [step](std::size_t q) { return step * static_cast<double>(q); };
    auto meet = [&](std::size_t q, std::size_t p) {
        return ((f[q] + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2 * (pos(q) - pos(p)));
    };
    for (std::size_t q = 1; q < n; ++q) {
        double s = meet(q, v[k]);
        while (s <= z[k]) {  // z[0] = -inf stops this at k == 0
            --k;
            s = meet(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    d.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
        while (z[k + 1] < pos(q)) ++k;
        const double diff = pos(q) - pos(v[k]);
        d[q] = diff * diff + f[v[k]];
    }
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

json summary_to_json(const Summary& s) {
    return {{"n", s.n},           {"mean", s.mean},         {"median", s.median},
            {"q1", s.q1},         {"q3", s.q3},             {"min", s.min},
            {"max", s.max},       {"whisker_low", s.whisker_low}, {"whisker_high", s.whisker_high},
            {"outliers", s.outliers}};
}

MetricSummaries summarize_rows(const std::vector<const CaseMetrics*>& rows) {
    std::vector<double> d, j, h;
    for (const auto* r : rows) {
        d.push_back(r->dice);
        j.push_back(r->jaccard);
        h.push_back(r->hausdorff_mm);
    }
    return MetricSummaries{summarize(d), summarize(j), summarize(h)};
}

}  // namespace

double dice_score(const LabelMap& pred, const LabelMap& truth, int cls) {
    const auto k = count(pred, truth, cls);
    if (k.pred + k.truth == 0) return 1.0;
    return 2.0 * static_cast<double>(k.both) / static_cast<double>(k.pred + k.truth);
}

double jaccard(const LabelMap& pred, const LabelMap& truth, int cls) {
    const auto k = count(pred, truth, cls);
    const std::int64_t uni = k.pred + k.truth - k.both;
    if (uni == 0) return 1.0;
    return static_cast<double>(k.both) / static_cast<double>(uni);
}

Grid<std::uint8_t> class_mask(const LabelMap& lbl, int cls) {
    Grid<std::uint8_t> m(lbl.rows(), lbl.cols());
    for (std::size_t i = 0; i < m.size(); ++i) m.data[i] = lbl.labels.data[i] == cls;
    return m;
}

Grid<std::uint8_t> boundary(const Grid<std::uint8_t>& mask) {
    Grid<std::uint8_t> out(mask.rows, mask.cols);
    auto on = [&](std::int64_t r, std::int64_t c) { return mask.in_bounds(r, c) && mask.at(r, c) != 0; };
    for (std::int64_t r = 0; r < mask.rows; ++r)
        for (std::int64_t c = 0; c < mask.cols; ++c)
            if (on(r, c) && !(on(r - 1, c) && on(r + 1, c) && on(r, c - 1) && on(r, c + 1))) out.at(r, c) = 1;
    return out;
}

Grid<double> distance_transform(const Grid<std::uint8_t>& mask, const Spacing& spacing) {
    Grid<double> sq(mask.rows, mask.cols, kFar);
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask.data[i]) sq.data[i] = 0.0;
    std::vector<double> f, d;
    for (std::int64_t c = 0; c < mask.cols; ++c) {
        f.resize(static_cast<std::size_t>(mask.rows));
        for (std::int64_t r = 0; r < mask.rows; ++r) f[static_cast<std::size_t>(r)] = sq.at(r, c);
        edt_1d(f, spacing.row_mm, d);
        for (std::int64_t r = 0; r < mask.rows; ++r) sq.at(r, c) = d[static_cast<std::size_t>(r)];
    }
    for (std::int64_t r = 0; r < mask.rows; ++r) {
        f.assign(sq.data.begin() + r * mask.cols, sq.data.begin() + (r + 1) * mask.cols);
        edt_1d(f, spacing.col_mm, d);
        for (std::int64_t c = 0; c < mask.cols; ++c) sq.at(r, c) = d[static_cast<std::size_t>(c)];
    }
    for (auto& v : sq.data) v = v >= kFar / 2 ? std::numeric_limits<double>::infinity() : std::sqrt(v);
    return sq;
}

HausdorffResult hausdorff(const LabelMap& pred, const LabelMap& truth, int cls, const Spacing& spacing) {
    if (!(spacing.row_mm > 0 && spacing.col_mm > 0)) throw InvalidArgument("hausdorff: spacing must be positive");
    const auto k = count(pred, truth, cls);
    if (k.pred == 0 && k.truth == 0) return {0.0, false};
    if (k.pred == 0 || k.truth == 0)
        return {std::hypot(static_cast<double>(pred.rows()) * spacing.row_mm,
                           static_cast<double>(pred.cols()) * spacing.col_mm),
                true};
    const auto ba = boundary(class_mask(pred, cls));
    const auto bb = boundary(class_mask(truth, cls));
    const auto da = distance_transform(ba, spacing);
    const auto db = distance_transform(bb, spacing);
    double hd = 0.0;
    for (std::size_t i = 0; i < ba.size(); ++i) {
        if (ba.data[i]) hd = std::max(hd, db.data[i]);
        if (bb.data[i]) hd = std::max(hd, da.data[i]);
    }
    return {hd, false};
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidArgument("quantile of an empty set");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(const std::vector<double>& values) {
    Summary s;
    s.n = values.size();
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    s.median = quantile(values, 0.5);
    s.q1 = quantile(values, 0.25);
    s.q3 = quantile(values, 0.75);
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    const double iqr = s.q3 - s.q1;
    const double lo = s.q1 - 1.5 * iqr;
    const double hi = s.q3 + 1.5 * iqr;
    s.whisker_low = s.max;
    s.whisker_high = s.min;
    for (double v : values) {
        if (v < lo || v > hi) {
            ++s.outliers;
        } else {
            s.whisker_low = std::min(s.whisker_low, v);
            s.whisker_high = std::max(s.whisker_high, v);
        }
    }
    return s;
}

void aggregate(MetricsReport& report) {
    std::map<int, std::vector<const CaseMetrics*>> by_class;
    std::map<std::string, std::vector<const CaseMetrics*>> by_case_id;
    std::vector<std::string> case_order;
    std::vector<const CaseMetrics*> all;
    for (const auto& r : report.per_case) {
        by_class[r.class_id].push_back(&r);
        if (!by_case_id.count(r.case_id)) case_order.push_back(r.case_id);
        by_case_id[r.case_id].push_back(&r);
        all.push_back(&r);
    }
    report.per_class.clear();
    for (const auto& [cls, rows] : by_class) report.per_class.emplace_back(cls, summarize_rows(rows));
    report.pooled = summarize_rows(all);

    std::vector<CaseMetrics> case_means;
    for (const auto& id : case_order) {
        const auto& rows = by_case_id[id];
        CaseMetrics m{id, 0, 0, 0, 0, false};
        for (const auto* r : rows) {
            m.dice += r->dice;
            m.jaccard += r->jaccard;
            m.hausdorff_mm += r->hausdorff_mm;
        }
        const auto n = static_cast<double>(rows.size());
        m.dice /= n;
        m.jaccard /= n;
        m.hausdorff_mm /= n;
        case_means.push_back(m);
    }
    std::vector<const CaseMetrics*> ptrs;
    for (const auto& m : case_means) ptrs.push_back(&m);
    report.by_case = summarize_rows(ptrs);
}

std::vector<CaseMetrics> score_case(const LabelMap& pred, const Case& truth) {
    std::vector<CaseMetrics> rows;
    for (int cls = 1; cls < truth.label.num_classes; ++cls) {
        const auto hd = hausdorff(pred, truth.label, cls, truth.label.spacing);
        rows.push_back(CaseMetrics{truth.case_id, cls, dice_score(pred, truth.label, cls),
                                   jaccard(pred, truth.label, cls), hd.distance_mm, hd.sentinel});
    }
    return rows;
}

MetricsReport evaluate(const Predictor& predict, const Dataset& ds, const std::string& method) {
    if (ds.cases.empty()) throw InvalidArgument("evaluate: empty dataset");
    MetricsReport report;
    report.method = method;
    report.num_classes = ds.num_classes();
    for (const auto& c : ds.cases) {
        LabelMap pred = predict(c);
        if (pred.num_classes != c.label.num_classes)
            throw SchemaError("prediction has " + std::to_string(pred.num_classes) + " classes, case " + c.case_id +
                              " has " + std::to_string(c.label.num_classes));
        for (auto& row : score_case(pred, c)) report.per_case.push_back(std::move(row));
    }
    aggregate(report);
    return report;
}

std::string format_table(const std::vector<MetricsReport>& reports) {
    if (reports.empty()) throw InvalidArgument("format_table: no reports");
    std::size_t width = 7;
    for (const auto& r : reports) width = std::max(width, r.method.size());
    auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(w, s.size()), ' ');
        return s;
    };
    std::ostringstream os;
    os << pad("Methods", width) << " | Dice score | Jaccard | HD(mm)\n";
    os << std::string(width, '-') << "-+------------+---------+--------\n";
    for (const auto& r : reports) {
        if (r.per_case.empty()) throw InvalidArgument("format_table: empty report " + r.method);
        os << pad(r.method, width) << " | " << pad(fixed(r.pooled.dice.mean, 3), 10) << " | "
           << pad(fixed(r.pooled.jaccard.mean, 3), 7) << " | " << fixed(r.pooled.hausdorff_mm.mean, 3) << "\n";
    }
    return os.str();
}

std::string to_csv(const MetricsReport& report) {
    if (report.per_case.empty()) throw InvalidArgument("to_csv: empty report");
    std::ostringstream os;
    os << "# method: " << report.method << "\n";
    os << "# num_classes: " << report.num_classes << "\n";
    os << "# quantiles: linear interpolation between order statistics, h=(n-1)p; outliers beyond 1.5*IQR\n";
    auto q = [&](const char* name, const Summary& s) {
        os << "# " << name << ": q1=" << fmt(s.q1) << " median=" << fmt(s.median) << " q3=" << fmt(s.q3)
           << " outliers=" << s.outliers << "\n";
    };
    q("dice", report.pooled.dice);
    q("jaccard", report.pooled.jaccard);
    q("hd_mm", report.pooled.hausdorff_mm);
    os << "case_id,class_id,dice,jaccard,hd_mm\n";
    for (const auto& r : report.per_case)
        os << r.case_id << "," << r.class_id << "," << fmt(r.dice) << "," << fmt(r.jaccard) << ","
           << fmt(r.hausdorff_mm) << "\n";
    return os.str();
}

MetricsReport from_csv(const std::string& text, const std::string& method) {
    MetricsReport report;
    report.method = method;
    std::istringstream is(text);
    std::string line;
    bool header_seen = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# method: ", 0) == 0 && method.empty()) report.method = line.substr(10);
            if (line.rfind("# num_classes: ", 0) == 0) report.num_classes = std::stoi(line.substr(15));
            continue;
        }
        if (!header_seen) {
            if (line != "case_id,class_id,dice,jaccard,hd_mm") throw SchemaError("unexpected report CSV header: " + line);
            header_seen = true;
            continue;
        }
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cols.push_back(cell);
        if (cols.size() != 5) throw SchemaError("report CSV row has " + std::to_string(cols.size()) + " columns");
        try {
            CaseMetrics m{cols[0], std::stoi(cols[1]), std::stod(cols[2]), std::stod(cols[3]), std::stod(cols[4]), false};
            report.per_case.push_back(m);
        } catch (const std::exception&) {
            throw SchemaError("non-numeric value in report CSV row: " + line);
        }
    }
    if (!header_seen) throw SchemaError("report CSV lacks a header row");
    aggregate(report);
    return report;
}

std::string boxplot_csv(const std::vector<MetricsReport>& reports) {
    std::ostringstream os;
    os << "method,metric,class_id,n,mean,min,whisker_low,q1,median,q3,whisker_high,max,outliers\n";
    auto row = [&](const std::string& method, const char* metric, const std::string& cls, const Summary& s) {
        os << method << "," << metric << "," << cls << "," << s.n << "," << fmt(s.mean) << "," << fmt(s.min) << ","
           << fmt(s.whisker_low) << "," << fmt(s.q1) << "," << fmt(s.median) << "," << fmt(s.q3) << ","
           << fmt(s.whisker_high) << "," << fmt(s.max) << "," << s.outliers << "\n";
    };
    for (const auto& r : reports) {
        auto emit = [&](const std::string& cls, const MetricSummaries& m) {
            row(r.method, "dice", cls, m.dice);
            row(r.method, "jaccard", cls, m.jaccard);
            row(r.method, "hd_mm", cls, m.hausdorff_mm);
        };
        emit("all", r.pooled);
        for (const auto& [cls, m] : r.per_class) emit(std::to_string(cls), m);
    }
    return os.str();
}

std::string summary_json(const MetricsReport& report) {
    json per_class = json::object();
    for (const auto& [cls, m] : report.per_class)
        per_class[std::to_string(cls)] = {{"dice", summary_to_json(m.dice)},
                                          {"jaccard", summary_to_json(m.jaccard)},
                                          {"hd_mm", summary_to_json(m.hausdorff_mm)}};
    std::size_t sentinels = 0;
    for (const auto& r : report.per_case) sentinels += r.hd_sentinel;
    const json doc = {
        {"method", report.method},
        {"dice", report.pooled.dice.mean},
        {"jaccard", report.pooled.jaccard.mean},
        {"hd_mm", report.pooled.hausdorff_mm.mean},
        {"num_classes", report.num_classes},
        {"n_rows", report.per_case.size()},
        {"hd_sentinel_rows", sentinels},
        {"aggregation",
         {{"pooled", {{"description", "mean over all (case, class) rows"},
                      {"dice", report.pooled.dice.mean},
                      {"jaccard", report.pooled.jaccard.mean},
                      {"hd_mm", report.pooled.hausdorff_mm.mean}}},
          {"class_then_case", {{"description", "mean over classes per case, then over cases"},
                               {"dice", report.by_case.dice.mean},
                               {"jaccard", report.by_case.jaccard.mean},
                               {"hd_mm", report.by_case.hausdorff_mm.mean}}}}},
        {"per_class", per_class}};
    return doc.dump(2) + "\n";
}

void write_report(const MetricsReport& report, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    io::write_text(out_dir / "report.csv", to_csv(report));
    io::write_text(out_dir / "summary.json", summary_json(report));
    io::write_text(out_dir / "boxplot.csv", boxplot_csv({report}));
}

MetricsReport read_report(const fs::path& path) {
    fs::path csv = path;
    if (fs::is_directory(path)) csv = path / "report.csv";
    else if (path.extension() == ".json") csv = path.parent_path() / "report.csv";
    if (!fs::exists(csv)) throw IoError("report not found: " + csv.string());
    std::string method;
    const fs::path summary = csv.parent_path() / "summary.json";
    if (fs::exists(summary)) {
        try {
            method = json::parse(io::read_text(summary)).at("method").get<std::string>();
        } catch (const json::exception& e) {
            throw SchemaError("malformed summary " + summary.string() + ": " + e.what());
        }
    }
    return from_csv(io::read_text(csv), method);
}

}  // namespace spdnet::metrics
