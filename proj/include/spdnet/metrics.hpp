#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spdnet/grid.hpp"

namespace spdnet::metrics {

// Overlap scores on binarised class masks. Both masks empty -> 1.0.
double dice_score(const LabelMap& pred, const LabelMap& truth, int cls);
double jaccard(const LabelMap& pred, const LabelMap& truth, int cls);

// Boundary = mask minus its 4-connected erosion (pixels outside the grid count as background).
Grid<std::uint8_t> boundary(const Grid<std::uint8_t>& mask);
Grid<std::uint8_t> class_mask(const LabelMap& lbl, int cls);

struct HausdorffResult {
    double distance_mm = 0.0;
    bool sentinel = false;  // exactly one side empty: distance is the image diagonal
};

// Symmetric Hausdorff distance between the class boundaries, in mm.
// Both empty -> 0.
HausdorffResult hausdorff(const LabelMap& pred, const LabelMap& truth, int cls, const Spacing& spacing);

// Exact Euclidean distance (mm) from every pixel to the nearest set pixel of
// `mask`; +inf when the mask is empty.
Grid<double> distance_transform(const Grid<std::uint8_t>& mask, const Spacing& spacing);

struct CaseMetrics {
    std::string case_id;
    int class_id = 1;
    double dice = 1.0;
    double jaccard = 1.0;
    double hausdorff_mm = 0.0;
    bool hd_sentinel = false;
};

// Box-plot summary; quantiles interpolate linearly between order statistics
// at position h = (n-1) p.
struct Summary {
    std::size_t n = 0;
    double mean = 0, median = 0, q1 = 0, q3 = 0, min = 0, max = 0;
    double whisker_low = 0, whisker_high = 0;  // most extreme values within 1.5 IQR
    std::size_t outliers = 0;
};

double quantile(std::vector<double> values, double p);
Summary summarize(const std::vector<double>& values);

struct MetricSummaries {
    Summary dice, jaccard, hausdorff_mm;
};

struct MetricsReport {
    std::string method;
    int num_classes = 2;
    std::vector<CaseMetrics> per_case;
    std::vector<std::pair<int, MetricSummaries>> per_class;  // ascending class id
    MetricSummaries pooled;  // every (case, class) row weighted equally
    MetricSummaries by_case;  // per-case mean over classes, then over cases
};

// Computes aggregate statistics from per_case.
void aggregate(MetricsReport& report);

// Per case: predict -> per-foreground-class metrics, then aggregate.
using Predictor = std::function<LabelMap(const Case&)>;
MetricsReport evaluate(const Predictor& predict, const Dataset& ds, const std::string& method);

// Per-case rows for every foreground class of one prediction.
std::vector<CaseMetrics> score_case(const LabelMap& pred, const Case& truth);

// Text table in the layout Methods | Dice | Jaccard | HD(mm).
std::string format_table(const std::vector<MetricsReport>& reports);

// CSV columns case_id,class_id,dice,jaccard,hd_mm preceded by '#' comment
// lines carrying the quantile convention and per-metric quartiles.
std::string to_csv(const MetricsReport& report);
MetricsReport from_csv(const std::string& text, const std::string& method);

// Box-plot rows: metric,class_id,n,mean,min,whisker_low,q1,median,q3,whisker_high,max,outliers.
std::string boxplot_csv(const std::vector<MetricsReport>& reports);

// {method, dice, jaccard, hd_mm, num_classes, n_rows, aggregation{...}}
std::string summary_json(const MetricsReport& report);

void write_report(const MetricsReport& report, const std::filesystem::path& out_dir);
MetricsReport read_report(const std::filesystem::path& path);

}  // namespace spdnet::metrics
