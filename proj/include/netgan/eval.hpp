#pragma once

#include "netgan/checkpoint.hpp"
#include "netgan/detect.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace netgan {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  ///< instances scoring >= threshold are flagged
    bool operator==(const RocPoint&) const = default;
};

/// Points run from (0,0) at threshold +inf to (1,1) at the lowest score,
/// one point per distinct score value so tied instances flip together.
struct RocResult {
    std::vector<RocPoint> points;
    double auc = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    std::size_t excluded = 0;  ///< samples without a score
    bool operator==(const RocResult&) const = default;
};

/// Throws ShapeError on unequal lengths and InvalidArgument when only one class is present.
RocResult roc_curve(const SampleScores& scores, std::span<const std::uint8_t> labels);
RocResult roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Highest TPR among the curve's points with FPR <= cap; no interpolation.
double tpr_at_fpr(const RocResult& roc, double fpr_cap);

inline constexpr int kReportFormatVersion = 1;

struct EvalReport {
    int format_version = kReportFormatVersion;
    std::string model_kind;
    RocResult roc;
    std::vector<std::pair<double, double>> tpr_at_caps;  ///< (fpr cap, tpr)

    bool operator==(const EvalReport&) const = default;
};

/// Fills tpr_at_caps for the caps 0, 0.01 and 0.05.
EvalReport make_report(std::string model_kind, RocResult roc);

std::string render_report(const EvalReport& report);
EvalReport parse_report(const std::string& text);
void write_report(const EvalReport& report, const std::string& path);
EvalReport read_report(const std::string& path);

/// ROC curve as a standalone SVG file.
void write_roc_svg(const RocResult& roc, const std::string& path, const std::string& title);

/// Scores a labeled test set with a trained checkpoint, using the run config for K, lambda,
/// seed and aggregation, and evaluates the result at sample level.
EvalReport evaluate_run(const Checkpoint& checkpoint, const Dataset& labeled_test, const ExperimentConfig& config);

/// Aggregates and normalizes `raw` as at training time, then returns the per-sample anomaly
/// scores the checkpoint's model assigns. Used by evaluate_run and the CLI.
SampleScores score_dataset(const Checkpoint& checkpoint, const Dataset& raw, const ExperimentConfig& config,
                           const Dataset* calibration = nullptr);

}  // namespace netgan
