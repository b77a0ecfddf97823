#pragma once

#include "netgan/config.hpp"
#include "netgan/gan.hpp"
#include "netgan/rng.hpp"
#include "netgan/types.hpp"
#include "netgan/vae.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace netgan {

/// One entry per time sample; nullopt marks a sample no window covered.
using SampleScores = std::vector<std::optional<double>>;

/// -log D*(x), clamped. High means anomalous.
double discrimination_loss(const LstmStack& D, const WindowMatrix& x);

double mean_abs_difference(const Matrix& a, const Matrix& b);

struct ResidualResult {
    double score = 0.0;
    WindowMatrix best;
    std::size_t best_index = 0;  ///< which of the K draws won (first on ties)
};

/// Draws K latent sequences from `rng`, generates a candidate for each and keeps the one with the
/// smallest mean absolute difference to `x`.
ResidualResult residual_loss(const LstmStack& G, const WindowMatrix& x, std::size_t K, Rng& rng);

/// lambda * resid + (1 - lambda) * disc. Throws InvalidArgument for lambda outside [0,1].
double anomaly_score(double disc, double resid, double lambda);

/// Per column: max over series of |x - x_hat|.
Vector column_residuals(const Matrix& x, const Matrix& reconstruction);

struct WindowScore {
    std::size_t start = 0;
    double score = 0.0;     ///< window-level value, used in discrimination mode
    Vector column_values;   ///< length T, used in residual mode
};

enum class AttributionMode { Residual, Discrimination };

/// Each sample gets the mean, over all windows containing it, of that window's column value
/// (residual mode) or window score (discrimination mode). Uncovered samples stay absent.
/// Throws InvalidArgument for windows that overrun L, repeat a start, or have the wrong column count.
SampleScores per_sample_scores(std::span<const WindowScore> windows, std::size_t L, std::size_t T,
                               AttributionMode mode);

/// Empirical (1 - target_fpr) quantile with linear interpolation between order statistics,
/// raised where needed so that at most floor(target_fpr * N) scores lie strictly above it.
double calibrate_threshold(std::span<const double> baseline_scores, double target_fpr);

/// Present scores only.
std::vector<double> present_scores(const SampleScores& scores);

/// alarms[t] = 1 iff scores[t] is present and strictly above the threshold.
std::vector<std::uint8_t> decide(const SampleScores& scores, double threshold);

/// OR of the alarms over [start, start + T).
bool window_verdict(std::span<const std::uint8_t> alarms, std::size_t start, std::size_t T);

struct ScoreSeries {
    SampleScores scores;
    double threshold = 0.0;
    std::vector<std::uint8_t> alarms;
    std::string model_kind;
    std::size_t aggregate = 1;  ///< block size the scored data was aggregated with

    bool operator==(const ScoreSeries&) const = default;
};

ScoreSeries make_score_series(SampleScores scores, double threshold);

/// Line-oriented text: a few '#' header records (version, model kind, threshold, aggregate),
/// then `index,score,alarm` per sample with "NA" marking absent scores.
void write_scores(const ScoreSeries& series, const std::string& path);
ScoreSeries read_scores(const std::string& path);

// ---------------------------------------------------------------------------
// Scoring pipelines over a normalized dataset

struct ComponentScores {
    SampleScores discrimination;  ///< empty when not computed
    SampleScores residual;        ///< empty when not computed
};

/// Scores every unit-step window. Candidate draws for the window starting at s use a source
/// seeded with (seed XOR s). Components whose mixing weight is zero are skipped.
ComponentScores gan_component_scores(const GanModel& model, const Dataset& normalized, std::size_t T, std::size_t K,
                                     double lambda, std::uint64_t seed);

/// Residual-mode scores from deterministic reconstructions.
SampleScores vae_scores(const VaeModel& model, const Dataset& normalized);

/// Mean and standard deviation of each component on anomaly-free data.
struct ScoreStandardizer {
    double disc_mean = 0.0, disc_std = 1.0;
    double resid_mean = 0.0, resid_std = 1.0;

    static ScoreStandardizer fit(const ComponentScores& baseline);
};

SampleScores combine_scores(const ComponentScores& components, double lambda,
                            const std::optional<ScoreStandardizer>& standardizer = std::nullopt);

}  // namespace netgan
