#include "netgan/detect.hpp"

#include "netgan/data.hpp"
#include "netgan/errors.hpp"
#include "netgan/keyvalue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace netgan {

double discrimination_loss(const LstmStack& D, const WindowMatrix& x) {
    return -std::log(clamp_probability(discriminator_forward(D, x)));
}

double mean_abs_difference(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("mean_abs_difference: shape mismatch");
    return (a - b).cwiseAbs().mean();
}

ResidualResult residual_loss(const LstmStack& G, const WindowMatrix& x, std::size_t K, Rng& rng) {
    if (K == 0) throw InvalidArgument("residual_loss: K must be >= 1");
    if (x.series_count() != G.output_width()) {
        throw ShapeError("residual_loss: window has " + std::to_string(x.series_count()) +
                         " series, generator emits " + std::to_string(G.output_width()));
    }
    ResidualResult best;
    for (std::size_t k = 0; k < K; ++k) {
        const auto z = draw_latent(rng, G.input_width(), x.length());
        auto candidate = generator_forward(G, z);
        const double d = mean_abs_difference(x.values, candidate.values);
        if (k == 0 || d < best.score) {
            best.score = d;
            best.best = std::move(candidate);
            best.best_index = k;
        }
    }
    best.best.start_index = x.start_index;
    return best;
}

double anomaly_score(double disc, double resid, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("anomaly_score: lambda must lie in [0,1]");
    return lambda * resid + (1.0 - lambda) * disc;
}

Vector column_residuals(const Matrix& x, const Matrix& reconstruction) {
    if (x.rows() != reconstruction.rows() || x.cols() != reconstruction.cols()) {
        throw ShapeError("column_residuals: shape mismatch");
    }
    return (x - reconstruction).cwiseAbs().colwise().maxCoeff().transpose();
}

SampleScores per_sample_scores(std::span<const WindowScore> windows, std::size_t L, std::size_t T,
                               AttributionMode mode) {
    if (T == 0 || T > L) throw InvalidArgument("per_sample_scores: need 1 <= T <= L");
    std::vector<double> sum(L, 0.0);
    std::vector<std::size_t> count(L, 0);
    std::vector<bool> seen(L - T + 1, false);
    for (const auto& w : windows) {
        if (w.start + T > L) {
            throw InvalidArgument("per_sample_scores: window at " + std::to_string(w.start) + " overruns L=" +
                                  std::to_string(L));
        }
        if (seen[w.start]) throw InvalidArgument("per_sample_scores: duplicate window at " + std::to_string(w.start));
        seen[w.start] = true;
        if (mode == AttributionMode::Residual && static_cast<std::size_t>(w.column_values.size()) != T) {
            throw InvalidArgument("per_sample_scores: window at " + std::to_string(w.start) + " has " +
                                  std::to_string(w.column_values.size()) + " column values, expected " +
                                  std::to_string(T));
        }
        for (std::size_t j = 0; j < T; ++j) {
            sum[w.start + j] += mode == AttributionMode::Residual ? w.column_values(static_cast<Eigen::Index>(j))
                                                                  : w.score;
            ++count[w.start + j];
        }
    }
    SampleScores out(L);
    for (std::size_t t = 0; t < L; ++t) {
        if (count[t] > 0) out[t] = sum[t] / static_cast<double>(count[t]);
    }
    return out;
}

double calibrate_threshold(std::span<const double> baseline_scores, double target_fpr) {
    if (baseline_scores.empty()) throw InvalidArgument("calibrate_threshold: empty score vector");
    if (!(target_fpr > 0.0 && target_fpr < 1.0)) throw InvalidArgument("calibrate_threshold: target_fpr must lie in (0,1)");
    std::vector<double> sorted(baseline_scores.begin(), baseline_scores.end());
    std::sort(sorted.begin(), sorted.end());
    const auto N = sorted.size();

    const double h = static_cast<double>(N - 1) * (1.0 - target_fpr);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, N - 1);
    const double quantile = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);

    // At most floor(target_fpr * N) scores may lie strictly above the threshold.
    const auto allowed = static_cast<std::size_t>(std::floor(target_fpr * static_cast<double>(N) + 1e-9));
    const double guard = sorted[N - 1 - std::min(allowed, N - 1)];
    return std::max(quantile, guard);
}

std::vector<double> present_scores(const SampleScores& scores) {
    std::vector<double> out;
    for (const auto& s : scores) {
        if (s) out.push_back(*s);
    }
    return out;
}

std::vector<std::uint8_t> decide(const SampleScores& scores, double threshold) {
    std::vector<std::uint8_t> alarms(scores.size(), 0);
    for (std::size_t t = 0; t < scores.size(); ++t) alarms[t] = (scores[t] && *scores[t] > threshold) ? 1 : 0;
    return alarms;
}

bool window_verdict(std::span<const std::uint8_t> alarms, std::size_t start, std::size_t T) {
    if (start + T > alarms.size()) throw InvalidArgument("window_verdict: window overruns alarm vector");
    return std::any_of(alarms.begin() + static_cast<std::ptrdiff_t>(start),
                       alarms.begin() + static_cast<std::ptrdiff_t>(start + T), [](auto a) { return a != 0; });
}

ScoreSeries make_score_series(SampleScores scores, double threshold) {
    ScoreSeries s;
    s.alarms = decide(scores, threshold);
    s.scores = std::move(scores);
    s.threshold = threshold;
    return s;
}

void write_scores(const ScoreSeries& series, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "# netgan-scores v1\n";
    out << "# model_kind = " << (series.model_kind.empty() ? "unknown" : series.model_kind) << '\n';
    out << "# threshold = " << format_double(series.threshold) << '\n';
    out << "# aggregate = " << series.aggregate << '\n';
    out << "index,score,alarm\n";
    for (std::size_t t = 0; t < series.scores.size(); ++t) {
        out << t << ',' << (series.scores[t] ? format_double(*series.scores[t]) : std::string("NA")) << ','
            << static_cast<int>(series.alarms[t]) << '\n';
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

ScoreSeries read_scores(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || trim(line) != "# netgan-scores v1") {
        throw ParseError(path + ": not a score file (missing version header)");
    }
    ScoreSeries s;
    bool have_threshold = false;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '#') {
            const auto eq = t.find('=');
            if (eq == std::string_view::npos) continue;
            const auto key = trim(t.substr(1, eq - 1));
            const auto value = trim(t.substr(eq + 1));
            if (key == "model_kind") {
                s.model_kind = std::string(value);
            } else if (key == "threshold") {
                s.threshold = parse_double(value, path + ": threshold");
                have_threshold = true;
            } else if (key == "aggregate") {
                s.aggregate = static_cast<std::size_t>(parse_int(value, path + ": aggregate"));
            }
            continue;
        }
        if (t == "index,score,alarm") continue;
        const auto c1 = t.find(',');
        const auto c2 = t.find(',', c1 == std::string_view::npos ? c1 : c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos) {
            throw ParseError(path + ": line " + std::to_string(line_no) + ": expected index,score,alarm");
        }
        const std::string ctx = path + ": line " + std::to_string(line_no);
        const auto index = parse_int(t.substr(0, c1), ctx);
        if (index != static_cast<std::int64_t>(s.scores.size())) throw ParseError(ctx + ": indices must be consecutive from 0");
        const auto score = trim(t.substr(c1 + 1, c2 - c1 - 1));
        s.scores.push_back(score == "NA" ? std::nullopt : std::optional<double>(parse_double(score, ctx)));
        const auto alarm = parse_int(t.substr(c2 + 1), ctx);
        if (alarm != 0 && alarm != 1) throw ParseError(ctx + ": alarm must be 0 or 1");
        s.alarms.push_back(static_cast<std::uint8_t>(alarm));
    }
    if (!have_threshold) throw ParseError(path + ": missing threshold header");
    return s;
}

// ---------------------------------------------------------------------------

ComponentScores gan_component_scores(const GanModel& model, const Dataset& normalized, std::size_t T, std::size_t K,
                                     double lambda, std::uint64_t seed) {
    if (normalized.series_count() != model.series_count()) {
        throw ShapeError("model expects " + std::to_string(model.series_count()) + " series, data has " +
                         std::to_string(normalized.series_count()));
    }
    const auto windows = sliding_windows(normalized, T);
    const bool want_disc = lambda < 1.0;
    const bool want_resid = lambda > 0.0;
    std::vector<WindowScore> disc, resid;
    for (const auto& w : windows) {
        if (want_disc) disc.push_back({w.start_index, discrimination_loss(model.D, w), {}});
        if (want_resid) {
            Rng rng(seed ^ static_cast<std::uint64_t>(w.start_index));
            const auto r = residual_loss(model.G, w, K, rng);
            resid.push_back({w.start_index, r.score, column_residuals(w.values, r.best.values)});
        }
    }
    ComponentScores out;
    const auto L = normalized.length();
    if (want_disc) out.discrimination = per_sample_scores(disc, L, T, AttributionMode::Discrimination);
    if (want_resid) out.residual = per_sample_scores(resid, L, T, AttributionMode::Residual);
    return out;
}

SampleScores vae_scores(const VaeModel& model, const Dataset& normalized) {
    if (normalized.series_count() != model.series) {
        throw ShapeError("model expects " + std::to_string(model.series) + " series, data has " +
                         std::to_string(normalized.series_count()));
    }
    const auto windows = sliding_windows(normalized, model.steps);
    std::vector<WindowScore> resid;
    for (const auto& w : windows) {
        const auto recon = vae_reconstruct(model, w, ReconstructionMode::Deterministic);
        resid.push_back({w.start_index, mean_abs_difference(w.values, recon.values),
                         column_residuals(w.values, recon.values)});
    }
    return per_sample_scores(resid, normalized.length(), model.steps, AttributionMode::Residual);
}

namespace {

std::pair<double, double> mean_std(const SampleScores& s) {
    const auto v = present_scores(s);
    if (v.empty()) return {0.0, 1.0};
    double mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (const double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / static_cast<double>(v.size()));
    return {mean, sd > 0.0 ? sd : 1.0};
}

}  // namespace

ScoreStandardizer ScoreStandardizer::fit(const ComponentScores& baseline) {
    ScoreStandardizer s;
    std::tie(s.disc_mean, s.disc_std) = mean_std(baseline.discrimination);
    std::tie(s.resid_mean, s.resid_std) = mean_std(baseline.residual);
    return s;
}

SampleScores combine_scores(const ComponentScores& components, double lambda,
                            const std::optional<ScoreStandardizer>& standardizer) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("combine_scores: lambda must lie in [0,1]");
    const bool need_disc = lambda < 1.0;
    const bool need_resid = lambda > 0.0;
    if (need_disc && components.discrimination.empty()) throw InvalidArgument("combine_scores: discrimination scores missing");
    if (need_resid && components.residual.empty()) throw InvalidArgument("combine_scores: residual scores missing");
    const auto L = need_disc ? components.discrimination.size() : components.residual.size();
    if (need_disc && need_resid && components.residual.size() != L) throw ShapeError("combine_scores: length mismatch");

    SampleScores out(L);
    for (std::size_t t = 0; t < L; ++t) {
        const auto disc = need_disc ? components.discrimination[t] : std::optional<double>(0.0);
        const auto resid = need_resid ? components.residual[t] : std::optional<double>(0.0);
        if (!disc || !resid) continue;
        double d = *disc;
        double r = *resid;
        if (standardizer) {
            d = (d - standardizer->disc_mean) / standardizer->disc_std;
            r = (r - standardizer->resid_mean) / standardizer->resid_std;
        }
        out[t] = anomaly_score(d, r, lambda);
    }
    return out;
}

}  // namespace netgan
