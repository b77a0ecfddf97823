#include "netgan/eval.hpp"

#include "netgan/errors.hpp"
#include "netgan/keyvalue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace netgan {

namespace {

RocResult roc_from_pairs(std::vector<std::pair<double, std::uint8_t>> items, std::size_t excluded) {
    RocResult roc;
    roc.excluded = excluded;
    for (const auto& [s, l] : items) (l ? roc.positives : roc.negatives) += 1;
    if (roc.positives == 0 || roc.negatives == 0) {
        throw InvalidArgument("roc_curve: labels contain a single class (" + std::to_string(roc.positives) +
                              " positives, " + std::to_string(roc.negatives) + " negatives)");
    }
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    const auto P = static_cast<double>(roc.positives);
    const auto N = static_cast<double>(roc.negatives);
    roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::uint64_t tp = 0, fp = 0;
    std::uint64_t area2 = 0;  // twice the area, in units of 1/(P*N)
    for (std::size_t k = 0; k < items.size();) {
        const double value = items[k].first;
        const auto tp_prev = tp, fp_prev = fp;
        for (; k < items.size() && items[k].first == value; ++k) (items[k].second ? tp : fp) += 1;
        area2 += (fp - fp_prev) * (tp + tp_prev);
        roc.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P, value});
    }
    roc.auc = static_cast<double>(area2) / (2.0 * P * N);
    return roc;
}

void check_lengths(std::size_t scores, std::size_t labels) {
    if (scores != labels) {
        throw ShapeError("roc_curve: " + std::to_string(scores) + " scores but " + std::to_string(labels) + " labels");
    }
}

}  // namespace

RocResult roc_curve(const SampleScores& scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores.size(), labels.size());
    std::vector<std::pair<double, std::uint8_t>> items;
    std::size_t excluded = 0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (scores[k]) {
            items.emplace_back(*scores[k], labels[k] ? 1 : 0);
        } else {
            ++excluded;
        }
    }
    return roc_from_pairs(std::move(items), excluded);
}

RocResult roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    check_lengths(scores.size(), labels.size());
    std::vector<std::pair<double, std::uint8_t>> items;
    for (std::size_t k = 0; k < scores.size(); ++k) items.emplace_back(scores[k], labels[k] ? 1 : 0);
    return roc_from_pairs(std::move(items), 0);
}

double tpr_at_fpr(const RocResult& roc, double fpr_cap) {
    double best = 0.0;
    for (const auto& p : roc.points) {
        if (p.fpr <= fpr_cap) best = std::max(best, p.tpr);
    }
    return best;
}

EvalReport make_report(std::string model_kind, RocResult roc) {
    EvalReport r;
    r.model_kind = std::move(model_kind);
    for (const double cap : {0.0, 0.01, 0.05}) r.tpr_at_caps.emplace_back(cap, tpr_at_fpr(roc, cap));
    r.roc = std::move(roc);
    return r;
}

std::string render_report(const EvalReport& report) {
    KeyValueFile kv;
    kv.set("format_version", std::to_string(report.format_version));
    kv.set("model_kind", report.model_kind.empty() ? "unknown" : report.model_kind);
    kv.set("positives", std::to_string(report.roc.positives));
    kv.set("negatives", std::to_string(report.roc.negatives));
    kv.set("excluded", std::to_string(report.roc.excluded));
    kv.set("auc", format_double(report.roc.auc));
    for (const auto& [cap, tpr] : report.tpr_at_caps) kv.set("tpr_at_fpr." + format_double(cap), format_double(tpr));
    kv.set("point_count", std::to_string(report.roc.points.size()));
    for (std::size_t k = 0; k < report.roc.points.size(); ++k) {
        const auto& p = report.roc.points[k];
        kv.set("point." + std::to_string(k),
               format_double(p.fpr) + " " + format_double(p.tpr) + " " + format_double(p.threshold));
    }
    return "# netgan evaluation report\n" + kv.render();
}

EvalReport parse_report(const std::string& text) {
    const auto kv = KeyValueFile::parse(text);
    EvalReport r;
    r.format_version = static_cast<int>(parse_int(kv.get("format_version"), "report format_version"));
    if (r.format_version != kReportFormatVersion) {
        throw ParseError("report format version " + std::to_string(r.format_version) + " is not supported");
    }
    r.model_kind = kv.get("model_kind");
    if (r.model_kind == "unknown") r.model_kind.clear();
    r.roc.positives = static_cast<std::size_t>(parse_int(kv.get("positives"), "report positives"));
    r.roc.negatives = static_cast<std::size_t>(parse_int(kv.get("negatives"), "report negatives"));
    r.roc.excluded = static_cast<std::size_t>(parse_int(kv.get("excluded"), "report excluded"));
    r.roc.auc = parse_double(kv.get("auc"), "report auc");
    const auto count = static_cast<std::size_t>(parse_int(kv.get("point_count"), "report point_count"));
    for (const auto& [key, value] : kv.entries()) {
        const std::string prefix = "tpr_at_fpr.";
        if (key.rfind(prefix, 0) == 0) {
            r.tpr_at_caps.emplace_back(parse_double(key.substr(prefix.size()), "report cap"),
                                       parse_double(value, "report " + key));
        }
    }
    for (std::size_t k = 0; k < count; ++k) {
        const auto& line = kv.get("point." + std::to_string(k));
        std::istringstream ss(line);
        std::string a, b, c;
        if (!(ss >> a >> b >> c)) throw ParseError("report point." + std::to_string(k) + ": expected three numbers");
        r.roc.points.push_back({parse_double(a, "report fpr"), parse_double(b, "report tpr"),
                                parse_double(c, "report threshold")});
    }
    return r;
}

void write_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << render_report(report);
    if (!out) throw IoError("write failed for '" + path + "'");
}

EvalReport read_report(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_report(ss.str());
}

void write_roc_svg(const RocResult& roc, const std::string& path, const std::string& title) {
    constexpr double size = 400.0, margin = 50.0;
    const auto px = [&](double fpr) { return margin + fpr * size; };
    const auto py = [&](double tpr) { return margin + (1.0 - tpr) * size; };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"500\" viewBox=\"0 0 500 500\">\n";
    out << "<rect width=\"500\" height=\"500\" fill=\"white\"/>\n";
    out << "<rect x=\"50\" y=\"50\" width=\"400\" height=\"400\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<line x1=\"50\" y1=\"450\" x2=\"450\" y2=\"50\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
    for (int k = 0; k <= 10; ++k) {
        const double v = k / 10.0;
        out << "<text x=\"" << px(v) << "\" y=\"468\" font-size=\"10\" text-anchor=\"middle\">" << v << "</text>\n";
        out << "<text x=\"42\" y=\"" << py(v) + 3 << "\" font-size=\"10\" text-anchor=\"end\">" << v << "</text>\n";
    }
    out << "<text x=\"250\" y=\"490\" font-size=\"12\" text-anchor=\"middle\">false positive rate</text>\n";
    out << "<text x=\"14\" y=\"250\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 14 250)\">"
           "true positive rate</text>\n";
    out << "<text x=\"250\" y=\"30\" font-size=\"14\" text-anchor=\"middle\">" << title
        << " (AUC = " << format_double(std::round(roc.auc * 1e4) / 1e4) << ")</text>\n";
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (const auto& p : roc.points) out << px(p.fpr) << ',' << py(p.tpr) << ' ';
    out << "\"/>\n</svg>\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

SampleScores score_dataset(const Checkpoint& checkpoint, const Dataset& raw, const ExperimentConfig& config,
                           const Dataset* calibration) {
    if (raw.series_count() != checkpoint.series_count()) {
        throw ShapeError("checkpoint was trained on n=" + std::to_string(checkpoint.series_count()) +
                         " series, data has n=" + std::to_string(raw.series_count()));
    }
    const auto prepare = [&](const Dataset& ds) {
        const auto block = checkpoint.config.aggregate;
        return minmax_apply(block > 1 ? aggregate(ds, block) : ds, checkpoint.stats);
    };
    const Dataset data = prepare(raw);
    if (const auto* vae = std::get_if<VaeModel>(&checkpoint.model)) return vae_scores(*vae, data);

    const auto& gan = std::get<GanModel>(checkpoint.model);
    const auto T = checkpoint.config.T;
    const auto components = gan_component_scores(gan, data, T, config.K, config.lambda, config.seed);
    std::optional<ScoreStandardizer> standardizer;
    if (config.standardize_scores && calibration) {
        // Standardization needs both components on the calibration data.
        const auto base = gan_component_scores(gan, prepare(*calibration), T, config.K, 0.5, config.seed);
        standardizer = ScoreStandardizer::fit(base);
    }
    return combine_scores(components, config.lambda, standardizer);
}

EvalReport evaluate_run(const Checkpoint& checkpoint, const Dataset& labeled_test, const ExperimentConfig& config) {
    if (!labeled_test.labels) throw InvalidArgument("evaluate_run: test dataset has no labels");
    const auto scores = score_dataset(checkpoint, labeled_test, config);
    const auto block = checkpoint.config.aggregate;
    const auto labels = block > 1 ? *aggregate(labeled_test, block).labels : *labeled_test.labels;
    return make_report(to_string(checkpoint.kind()), roc_curve(scores, labels));
}

}  // namespace netgan
