// netgan: synthesize data, train Net-GAN / Net-VAE detectors, score and evaluate.

#include "netgan/checkpoint.hpp"
#include "netgan/data.hpp"
#include "netgan/detect.hpp"
#include "netgan/errors.hpp"
#include "netgan/eval.hpp"
#include "netgan/gan.hpp"
#include "netgan/vae.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace netgan;

namespace {

int verbosity = 0;

void log(const std::string& msg) { std::cerr << "[netgan] " << msg << '\n'; }

/// Writes through a temporary sibling so a failed run never leaves a partial output behind.
void write_atomically(const std::string& path, const std::function<void(const std::string&)>& writer) {
    const std::string tmp = path + ".tmp";
    try {
        writer(tmp);
        fs::rename(tmp, path);
    } catch (...) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw;
    }
}

void write_text(const std::string& path, const std::string& text) {
    write_atomically(path, [&](const std::string& p) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw IoError("cannot write '" + p + "'");
        out << text;
        if (!out) throw IoError("write failed for '" + p + "'");
    });
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> fpr;
    std::optional<double> lambda;
    std::optional<std::size_t> K;

    void apply(ExperimentConfig& cfg) const {
        if (seed) cfg.seed = *seed;
        if (fpr) cfg.target_fpr = *fpr;
        if (lambda) cfg.lambda = *lambda;
        if (K) cfg.K = *K;
        cfg.validate();
    }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "Override the config seed");
    cmd->add_option("--fpr", o.fpr, "Target false-positive rate for threshold calibration");
    cmd->add_option("--lambda", o.lambda, "Score mixing weight in [0,1] (1 = residual only)");
    cmd->add_option("--K", o.K, "Latent samples for the residual search");
}

// ---------------------------------------------------------------------------

int cmd_synth(const std::string& spec_path, const std::string& out) {
    const auto spec = SynthSpec::load(spec_path);
    const auto ds = synth_generate(spec);
    write_atomically(out, [&](const std::string& p) { write_csv(ds, p); });
    write_text(out + ".spec", spec.render());
    if (verbosity) log("wrote " + std::to_string(ds.length()) + " rows x " + std::to_string(ds.series_count()) + " series to " + out);
    return 0;
}

int cmd_train(const std::string& kind_name, const std::string& csv, const std::string& config_path,
              const std::string& out, const Overrides& overrides) {
    const auto kind = model_kind_from_string(kind_name);
    auto cfg = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    overrides.apply(cfg);

    auto raw = load_csv(csv, LabelColumn::Detect);
    if (raw.labels) {
        std::size_t anomalous = 0;
        for (const auto l : *raw.labels) anomalous += l;
        if (anomalous) log("warning: training data carries " + std::to_string(anomalous) + " anomalous labels");
    }
    const auto data = cfg.aggregate > 1 ? aggregate(raw, cfg.aggregate) : raw;
    const auto stats = minmax_fit(data);
    const auto windows = sliding_windows(minmax_apply(data, stats), cfg.T);
    if (verbosity) log("training " + kind_name + " on " + std::to_string(windows.size()) + " windows");

    Rng rng(cfg.seed);
    Checkpoint ck{cfg, stats, GanModel{}};
    std::string training_log;
    if (kind == ModelKind::Gan) {
        auto model = gan_train(windows, cfg, rng, [](std::size_t e, const GanLossRecord& r) {
            if (verbosity) log("epoch " + std::to_string(e) + " d_loss=" + format_double(r.d_loss) + " g_loss=" + format_double(r.g_loss));
        });
        training_log = "epoch,d_loss,g_loss\n";
        for (std::size_t e = 0; e < model.history.size(); ++e) {
            training_log += std::to_string(e) + "," + format_double(model.history[e].d_loss) + "," +
                            format_double(model.history[e].g_loss) + "\n";
        }
        ck.model = std::move(model);
    } else {
        auto model = vae_train(windows, cfg, rng, [](std::size_t e, const ElboTerms& t) {
            if (verbosity) log("epoch " + std::to_string(e) + " total=" + format_double(t.total));
        });
        training_log = "epoch,total,recon_term,kl_term\n";
        for (std::size_t e = 0; e < model.history.size(); ++e) {
            const auto& h = model.history[e];
            training_log += std::to_string(e) + "," + format_double(h.total) + "," + format_double(h.recon_term) +
                            "," + format_double(h.kl_term) + "\n";
        }
        ck.model = std::move(model);
    }

    write_atomically(out, [&](const std::string& p) { save_checkpoint(ck, p); });
    write_text(out + ".log.csv", training_log);
    write_text(out + ".config", cfg.render());
    return 0;
}

int cmd_score(const std::string& ckpt_path, const std::string& csv, const std::string& config_path,
              const std::string& out, const std::string& calibration_csv, std::optional<double> threshold_flag,
              const Overrides& overrides) {
    const auto ck = load_checkpoint(ckpt_path);
    auto cfg = config_path.empty() ? ck.config : ExperimentConfig::load(config_path);
    overrides.apply(cfg);

    const auto test = load_csv(csv, LabelColumn::Detect);
    if (test.series_count() != ck.series_count()) {
        throw ShapeError("shape mismatch: checkpoint expects n=" + std::to_string(ck.series_count()) +
                         " series, " + csv + " supplies n=" + std::to_string(test.series_count()));
    }
    std::optional<Dataset> calibration;
    if (!calibration_csv.empty()) calibration = load_csv(calibration_csv, LabelColumn::Detect);

    const auto scores = score_dataset(ck, test, cfg, calibration ? &*calibration : nullptr);

    double threshold = 0.0;
    std::string source;
    if (threshold_flag) {
        threshold = *threshold_flag;
        source = "flag";
    } else if (calibration) {
        const auto base = score_dataset(ck, *calibration, cfg, &*calibration);
        threshold = calibrate_threshold(present_scores(base), cfg.target_fpr);
        source = "calibration";
    } else if (cfg.threshold) {
        threshold = *cfg.threshold;
        source = "config";
    } else {
        throw InvalidArgument("no threshold: pass --threshold, --calibration, or set 'threshold' in the config");
    }
    cfg.threshold = threshold;

    auto series = make_score_series(scores, threshold);
    series.model_kind = to_string(ck.kind());
    series.aggregate = ck.config.aggregate;
    write_atomically(out, [&](const std::string& p) { write_scores(series, p); });
    write_text(out + ".config", "# threshold_source: " + source + "\n" + cfg.render());
    if (verbosity) log("threshold " + format_double(threshold) + " (" + source + ")");
    return 0;
}

int cmd_eval(const std::string& scores_path, const std::string& labeled_csv, const std::string& out, bool plot) {
    const auto series = read_scores(scores_path);
    const auto labeled = load_csv(labeled_csv, LabelColumn::Present);
    const auto labels = series.aggregate > 1 ? *aggregate(labeled, series.aggregate).labels : *labeled.labels;
    if (labels.size() != series.scores.size()) {
        throw ShapeError("length mismatch: " + scores_path + " has " + std::to_string(series.scores.size()) +
                         " samples, " + labeled_csv + " has " + std::to_string(labels.size()));
    }
    const auto report = make_report(series.model_kind, roc_curve(series.scores, labels));
    write_atomically(out, [&](const std::string& p) { write_report(report, p); });
    if (plot) {
        write_atomically(out + ".svg", [&](const std::string& p) {
            write_roc_svg(report.roc, p, series.model_kind.empty() ? "ROC" : series.model_kind + " ROC");
        });
    }
    std::cout << "auc " << format_double(report.roc.auc) << '\n';
    for (const auto& [cap, tpr] : report.tpr_at_caps) {
        std::cout << "tpr@fpr<=" << format_double(cap) << ' ' << format_double(tpr) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generative-model anomaly detection for multivariate time series"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag("-v,--verbose", verbosity, "Log progress to stderr");

    std::string spec_path, out, config_path, kind, csv, ckpt, calibration, scores_path;
    std::optional<double> threshold;
    bool plot = false;
    Overrides overrides;

    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic dataset from a spec file");
    synth->add_option("spec", spec_path, "Synthetic spec file")->required();
    synth->add_option("--out", out, "Output CSV")->required();

    auto* train = app.add_subcommand("train", "Train a gan or vae model on baseline data");
    train->add_option("kind", kind, "gan or vae")->required();
    train->add_option("csv", csv, "Training CSV (normal operation only)")->required();
    train->add_option("--config", config_path, "Experiment config file");
    train->add_option("--out", out, "Output checkpoint")->required();
    add_overrides(train, overrides);

    auto* score = app.add_subcommand("score", "Score a dataset with a trained checkpoint");
    score->add_option("checkpoint", ckpt, "Checkpoint file")->required();
    score->add_option("csv", csv, "CSV to score")->required();
    score->add_option("--config", config_path, "Experiment config (defaults to the checkpoint's)");
    score->add_option("--out", out, "Output score file")->required();
    score->add_option("--calibration", calibration, "Anomaly-free CSV for threshold calibration");
    score->add_option("--threshold", threshold, "Explicit alarm threshold");
    add_overrides(score, overrides);

    auto* eval = app.add_subcommand("eval", "ROC evaluation of a score file against labels");
    eval->add_option("scores", scores_path, "Score file")->required();
    eval->add_option("csv", csv, "Labeled CSV")->required();
    eval->add_option("--out", out, "Output report")->required();
    eval->add_flag("--plot", plot, "Also write <out>.svg with the ROC curve");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*synth) return cmd_synth(spec_path, out);
        if (*train) return cmd_train(kind, csv, config_path, out, overrides);
        if (*score) return cmd_score(ckpt, csv, config_path, out, calibration, threshold, overrides);
        if (*eval) return cmd_eval(scores_path, csv, out, plot);
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
