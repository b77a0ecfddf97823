#include "netgan/config.hpp"

#include "netgan/errors.hpp"

#include <functional>
#include <map>

namespace netgan {

namespace {

void require_positive(std::size_t value, const char* name) {
    if (value == 0) throw InvalidArgument(std::string("config: ") + name + " must be positive");
}

void require_positive(double value, const char* name) {
    if (!(value > 0.0)) throw InvalidArgument(std::string("config: ") + name + " must be positive");
}

std::size_t parse_size(const std::string& text, const std::string& key) {
    const auto v = parse_int(text, "config key '" + key + "'");
    if (v < 0) throw ParseError("config key '" + key + "': must be non-negative");
    return static_cast<std::size_t>(v);
}

}  // namespace

void ExperimentConfig::validate() const {
    require_positive(T, "T");
    require_positive(d_z, "d_z");
    require_positive(g_hidden, "g_hidden");
    require_positive(g_layers, "g_layers");
    require_positive(d_hidden, "d_hidden");
    require_positive(d_layers, "d_layers");
    require_positive(enc_hidden, "enc_hidden");
    require_positive(dec_hidden, "dec_hidden");
    require_positive(batch_size, "batch_size");
    require_positive(K, "K");
    require_positive(aggregate, "aggregate");
    require_positive(lr_g, "lr_g");
    require_positive(lr_d, "lr_d");
    require_positive(lr_vae, "lr_vae");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw InvalidArgument("config: adam_beta1 must lie in [0,1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw InvalidArgument("config: adam_beta2 must lie in [0,1)");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("config: lambda must lie in [0,1]");
    if (!(beta >= 0.0)) throw InvalidArgument("config: beta must be non-negative");
    if (!(target_fpr > 0.0 && target_fpr < 1.0)) throw InvalidArgument("config: target_fpr must lie in (0,1)");
}

KeyValueFile ExperimentConfig::to_key_values() const {
    KeyValueFile kv;
    kv.set("T", std::to_string(T));
    kv.set("d_z", std::to_string(d_z));
    kv.set("g_hidden", std::to_string(g_hidden));
    kv.set("g_layers", std::to_string(g_layers));
    kv.set("d_hidden", std::to_string(d_hidden));
    kv.set("d_layers", std::to_string(d_layers));
    kv.set("enc_hidden", std::to_string(enc_hidden));
    kv.set("dec_hidden", std::to_string(dec_hidden));
    kv.set("lr_g", format_double(lr_g));
    kv.set("lr_d", format_double(lr_d));
    kv.set("lr_vae", format_double(lr_vae));
    kv.set("adam_beta1", format_double(adam_beta1));
    kv.set("adam_beta2", format_double(adam_beta2));
    kv.set("epochs", std::to_string(epochs));
    kv.set("batch_size", std::to_string(batch_size));
    kv.set("K", std::to_string(K));
    kv.set("lambda", format_double(lambda));
    kv.set("beta", format_double(beta));
    kv.set("seed", std::to_string(seed));
    kv.set("target_fpr", format_double(target_fpr));
    kv.set("threshold", threshold ? format_double(*threshold) : "none");
    kv.set("standardize_scores", standardize_scores ? "true" : "false");
    kv.set("aggregate", std::to_string(aggregate));
    return kv;
}

std::string ExperimentConfig::render() const { return to_key_values().render(); }

ExperimentConfig ExperimentConfig::from_key_values(const KeyValueFile& kv) {
    ExperimentConfig cfg;
    using Setter = std::function<void(const std::string&)>;
    const auto size_field = [](std::size_t& field, const char* key) -> std::pair<std::string, Setter> {
        return {key, [&field, key](const std::string& v) { field = parse_size(v, key); }};
    };
    const auto double_field = [](double& field, const char* key) -> std::pair<std::string, Setter> {
        return {key, [&field, key](const std::string& v) {
                    field = parse_double(v, std::string("config key '") + key + "'");
                }};
    };
    const std::map<std::string, Setter> setters{
        size_field(cfg.T, "T"),
        size_field(cfg.d_z, "d_z"),
        size_field(cfg.g_hidden, "g_hidden"),
        size_field(cfg.g_layers, "g_layers"),
        size_field(cfg.d_hidden, "d_hidden"),
        size_field(cfg.d_layers, "d_layers"),
        size_field(cfg.enc_hidden, "enc_hidden"),
        size_field(cfg.dec_hidden, "dec_hidden"),
        double_field(cfg.lr_g, "lr_g"),
        double_field(cfg.lr_d, "lr_d"),
        double_field(cfg.lr_vae, "lr_vae"),
        double_field(cfg.adam_beta1, "adam_beta1"),
        double_field(cfg.adam_beta2, "adam_beta2"),
        size_field(cfg.epochs, "epochs"),
        size_field(cfg.batch_size, "batch_size"),
        size_field(cfg.K, "K"),
        double_field(cfg.lambda, "lambda"),
        double_field(cfg.beta, "beta"),
        {"seed", [&cfg](const std::string& v) { cfg.seed = parse_uint(v, "config key 'seed'"); }},
        double_field(cfg.target_fpr, "target_fpr"),
        {"threshold",
         [&cfg](const std::string& v) {
             if (trim(v) == "none") {
                 cfg.threshold.reset();
             } else {
                 cfg.threshold = parse_double(v, "config key 'threshold'");
             }
         }},
        {"standardize_scores",
         [&cfg](const std::string& v) { cfg.standardize_scores = parse_bool(v, "config key 'standardize_scores'"); }},
        size_field(cfg.aggregate, "aggregate"),
    };
    for (const auto& [key, value] : kv.entries()) {
        const auto it = setters.find(key);
        if (it == setters.end()) throw ParseError("config: unknown key '" + key + "'");
        it->second(value);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) { return from_key_values(KeyValueFile::parse(text)); }

ExperimentConfig ExperimentConfig::load(const std::string& path) { return from_key_values(KeyValueFile::read(path)); }

}  // namespace netgan
