#pragma once

#include "netgan/keyvalue.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

namespace netgan {

/// Every tunable of a run. Keys in the config file are the field names.
struct ExperimentConfig {
    std::size_t T = 20;
    std::size_t d_z = 4;

    std::size_t g_hidden = 16;
    std::size_t g_layers = 1;
    std::size_t d_hidden = 16;
    std::size_t d_layers = 1;
    std::size_t enc_hidden = 64;
    std::size_t dec_hidden = 64;

    double lr_g = 1e-3;
    double lr_d = 1e-3;
    double lr_vae = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;

    std::size_t epochs = 50;
    std::size_t batch_size = 32;

    std::size_t K = 64;
    double lambda = 0.5;
    double beta = 1.0;
    std::uint64_t seed = 0;

    double target_fpr = 0.01;
    std::optional<double> threshold;
    bool standardize_scores = false;
    std::size_t aggregate = 1;

    /// Throws InvalidArgument naming the offending field.
    void validate() const;

    [[nodiscard]] KeyValueFile to_key_values() const;
    [[nodiscard]] std::string render() const;

    /// Unknown keys are rejected; absent keys keep their defaults.
    static ExperimentConfig from_key_values(const KeyValueFile& kv);
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::string& path);

    bool operator==(const ExperimentConfig&) const = default;
};

}  // namespace netgan
