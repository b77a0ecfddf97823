#pragma once

#include "netgan/config.hpp"
#include "netgan/data.hpp"
#include "netgan/gan.hpp"
#include "netgan/vae.hpp"

#include <cstdint>
#include <string>
#include <variant>

namespace netgan {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

enum class ModelKind { Gan, Vae };

const char* to_string(ModelKind kind);
/// Throws InvalidArgument for anything other than "gan" or "vae".
ModelKind model_kind_from_string(const std::string& name);

/// A trained model together with everything needed to score new data with it.
struct Checkpoint {
    ExperimentConfig config;
    NormStats stats;
    std::variant<GanModel, VaeModel> model;

    [[nodiscard]] ModelKind kind() const {
        return std::holds_alternative<GanModel>(model) ? ModelKind::Gan : ModelKind::Vae;
    }
    [[nodiscard]] std::size_t series_count() const { return stats.series_count(); }
};

/// Binary container: magic, format version, model kind, config text, normalization
/// statistics, named parameter tensors, loss history, CRC-32 trailer. Native little-endian.
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);

/// Throws CheckpointError with kind VersionMismatch, ShapeMismatch or Corrupt.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace netgan
