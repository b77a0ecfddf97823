#pragma once

#include "netgan/types.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace netgan {

/// Per-series extrema of the split the normalizer was fitted on.
struct NormStats {
    Vector min;
    Vector max;

    [[nodiscard]] std::size_t series_count() const { return static_cast<std::size_t>(min.size()); }
    bool operator==(const NormStats& other) const { return min == other.min && max == other.max; }
};

enum class LabelColumn {
    Absent,   ///< every column is a series
    Present,  ///< the final column must be named "label"
    Detect,   ///< a final column named "label" is taken as labels when present
};

/// Reads a comma-separated file: header of series names, one row per time step,
/// optional final "label" column of 0/1.
Dataset load_csv(const std::string& path, LabelColumn labels);
Dataset load_csv(const std::string& path, bool has_labels);

/// Writes the same format `load_csv` reads, with a "label" column when labels are present.
void write_csv(const Dataset& ds, const std::string& path);

NormStats minmax_fit(const Dataset& train);

/// (x - min) / (max - min) per series. Constant series map to 0. Values outside the
/// fitted range are not clipped.
Dataset minmax_apply(const Dataset& ds, const NormStats& stats);

/// Non-overlapping block means; a block is labeled anomalous when any member is.
/// The trailing remainder (L mod block) is dropped.
Dataset aggregate(const Dataset& ds, std::size_t block);

/// Unit-step windows: exactly L - T + 1 of them, window i starting at column i.
std::vector<WindowMatrix> sliding_windows(const Dataset& ds, std::size_t T);

/// Chronological split: the first floor(L * fraction) steps and the rest.
std::pair<Dataset, Dataset> split_chronological(const Dataset& ds, double fraction);

// ---------------------------------------------------------------------------
// Synthetic data

struct SeriesShape {
    double offset = 0.0;
    double sine_amplitude = 1.0;
    double sine_period = 50.0;
    double sine_phase = 0.0;
    double trend = 0.0;  ///< per step
    double noise = 0.1;  ///< standard deviation of additive Gaussian noise
};

enum class InjectionKind { Spike, LevelShift, CorrelationBreak };

struct Injection {
    InjectionKind kind = InjectionKind::Spike;
    std::size_t start = 0;
    std::size_t duration = 1;
    double magnitude = 5.0;  ///< in units of the target series' baseline standard deviation
    std::size_t series = 0;
};

struct SynthSpec {
    std::size_t n = 1;
    std::size_t L = 1;
    double sample_period = 1.0;
    std::vector<SeriesShape> series;  ///< empty, or exactly n entries
    std::vector<Injection> injections;
    std::uint64_t seed = 0;

    /// Throws InvalidArgument naming the offending injection.
    void validate() const;

    /// Flat key-value text. Per-series keys are `series.<i>.<field>`, injections
    /// `injection.<k>.<field>` with kind one of spike, level_shift, correlation_break.
    static SynthSpec parse(const std::string& text);
    static SynthSpec load(const std::string& path);
    [[nodiscard]] std::string render() const;
};

/// Deterministic given the seed. Labels are 1 exactly on injected index ranges.
Dataset synth_generate(const SynthSpec& spec);

const char* to_string(InjectionKind kind);

}  // namespace netgan
