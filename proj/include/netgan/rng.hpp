#pragma once

#include "netgan/types.hpp"

#include <cstdint>
#include <random>

namespace netgan {

/// The single source of randomness for a run. Single owner, passed by reference.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double gaussian() { return normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

    /// rows x cols matrix of independent unit Gaussians, filled column by column.
    Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols);

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

/// Draws a latent sequence of the given width and length.
LatentSequence draw_latent(Rng& rng, std::size_t latent_width, std::size_t length);

}  // namespace netgan
