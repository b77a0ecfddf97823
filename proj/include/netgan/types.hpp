#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace netgan {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n equally sampled series stored row-wise (row = series, column = time step).
struct Dataset {
    std::vector<std::string> names;
    Matrix values;
    double sample_period = 1.0;
    std::optional<std::vector<std::uint8_t>> labels;

    [[nodiscard]] std::size_t series_count() const { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] std::size_t length() const { return static_cast<std::size_t>(values.cols()); }

    /// Throws ShapeError / InvalidArgument when the invariants do not hold:
    /// L >= 1, names match rows, labels length L with values in {0,1}, finite values.
    void validate() const;
};

/// One n x T chunk of consecutive samples.
struct WindowMatrix {
    Matrix values;
    std::size_t start_index = 0;

    [[nodiscard]] std::size_t series_count() const { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] std::size_t length() const { return static_cast<std::size_t>(values.cols()); }
};

/// d_z x T draws from an isotropic unit Gaussian; one latent vector per generated step.
struct LatentSequence {
    Matrix values;
};

}  // namespace netgan
