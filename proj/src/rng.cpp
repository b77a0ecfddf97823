#include "netgan/rng.hpp"

namespace netgan {

Matrix Rng::gaussian_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = gaussian();
    }
    return m;
}

LatentSequence draw_latent(Rng& rng, std::size_t latent_width, std::size_t length) {
    return {rng.gaussian_matrix(static_cast<Eigen::Index>(latent_width), static_cast<Eigen::Index>(length))};
}

}  // namespace netgan
