#pragma once

#include "netgan/config.hpp"
#include "netgan/nets.hpp"
#include "netgan/rng.hpp"
#include "netgan/types.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace netgan {

struct ElboTerms {
    double total = 0.0;
    double recon_term = 0.0;
    double kl_term = 0.0;
    bool operator==(const ElboTerms&) const = default;
};

/// Encoder: flattened n*T window -> (mu, logvar), 2*d_z wide.
/// Decoder: d_z -> flattened n*T reconstruction with sigmoid output.
/// Windows are flattened series-major: element (series i, step t) sits at i*T + t.
struct VaeModel {
    FeedForwardStack encoder;
    FeedForwardStack decoder;
    std::size_t series = 0;
    std::size_t steps = 0;
    std::size_t latent = 0;
    std::vector<ElboTerms> history;

    bool operator==(const VaeModel&) const = default;
};

Vector flatten_window(const Matrix& window);
Matrix unflatten_window(const Eigen::Ref<const Vector>& flat, std::size_t series, std::size_t steps);

/// Throws InvalidArgument unless d_z < n*T.
VaeModel vae_init(std::size_t series_count, const ExperimentConfig& config, Rng& rng);

/// Throws ShapeError when x is not n x T.
std::pair<Vector, Vector> vae_encode(const VaeModel& m, const WindowMatrix& x);

enum class ReconstructionMode { Deterministic, Stochastic };

/// Deterministic mode decodes mu. Stochastic mode decodes mu + exp(logvar/2) * eps with eps drawn
/// from `rng`, which must then be non-null.
WindowMatrix vae_reconstruct(const VaeModel& m, const WindowMatrix& x, ReconstructionMode mode, Rng* rng = nullptr);

/// 0.5 * sum(exp(logvar) + mu^2 - 1 - logvar).
double kl_term(const Vector& mu, const Vector& logvar);

/// recon_term = mean squared error against the stochastic reconstruction, total = recon + beta * kl.
ElboTerms elbo_loss(const VaeModel& m, const WindowMatrix& x, Rng& rng, double beta = 1.0);
/// Same with the reparameterization noise given explicitly (d_z vector).
ElboTerms elbo_loss(const VaeModel& m, const WindowMatrix& x, const Vector& noise, double beta = 1.0);

/// Batch ELBO (each term averaged over the batch columns) and its gradient with respect to
/// encoder and decoder parameters, accumulated into `grads` (shaped like `m`).
/// `flat_batch` is (n*T) x B, `noise` is d_z x B.
ElboTerms elbo_gradient(const VaeModel& m, const Matrix& flat_batch, const Matrix& noise, double beta,
                        VaeModel& grads);

/// Batch ELBO without gradients; the max pre-activation feeds saturation checks.
ElboTerms elbo_batch(const VaeModel& m, const Matrix& flat_batch, const Matrix& noise, double beta,
                     double* max_abs_preactivation = nullptr);

VaeModel zeros_like(const VaeModel& m);
std::vector<Matrix*> vae_parameters(VaeModel& m);
std::vector<const Matrix*> vae_parameters(const VaeModel& m);

using VaeEpochCallback = std::function<void(std::size_t epoch, const ElboTerms&)>;

/// Mini-batch training on the ELBO with reparameterized sampling.
/// Throws TrainingError naming epoch and batch on a non-finite loss.
VaeModel vae_train(std::span<const WindowMatrix> windows, const ExperimentConfig& config, Rng& rng,
                   const VaeEpochCallback& on_epoch = {});

}  // namespace netgan
