#pragma once

#include "netgan/config.hpp"
#include "netgan/nets.hpp"
#include "netgan/rng.hpp"
#include "netgan/types.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace netgan {

/// Probabilities are clamped to [kProbabilityClamp, 1 - kProbabilityClamp] before any log.
inline constexpr double kProbabilityClamp = 1e-7;

double clamp_probability(double p);

struct GanLossRecord {
    double d_loss = 0.0;
    double g_loss = 0.0;
    bool operator==(const GanLossRecord&) const = default;
};

struct GanModel {
    LstmStack G;  ///< d_z -> n, sigmoid at every step
    LstmStack D;  ///< n -> 1, sigmoid on the final hidden state
    std::vector<GanLossRecord> history;

    [[nodiscard]] std::size_t series_count() const { return G.output_width(); }
    [[nodiscard]] std::size_t latent_width() const { return G.input_width(); }
    bool operator==(const GanModel&) const = default;
};

/// Fresh G then D, both drawn from `rng` in that order.
GanModel gan_init(std::size_t series_count, const ExperimentConfig& config, Rng& rng);

/// mean over items of -log D(real) - log(1 - D(fake)).
double d_loss_from_probabilities(std::span<const double> real, std::span<const double> fake);
/// Non-saturating generator loss: mean of -log D(fake).
double g_loss_from_probabilities(std::span<const double> fake);

/// Throws ShapeError for unequal batch sizes or mismatched shapes, InvalidArgument for empty batches.
double d_loss(const LstmStack& D, std::span<const WindowMatrix> real, std::span<const WindowMatrix> fake);
double g_loss(const LstmStack& D, std::span<const WindowMatrix> fake);

/// d_loss plus its gradient with respect to D's parameters, accumulated into `d_grads`.
double d_loss_gradient(const LstmStack& D, std::span<const WindowMatrix> real, std::span<const WindowMatrix> fake,
                       LstmStack& d_grads);

/// g_loss of G(z) plus its gradient with respect to G's parameters, accumulated into `g_grads`.
/// D is held fixed.
double g_loss_gradient(const LstmStack& G, const LstmStack& D, std::span<const LatentSequence> latents,
                       LstmStack& g_grads);

/// Owns a model and its two optimizers. One `train_batch` is one D step followed by one G step.
class GanTrainer {
public:
    GanTrainer(GanModel model, const ExperimentConfig& config);

    /// Updates D only.
    double d_step(std::span<const WindowMatrix> real, std::span<const WindowMatrix> fake);
    /// Updates G only.
    double g_step(std::span<const LatentSequence> latents);

    /// Draws one latent sequence per real window, then runs d_step and g_step on them.
    GanLossRecord train_batch(std::span<const WindowMatrix> real, Rng& rng);

    [[nodiscard]] const GanModel& model() const { return model_; }
    GanModel release() { return std::move(model_); }

private:
    GanModel model_;
    std::size_t T_;
    Adam opt_g_;
    Adam opt_d_;
};

using GanEpochCallback = std::function<void(std::size_t epoch, const GanLossRecord&)>;

/// Alternating adversarial training over shuffled mini-batches of baseline windows.
/// Throws TrainingError naming epoch and batch on a non-finite loss.
GanModel gan_train(std::span<const WindowMatrix> windows, const ExperimentConfig& config, Rng& rng,
                   const GanEpochCallback& on_epoch = {});

}  // namespace netgan
