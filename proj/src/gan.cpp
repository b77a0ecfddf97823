#include "netgan/gan.hpp"

#include "netgan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace netgan {

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

namespace {

/// d(-log clamp(p))/dp, zero where the clamp is active.
double neg_log_grad(double p) {
    if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
    return -1.0 / p;
}

double neg_log1m_grad(double p) {
    if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
    return 1.0 / (1.0 - p);
}

void check_batch(const LstmStack& D, std::span<const WindowMatrix> batch, const char* what) {
    if (batch.empty()) throw InvalidArgument(std::string(what) + ": empty batch");
    const auto T = batch.front().values.cols();
    for (const auto& w : batch) {
        if (w.series_count() != D.input_width() || w.values.cols() != T) {
            throw ShapeError(std::string(what) + ": window is " + std::to_string(w.values.rows()) + "x" +
                             std::to_string(w.values.cols()) + ", expected " + std::to_string(D.input_width()) + "x" +
                             std::to_string(T));
        }
    }
}

}  // namespace

double d_loss_from_probabilities(std::span<const double> real, std::span<const double> fake) {
    if (real.empty()) throw InvalidArgument("d_loss: empty batch");
    if (real.size() != fake.size()) throw ShapeError("d_loss: real and fake batches differ in size");
    double sum = 0.0;
    for (std::size_t k = 0; k < real.size(); ++k) {
        sum += -std::log(clamp_probability(real[k])) - std::log(1.0 - clamp_probability(fake[k]));
    }
    return sum / static_cast<double>(real.size());
}

double g_loss_from_probabilities(std::span<const double> fake) {
    if (fake.empty()) throw InvalidArgument("g_loss: empty batch");
    double sum = 0.0;
    for (const double p : fake) sum += -std::log(clamp_probability(p));
    return sum / static_cast<double>(fake.size());
}

double d_loss(const LstmStack& D, std::span<const WindowMatrix> real, std::span<const WindowMatrix> fake) {
    check_batch(D, real, "d_loss");
    check_batch(D, fake, "d_loss");
    if (real.size() != fake.size()) throw ShapeError("d_loss: real and fake batches differ in size");
    std::vector<double> pr, pf;
    for (const auto& w : real) pr.push_back(discriminator_forward(D, w));
    for (const auto& w : fake) pf.push_back(discriminator_forward(D, w));
    return d_loss_from_probabilities(pr, pf);
}

double g_loss(const LstmStack& D, std::span<const WindowMatrix> fake) {
    check_batch(D, fake, "g_loss");
    std::vector<double> pf;
    for (const auto& w : fake) pf.push_back(discriminator_forward(D, w));
    return g_loss_from_probabilities(pf);
}

double d_loss_gradient(const LstmStack& D, std::span<const WindowMatrix> real, std::span<const WindowMatrix> fake,
                       LstmStack& d_grads) {
    check_batch(D, real, "d_loss");
    check_batch(D, fake, "d_loss");
    if (real.size() != fake.size()) throw ShapeError("d_loss: real and fake batches differ in size");
    const double scale = 1.0 / static_cast<double>(real.size());
    double sum = 0.0;
    LstmTrace trace;
    Matrix d_out(1, 1);
    for (std::size_t k = 0; k < real.size(); ++k) {
        const double pr = D.forward(real[k].values, &trace)(0, 0);
        sum += -std::log(clamp_probability(pr));
        d_out(0, 0) = neg_log_grad(pr) * scale;
        D.backward(trace, d_out, d_grads);

        const double pf = D.forward(fake[k].values, &trace)(0, 0);
        sum += -std::log(1.0 - clamp_probability(pf));
        d_out(0, 0) = neg_log1m_grad(pf) * scale;
        D.backward(trace, d_out, d_grads);
    }
    return sum * scale;
}

double g_loss_gradient(const LstmStack& G, const LstmStack& D, std::span<const LatentSequence> latents,
                       LstmStack& g_grads) {
    if (latents.empty()) throw InvalidArgument("g_loss: empty batch");
    const double scale = 1.0 / static_cast<double>(latents.size());
    double sum = 0.0;
    LstmTrace g_trace;
    LstmTrace d_trace;
    LstmStack d_scratch = D.zeros_like();
    Matrix d_out(1, 1);
    for (const auto& z : latents) {
        if (static_cast<std::size_t>(z.values.rows()) != G.input_width()) {
            throw ShapeError("g_loss: latent width mismatch");
        }
        const Matrix fake = G.forward(z.values, &g_trace);
        const double pf = D.forward(fake, &d_trace)(0, 0);
        sum += -std::log(clamp_probability(pf));
        d_out(0, 0) = neg_log_grad(pf) * scale;
        const Matrix d_fake = D.backward(d_trace, d_out, d_scratch);
        G.backward(g_trace, d_fake, g_grads);
    }
    return sum * scale;
}

GanModel gan_init(std::size_t series_count, const ExperimentConfig& config, Rng& rng) {
    config.validate();
    GanModel model;
    model.G = LstmStack::create(config.d_z, config.g_hidden, config.g_layers, series_count, Activation::Sigmoid,
                                Readout::EveryStep, rng);
    model.D = LstmStack::create(series_count, config.d_hidden, config.d_layers, 1, Activation::Sigmoid,
                                Readout::FinalStep, rng);
    return model;
}

GanTrainer::GanTrainer(GanModel model, const ExperimentConfig& config)
    : model_(std::move(model)),
      T_(config.T),
      opt_g_(config.lr_g, config.adam_beta1, config.adam_beta2),
      opt_d_(config.lr_d, config.adam_beta1, config.adam_beta2) {}

double GanTrainer::d_step(std::span<const WindowMatrix> real, std::span<const WindowMatrix> fake) {
    LstmStack grads = model_.D.zeros_like();
    const double loss = d_loss_gradient(model_.D, real, fake, grads);
    if (!std::isfinite(loss)) return loss;
    opt_d_.step(model_.D.parameters(), std::as_const(grads).parameters());
    return loss;
}

double GanTrainer::g_step(std::span<const LatentSequence> latents) {
    LstmStack grads = model_.G.zeros_like();
    const double loss = g_loss_gradient(model_.G, model_.D, latents, grads);
    if (!std::isfinite(loss)) return loss;
    opt_g_.step(model_.G.parameters(), std::as_const(grads).parameters());
    return loss;
}

GanLossRecord GanTrainer::train_batch(std::span<const WindowMatrix> real, Rng& rng) {
    std::vector<LatentSequence> latents;
    std::vector<WindowMatrix> fake;
    latents.reserve(real.size());
    fake.reserve(real.size());
    for (std::size_t k = 0; k < real.size(); ++k) {
        latents.push_back(draw_latent(rng, model_.latent_width(), T_));
        fake.push_back(generator_forward(model_.G, latents.back()));
    }
    GanLossRecord rec;
    rec.d_loss = d_step(real, fake);
    if (!std::isfinite(rec.d_loss)) return rec;
    rec.g_loss = g_step(latents);
    return rec;
}

GanModel gan_train(std::span<const WindowMatrix> windows, const ExperimentConfig& config, Rng& rng,
                   const GanEpochCallback& on_epoch) {
    config.validate();
    if (windows.empty()) throw InvalidArgument("gan_train: no training windows");
    const auto n = windows.front().series_count();
    for (const auto& w : windows) {
        if (w.series_count() != n || w.length() != config.T) {
            throw ShapeError("gan_train: window is " + std::to_string(w.series_count()) + "x" +
                             std::to_string(w.length()) + ", expected " + std::to_string(n) + "x" +
                             std::to_string(config.T));
        }
    }

    GanTrainer trainer(gan_init(n, config, rng), config);
    std::vector<GanLossRecord> history;
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<WindowMatrix> batch;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        GanLossRecord epoch_rec;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
            const auto end = std::min(order.size(), begin + config.batch_size);
            batch.clear();
            for (std::size_t k = begin; k < end; ++k) batch.push_back(windows[order[k]]);
            const auto rec = trainer.train_batch(batch, rng);
            if (!std::isfinite(rec.d_loss) || !std::isfinite(rec.g_loss)) {
                throw TrainingError("gan_train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_index));
            }
            const double weight = static_cast<double>(end - begin);
            epoch_rec.d_loss += rec.d_loss * weight;
            epoch_rec.g_loss += rec.g_loss * weight;
        }
        epoch_rec.d_loss /= static_cast<double>(order.size());
        epoch_rec.g_loss /= static_cast<double>(order.size());
        history.push_back(epoch_rec);
        if (on_epoch) on_epoch(epoch, epoch_rec);
    }
    GanModel model = trainer.release();
    model.history = std::move(history);
    return model;
}

}  // namespace netgan
