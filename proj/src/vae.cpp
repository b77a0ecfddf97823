#include "netgan/vae.hpp"

#include "netgan/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace netgan {

Vector flatten_window(const Matrix& window) {
    Vector flat(window.size());
    const auto T = window.cols();
    for (Eigen::Index i = 0; i < window.rows(); ++i) flat.segment(i * T, T) = window.row(i).transpose();
    return flat;
}

Matrix unflatten_window(const Eigen::Ref<const Vector>& flat, std::size_t series, std::size_t steps) {
    const auto n = static_cast<Eigen::Index>(series);
    const auto T = static_cast<Eigen::Index>(steps);
    if (flat.size() != n * T) throw ShapeError("unflatten_window: size mismatch");
    Matrix m(n, T);
    for (Eigen::Index i = 0; i < n; ++i) m.row(i) = flat.segment(i * T, T).transpose();
    return m;
}

VaeModel vae_init(std::size_t series_count, const ExperimentConfig& config, Rng& rng) {
    config.validate();
    const auto flat = series_count * config.T;
    if (config.d_z >= flat) {
        throw InvalidArgument("vae: d_z=" + std::to_string(config.d_z) + " must be smaller than n*T=" +
                              std::to_string(flat));
    }
    VaeModel m;
    m.series = series_count;
    m.steps = config.T;
    m.latent = config.d_z;
    m.encoder = FeedForwardStack::create(flat, config.enc_hidden, 2 * config.d_z, Activation::Tanh,
                                         Activation::Identity, rng);
    m.decoder = FeedForwardStack::create(config.d_z, config.dec_hidden, flat, Activation::Tanh, Activation::Sigmoid,
                                         rng);
    return m;
}

namespace {

void check_window(const VaeModel& m, const WindowMatrix& x) {
    if (x.series_count() != m.series || x.length() != m.steps) {
        throw ShapeError("vae: window is " + std::to_string(x.series_count()) + "x" + std::to_string(x.length()) +
                         ", model expects " + std::to_string(m.series) + "x" + std::to_string(m.steps));
    }
}

}  // namespace

std::pair<Vector, Vector> vae_encode(const VaeModel& m, const WindowMatrix& x) {
    check_window(m, x);
    const Matrix out = m.encoder.forward(flatten_window(x.values));
    const auto d = static_cast<Eigen::Index>(m.latent);
    return {out.col(0).head(d), out.col(0).tail(d)};
}

WindowMatrix vae_reconstruct(const VaeModel& m, const WindowMatrix& x, ReconstructionMode mode, Rng* rng) {
    auto [mu, logvar] = vae_encode(m, x);
    Vector z = mu;
    if (mode == ReconstructionMode::Stochastic) {
        if (!rng) throw InvalidArgument("vae_reconstruct: stochastic mode needs a random source");
        const Matrix eps = rng->gaussian_matrix(mu.size(), 1);
        z = mu.array() + (0.5 * logvar.array()).exp() * eps.col(0).array();
    }
    const Matrix flat = m.decoder.forward(z);
    return {unflatten_window(flat.col(0), m.series, m.steps), x.start_index};
}

double kl_term(const Vector& mu, const Vector& logvar) {
    if (mu.size() != logvar.size()) throw ShapeError("kl_term: mu and logvar differ in width");
    return 0.5 * (logvar.array().exp() + mu.array().square() - 1.0 - logvar.array()).sum();
}

ElboTerms elbo_batch(const VaeModel& m, const Matrix& flat_batch, const Matrix& noise, double beta,
                     double* max_abs_preactivation) {
    const auto d = static_cast<Eigen::Index>(m.latent);
    const auto B = flat_batch.cols();
    if (noise.rows() != d || noise.cols() != B) throw ShapeError("elbo: noise must be d_z x batch");
    FeedForwardTrace enc_trace, dec_trace;
    const Matrix enc = m.encoder.forward(flat_batch, &enc_trace);
    const Matrix mu = enc.topRows(d);
    const Matrix logvar = enc.bottomRows(d);
    const Matrix z = (mu.array() + (0.5 * logvar.array()).exp() * noise.array()).matrix();
    const Matrix recon = m.decoder.forward(z, &dec_trace);
    if (max_abs_preactivation) {
        *max_abs_preactivation = std::max(enc_trace.max_abs_preactivation, dec_trace.max_abs_preactivation);
    }

    ElboTerms terms;
    const double per_window = static_cast<double>(flat_batch.rows());
    for (Eigen::Index b = 0; b < B; ++b) {
        terms.recon_term += (recon.col(b) - flat_batch.col(b)).squaredNorm() / per_window;
        terms.kl_term += kl_term(mu.col(b), logvar.col(b));
    }
    terms.recon_term /= static_cast<double>(B);
    terms.kl_term /= static_cast<double>(B);
    terms.total = terms.recon_term + beta * terms.kl_term;
    return terms;
}

ElboTerms elbo_loss(const VaeModel& m, const WindowMatrix& x, const Vector& noise, double beta) {
    check_window(m, x);
    const auto terms = elbo_batch(m, flatten_window(x.values), noise, beta);
    if (!std::isfinite(terms.total) || !std::isfinite(terms.recon_term) || !std::isfinite(terms.kl_term)) {
        throw TrainingError("elbo_loss: non-finite terms");
    }
    return terms;
}

ElboTerms elbo_loss(const VaeModel& m, const WindowMatrix& x, Rng& rng, double beta) {
    const Matrix noise = rng.gaussian_matrix(static_cast<Eigen::Index>(m.latent), 1);
    return elbo_loss(m, x, Vector(noise.col(0)), beta);
}

ElboTerms elbo_gradient(const VaeModel& m, const Matrix& flat_batch, const Matrix& noise, double beta,
                        VaeModel& grads) {
    const auto d = static_cast<Eigen::Index>(m.latent);
    const auto B = flat_batch.cols();
    if (noise.rows() != d || noise.cols() != B) throw ShapeError("elbo: noise must be d_z x batch");
    FeedForwardTrace enc_trace, dec_trace;
    const Matrix enc = m.encoder.forward(flat_batch, &enc_trace);
    const auto mu = enc.topRows(d).array();
    const auto logvar = enc.bottomRows(d).array();
    const Eigen::ArrayXXd sd = (0.5 * logvar).exp();
    const Matrix z = (mu + sd * noise.array()).matrix();
    const Matrix recon = m.decoder.forward(z, &dec_trace);

    ElboTerms terms;
    const double per_window = static_cast<double>(flat_batch.rows());
    const double inv_b = 1.0 / static_cast<double>(B);
    terms.recon_term = (recon - flat_batch).squaredNorm() / per_window * inv_b;
    terms.kl_term = 0.5 * (logvar.exp() + mu.square() - 1.0 - logvar).sum() * inv_b;
    terms.total = terms.recon_term + beta * terms.kl_term;

    const Matrix d_recon = (2.0 / per_window * inv_b) * (recon - flat_batch);
    const Matrix d_z = m.decoder.backward(dec_trace, d_recon, grads.decoder);

    Matrix d_enc(2 * d, B);
    d_enc.topRows(d) = (d_z.array() + beta * inv_b * mu).matrix();
    d_enc.bottomRows(d) =
        (d_z.array() * 0.5 * sd * noise.array() + beta * inv_b * 0.5 * (logvar.exp() - 1.0)).matrix();
    m.encoder.backward(enc_trace, d_enc, grads.encoder);
    return terms;
}

VaeModel zeros_like(const VaeModel& m) {
    VaeModel g;
    g.series = m.series;
    g.steps = m.steps;
    g.latent = m.latent;
    g.encoder = m.encoder.zeros_like();
    g.decoder = m.decoder.zeros_like();
    return g;
}

std::vector<Matrix*> vae_parameters(VaeModel& m) {
    auto out = m.encoder.parameters();
    const auto dec = m.decoder.parameters();
    out.insert(out.end(), dec.begin(), dec.end());
    return out;
}

std::vector<const Matrix*> vae_parameters(const VaeModel& m) {
    auto out = m.encoder.parameters();
    const auto dec = m.decoder.parameters();
    out.insert(out.end(), dec.begin(), dec.end());
    return out;
}

VaeModel vae_train(std::span<const WindowMatrix> windows, const ExperimentConfig& config, Rng& rng,
                   const VaeEpochCallback& on_epoch) {
    config.validate();
    if (windows.empty()) throw InvalidArgument("vae_train: no training windows");
    const auto n = windows.front().series_count();
    VaeModel model = vae_init(n, config, rng);
    for (const auto& w : windows) check_window(model, w);

    std::vector<Vector> flat;
    flat.reserve(windows.size());
    for (const auto& w : windows) flat.push_back(flatten_window(w.values));

    Adam opt(config.lr_vae, config.adam_beta1, config.adam_beta2);
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto rows = static_cast<Eigen::Index>(n * config.T);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng.engine());
        ElboTerms epoch_terms;
        std::size_t batch_index = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
            const auto end = std::min(order.size(), begin + config.batch_size);
            const auto B = static_cast<Eigen::Index>(end - begin);
            Matrix batch(rows, B);
            for (Eigen::Index b = 0; b < B; ++b) batch.col(b) = flat[order[begin + static_cast<std::size_t>(b)]];
            const Matrix noise = rng.gaussian_matrix(static_cast<Eigen::Index>(config.d_z), B);

            VaeModel grads = zeros_like(model);
            const auto terms = elbo_gradient(model, batch, noise, config.beta, grads);
            if (!std::isfinite(terms.total)) {
                throw TrainingError("vae_train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_index));
            }
            opt.step(vae_parameters(model), vae_parameters(std::as_const(grads)));
            const double w = static_cast<double>(B);
            epoch_terms.total += terms.total * w;
            epoch_terms.recon_term += terms.recon_term * w;
            epoch_terms.kl_term += terms.kl_term * w;
        }
        const double N = static_cast<double>(order.size());
        epoch_terms.total /= N;
        epoch_terms.recon_term /= N;
        epoch_terms.kl_term /= N;
        model.history.push_back(epoch_terms);
        if (on_epoch) on_epoch(epoch, epoch_terms);
    }
    return model;
}

}  // namespace netgan
