#include "netgan/data.hpp"
#include "netgan/errors.hpp"
#include "netgan/vae.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace netgan;

namespace {

VaeModel tiny_vae(std::uint64_t seed, std::size_t n = 2) {
    Rng rng(seed);
    return vae_init(n, netgan::testing::tiny_config(), rng);
}

double direct_kl(const Vector& mu, const Vector& lv) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) s += std::exp(lv(i)) + mu(i) * mu(i) - 1.0 - lv(i);
    return 0.5 * s;
}

double mean_abs_residual(const VaeModel& m, const WindowMatrix& x) {
    return (vae_reconstruct(m, x, ReconstructionMode::Deterministic).values - x.values).cwiseAbs().mean();
}

}  // namespace

TEST(VaeLayout, FlattenIsSeriesMajor) {
    Matrix w(2, 3);
    w << 1, 2, 3, 4, 5, 6;
    const Vector flat = flatten_window(w);
    EXPECT_EQ(flat, (Vector(6) << 1, 2, 3, 4, 5, 6).finished());
    EXPECT_EQ(unflatten_window(flat, 2, 3), w);
}

TEST(VaeModel, ShapesAndCompression) {
    const auto m = tiny_vae(0);
    EXPECT_EQ(m.encoder.input_width(), 8u);
    EXPECT_EQ(m.encoder.output_width(), 4u);
    EXPECT_EQ(m.decoder.input_width(), 2u);
    EXPECT_EQ(m.decoder.output_width(), 8u);

    auto config = netgan::testing::tiny_config();
    config.d_z = 8;
    Rng rng(0);
    EXPECT_THROW(vae_init(2, config, rng), InvalidArgument);
}

TEST(VaeEncode, WidthsAndDeterminism) {
    const auto m = tiny_vae(1);
    Rng rng(2);
    const WindowMatrix x{rng.gaussian_matrix(2, 4), 0};
    const auto [mu, lv] = vae_encode(m, x);
    EXPECT_EQ(mu.size(), 2);
    EXPECT_EQ(lv.size(), 2);
    const auto again = vae_encode(m, x);
    EXPECT_EQ(again.first, mu);
    EXPECT_EQ(again.second, lv);
    EXPECT_THROW(vae_encode(m, {rng.gaussian_matrix(3, 4), 0}), ShapeError);
}

TEST(VaeEncode, ZeroEncoderGivesPrior) {
    auto m = tiny_vae(1);
    for (auto* p : m.encoder.parameters()) p->setZero();
    Rng rng(2);
    const auto [mu, lv] = vae_encode(m, {rng.gaussian_matrix(2, 4), 0});
    EXPECT_EQ(mu, Vector::Zero(2));
    EXPECT_EQ(lv, Vector::Zero(2));
}

TEST(VaeReconstruct, ContractAndDeterminism) {
    const auto m = tiny_vae(3);
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const WindowMatrix x{rng.gaussian_matrix(2, 4), 0};
        const auto a = vae_reconstruct(m, x, ReconstructionMode::Deterministic);
        const auto b = vae_reconstruct(m, x, ReconstructionMode::Deterministic);
        EXPECT_EQ(a.values, b.values);
        ASSERT_EQ(a.values.rows(), 2);
        ASSERT_EQ(a.values.cols(), 4);
        EXPECT_GT(a.values.minCoeff(), 0.0);
        EXPECT_LT(a.values.maxCoeff(), 1.0);
        const auto s = vae_reconstruct(m, x, ReconstructionMode::Stochastic, &rng);
        EXPECT_GT(s.values.minCoeff(), 0.0);
        EXPECT_LT(s.values.maxCoeff(), 1.0);
    }
    EXPECT_THROW(vae_reconstruct(m, {Matrix::Zero(2, 4), 0}, ReconstructionMode::Stochastic), InvalidArgument);
}

TEST(VaeReconstruct, VanishingVarianceMatchesDeterministic) {
    auto m = tiny_vae(5);
    // The logvar half of the final encoder layer: push its bias far negative.
    auto params = m.encoder.named_parameters();
    for (auto& [name, p] : params) {
        if (name == "dense2.b") p->bottomRows(2).setConstant(-200.0);
        if (name == "dense2.W") p->bottomRows(2).setZero();
    }
    Rng rng(6);
    const WindowMatrix x{rng.gaussian_matrix(2, 4), 0};
    const auto det = vae_reconstruct(m, x, ReconstructionMode::Deterministic);
    const auto sto = vae_reconstruct(m, x, ReconstructionMode::Stochastic, &rng);
    EXPECT_LT((det.values - sto.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(VaeKl, ClosedForms) {
    EXPECT_EQ(kl_term(Vector::Zero(4), Vector::Zero(4)), 0.0);
    Vector mu = Vector::Zero(3);
    mu(0) = 1.0;
    EXPECT_NEAR(kl_term(mu, Vector::Zero(3)), 0.5, 1e-12);
}

TEST(VaeKl, MatchesDirectFormulaAndIsNonNegative) {
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const auto d = 1 + static_cast<Eigen::Index>(rng.engine()() % 8);
        const Vector mu = rng.gaussian_matrix(d, 1) * 3.0;
        const Vector lv = rng.gaussian_matrix(d, 1) * 3.0;
        const double kl = kl_term(mu, lv);
        EXPECT_GE(kl, 0.0);
        EXPECT_NEAR(kl, direct_kl(mu, lv), 1e-9 * std::max(1.0, kl));
    }
}

TEST(VaeElbo, TermsCombine) {
    const auto m = tiny_vae(8);
    Rng rng(9);
    const WindowMatrix x{(rng.gaussian_matrix(2, 4).array() * 0.1 + 0.5).matrix(), 0};
    const Vector noise = rng.gaussian_matrix(2, 1);
    const auto t = elbo_loss(m, x, noise, 0.3);
    EXPECT_NEAR(t.total, t.recon_term + 0.3 * t.kl_term, 1e-12);
    const auto [mu, lv] = vae_encode(m, x);
    EXPECT_NEAR(t.kl_term, direct_kl(mu, lv), 1e-12);
    const Vector z = mu + (lv.array() / 2).exp().matrix().cwiseProduct(noise);
    const Matrix recon = unflatten_window(m.decoder.forward(z), 2, 4);
    EXPECT_NEAR(t.recon_term, (recon - x.values).squaredNorm() / 8.0, 1e-12);
}

TEST(VaeElbo, GradientMatchesFiniteDifferencesWithFrozenNoise) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto m = tiny_vae(seed);
        Rng rng(seed + 100);
        Matrix batch(8, 3);
        for (Eigen::Index b = 0; b < 3; ++b) batch.col(b) = (rng.gaussian_matrix(8, 1).array() * 0.2 + 0.5).matrix();
        const Matrix noise = rng.gaussian_matrix(2, 3);
        auto grads = zeros_like(m);
        elbo_gradient(m, batch, noise, 0.7, grads);
        const auto r = gradient_check(
            vae_parameters(m), vae_parameters(std::as_const(grads)),
            [&] {
                double pre = 0.0;
                const auto t = elbo_batch(m, batch, noise, 0.7, &pre);
                return LossProbe{t.total, pre};
            },
            1e-5);
        ASSERT_TRUE(r.reliable);
        EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
    }
}

TEST(VaeTrain, ZeroEpochsAndBookkeeping) {
    auto config = netgan::testing::tiny_config();
    Rng data_rng(1);
    const auto windows = netgan::testing::random_windows(data_rng, 12, 2, config.T);

    config.epochs = 0;
    Rng a(3), b(3);
    EXPECT_EQ(vae_train(windows, config, a), vae_init(2, config, b));

    config.epochs = 4;
    Rng c(3), d(3);
    const auto m1 = vae_train(windows, config, c);
    const auto m2 = vae_train(windows, config, d);
    EXPECT_EQ(m1.history.size(), 4u);
    EXPECT_EQ(m1, m2);

    const std::vector<WindowMatrix> none;
    EXPECT_THROW(vae_train(none, config, c), InvalidArgument);
}

TEST(VaeTrain, SineReconstructionImproves) {
    ExperimentConfig config;
    config.T = 16;
    config.d_z = 2;
    config.enc_hidden = 16;
    config.dec_hidden = 16;
    config.epochs = 30;
    config.batch_size = 16;
    config.beta = 0.1;
    const auto windows = sliding_windows(netgan::testing::sine_dataset(200, 16.0), config.T);
    Rng rng(1);
    const auto m = vae_train(windows, config, rng);
    ASSERT_EQ(m.history.size(), 30u);
    EXPECT_LT(m.history.back().recon_term, m.history.front().recon_term);
}

TEST(VaeTrain, SpikedWindowStandsOutAfterTraining) {
    SynthSpec spec;
    spec.n = 2;
    spec.L = 800;
    spec.seed = 31;
    const auto train_raw = synth_generate(spec);
    spec.seed = 32;
    spec.L = 300;
    const auto held_raw = synth_generate(spec);
    spec.injections = {{InjectionKind::Spike, 150, 4, 5.0, 0}};
    const auto spiked_raw = synth_generate(spec);

    const auto stats = minmax_fit(train_raw);
    ExperimentConfig config;
    config.T = 20;
    config.d_z = 4;
    config.enc_hidden = 32;
    config.dec_hidden = 32;
    config.epochs = 30;
    config.beta = 0.05;
    const auto train = sliding_windows(minmax_apply(train_raw, stats), config.T);
    Rng rng(1);
    const auto m = vae_train(train, config, rng);

    std::vector<double> held_residuals;
    for (const auto& w : sliding_windows(minmax_apply(held_raw, stats), config.T)) {
        held_residuals.push_back(mean_abs_residual(m, w));
    }
    std::nth_element(held_residuals.begin(), held_residuals.begin() + held_residuals.size() / 2, held_residuals.end());
    const double median = held_residuals[held_residuals.size() / 2];

    const auto spiked = sliding_windows(minmax_apply(spiked_raw, stats), config.T);
    EXPECT_GT(mean_abs_residual(m, spiked[140]), median);
}
