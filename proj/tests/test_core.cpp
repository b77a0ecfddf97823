#include "netgan/checkpoint.hpp"
#include "netgan/config.hpp"
#include "netgan/detect.hpp"
#include "netgan/errors.hpp"
#include "netgan/rng.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

using namespace netgan;
using netgan::testing::TempDir;

TEST(Rng, SameSeedSameDraws) {
    Rng a(0), b(0);
    for (int k = 0; k < 100; ++k) ASSERT_EQ(a.gaussian(), b.gaussian());
}

TEST(Rng, DifferentSeedsDiffer) {
    Rng a(0), b(1);
    int equal = 0;
    for (int k = 0; k < 100; ++k) equal += a.gaussian() == b.gaussian();
    EXPECT_LT(equal, 100);
}

TEST(Rng, GaussianMoments) {
    Rng rng(7);
    constexpr int N = 100000;
    double sum = 0.0, sq = 0.0;
    for (int k = 0; k < N; ++k) {
        const double x = rng.gaussian();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / N;
    const double sd = std::sqrt(sq / N - mean * mean);
    EXPECT_NEAR(mean, 0.0, 0.02);
    EXPECT_NEAR(sd, 1.0, 0.02);
}

TEST(Config, DefaultsCarryDocumentedValues) {
    const ExperimentConfig c;
    EXPECT_EQ(c.K, 64u);
    EXPECT_DOUBLE_EQ(c.lambda, 0.5);
    EXPECT_DOUBLE_EQ(c.beta, 1.0);
    EXPECT_DOUBLE_EQ(c.lr_g, 1e-3);
    EXPECT_DOUBLE_EQ(c.adam_beta1, 0.9);
    EXPECT_DOUBLE_EQ(c.adam_beta2, 0.999);
}

TEST(Config, RoundTripRandomConfigs) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        ExperimentConfig c;
        const auto sz = [&] { return static_cast<std::size_t>(1 + rng.engine()() % 200); };
        c.T = sz();
        c.d_z = sz();
        c.g_hidden = sz();
        c.g_layers = 1 + rng.engine()() % 3;
        c.d_hidden = sz();
        c.d_layers = 1 + rng.engine()() % 3;
        c.enc_hidden = sz();
        c.dec_hidden = sz();
        c.lr_g = std::exp(rng.uniform(-12, 0));
        c.lr_d = std::exp(rng.uniform(-12, 0));
        c.lr_vae = std::exp(rng.uniform(-12, 0));
        c.adam_beta1 = rng.uniform(0, 0.999);
        c.adam_beta2 = rng.uniform(0, 0.999);
        c.epochs = rng.engine()() % 1000;
        c.batch_size = sz();
        c.K = sz();
        c.lambda = rng.uniform(0, 1);
        c.beta = rng.uniform(0, 5);
        c.seed = rng.engine()();
        c.target_fpr = rng.uniform(1e-6, 0.999);
        if (trial % 2) c.threshold = rng.gaussian() * 1e3;
        c.standardize_scores = trial % 3 == 0;
        c.aggregate = sz();
        ASSERT_EQ(ExperimentConfig::parse(c.render()), c) << c.render();
    }
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(ExperimentConfig::parse("bogus = 1\n"), ParseError);
    EXPECT_THROW(ExperimentConfig::parse("lambda = 1.5\n"), InvalidArgument);
    EXPECT_THROW(ExperimentConfig::parse("T = 0\n"), InvalidArgument);
    EXPECT_THROW(ExperimentConfig::parse("K = many\n"), ParseError);
    EXPECT_THROW(ExperimentConfig::parse("T = 3\nT = 4\n"), ParseError);
    const auto c = ExperimentConfig::parse("# comment\n\nT = 12\nlambda = 0.25\nthreshold = none\n");
    EXPECT_EQ(c.T, 12u);
    EXPECT_EQ(c.lambda, 0.25);
    EXPECT_FALSE(c.threshold);
}

// ---------------------------------------------------------------------------

namespace {

Checkpoint trained_vae() {
    auto cfg = netgan::testing::tiny_config();
    const auto ds = netgan::testing::sine_dataset(40, 8.0, 0.05);
    const auto stats = minmax_fit(ds);
    const auto windows = sliding_windows(minmax_apply(ds, stats), cfg.T);
    Rng rng(1);
    return {cfg, stats, vae_train(windows, cfg, rng)};
}

Checkpoint trained_gan() {
    auto cfg = netgan::testing::tiny_config();
    const auto ds = netgan::testing::sine_dataset(40, 8.0, 0.05);
    const auto stats = minmax_fit(ds);
    const auto windows = sliding_windows(minmax_apply(ds, stats), cfg.T);
    Rng rng(2);
    return {cfg, stats, gan_train(windows, cfg, rng)};
}

std::vector<char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(Checkpoint, VaeRoundTripScoresIdentically) {
    TempDir dir("ckpt_vae");
    const auto ck = trained_vae();
    save_checkpoint(ck, dir.file("m.ckpt"));
    const auto loaded = load_checkpoint(dir.file("m.ckpt"));

    EXPECT_EQ(loaded.kind(), ModelKind::Vae);
    EXPECT_EQ(loaded.config, ck.config);
    EXPECT_EQ(loaded.stats, ck.stats);
    EXPECT_EQ(std::get<VaeModel>(loaded.model), std::get<VaeModel>(ck.model));

    const auto probe = netgan::testing::sine_dataset(20, 8.0, 0.05, 9);
    const auto w = sliding_windows(minmax_apply(probe, ck.stats), ck.config.T)[3];
    const auto before = vae_reconstruct(std::get<VaeModel>(ck.model), w, ReconstructionMode::Deterministic);
    const auto after = vae_reconstruct(std::get<VaeModel>(loaded.model), w, ReconstructionMode::Deterministic);
    EXPECT_EQ(mean_abs_difference(w.values, before.values), mean_abs_difference(w.values, after.values));
}

TEST(Checkpoint, GanRoundTripScoresIdentically) {
    TempDir dir("ckpt_gan");
    const auto ck = trained_gan();
    save_checkpoint(ck, dir.file("g.ckpt"));
    const auto loaded = load_checkpoint(dir.file("g.ckpt"));
    ASSERT_EQ(loaded.kind(), ModelKind::Gan);
    EXPECT_EQ(std::get<GanModel>(loaded.model), std::get<GanModel>(ck.model));

    const auto probe = minmax_apply(netgan::testing::sine_dataset(30, 8.0, 0.05, 4), ck.stats);
    const auto a = gan_component_scores(std::get<GanModel>(ck.model), probe, ck.config.T, 8, 0.5, 11);
    const auto b = gan_component_scores(std::get<GanModel>(loaded.model), probe, ck.config.T, 8, 0.5, 11);
    EXPECT_EQ(a.discrimination, b.discrimination);
    EXPECT_EQ(a.residual, b.residual);
}

TEST(Checkpoint, VersionMismatchIsReported) {
    TempDir dir("ckpt_version");
    save_checkpoint(trained_vae(), dir.file("m.ckpt"));
    auto bytes = read_bytes(dir.file("m.ckpt"));
    std::uint32_t version = kCheckpointFormatVersion + 1;
    std::memcpy(bytes.data() + 8, &version, sizeof(version));
    write_bytes(dir.file("m.ckpt"), bytes);
    try {
        load_checkpoint(dir.file("m.ckpt"));
        FAIL() << "expected CheckpointError";
    } catch (const CheckpointError& e) {
        EXPECT_EQ(e.kind(), CheckpointError::Kind::VersionMismatch);
    }
}

TEST(Checkpoint, TruncatedFileIsCorrupt) {
    TempDir dir("ckpt_trunc");
    save_checkpoint(trained_vae(), dir.file("m.ckpt"));
    auto bytes = read_bytes(dir.file("m.ckpt"));
    for (const std::size_t keep : {std::size_t{5}, bytes.size() / 2, bytes.size() - 1}) {
        write_bytes(dir.file("t.ckpt"), std::vector<char>(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(keep)));
        try {
            load_checkpoint(dir.file("t.ckpt"));
            FAIL() << "expected CheckpointError for " << keep << " bytes";
        } catch (const CheckpointError& e) {
            EXPECT_EQ(e.kind(), CheckpointError::Kind::Corrupt);
        }
    }
}

TEST(Checkpoint, ShapeMismatchIsReported) {
    // Re-save a VAE whose encoder no longer matches its embedded config.
    TempDir dir("ckpt_shape");
    auto ck = trained_vae();
    ck.config.enc_hidden += 1;
    save_checkpoint(ck, dir.file("m.ckpt"));
    try {
        load_checkpoint(dir.file("m.ckpt"));
        FAIL() << "expected CheckpointError";
    } catch (const CheckpointError& e) {
        EXPECT_EQ(e.kind(), CheckpointError::Kind::ShapeMismatch);
    }
}

TEST(Checkpoint, MissingFileIsIoError) { EXPECT_THROW(load_checkpoint("/nonexistent/x.ckpt"), IoError); }
