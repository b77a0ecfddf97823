#include "netgan/errors.hpp"
#include "netgan/nets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <utility>

using namespace netgan;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Matrix* param(LstmStack& s, const std::string& name) {
    for (auto& [n, p] : s.named_parameters()) {
        if (n == name) return p;
    }
    throw std::runtime_error("no parameter " + name);
}

/// Straightforward scalar-loop LSTM used as an independent reference.
Matrix reference_lstm(const LstmStack& net, const Matrix& seq) {
    const auto params = net.named_parameters();
    const auto find = [&](const std::string& name) -> const Matrix& {
        for (const auto& [n, p] : params) {
            if (n == name) return *p;
        }
        throw std::runtime_error(name);
    };
    const auto h = static_cast<Eigen::Index>(net.hidden_width());
    const auto T = seq.cols();
    Matrix input = seq;
    for (std::size_t l = 0; l < net.layer_count(); ++l) {
        const auto p = "layer" + std::to_string(l) + ".";
        const Matrix& W = find(p + "W");
        const Matrix& U = find(p + "U");
        const Matrix& b = find(p + "b");
        Matrix out(h, T);
        std::vector<double> hp(static_cast<std::size_t>(h), 0.0), cp(static_cast<std::size_t>(h), 0.0);
        for (Eigen::Index t = 0; t < T; ++t) {
            std::vector<double> hn(hp.size()), cn(cp.size());
            for (Eigen::Index j = 0; j < h; ++j) {
                double pre[4];
                for (int g = 0; g < 4; ++g) {
                    const auto row = g * h + j;
                    double s = b(row, 0);
                    for (Eigen::Index k = 0; k < input.rows(); ++k) s += W(row, k) * input(k, t);
                    for (Eigen::Index k = 0; k < h; ++k) s += U(row, k) * hp[static_cast<std::size_t>(k)];
                    pre[g] = s;
                }
                const double i = sigmoid(pre[0]), f = sigmoid(pre[1]), o = sigmoid(pre[2]), c = std::tanh(pre[3]);
                const auto ju = static_cast<std::size_t>(j);
                cn[ju] = f * cp[ju] + i * c;
                hn[ju] = o * std::tanh(cn[ju]);
                out(j, t) = hn[ju];
            }
            hp = hn;
            cp = cn;
        }
        input = out;
    }
    const Matrix& PW = find("proj.W");
    const Matrix& Pb = find("proj.b");
    if (net.readout() == Readout::FinalStep) input = input.col(T - 1).eval();
    Matrix pre = PW * input;
    pre.colwise() += Pb.col(0);
    return activate(pre, net.output_activation());
}

}  // namespace

TEST(Activations, Values) {
    Matrix x(1, 3);
    x << -1.0, 0.0, 2.0;
    EXPECT_EQ(activate(x, Activation::Relu), (Matrix(1, 3) << 0.0, 0.0, 2.0).finished());
    EXPECT_EQ(activate(x, Activation::Identity), x);
    EXPECT_DOUBLE_EQ(activate(x, Activation::Sigmoid)(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(activate(x, Activation::Tanh)(0, 2), std::tanh(2.0));
    for (auto a : {Activation::Identity, Activation::Sigmoid, Activation::Tanh, Activation::Relu}) {
        EXPECT_EQ(activation_from_string(to_string(a)), a);
    }
}

TEST(Lstm, HandTracedSingleCell) {
    Rng rng(0);
    auto net = LstmStack::create(1, 1, 1, 1, Activation::Identity, Readout::EveryStep, rng);
    *param(net, "layer0.W") = (Matrix(4, 1) << 0.5, -0.3, 0.8, 1.2).finished();
    *param(net, "layer0.U") = (Matrix(4, 1) << 0.1, 0.2, -0.4, 0.6).finished();
    *param(net, "layer0.b") = (Matrix(4, 1) << 0.0, 1.0, -0.2, 0.1).finished();
    *param(net, "proj.W") = Matrix::Constant(1, 1, 2.0);
    *param(net, "proj.b") = Matrix::Constant(1, 1, -0.5);

    const Matrix seq = (Matrix(1, 2) << 1.0, -0.5).finished();
    LstmTrace trace;
    const Matrix out = net.forward(seq, &trace);
    EXPECT_NEAR(trace.layers[0].cell(0, 0), 0.5363876214273099, 1e-12);
    EXPECT_NEAR(trace.layers[0].hidden(0, 0), 0.3165321414304577, 1e-12);
    EXPECT_NEAR(trace.layers[0].cell(0, 1), 0.2795760976553192, 1e-12);
    EXPECT_NEAR(trace.layers[0].hidden(0, 1), 0.08882236896096941, 1e-12);
    EXPECT_NEAR(out(0, 0), 0.13306428286091543, 1e-12);
    EXPECT_NEAR(out(0, 1), -0.3223552620780612, 1e-12);
}

TEST(Lstm, MatchesScalarReference) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const std::size_t layers = 1 + seed % 3;
        const auto readout = seed % 2 ? Readout::FinalStep : Readout::EveryStep;
        const auto act = seed % 2 ? Activation::Sigmoid : Activation::Tanh;
        auto net = LstmStack::create(3, 5, layers, 2, act, readout, rng);
        const Matrix seq = rng.gaussian_matrix(3, 7);
        const Matrix expected = reference_lstm(net, seq);
        const Matrix got = net.forward(seq);
        ASSERT_EQ(got.rows(), expected.rows());
        ASSERT_EQ(got.cols(), expected.cols());
        EXPECT_LT((got - expected).cwiseAbs().maxCoeff(), 1e-12) << "seed " << seed;
    }
}

TEST(Lstm, InitRangeAndForgetBias) {
    Rng rng(3);
    const auto net = LstmStack::create(2, 16, 2, 3, Activation::Sigmoid, Readout::EveryStep, rng);
    const double bound = 1.0 / std::sqrt(16.0);
    for (const auto& [name, p] : net.named_parameters()) {
        if (name.ends_with(".b") && name.starts_with("layer")) {
            EXPECT_EQ(p->middleRows(16, 16), Matrix::Ones(16, 1)) << name;
            EXPECT_LE(p->topRows(16).cwiseAbs().maxCoeff(), bound);
        } else {
            EXPECT_LE(p->cwiseAbs().maxCoeff(), bound) << name;
        }
    }
    EXPECT_EQ(net.parameter_count(), (4 * 16 * 2 + 4 * 16 * 16 + 4 * 16) + (4 * 16 * 16 + 4 * 16 * 16 + 4 * 16) +
                                         (3 * 16 + 3));
}

TEST(Lstm, ZeroParametersGiveSigmoidOfBias) {
    auto G = LstmStack::zeros(2, 4, 1, 3, Activation::Sigmoid, Readout::EveryStep);
    Rng rng(1);
    const auto out = generator_forward(G, draw_latent(rng, 2, 5));
    EXPECT_EQ(out.values, Matrix::Constant(3, 5, 0.5));

    *param(G, "proj.b") = (Matrix(3, 1) << 1.0, -2.0, 0.0).finished();
    const auto shifted = generator_forward(G, draw_latent(rng, 2, 5));
    EXPECT_DOUBLE_EQ(shifted.values(0, 4), sigmoid(1.0));
    EXPECT_DOUBLE_EQ(shifted.values(1, 0), sigmoid(-2.0));

    const auto D = LstmStack::zeros(3, 4, 2, 1, Activation::Sigmoid, Readout::FinalStep);
    EXPECT_EQ(discriminator_forward(D, {rng.gaussian_matrix(3, 6), 0}), 0.5);
}

TEST(Lstm, GeneratorIsCausal) {
    Rng rng(11);
    const auto G = LstmStack::create(3, 8, 2, 2, Activation::Sigmoid, Readout::EveryStep, rng);
    const LatentSequence z{rng.gaussian_matrix(3, 10)};
    const auto base = generator_forward(G, z);
    for (Eigen::Index t = 0; t < 10; ++t) {
        LatentSequence changed = z;
        changed.values.col(t) = rng.gaussian_matrix(3, 1);
        const auto out = generator_forward(G, changed);
        EXPECT_EQ(out.values.leftCols(t), base.values.leftCols(t)) << "t=" << t;
        EXPECT_NE(out.values.col(t), base.values.col(t));
    }
}

TEST(Lstm, OutputRangesAndShapes) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto G = LstmStack::create(4, 6, 1 + trial % 2, 3, Activation::Sigmoid, Readout::EveryStep, rng);
        const auto D = LstmStack::create(3, 6, 1 + trial % 2, 1, Activation::Sigmoid, Readout::FinalStep, rng);
        const auto T = 1 + trial;
        const auto x = generator_forward(G, draw_latent(rng, 4, static_cast<std::size_t>(T)));
        ASSERT_EQ(x.values.rows(), 3);
        ASSERT_EQ(x.values.cols(), T);
        EXPECT_GT(x.values.minCoeff(), 0.0);
        EXPECT_LT(x.values.maxCoeff(), 1.0);
        const double p = discriminator_forward(D, x);
        EXPECT_GT(p, 0.0);
        EXPECT_LT(p, 1.0);
    }
}

TEST(Lstm, ShapeErrors) {
    Rng rng(0);
    const auto G = LstmStack::create(4, 6, 1, 3, Activation::Sigmoid, Readout::EveryStep, rng);
    EXPECT_THROW(generator_forward(G, draw_latent(rng, 3, 5)), ShapeError);
    const auto D = LstmStack::create(3, 6, 1, 1, Activation::Sigmoid, Readout::FinalStep, rng);
    EXPECT_THROW(discriminator_forward(D, {Matrix::Zero(2, 5), 0}), ShapeError);
}

TEST(FeedForward, ColumnsAreIndependent) {
    Rng rng(2);
    const auto net = FeedForwardStack::create(5, 7, 3, Activation::Tanh, Activation::Sigmoid, rng);
    const Matrix batch = rng.gaussian_matrix(5, 4);
    const Matrix out = net.forward(batch);
    for (Eigen::Index c = 0; c < 4; ++c) EXPECT_EQ(out.col(c), net.forward(batch.col(c)));
}

TEST(FeedForward, MatchesManualComposition) {
    Rng rng(4);
    const auto net = FeedForwardStack::create(3, 4, 2, Activation::Relu, Activation::Identity, rng);
    const Matrix x = rng.gaussian_matrix(3, 1);
    Matrix a = x;
    for (const auto& layer : net.layers()) {
        Matrix pre = layer.W * a + layer.b;
        a = activate(pre, layer.activation);
    }
    EXPECT_LT((net.forward(x) - a).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(GradientCheck, LinearNetwork) {
    Rng rng(8);
    auto net = FeedForwardStack::create(4, 5, 2, Activation::Identity, Activation::Identity, rng);
    const Matrix x = rng.gaussian_matrix(4, 3);
    const Matrix target = rng.gaussian_matrix(2, 3);
    const auto probe = [&] {
        FeedForwardTrace tr;
        const Matrix y = net.forward(x, &tr);
        return LossProbe{0.5 * (y - target).squaredNorm(), tr.max_abs_preactivation};
    };
    FeedForwardTrace tr;
    const Matrix y = net.forward(x, &tr);
    auto grads = net.zeros_like();
    net.backward(tr, y - target, grads);
    const auto r = gradient_check(net.parameters(), std::as_const(grads).parameters(), probe, 1e-5);
    EXPECT_TRUE(r.reliable);
    EXPECT_EQ(r.checked, net.parameter_count());
    EXPECT_LT(r.max_relative_error, 1e-6);
}

namespace {

GradientCheckResult check_lstm(std::uint64_t seed, std::size_t hidden, std::size_t layers, Readout readout,
                               double input_scale = 1.0) {
    Rng rng(seed);
    auto net = LstmStack::create(3, hidden, layers, 2, Activation::Sigmoid, readout, rng);
    const Matrix x = rng.gaussian_matrix(3, 4) * input_scale;
    const Matrix w = rng.gaussian_matrix(2, readout == Readout::EveryStep ? 4 : 1);
    const auto probe = [&] {
        LstmTrace tr;
        const Matrix y = net.forward(x, &tr);
        return LossProbe{y.cwiseProduct(w).sum(), tr.max_abs_preactivation};
    };
    LstmTrace tr;
    static_cast<void>(net.forward(x, &tr));
    auto grads = net.zeros_like();
    net.backward(tr, w, grads);
    return gradient_check(net.parameters(), std::as_const(grads).parameters(), probe, 1e-5);
}

}  // namespace

TEST(GradientCheck, SingleLayerLstm) {
    const auto r = check_lstm(0, 8, 1, Readout::EveryStep);
    EXPECT_TRUE(r.reliable);
    EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradientCheck, RandomLstmConfigurations) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = check_lstm(100 + seed, 2 + seed % 5, 1 + seed % 2,
                                  seed % 3 == 0 ? Readout::FinalStep : Readout::EveryStep);
        ASSERT_TRUE(r.reliable) << seed;
        EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
    }
}

TEST(GradientCheck, SaturatedInputIsFlaggedUnreliable) {
    const auto r = check_lstm(1, 4, 1, Readout::EveryStep, 1e3);
    EXPECT_FALSE(r.reliable);
}

TEST(GradientCheck, InputGradient) {
    Rng rng(9);
    const auto net = LstmStack::create(2, 5, 2, 1, Activation::Sigmoid, Readout::FinalStep, rng);
    Matrix x = rng.gaussian_matrix(2, 6);
    LstmTrace tr;
    static_cast<void>(net.forward(x, &tr));
    auto grads = net.zeros_like();
    const Matrix dx = net.backward(tr, Matrix::Ones(1, 1), grads);
    const std::vector<Matrix*> params{&x};
    const std::vector<const Matrix*> analytic{&dx};
    const auto r = gradient_check(params, analytic, [&] { return LossProbe{net.forward(x)(0, 0), 0.0}; }, 1e-5);
    EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(GradientCheck, RejectsBadEpsilon) {
    Matrix p = Matrix::Zero(1, 1);
    const Matrix g = Matrix::Zero(1, 1);
    const auto probe = [] { return LossProbe{0.0, 0.0}; };
    EXPECT_THROW(gradient_check({&p}, {&g}, probe, 1e-2), InvalidArgument);
    EXPECT_THROW(gradient_check({&p}, {&g}, probe, 1e-8), InvalidArgument);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    Matrix p = (Matrix(1, 3) << 1.0, 2.0, 3.0).finished();
    const Matrix g = (Matrix(1, 3) << 0.5, -4.0, 0.0).finished();
    Adam adam(0.1);
    adam.step({&p}, {&g});
    EXPECT_NEAR(p(0, 0), 0.9, 1e-7);
    EXPECT_NEAR(p(0, 1), 2.1, 1e-7);
    EXPECT_EQ(p(0, 2), 3.0);
}

TEST(Adam, MinimizesQuadratic) {
    Matrix p = Matrix::Constant(2, 2, 5.0);
    Adam adam(0.05);
    for (int i = 0; i < 2000; ++i) {
        const Matrix g = 2.0 * p;
        adam.step({&p}, {&g});
    }
    EXPECT_LT(p.cwiseAbs().maxCoeff(), 1e-2);
}
