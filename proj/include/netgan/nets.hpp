#pragma once

#include "netgan/rng.hpp"
#include "netgan/types.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace netgan {

enum class Activation { Identity, Sigmoid, Tanh, Relu };

/// Applies `act` element-wise.
Matrix activate(const Matrix& pre, Activation act);
/// Derivative of `act` expressed through its output value.
Matrix activation_grad_from_output(const Matrix& out, Activation act);

const char* to_string(Activation act);
Activation activation_from_string(const std::string& name);

/// Which time steps the output projection reads.
enum class Readout {
    EveryStep,  ///< d_out x T output, one column per input step
    FinalStep,  ///< d_out x 1 output from the last hidden state only
};

/// Gates are stacked in the order input, forget, output, candidate; each block has `hidden` rows.
struct LstmLayer {
    Matrix W;  ///< 4h x in
    Matrix U;  ///< 4h x h
    Matrix b;  ///< 4h x 1
};

struct LstmLayerTrace {
    Matrix input;  ///< in x T
    Matrix gates;  ///< 4h x T, post-activation
    Matrix cell;   ///< h x T
    Matrix hidden; ///< h x T
};

/// Everything the backward pass needs from one forward pass.
struct LstmTrace {
    std::vector<LstmLayerTrace> layers;
    Matrix output;  ///< post-activation
    double max_abs_preactivation = 0.0;
};

class LstmStack {
public:
    LstmStack() = default;

    /// Uniform init in [-1/sqrt(h), 1/sqrt(h)], forget-gate bias set to +1.
    static LstmStack create(std::size_t input_width, std::size_t hidden_width, std::size_t layer_count,
                            std::size_t output_width, Activation output_activation, Readout readout, Rng& rng);
    /// Same shapes, every parameter zero.
    static LstmStack zeros(std::size_t input_width, std::size_t hidden_width, std::size_t layer_count,
                           std::size_t output_width, Activation output_activation, Readout readout);

    [[nodiscard]] LstmStack zeros_like() const;

    /// `seq` is input_width x T; hidden and cell states start at zero.
    /// Throws ShapeError when the row count differs from the input width.
    [[nodiscard]] Matrix forward(const Matrix& seq, LstmTrace* trace = nullptr) const;

    /// Accumulates parameter gradients into `grads` given dLoss/dOutput (post-activation),
    /// and returns dLoss/dInput (input_width x T).
    Matrix backward(const LstmTrace& trace, const Matrix& d_output, LstmStack& grads) const;

    [[nodiscard]] std::vector<std::pair<std::string, Matrix*>> named_parameters();
    [[nodiscard]] std::vector<std::pair<std::string, const Matrix*>> named_parameters() const;
    [[nodiscard]] std::vector<Matrix*> parameters();
    [[nodiscard]] std::vector<const Matrix*> parameters() const;
    [[nodiscard]] std::size_t parameter_count() const;

    [[nodiscard]] std::size_t input_width() const { return input_width_; }
    [[nodiscard]] std::size_t hidden_width() const { return hidden_width_; }
    [[nodiscard]] std::size_t layer_count() const { return layers_.size(); }
    [[nodiscard]] std::size_t output_width() const { return output_width_; }
    [[nodiscard]] Activation output_activation() const { return output_activation_; }
    [[nodiscard]] Readout readout() const { return readout_; }

    bool operator==(const LstmStack& other) const;

private:
    std::size_t input_width_ = 0;
    std::size_t hidden_width_ = 0;
    std::size_t output_width_ = 0;
    Activation output_activation_ = Activation::Identity;
    Readout readout_ = Readout::EveryStep;
    std::vector<LstmLayer> layers_;
    Matrix proj_W_;  ///< out x h
    Matrix proj_b_;  ///< out x 1
};

/// Batched LSTM output for a latent sequence: n x T, sigmoid range.
/// Throws ShapeError when z's width differs from the generator's input width.
WindowMatrix generator_forward(const LstmStack& G, const LatentSequence& z);

/// Scalar probability that `x` is real. Reads the final hidden state through the projection.
double discriminator_forward(const LstmStack& D, const WindowMatrix& x);

// ---------------------------------------------------------------------------

struct DenseLayer {
    Matrix W;  ///< out x in
    Matrix b;  ///< out x 1
    Activation activation = Activation::Identity;
};

struct FeedForwardTrace {
    std::array<Matrix, 4> activations;  ///< [0] is the input, [k+1] the output of layer k
    double max_abs_preactivation = 0.0;
};

/// Exactly three affine layers. Inputs and outputs are batched as columns.
class FeedForwardStack {
public:
    FeedForwardStack() = default;

    /// Widths: input -> hidden -> hidden -> output. Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    static FeedForwardStack create(std::size_t input_width, std::size_t hidden_width, std::size_t output_width,
                                   Activation hidden_activation, Activation output_activation, Rng& rng);
    static FeedForwardStack zeros(std::size_t input_width, std::size_t hidden_width, std::size_t output_width,
                                  Activation hidden_activation, Activation output_activation);
    [[nodiscard]] FeedForwardStack zeros_like() const;

    [[nodiscard]] Matrix forward(const Matrix& input, FeedForwardTrace* trace = nullptr) const;
    Matrix backward(const FeedForwardTrace& trace, const Matrix& d_output, FeedForwardStack& grads) const;

    [[nodiscard]] std::vector<std::pair<std::string, Matrix*>> named_parameters();
    [[nodiscard]] std::vector<std::pair<std::string, const Matrix*>> named_parameters() const;
    [[nodiscard]] std::vector<Matrix*> parameters();
    [[nodiscard]] std::vector<const Matrix*> parameters() const;
    [[nodiscard]] std::size_t parameter_count() const;

    [[nodiscard]] std::size_t input_width() const { return static_cast<std::size_t>(layers_[0].W.cols()); }
    [[nodiscard]] std::size_t hidden_width() const { return static_cast<std::size_t>(layers_[0].W.rows()); }
    [[nodiscard]] std::size_t output_width() const { return static_cast<std::size_t>(layers_[2].W.rows()); }
    [[nodiscard]] const std::array<DenseLayer, 3>& layers() const { return layers_; }

    bool operator==(const FeedForwardStack& other) const;

private:
    std::array<DenseLayer, 3> layers_;
};

// ---------------------------------------------------------------------------

/// First-order adaptive-moment optimizer over a fixed list of parameter matrices.
class Adam {
public:
    explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

    void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);

private:
    double lr_, beta1_, beta2_, eps_;
    long step_count_ = 0;
    std::vector<Matrix> m_, v_;
};

// ---------------------------------------------------------------------------

struct LossProbe {
    double loss = 0.0;
    double max_abs_preactivation = 0.0;
};

struct GradientCheckResult {
    double max_relative_error = 0.0;
    /// False when some pre-activation exceeded the saturation bound; the error is then not meaningful.
    bool reliable = true;
    std::size_t checked = 0;
};

inline constexpr double kSaturationBound = 30.0;

/// Compares `analytic` gradients against central finite differences of `loss` for every
/// entry of every parameter. Relative error is |a - f| / max(|a|, |f|, 1e-6).
/// Throws InvalidArgument for epsilon outside [1e-6, 1e-3] and TrainingError on a non-finite loss.
GradientCheckResult gradient_check(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& analytic,
                                   const std::function<LossProbe()>& loss, double epsilon);

}  // namespace netgan
