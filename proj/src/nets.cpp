#include "netgan/nets.hpp"

#include "netgan/errors.hpp"

#include <algorithm>
#include <cmath>

namespace netgan {

Matrix activate(const Matrix& pre, Activation act) {
    switch (act) {
        case Activation::Identity: return pre;
        case Activation::Sigmoid: return (1.0 + (-pre.array()).exp()).inverse().matrix();
        case Activation::Tanh: return pre.array().tanh().matrix();
        case Activation::Relu: return pre.array().max(0.0).matrix();
    }
    return pre;
}

Matrix activation_grad_from_output(const Matrix& out, Activation act) {
    switch (act) {
        case Activation::Identity: return Matrix::Ones(out.rows(), out.cols());
        case Activation::Sigmoid: return (out.array() * (1.0 - out.array())).matrix();
        case Activation::Tanh: return (1.0 - out.array().square()).matrix();
        case Activation::Relu: return (out.array() > 0.0).cast<double>().matrix();
    }
    return out;
}

const char* to_string(Activation act) {
    switch (act) {
        case Activation::Identity: return "identity";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
    }
    return "?";
}

Activation activation_from_string(const std::string& name) {
    if (name == "identity") return Activation::Identity;
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    throw ParseError("unknown activation '" + name + "'");
}

namespace {

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
    Matrix m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(-bound, bound);
    }
    return m;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---------------------------------------------------------------------------
// LstmStack

LstmStack LstmStack::zeros(std::size_t input_width, std::size_t hidden_width, std::size_t layer_count,
                           std::size_t output_width, Activation output_activation, Readout readout) {
    if (input_width == 0 || hidden_width == 0 || layer_count == 0 || output_width == 0) {
        throw InvalidArgument("LstmStack: all sizes must be positive");
    }
    LstmStack net;
    net.input_width_ = input_width;
    net.hidden_width_ = hidden_width;
    net.output_width_ = output_width;
    net.output_activation_ = output_activation;
    net.readout_ = readout;
    const auto h = static_cast<Eigen::Index>(hidden_width);
    for (std::size_t l = 0; l < layer_count; ++l) {
        const auto in = static_cast<Eigen::Index>(l == 0 ? input_width : hidden_width);
        net.layers_.push_back({Matrix::Zero(4 * h, in), Matrix::Zero(4 * h, h), Matrix::Zero(4 * h, 1)});
    }
    net.proj_W_ = Matrix::Zero(static_cast<Eigen::Index>(output_width), h);
    net.proj_b_ = Matrix::Zero(static_cast<Eigen::Index>(output_width), 1);
    return net;
}

LstmStack LstmStack::create(std::size_t input_width, std::size_t hidden_width, std::size_t layer_count,
                            std::size_t output_width, Activation output_activation, Readout readout, Rng& rng) {
    LstmStack net = zeros(input_width, hidden_width, layer_count, output_width, output_activation, readout);
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_width));
    const auto h = static_cast<Eigen::Index>(hidden_width);
    for (auto& layer : net.layers_) {
        layer.W = uniform_matrix(layer.W.rows(), layer.W.cols(), bound, rng);
        layer.U = uniform_matrix(layer.U.rows(), layer.U.cols(), bound, rng);
        layer.b = uniform_matrix(layer.b.rows(), 1, bound, rng);
        layer.b.middleRows(h, h).setConstant(1.0);
    }
    net.proj_W_ = uniform_matrix(net.proj_W_.rows(), net.proj_W_.cols(), bound, rng);
    net.proj_b_ = uniform_matrix(net.proj_b_.rows(), 1, bound, rng);
    return net;
}

LstmStack LstmStack::zeros_like() const {
    return zeros(input_width_, hidden_width_, layers_.size(), output_width_, output_activation_, readout_);
}

Matrix LstmStack::forward(const Matrix& seq, LstmTrace* trace) const {
    if (static_cast<std::size_t>(seq.rows()) != input_width_) {
        throw ShapeError("LSTM input has " + std::to_string(seq.rows()) + " rows, expected " +
                         std::to_string(input_width_));
    }
    if (seq.cols() < 1) throw ShapeError("LSTM input has no time steps");
    const Eigen::Index T = seq.cols();
    const auto h = static_cast<Eigen::Index>(hidden_width_);
    double max_pre = 0.0;

    if (trace) trace->layers.assign(layers_.size(), {});
    Matrix input = seq;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        Matrix pre_in = layer.W * input;
        pre_in.colwise() += layer.b.col(0);
        Matrix gates(4 * h, T);
        Matrix cell(h, T);
        Matrix hidden(h, T);
        Vector h_prev = Vector::Zero(h);
        Vector c_prev = Vector::Zero(h);
        for (Eigen::Index t = 0; t < T; ++t) {
            Vector a = pre_in.col(t) + layer.U * h_prev;
            max_pre = std::max(max_pre, a.cwiseAbs().maxCoeff());
            for (Eigen::Index k = 0; k < 3 * h; ++k) gates(k, t) = sigmoid(a(k));
            gates.col(t).tail(h) = a.tail(h).array().tanh();
            const auto i = gates.col(t).segment(0, h).array();
            const auto f = gates.col(t).segment(h, h).array();
            const auto o = gates.col(t).segment(2 * h, h).array();
            const auto g = gates.col(t).segment(3 * h, h).array();
            c_prev = (f * c_prev.array() + i * g).matrix();
            h_prev = (o * c_prev.array().tanh()).matrix();
            cell.col(t) = c_prev;
            hidden.col(t) = h_prev;
        }
        if (trace) {
            trace->layers[l] = {std::move(input), std::move(gates), std::move(cell), hidden};
        }
        input = std::move(hidden);
    }

    Matrix pre_out;
    if (readout_ == Readout::EveryStep) {
        pre_out = proj_W_ * input;
        pre_out.colwise() += proj_b_.col(0);
    } else {
        pre_out = proj_W_ * input.col(T - 1) + proj_b_;
    }
    max_pre = std::max(max_pre, pre_out.cwiseAbs().maxCoeff());
    Matrix out = activate(pre_out, output_activation_);
    if (trace) {
        trace->output = out;
        trace->max_abs_preactivation = max_pre;
    }
    return out;
}

Matrix LstmStack::backward(const LstmTrace& trace, const Matrix& d_output, LstmStack& grads) const {
    const auto h = static_cast<Eigen::Index>(hidden_width_);
    const Eigen::Index T = trace.layers.back().hidden.cols();
    if (d_output.rows() != trace.output.rows() || d_output.cols() != trace.output.cols()) {
        throw ShapeError("LSTM backward: output gradient shape mismatch");
    }

    const Matrix dz = d_output.cwiseProduct(activation_grad_from_output(trace.output, output_activation_));
    const Matrix& top = trace.layers.back().hidden;
    Matrix d_hidden = Matrix::Zero(h, T);
    if (readout_ == Readout::EveryStep) {
        grads.proj_W_.noalias() += dz * top.transpose();
        grads.proj_b_ += dz.rowwise().sum();
        d_hidden.noalias() = proj_W_.transpose() * dz;
    } else {
        grads.proj_W_.noalias() += dz * top.col(T - 1).transpose();
        grads.proj_b_ += dz;
        d_hidden.col(T - 1) = proj_W_.transpose() * dz;
    }

    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& layer = layers_[l];
        const auto& lt = trace.layers[l];
        Matrix d_pre(4 * h, T);
        Vector dh_next = Vector::Zero(h);
        Vector dc_next = Vector::Zero(h);
        for (Eigen::Index t = T - 1; t >= 0; --t) {
            const auto i = lt.gates.col(t).segment(0, h).array();
            const auto f = lt.gates.col(t).segment(h, h).array();
            const auto o = lt.gates.col(t).segment(2 * h, h).array();
            const auto g = lt.gates.col(t).segment(3 * h, h).array();
            const Eigen::ArrayXd c_prev = t > 0 ? Eigen::ArrayXd(lt.cell.col(t - 1).array()) : Eigen::ArrayXd::Zero(h);
            const Eigen::ArrayXd tc = lt.cell.col(t).array().tanh();

            const Eigen::ArrayXd dh = d_hidden.col(t).array() + dh_next.array();
            const Eigen::ArrayXd dc = dc_next.array() + dh * o * (1.0 - tc.square());
            d_pre.col(t).segment(0, h) = dc * g * i * (1.0 - i);
            d_pre.col(t).segment(h, h) = dc * c_prev * f * (1.0 - f);
            d_pre.col(t).segment(2 * h, h) = dh * tc * o * (1.0 - o);
            d_pre.col(t).segment(3 * h, h) = dc * i * (1.0 - g.square());

            dh_next.noalias() = layer.U.transpose() * d_pre.col(t);
            dc_next = (dc * f).matrix();
        }
        auto& gl = grads.layers_[l];
        gl.W.noalias() += d_pre * lt.input.transpose();
        if (T > 1) gl.U.noalias() += d_pre.rightCols(T - 1) * lt.hidden.leftCols(T - 1).transpose();
        gl.b += d_pre.rowwise().sum();
        d_hidden.noalias() = layer.W.transpose() * d_pre;
    }
    return d_hidden;
}

std::vector<std::pair<std::string, Matrix*>> LstmStack::named_parameters() {
    std::vector<std::pair<std::string, Matrix*>> out;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto p = "layer" + std::to_string(l) + ".";
        out.emplace_back(p + "W", &layers_[l].W);
        out.emplace_back(p + "U", &layers_[l].U);
        out.emplace_back(p + "b", &layers_[l].b);
    }
    out.emplace_back("proj.W", &proj_W_);
    out.emplace_back("proj.b", &proj_b_);
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> LstmStack::named_parameters() const {
    std::vector<std::pair<std::string, const Matrix*>> out;
    for (auto& [name, ptr] : const_cast<LstmStack*>(this)->named_parameters()) out.emplace_back(name, ptr);
    return out;
}

std::vector<Matrix*> LstmStack::parameters() {
    std::vector<Matrix*> out;
    for (auto& [name, ptr] : named_parameters()) out.push_back(ptr);
    return out;
}

std::vector<const Matrix*> LstmStack::parameters() const {
    std::vector<const Matrix*> out;
    for (auto& [name, ptr] : named_parameters()) out.push_back(ptr);
    return out;
}

std::size_t LstmStack::parameter_count() const {
    std::size_t count = 0;
    for (const auto* p : parameters()) count += static_cast<std::size_t>(p->size());
    return count;
}

bool LstmStack::operator==(const LstmStack& other) const {
    if (input_width_ != other.input_width_ || hidden_width_ != other.hidden_width_ ||
        output_width_ != other.output_width_ || output_activation_ != other.output_activation_ ||
        readout_ != other.readout_ || layers_.size() != other.layers_.size()) {
        return false;
    }
    const auto a = parameters();
    const auto b = other.parameters();
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (*a[k] != *b[k]) return false;
    }
    return true;
}

WindowMatrix generator_forward(const LstmStack& G, const LatentSequence& z) {
    if (static_cast<std::size_t>(z.values.rows()) != G.input_width()) {
        throw ShapeError("latent width " + std::to_string(z.values.rows()) + " does not match generator input width " +
                         std::to_string(G.input_width()));
    }
    return {G.forward(z.values), 0};
}

double discriminator_forward(const LstmStack& D, const WindowMatrix& x) {
    if (static_cast<std::size_t>(x.values.rows()) != D.input_width()) {
        throw ShapeError("window has " + std::to_string(x.values.rows()) + " series, discriminator expects " +
                         std::to_string(D.input_width()));
    }
    return D.forward(x.values)(0, 0);
}

// ---------------------------------------------------------------------------
// FeedForwardStack

FeedForwardStack FeedForwardStack::zeros(std::size_t input_width, std::size_t hidden_width, std::size_t output_width,
                                         Activation hidden_activation, Activation output_activation) {
    if (input_width == 0 || hidden_width == 0 || output_width == 0) {
        throw InvalidArgument("FeedForwardStack: all sizes must be positive");
    }
    const auto in = static_cast<Eigen::Index>(input_width);
    const auto hid = static_cast<Eigen::Index>(hidden_width);
    const auto out = static_cast<Eigen::Index>(output_width);
    FeedForwardStack net;
    net.layers_[0] = {Matrix::Zero(hid, in), Matrix::Zero(hid, 1), hidden_activation};
    net.layers_[1] = {Matrix::Zero(hid, hid), Matrix::Zero(hid, 1), hidden_activation};
    net.layers_[2] = {Matrix::Zero(out, hid), Matrix::Zero(out, 1), output_activation};
    return net;
}

FeedForwardStack FeedForwardStack::create(std::size_t input_width, std::size_t hidden_width, std::size_t output_width,
                                          Activation hidden_activation, Activation output_activation, Rng& rng) {
    auto net = zeros(input_width, hidden_width, output_width, hidden_activation, output_activation);
    for (auto& layer : net.layers_) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.W.cols()));
        layer.W = uniform_matrix(layer.W.rows(), layer.W.cols(), bound, rng);
        layer.b = uniform_matrix(layer.b.rows(), 1, bound, rng);
    }
    return net;
}

FeedForwardStack FeedForwardStack::zeros_like() const {
    return zeros(input_width(), hidden_width(), output_width(), layers_[0].activation, layers_[2].activation);
}

Matrix FeedForwardStack::forward(const Matrix& input, FeedForwardTrace* trace) const {
    if (input.rows() != layers_[0].W.cols()) {
        throw ShapeError("feed-forward input has " + std::to_string(input.rows()) + " rows, expected " +
                         std::to_string(layers_[0].W.cols()));
    }
    double max_pre = 0.0;
    Matrix x = input;
    if (trace) trace->activations[0] = input;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        Matrix pre = layers_[k].W * x;
        pre.colwise() += layers_[k].b.col(0);
        if (pre.size() > 0) max_pre = std::max(max_pre, pre.cwiseAbs().maxCoeff());
        x = activate(pre, layers_[k].activation);
        if (trace) trace->activations[k + 1] = x;
    }
    if (trace) trace->max_abs_preactivation = max_pre;
    return x;
}

Matrix FeedForwardStack::backward(const FeedForwardTrace& trace, const Matrix& d_output,
                                  FeedForwardStack& grads) const {
    Matrix d = d_output;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        const Matrix dz = d.cwiseProduct(activation_grad_from_output(trace.activations[k + 1], layers_[k].activation));
        grads.layers_[k].W.noalias() += dz * trace.activations[k].transpose();
        grads.layers_[k].b += dz.rowwise().sum();
        d.noalias() = layers_[k].W.transpose() * dz;
    }
    return d;
}

std::vector<std::pair<std::string, Matrix*>> FeedForwardStack::named_parameters() {
    std::vector<std::pair<std::string, Matrix*>> out;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        out.emplace_back("dense" + std::to_string(k) + ".W", &layers_[k].W);
        out.emplace_back("dense" + std::to_string(k) + ".b", &layers_[k].b);
    }
    return out;
}

std::vector<std::pair<std::string, const Matrix*>> FeedForwardStack::named_parameters() const {
    std::vector<std::pair<std::string, const Matrix*>> out;
    for (auto& [name, ptr] : const_cast<FeedForwardStack*>(this)->named_parameters()) out.emplace_back(name, ptr);
    return out;
}

std::vector<Matrix*> FeedForwardStack::parameters() {
    std::vector<Matrix*> out;
    for (auto& [name, ptr] : named_parameters()) out.push_back(ptr);
    return out;
}

std::vector<const Matrix*> FeedForwardStack::parameters() const {
    std::vector<const Matrix*> out;
    for (auto& [name, ptr] : named_parameters()) out.push_back(ptr);
    return out;
}

std::size_t FeedForwardStack::parameter_count() const {
    std::size_t count = 0;
    for (const auto* p : parameters()) count += static_cast<std::size_t>(p->size());
    return count;
}

bool FeedForwardStack::operator==(const FeedForwardStack& other) const {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const auto& a = layers_[k];
        const auto& b = other.layers_[k];
        if (a.activation != b.activation || a.W.rows() != b.W.rows() || a.W.cols() != b.W.cols() || a.W != b.W ||
            a.b != b.b) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Adam

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Adam::step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads) {
    if (params.size() != grads.size()) throw ShapeError("Adam: parameter/gradient count mismatch");
    if (m_.empty()) {
        for (const auto* p : params) {
            m_.push_back(Matrix::Zero(p->rows(), p->cols()));
            v_.push_back(Matrix::Zero(p->rows(), p->cols()));
        }
    }
    if (m_.size() != params.size()) throw ShapeError("Adam: parameter list changed between steps");
    ++step_count_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * *grads[k];
        v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * grads[k]->cwiseAbs2();
        params[k]->array() -= lr_ * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps_);
    }
}

// ---------------------------------------------------------------------------

GradientCheckResult gradient_check(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& analytic,
                                   const std::function<LossProbe()>& loss, double epsilon) {
    if (!(epsilon >= 1e-6 && epsilon <= 1e-3)) throw InvalidArgument("gradient_check: epsilon must lie in [1e-6, 1e-3]");
    if (params.size() != analytic.size()) throw ShapeError("gradient_check: parameter/gradient count mismatch");

    const auto evaluate = [&loss]() {
        const auto probe = loss();
        if (!std::isfinite(probe.loss)) throw TrainingError("gradient_check: non-finite loss");
        return probe;
    };

    GradientCheckResult result;
    result.reliable = evaluate().max_abs_preactivation <= kSaturationBound;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Matrix& p = *params[k];
        const Matrix& a = *analytic[k];
        if (a.rows() != p.rows() || a.cols() != p.cols()) throw ShapeError("gradient_check: gradient shape mismatch");
        for (Eigen::Index idx = 0; idx < p.size(); ++idx) {
            const double saved = p(idx);
            p(idx) = saved + epsilon;
            const auto plus = evaluate();
            p(idx) = saved - epsilon;
            const auto minus = evaluate();
            p(idx) = saved;
            if (plus.max_abs_preactivation > kSaturationBound || minus.max_abs_preactivation > kSaturationBound) {
                result.reliable = false;
            }
            const double numeric = (plus.loss - minus.loss) / (2.0 * epsilon);
            const double denom = std::max({std::abs(a(idx)), std::abs(numeric), 1e-6});
            result.max_relative_error = std::max(result.max_relative_error, std::abs(a(idx) - numeric) / denom);
            ++result.checked;
        }
    }
    return result;
}

}  // namespace netgan
