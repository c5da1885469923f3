#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace llc {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;
using ConstRowMatrixRef = Eigen::Ref<const RowMatrix>;

enum class ModelKind { dln, relu_mlp };
enum class Task { regression, classification };

inline std::string to_string(ModelKind k) { return k == ModelKind::dln ? "dln" : "mlp"; }
inline std::string to_string(Task t) { return t == Task::regression ? "regression" : "classification"; }

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "dln") return ModelKind::dln;
    if (s == "mlp" || s == "relu-mlp" || s == "relu_mlp") return ModelKind::relu_mlp;
    throw std::invalid_argument("unknown model kind: " + s);
}

inline Task parse_task(const std::string& s) {
    if (s == "regression") return Task::regression;
    if (s == "classification") return Task::classification;
    throw std::invalid_argument("unknown task: " + s);
}

/// Architecture of a fully connected network with widths H_0..H_M.
///
/// Parameters are laid out layer by layer: W_1 (H_1 x H_0, row-major), then
/// b_1 (H_1) when biased, then W_2, b_2, ... The DLN is the bias-free,
/// activation-free case; the MLP applies ReLU after every layer but the last.
struct ModelSpec {
    ModelKind kind = ModelKind::dln;
    std::vector<std::size_t> widths;
    bool has_bias = false;
    double noise_variance = 1.0;
    Task task = Task::regression;

    static ModelSpec dln(std::vector<std::size_t> widths) {
        ModelSpec s{ModelKind::dln, std::move(widths), false, 1.0, Task::regression};
        s.validate();
        return s;
    }

    static ModelSpec mlp(std::vector<std::size_t> widths, Task task = Task::regression) {
        ModelSpec s{ModelKind::relu_mlp, std::move(widths), true, 1.0, task};
        s.validate();
        return s;
    }

    void validate() const {
        if (widths.size() < 2) throw std::invalid_argument("ModelSpec: need at least one layer");
        for (auto h : widths)
            if (h == 0) throw std::invalid_argument("ModelSpec: widths must be positive");
        if (!(noise_variance > 0.0)) throw std::invalid_argument("ModelSpec: noise variance must be positive");
        if (task == Task::classification && widths.back() < 2)
            throw std::invalid_argument("ModelSpec: classification needs >= 2 output classes");
    }

    std::size_t layer_count() const noexcept { return widths.size() - 1; }
    std::size_t input_dim() const noexcept { return widths.front(); }
    std::size_t output_dim() const noexcept { return widths.back(); }
    /// Columns of the target matrix: H_M for regression, one class index for classification.
    std::size_t target_dim() const noexcept { return task == Task::regression ? output_dim() : 1; }

    /// Offset of W_{layer+1} in the flat vector (layer is 0-based).
    std::size_t weight_offset(std::size_t layer) const {
        std::size_t off = 0;
        for (std::size_t j = 0; j < layer; ++j) off += layer_param_count(j);
        return off;
    }
    std::size_t bias_offset(std::size_t layer) const {
        return weight_offset(layer) + widths[layer + 1] * widths[layer];
    }
    std::size_t layer_param_count(std::size_t layer) const {
        return widths[layer + 1] * widths[layer] + (has_bias ? widths[layer + 1] : 0);
    }
    std::size_t param_count() const { return weight_offset(layer_count()); }

    /// Loss at a perfect fit: the Gaussian normalising constant for regression, 0 otherwise.
    double loss_floor() const {
        if (task != Task::regression) return 0.0;
        return 0.5 * static_cast<double>(output_dim()) * std::log(2.0 * std::numbers::pi * noise_variance);
    }

    bool operator==(const ModelSpec&) const = default;
};

inline void check_params(const ModelSpec& spec, std::span<const double> w) {
    if (w.size() != spec.param_count())
        throw std::invalid_argument("parameter vector length " + std::to_string(w.size()) + " does not match model (" +
                                    std::to_string(spec.param_count()) + ")");
}

inline ConstRowMatrixMap layer_weight(const ModelSpec& spec, std::span<const double> w, std::size_t layer) {
    return {w.data() + spec.weight_offset(layer), static_cast<Eigen::Index>(spec.widths[layer + 1]),
            static_cast<Eigen::Index>(spec.widths[layer])};
}

inline RowMatrixMap layer_weight(const ModelSpec& spec, std::span<double> w, std::size_t layer) {
    return {w.data() + spec.weight_offset(layer), static_cast<Eigen::Index>(spec.widths[layer + 1]),
            static_cast<Eigen::Index>(spec.widths[layer])};
}

inline Eigen::Map<const Eigen::RowVectorXd> layer_bias(const ModelSpec& spec, std::span<const double> w, std::size_t layer) {
    return {w.data() + spec.bias_offset(layer), static_cast<Eigen::Index>(spec.widths[layer + 1])};
}

/// Reusable scratch space for batched forward/backward passes. One per worker.
class Evaluator {
public:
    explicit Evaluator(ModelSpec spec) : spec_(std::move(spec)) {
        spec_.validate();
        acts_.resize(spec_.layer_count());
    }

    const ModelSpec& spec() const noexcept { return spec_; }

    /// Network outputs for each input row.
    RowMatrix forward(std::span<const double> w, const ConstRowMatrixRef& inputs) {
        check_params(spec_, w);
        check_inputs(inputs);
        run_forward(w, inputs);
        return acts_.back();
    }

    /// Mean negative log-likelihood over the rows of the batch.
    double loss(std::span<const double> w, const ConstRowMatrixRef& inputs, const ConstRowMatrixRef& targets) {
        check_batch(w, inputs, targets);
        run_forward(w, inputs);
        return output_loss(targets, false);
    }

    /// Mean negative log-likelihood and its exact gradient, written to `grad`.
    double loss_grad(std::span<const double> w, const ConstRowMatrixRef& inputs, const ConstRowMatrixRef& targets,
                     std::span<double> grad) {
        check_batch(w, inputs, targets);
        if (grad.size() != w.size()) throw std::invalid_argument("gradient buffer has wrong length");
        run_forward(w, inputs);
        const double value = output_loss(targets, true);
        run_backward(w, inputs, grad);
        return value;
    }

    /// Full-data loss evaluated in row chunks so memory stays bounded.
    double chunked_loss(std::span<const double> w, const ConstRowMatrixRef& inputs, const ConstRowMatrixRef& targets,
                        Eigen::Index chunk = 8192) {
        check_batch(w, inputs, targets);
        const Eigen::Index n = inputs.rows();
        double total = 0.0;
        for (Eigen::Index s = 0; s < n; s += chunk) {
            const Eigen::Index len = std::min(chunk, n - s);
            run_forward(w, inputs.middleRows(s, len));
            total += output_loss(targets.middleRows(s, len), false) * static_cast<double>(len);
        }
        return total / static_cast<double>(n);
    }

    /// Chunked full-data loss and gradient.
    double chunked_loss_grad(std::span<const double> w, const ConstRowMatrixRef& inputs, const ConstRowMatrixRef& targets,
                             std::span<double> grad, Eigen::Index chunk = 8192) {
        check_batch(w, inputs, targets);
        const Eigen::Index n = inputs.rows();
        if (n <= chunk) return loss_grad(w, inputs, targets, grad);
        std::vector<double> part(grad.size());
        std::fill(grad.begin(), grad.end(), 0.0);
        double total = 0.0;
        for (Eigen::Index s = 0; s < n; s += chunk) {
            const Eigen::Index len = std::min(chunk, n - s);
            const double weight = static_cast<double>(len) / static_cast<double>(n);
            total += weight * loss_grad(w, inputs.middleRows(s, len), targets.middleRows(s, len), part);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += weight * part[i];
        }
        return total;
    }

private:
    void check_inputs(const ConstRowMatrixRef& inputs) const {
        if (static_cast<std::size_t>(inputs.cols()) != spec_.input_dim())
            throw std::invalid_argument("input width does not match model");
    }

    void check_batch(std::span<const double> w, const ConstRowMatrixRef& inputs, const ConstRowMatrixRef& targets) const {
        check_params(spec_, w);
        check_inputs(inputs);
        if (inputs.rows() == 0) throw std::invalid_argument("empty batch");
        if (targets.rows() != inputs.rows() || static_cast<std::size_t>(targets.cols()) != spec_.target_dim())
            throw std::invalid_argument("target shape does not match inputs/model");
    }

    bool relu() const noexcept { return spec_.kind == ModelKind::relu_mlp; }

    void run_forward(std::span<const double> w, const ConstRowMatrixRef& inputs) {
        const std::size_t layers = spec_.layer_count();
        for (std::size_t j = 0; j < layers; ++j) {
            const auto W = layer_weight(spec_, w, j);
            RowMatrix& out = acts_[j];
            if (j == 0)
                out.noalias() = inputs * W.transpose();
            else
                out.noalias() = acts_[j - 1] * W.transpose();
            if (spec_.has_bias) out.rowwise() += layer_bias(spec_, w, j);
            // Post-activation is stored; ReLU'(z) > 0 iff the stored value is > 0.
            if (relu() && j + 1 < layers) out = out.cwiseMax(0.0);
        }
    }

    double output_loss(const ConstRowMatrixRef& targets, bool need_delta) {
        const RowMatrix& out = acts_.back();
        const double rows = static_cast<double>(out.rows());
        if (spec_.task == Task::regression) {
            const double s2 = spec_.noise_variance;
            const double constant = spec_.loss_floor();
            delta_.noalias() = out - targets;
            const double value = delta_.squaredNorm() / (2.0 * s2 * rows) + constant;
            if (need_delta) delta_ /= (s2 * rows);
            return value;
        }
        // Softmax cross-entropy; targets hold class indices.
        delta_.resize(out.rows(), out.cols());
        double total = 0.0;
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            const auto label = static_cast<Eigen::Index>(targets(i, 0));
            if (label < 0 || label >= out.cols()) throw std::invalid_argument("class index out of range");
            const double mx = out.row(i).maxCoeff();
            double z = 0.0;
            for (Eigen::Index k = 0; k < out.cols(); ++k) {
                delta_(i, k) = std::exp(out(i, k) - mx);
                z += delta_(i, k);
            }
            total += std::log(z) + mx - out(i, label);
            if (need_delta) {
                delta_.row(i) /= z;
                delta_(i, label) -= 1.0;
            }
        }
        if (need_delta) delta_ /= rows;
        return total / rows;
    }

    void run_backward(std::span<const double> w, const ConstRowMatrixRef& inputs, std::span<double> grad) {
        for (std::size_t j = spec_.layer_count(); j-- > 0;) {
            auto gW = layer_weight(spec_, grad, j);
            if (j == 0)
                gW.noalias() = delta_.transpose() * inputs;
            else
                gW.noalias() = delta_.transpose() * acts_[j - 1];
            if (spec_.has_bias) {
                Eigen::Map<Eigen::RowVectorXd> gb(grad.data() + spec_.bias_offset(j), static_cast<Eigen::Index>(spec_.widths[j + 1]));
                gb = delta_.colwise().sum();
            }
            if (j == 0) break;
            back_.noalias() = delta_ * layer_weight(spec_, w, j);
            if (relu()) back_.array() *= (acts_[j - 1].array() > 0.0).cast<double>();
            delta_.swap(back_);
        }
    }

    ModelSpec spec_;
    std::vector<RowMatrix> acts_;
    RowMatrix delta_;
    RowMatrix back_;
};

/// Output of the network for a single input vector.
inline std::vector<double> forward(const ModelSpec& spec, std::span<const double> w, std::span<const double> x) {
    if (x.size() != spec.input_dim()) throw std::invalid_argument("forward: input length does not match H_0");
    Evaluator ev(spec);
    const RowMatrix out = ev.forward(w, ConstRowMatrixMap(x.data(), 1, static_cast<Eigen::Index>(x.size())));
    return {out.data(), out.data() + out.size()};
}

inline double nll_loss(const ModelSpec& spec, std::span<const double> w, const ConstRowMatrixRef& inputs,
                       const ConstRowMatrixRef& targets) {
    Evaluator ev(spec);
    return ev.chunked_loss(w, inputs, targets);
}

inline std::vector<double> nll_grad(const ModelSpec& spec, std::span<const double> w, const ConstRowMatrixRef& inputs,
                                    const ConstRowMatrixRef& targets) {
    Evaluator ev(spec);
    std::vector<double> g(w.size());
    ev.chunked_loss_grad(w, inputs, targets, g);
    return g;
}

/// Rescaling symmetry of ReLU networks: W_l, b_l <- (W_l, b_l)/alpha and
/// W_{l+1} <- alpha * W_{l+1}, for 0-based `layer` = l. The network function
/// is unchanged.
inline std::vector<double> rescale_layers(const ModelSpec& spec, std::span<const double> w, std::size_t layer, double alpha) {
    check_params(spec, w);
    if (spec.kind != ModelKind::relu_mlp) throw std::invalid_argument("rescale_layers: requires a ReLU MLP");
    if (layer + 1 >= spec.layer_count()) throw std::invalid_argument("rescale_layers: need layers l and l+1");
    if (!(alpha > 0.0)) throw std::invalid_argument("rescale_layers: alpha must be positive");
    std::vector<double> out(w.begin(), w.end());
    const std::size_t first = spec.weight_offset(layer);
    const std::size_t first_end = spec.weight_offset(layer + 1);
    for (std::size_t i = first; i < first_end; ++i) out[i] /= alpha;
    const std::size_t second = first_end;
    const std::size_t second_end = second + spec.widths[layer + 2] * spec.widths[layer + 1];
    for (std::size_t i = second; i < second_end; ++i) out[i] *= alpha;
    return out;
}

/// Diagonal preconditioner matched to rescale_layers(spec, w, layer, alpha):
/// alpha^-2 on layer l (weights and bias), alpha^2 on W_{l+1}, 1 elsewhere.
/// Under this metric the rescaled coordinates evolve exactly as the originals.
inline std::vector<double> rescale_preconditioner(const ModelSpec& spec, std::size_t layer, double alpha) {
    if (layer + 1 >= spec.layer_count()) throw std::invalid_argument("rescale_preconditioner: need layers l and l+1");
    if (!(alpha > 0.0)) throw std::invalid_argument("rescale_preconditioner: alpha must be positive");
    std::vector<double> a(spec.param_count(), 1.0);
    const std::size_t first = spec.weight_offset(layer);
    const std::size_t first_end = spec.weight_offset(layer + 1);
    const std::size_t second_end = first_end + spec.widths[layer + 2] * spec.widths[layer + 1];
    for (std::size_t i = first; i < first_end; ++i) a[i] = 1.0 / (alpha * alpha);
    for (std::size_t i = first_end; i < second_end; ++i) a[i] = alpha * alpha;
    return a;
}

}  // namespace llc
