#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bfvae/error.hpp"
#include "bfvae/ndcore/activation.hpp"
#include "bfvae/ndcore/matrix.hpp"
#include "bfvae/ndcore/rng.hpp"

namespace bfvae {

struct DenseLayer {
    Matrix weights;  // [out x in]
    Vector bias;     // [out]
    Activation activation = Activation::Identity;

    std::size_t in_dim() const noexcept { return weights.cols(); }
    std::size_t out_dim() const noexcept { return weights.rows(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpParams {
    std::vector<DenseLayer> layers;

    std::size_t in_dim() const noexcept { return layers.empty() ? 0 : layers.front().in_dim(); }
    std::size_t out_dim() const noexcept { return layers.empty() ? 0 : layers.back().out_dim(); }
    std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weights.size() + l.bias.size();
        return n;
    }

    /// Throws unless dims chain and the last layer is linear.
    void validate() const {
        require_shape(!layers.empty(), "MlpParams: no layers");
        for (std::size_t k = 0; k < layers.size(); ++k) {
            const auto& l = layers[k];
            require_shape(l.bias.size() == l.out_dim(),
                          "MlpParams: layer " + std::to_string(k) + " bias length mismatch");
            if (k + 1 < layers.size())
                require_shape(l.out_dim() == layers[k + 1].in_dim(),
                              "MlpParams: layer " + std::to_string(k) + " out-dim " +
                                  std::to_string(l.out_dim()) + " != layer " +
                                  std::to_string(k + 1) + " in-dim " +
                                  std::to_string(layers[k + 1].in_dim()));
        }
        require_shape(layers.back().activation == Activation::Identity,
                      "MlpParams: final layer must be Identity");
    }

    friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

/// Every parameter tensor of an MLP as a flat span, in layer order (W then b).
inline std::vector<std::span<double>> tensors(MlpParams& p) {
    std::vector<std::span<double>> out;
    for (auto& l : p.layers) {
        out.push_back(l.weights.flat());
        out.push_back(l.bias);
    }
    return out;
}

inline std::vector<std::span<const double>> tensors(const MlpParams& p) {
    std::vector<std::span<const double>> out;
    for (const auto& l : p.layers) {
        out.push_back(l.weights.flat());
        out.push_back(l.bias);
    }
    return out;
}

/// Same shapes as `p`, all zeros.
inline MlpParams zeros_like(const MlpParams& p) {
    MlpParams z = p;
    for (auto& l : z.layers) {
        l.weights.fill(0.0);
        std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    return z;
}

/// Glorot-uniform weights, zero biases. `widths` lists every layer boundary,
/// input first; hidden layers get `hidden`, the last layer is Identity.
inline MlpParams make_mlp(std::span<const std::size_t> widths, Activation hidden, Rng& rng) {
    require_shape(widths.size() >= 2, "make_mlp: need at least input and output width");
    MlpParams p;
    for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
        const std::size_t in = widths[k];
        const std::size_t out = widths[k + 1];
        require_shape(in > 0 && out > 0, "make_mlp: zero width");
        DenseLayer l;
        l.weights = Matrix(out, in);
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> u(-limit, limit);
        for (double& w : l.weights.flat()) w = u(rng);
        l.bias.assign(out, 0.0);
        l.activation = (k + 2 == widths.size()) ? Activation::Identity : hidden;
        p.layers.push_back(std::move(l));
    }
    return p;
}

/// Activations cached by a forward pass; enough to rebuild exact gradients.
struct MlpTape {
    std::vector<Matrix> inputs;       // input to each layer [B x in]
    std::vector<Matrix> pre;          // pre-activation [B x out]
    std::vector<Matrix> derivatives;  // activation derivative at pre [B x out]
};

struct MlpForward {
    Matrix output;
    MlpTape tape;
};

/// Batched forward pass: each row of `input` is one sample.
inline MlpForward mlp_forward(const MlpParams& params, const Matrix& input) {
    params.validate();
    require_shape(input.cols() == params.in_dim(),
                  "mlp_forward: input width " + std::to_string(input.cols()) +
                      " != network in-dim " + std::to_string(params.in_dim()));
    MlpForward f;
    Matrix x = input;
    for (const auto& layer : params.layers) {
        Matrix pre;
        affine_rows(x, layer.weights, layer.bias, pre);
        Matrix post(pre.rows(), pre.cols());
        Matrix der(pre.rows(), pre.cols());
        auto pf = pre.flat();
        auto of = post.flat();
        auto df = der.flat();
        for (std::size_t i = 0; i < pf.size(); ++i) {
            const auto a = activate(layer.activation, pf[i]);
            of[i] = a.value;
            df[i] = a.derivative;
        }
        f.tape.inputs.push_back(std::move(x));
        f.tape.pre.push_back(std::move(pre));
        f.tape.derivatives.push_back(std::move(der));
        x = std::move(post);
    }
    if (!x.all_finite()) throw NumericError("mlp_forward: non-finite output");
    f.output = std::move(x);
    return f;
}

inline std::pair<Vector, MlpTape> mlp_forward(const MlpParams& params, std::span<const double> input) {
    auto f = mlp_forward(params, Matrix::from_row(input));
    return {f.output.row_vector(0), std::move(f.tape)};
}

struct MlpGradients {
    MlpParams params;  // same shapes as the network, summed over the batch
    Matrix input;      // d(sum_r out_r . g_r)/d input_r  [B x in]
};

/// Reverse pass for the scalar sum_r output_r . output_grad_r.
/// With `need_input_grad` false the input gradient is left empty.
inline MlpGradients mlp_backward(const MlpParams& params, const MlpTape& tape,
                                 const Matrix& output_grad, bool need_input_grad = true) {
    const std::size_t n_layers = params.layers.size();
    require_shape(tape.inputs.size() == n_layers && tape.pre.size() == n_layers &&
                      tape.derivatives.size() == n_layers,
                  "mlp_backward: tape does not match network depth");
    for (std::size_t k = 0; k < n_layers; ++k) {
        const auto& l = params.layers[k];
        require_shape(tape.inputs[k].cols() == l.in_dim() && tape.pre[k].cols() == l.out_dim() &&
                          tape.inputs[k].rows() == output_grad.rows(),
                      "mlp_backward: stale tape for layer " + std::to_string(k));
    }
    require_shape(output_grad.cols() == params.out_dim(),
                  "mlp_backward: output_grad width mismatch");
    if (!output_grad.all_finite()) throw NumericError("mlp_backward: non-finite output_grad");

    MlpGradients g;
    g.params = zeros_like(params);
    const std::size_t batch = output_grad.rows();
    Matrix upstream = output_grad;
    for (std::size_t kk = n_layers; kk-- > 0;) {
        const auto& layer = params.layers[kk];
        auto& gl = g.params.layers[kk];
        // delta = upstream * f'(pre)
        Matrix delta = std::move(upstream);
        {
            auto df = delta.flat();
            auto dd = tape.derivatives[kk].flat();
            for (std::size_t i = 0; i < df.size(); ++i) df[i] *= dd[i];
        }
        const Matrix& x = tape.inputs[kk];
        for (std::size_t r = 0; r < batch; ++r) {
            auto dr = delta.row(r);
            auto xr = x.row(r);
            for (std::size_t o = 0; o < layer.out_dim(); ++o) {
                gl.bias[o] += dr[o];
                axpy(dr[o], xr, gl.weights.row(o));
            }
        }
        if (kk == 0 && !need_input_grad) break;
        Matrix down(batch, layer.in_dim());
        for (std::size_t r = 0; r < batch; ++r) {
            auto dr = delta.row(r);
            auto out = down.row(r);
            for (std::size_t o = 0; o < layer.out_dim(); ++o) axpy(dr[o], layer.weights.row(o), out);
        }
        upstream = std::move(down);
    }
    if (need_input_grad) g.input = std::move(upstream);
    return g;
}

inline std::pair<MlpParams, Vector> mlp_backward(const MlpParams& params, const MlpTape& tape,
                                                 std::span<const double> output_grad) {
    auto g = mlp_backward(params, tape, Matrix::from_row(output_grad));
    return {std::move(g.params), g.input.row_vector(0)};
}

}  // namespace bfvae
