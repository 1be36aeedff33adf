#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "bfvae/error.hpp"
#include "bfvae/ndcore/adam.hpp"
#include "bfvae/ndcore/matrix.hpp"
#include "bfvae/ndcore/mlp.hpp"
#include "bfvae/ndcore/rng.hpp"

namespace bfvae {

/// Per-feature affine map between physical units and the network's space.
struct Standardizer {
    Vector shift;
    Vector scale;

    static Standardizer identity(std::size_t dim) { return {Vector(dim, 0.0), Vector(dim, 1.0)}; }

    /// Mean / population std per column; constant columns keep scale 1.
    static Standardizer fit(const Matrix& data) {
        require_shape(data.rows() > 0, "Standardizer::fit: empty data");
        const std::size_t n = data.rows();
        const std::size_t dim = data.cols();
        Standardizer s{Vector(dim, 0.0), Vector(dim, 1.0)};
        for (std::size_t c = 0; c < dim; ++c) {
            double mean = 0.0;
            for (std::size_t r = 0; r < n; ++r) mean += data(r, c);
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t r = 0; r < n; ++r) var += (data(r, c) - mean) * (data(r, c) - mean);
            var /= static_cast<double>(n);
            const double sd = std::sqrt(var);
            s.shift[c] = mean;
            s.scale[c] = sd > 1e-12 * (1.0 + std::abs(mean)) ? sd : 1.0;
        }
        return s;
    }

    std::size_t dim() const noexcept { return shift.size(); }

    Matrix forward(const Matrix& x) const {
        require_shape(x.cols() == dim(), "Standardizer::forward: width mismatch");
        Matrix out = x;
        for (std::size_t r = 0; r < out.rows(); ++r) {
            auto row = out.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - shift[c]) / scale[c];
        }
        return out;
    }

    Matrix inverse(const Matrix& x) const {
        require_shape(x.cols() == dim(), "Standardizer::inverse: width mismatch");
        Matrix out = x;
        for (std::size_t r = 0; r < out.rows(); ++r) {
            auto row = out.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) row[c] = row[c] * scale[c] + shift[c];
        }
        return out;
    }

    friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// Encoder and decoder weights; the unit Adam optimizes in the first stage.
struct VaeNetworks {
    MlpParams encoder;
    MlpParams decoder;

    friend bool operator==(const VaeNetworks&, const VaeNetworks&) = default;
};

inline std::vector<std::span<double>> tensors(VaeNetworks& n) {
    auto out = tensors(n.encoder);
    auto dec = tensors(n.decoder);
    out.insert(out.end(), dec.begin(), dec.end());
    return out;
}

inline std::vector<std::span<const double>> tensors(const VaeNetworks& n) {
    auto out = tensors(n.encoder);
    auto dec = tensors(n.decoder);
    out.insert(out.end(), dec.begin(), dec.end());
    return out;
}

inline VaeNetworks zeros_like(const VaeNetworks& n) {
    return {zeros_like(n.encoder), zeros_like(n.decoder)};
}

/// Gaussian-encoder VAE. The encoder's last layer emits 2d values read as
/// (mu, log sigma^2); the decoder returns the mean D(z). `beta` is the
/// decoder-noise variance and therefore weights the KL term.
struct VaeModel {
    VaeNetworks nets;
    std::size_t latent_dim = 0;
    std::size_t ambient_dim = 0;
    double beta = 1.0;
    Standardizer scaler;

    const MlpParams& encoder() const noexcept { return nets.encoder; }
    const MlpParams& decoder() const noexcept { return nets.decoder; }

    void validate() const {
        nets.encoder.validate();
        nets.decoder.validate();
        require_shape(latent_dim >= 1, "VaeModel: latent_dim must be >= 1");
        require_shape(nets.encoder.in_dim() == ambient_dim, "VaeModel: encoder in-dim != D");
        require_shape(nets.encoder.out_dim() == 2 * latent_dim, "VaeModel: encoder out-dim != 2d");
        require_shape(nets.decoder.in_dim() == latent_dim, "VaeModel: decoder in-dim != d");
        require_shape(nets.decoder.out_dim() == ambient_dim, "VaeModel: decoder out-dim != D");
        require_shape(scaler.dim() == ambient_dim && scaler.scale.size() == ambient_dim,
                      "VaeModel: standardizer dimension != D");
        if (!(beta > 0.0)) throw UsageError("VaeModel: beta must be positive");
    }

    friend bool operator==(const VaeModel&, const VaeModel&) = default;
};

struct VaeArchitecture {
    std::vector<std::size_t> hidden;  // encoder hidden widths, input side first
    Activation activation = Activation::GeLU;
    std::size_t latent_dim = 4;
};

/// Glorot-initialized VAE; the decoder mirrors the encoder's hidden widths.
inline VaeModel make_vae(std::size_t ambient_dim, const VaeArchitecture& arch, double beta, Rng& rng) {
    require_shape(ambient_dim > 0, "make_vae: ambient dimension must be positive");
    require_shape(arch.latent_dim > 0, "make_vae: latent_dim must be positive");
    std::vector<std::size_t> enc{ambient_dim};
    enc.insert(enc.end(), arch.hidden.begin(), arch.hidden.end());
    enc.push_back(2 * arch.latent_dim);
    std::vector<std::size_t> dec{arch.latent_dim};
    dec.insert(dec.end(), arch.hidden.rbegin(), arch.hidden.rend());
    dec.push_back(ambient_dim);
    VaeModel m;
    m.nets.encoder = make_mlp(enc, arch.activation, rng);
    m.nets.decoder = make_mlp(dec, arch.activation, rng);
    m.latent_dim = arch.latent_dim;
    m.ambient_dim = ambient_dim;
    m.beta = beta;
    m.scaler = Standardizer::identity(ambient_dim);
    m.validate();
    return m;
}

struct EncoderOutput {
    Vector mu;
    Vector log_var;
};

/// Batched form: rows of mu / log_var, one per input row.
struct EncoderBatch {
    Matrix mu;
    Matrix log_var;
};

inline EncoderBatch split_encoder_output(const Matrix& raw, std::size_t d) {
    require_shape(raw.cols() == 2 * d, "encoder output width != 2d");
    EncoderBatch e{Matrix(raw.rows(), d), Matrix(raw.rows(), d)};
    for (std::size_t r = 0; r < raw.rows(); ++r) {
        auto src = raw.row(r);
        std::copy_n(src.begin(), d, e.mu.row(r).begin());
        std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(d), d, e.log_var.row(r).begin());
    }
    return e;
}

/// Inputs are in the network's (standardized) space.
inline EncoderBatch encode(const VaeModel& model, const Matrix& x) {
    require_shape(x.cols() == model.ambient_dim, "encode: input width != D");
    return split_encoder_output(mlp_forward(model.encoder(), x).output, model.latent_dim);
}

inline EncoderOutput encode(const VaeModel& model, std::span<const double> x) {
    auto b = encode(model, Matrix::from_row(x));
    return {b.mu.row_vector(0), b.log_var.row_vector(0)};
}

/// z = exp(log_var / 2) * eps + mu
inline Vector reparameterize(const EncoderOutput& enc, std::span<const double> eps) {
    require_shape(enc.mu.size() == eps.size() && enc.log_var.size() == eps.size(),
                  "reparameterize: eps length != d");
    Vector z(eps.size());
    for (std::size_t j = 0; j < z.size(); ++j)
        z[j] = std::exp(0.5 * enc.log_var[j]) * eps[j] + enc.mu[j];
    return z;
}

inline Matrix reparameterize(const EncoderBatch& enc, const Matrix& eps) {
    require_shape(eps.rows() == enc.mu.rows() && eps.cols() == enc.mu.cols(),
                  "reparameterize: eps shape mismatch");
    Matrix z(eps.rows(), eps.cols());
    auto zf = z.flat();
    auto mf = enc.mu.flat();
    auto lf = enc.log_var.flat();
    auto ef = eps.flat();
    for (std::size_t i = 0; i < zf.size(); ++i) zf[i] = std::exp(0.5 * lf[i]) * ef[i] + mf[i];
    return z;
}

/// Decoder mean, in the network's space.
inline Matrix decode(const VaeModel& model, const Matrix& z) {
    require_shape(z.cols() == model.latent_dim, "decode: latent width != d");
    return mlp_forward(model.decoder(), z).output;
}

inline Vector decode(const VaeModel& model, std::span<const double> z) {
    return decode(model, Matrix::from_row(z)).row_vector(0);
}

/// KL(N(mu, diag sigma^2) || N(0, I)) = 1/2 sum(mu^2 + sigma^2 - 1 - log sigma^2).
inline double kl_std_normal(std::span<const double> mu, std::span<const double> log_var) {
    require_shape(mu.size() == log_var.size(), "kl_std_normal: length mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j)
        s += mu[j] * mu[j] + std::expm1(log_var[j]) - log_var[j];
    return 0.5 * s;
}

inline double kl_std_normal(const EncoderOutput& enc) { return kl_std_normal(enc.mu, enc.log_var); }

struct LossAndGrad {
    double loss = 0.0;
    VaeNetworks grads;
};

/// Mean over the batch of beta * KL + ||D(z) - x||^2 with z = mu + sigma * eps.
/// Optionally also returns the exact gradient w.r.t. both networks.
inline LossAndGrad lf_loss_impl(const VaeModel& model, const Matrix& x, const Matrix& eps,
                                bool with_grad) {
    require_shape(x.rows() > 0, "lf_loss: empty batch");
    require_shape(x.cols() == model.ambient_dim, "lf_loss: input width != D");
    require_shape(eps.rows() == x.rows() && eps.cols() == model.latent_dim,
                  "lf_loss: need one eps of length d per batch row");
    const std::size_t batch = x.rows();
    const std::size_t d = model.latent_dim;
    const double inv_b = 1.0 / static_cast<double>(batch);

    auto enc_f = mlp_forward(model.encoder(), x);
    const auto enc = split_encoder_output(enc_f.output, d);
    const Matrix z = reparameterize(enc, eps);
    auto dec_f = mlp_forward(model.decoder(), z);

    std::vector<double> per_row(batch);
    Matrix d_out(batch, model.ambient_dim);
    for (std::size_t r = 0; r < batch; ++r) {
        const double kl = kl_std_normal(enc.mu.row(r), enc.log_var.row(r));
        auto xh = dec_f.output.row(r);
        auto xr = x.row(r);
        auto gr = d_out.row(r);
        double rec = 0.0;
        for (std::size_t c = 0; c < xh.size(); ++c) {
            const double diff = xh[c] - xr[c];
            rec += diff * diff;
            gr[c] = 2.0 * diff * inv_b;
        }
        per_row[r] = model.beta * kl + rec;
    }
    LossAndGrad out;
    out.loss = pairwise_sum(per_row) * inv_b;
    if (!std::isfinite(out.loss)) throw NumericError("lf_loss: non-finite loss");
    if (!with_grad) return out;

    auto dec_g = mlp_backward(model.decoder(), dec_f.tape, d_out);
    Matrix d_enc(batch, 2 * d);
    for (std::size_t r = 0; r < batch; ++r) {
        auto dz = dec_g.input.row(r);
        auto mu = enc.mu.row(r);
        auto lv = enc.log_var.row(r);
        auto e = eps.row(r);
        auto g = d_enc.row(r);
        for (std::size_t j = 0; j < d; ++j) {
            const double sigma = std::exp(0.5 * lv[j]);
            g[j] = dz[j] + model.beta * mu[j] * inv_b;
            g[d + j] = dz[j] * e[j] * 0.5 * sigma + model.beta * 0.5 * std::expm1(lv[j]) * inv_b;
        }
    }
    auto enc_g = mlp_backward(model.encoder(), enc_f.tape, d_enc, false);
    out.grads.encoder = std::move(enc_g.params);
    out.grads.decoder = std::move(dec_g.params);
    return out;
}

inline double lf_loss(const VaeModel& model, const Matrix& x, const Matrix& eps) {
    return lf_loss_impl(model, x, eps, false).loss;
}

inline LossAndGrad lf_loss_and_grad(const VaeModel& model, const Matrix& x, const Matrix& eps) {
    return lf_loss_impl(model, x, eps, true);
}

struct TrainConfig {
    VaeArchitecture arch;
    double beta = 1.0;
    AdamSettings adam;
    std::size_t batch_size = 64;
    std::size_t epochs = 2000;
    bool standardize = true;

    void validate() const {
        if (!(beta > 0.0)) throw UsageError("beta must be positive");
        if (batch_size == 0) throw UsageError("batch_size must be positive");
        if (epochs == 0) throw UsageError("epochs must be positive");
        if (arch.latent_dim == 0) throw UsageError("latent_dim must be >= 1");
        if (!(adam.lr > 0.0)) throw UsageError("lr must be positive");
    }
};

/// Called after every epoch with (epoch index, epoch-mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

struct VaeTrainResult {
    VaeModel model;
    std::vector<double> epoch_loss;
};

/// Fisher-Yates order of 0..n-1 drawn from `rng`.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> u(0, i - 1);
        std::swap(idx[i - 1], idx[u(rng)]);
    }
    return idx;
}

/// Mini-batch Adam on lf_loss. Deterministic in (data, config, seed).
inline VaeTrainResult train_vae(const Matrix& data, const TrainConfig& cfg, std::uint64_t seed,
                                const EpochCallback& on_epoch = {}) {
    cfg.validate();
    if (data.rows() == 0) throw UsageError("train_vae: empty dataset");
    if (!data.all_finite()) throw NumericError("train_vae: dataset contains non-finite values");

    Rng init_rng = make_rng(seed, {stream::kInit});
    VaeTrainResult res;
    res.model = make_vae(data.cols(), cfg.arch, cfg.beta, init_rng);
    res.model.scaler = cfg.standardize ? Standardizer::fit(data) : Standardizer::identity(data.cols());
    const Matrix x = res.model.scaler.forward(data);

    Rng rng = make_rng(seed, {stream::kTrain});
    AdamState<VaeNetworks> adam(res.model.nets, cfg.adam);
    const std::size_t n = x.rows();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = shuffled_indices(n, rng);
        double total = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const std::size_t count = std::min(cfg.batch_size, n - start);
            const Matrix xb = x.gather_rows(std::span(order).subspan(start, count));
            const Matrix eps = standard_normal_matrix(rng, count, cfg.arch.latent_dim);
            LossAndGrad lg;
            try {
                lg = lf_loss_and_grad(res.model, xb, eps);
                adam_step(adam, res.model.nets, lg.grads);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index) + ")");
            }
            total += lg.loss * static_cast<double>(count);
        }
        const double mean = total / static_cast<double>(n);
        res.epoch_loss.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }
    return res;
}

/// Rows are D(z) mapped back to physical units, z ~ N(0, I).
inline Matrix sample_vae(const VaeModel& model, std::size_t count, std::uint64_t seed) {
    Rng rng = make_rng(seed, {stream::kSample});
    const Matrix z = standard_normal_matrix(rng, count, model.latent_dim);
    if (count == 0) return Matrix(0, model.ambient_dim);
    return model.scaler.inverse(decode(model, z));
}

/// Encoder mean pushed through the decoder, in physical units.
inline Matrix reconstruct_mean(const VaeModel& model, const Matrix& data) {
    const auto enc = encode(model, model.scaler.forward(data));
    return model.scaler.inverse(decode(model, enc.mu));
}

}  // namespace bfvae
