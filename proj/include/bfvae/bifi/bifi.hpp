#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bfvae/error.hpp"
#include "bfvae/ndcore/adam.hpp"
#include "bfvae/ndcore/matrix.hpp"
#include "bfvae/ndcore/mlp.hpp"
#include "bfvae/ndcore/rng.hpp"
#include "bfvae/vae/vae.hpp"

namespace bfvae {

/// Elementwise affine link between LF and HF latents: z_H = a * z_L + b + gamma * eta.
struct LatentAutoRegressor {
    Vector a;
    Vector b;
    double gamma = 0.0;

    static LatentAutoRegressor identity(std::size_t d, double gamma = 0.0) {
        return {Vector(d, 1.0), Vector(d, 0.0), gamma};
    }

    std::size_t dim() const noexcept { return a.size(); }

    void validate() const {
        require_shape(a.size() == b.size(), "LatentAutoRegressor: a and b lengths differ");
        if (!(gamma >= 0.0)) throw UsageError("LatentAutoRegressor: gamma must be >= 0");
    }

    friend bool operator==(const LatentAutoRegressor&, const LatentAutoRegressor&) = default;
};

inline Vector latent_regress(const LatentAutoRegressor& reg, std::span<const double> z_lf) {
    require_shape(z_lf.size() == reg.dim(), "latent_regress: z length != d");
    Vector out(z_lf.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = reg.a[j] * z_lf[j] + reg.b[j];
    return out;
}

inline Vector sample_hf_latent(const LatentAutoRegressor& reg, std::span<const double> z_lf,
                               std::span<const double> eta) {
    require_shape(eta.size() == reg.dim(), "sample_hf_latent: eta length != d");
    Vector z = latent_regress(reg, z_lf);
    if (reg.gamma != 0.0)
        for (std::size_t j = 0; j < z.size(); ++j) z[j] += reg.gamma * eta[j];
    return z;
}

/// Row-wise batch version. `eta` may be empty when gamma == 0.
inline Matrix sample_hf_latent(const LatentAutoRegressor& reg, const Matrix& z_lf, const Matrix& eta) {
    require_shape(z_lf.cols() == reg.dim(), "sample_hf_latent: z width != d");
    const bool noisy = reg.gamma != 0.0;
    if (noisy)
        require_shape(eta.rows() == z_lf.rows() && eta.cols() == reg.dim(),
                      "sample_hf_latent: eta shape mismatch");
    Matrix z(z_lf.rows(), z_lf.cols());
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto src = z_lf.row(r);
        auto dst = z.row(r);
        for (std::size_t j = 0; j < dst.size(); ++j) {
            dst[j] = reg.a[j] * src[j] + reg.b[j];
            if (noisy) dst[j] += reg.gamma * eta(r, j);
        }
    }
    return z;
}

/// A trained LF VAE extended with the latent auto-regressor. In the second
/// training stage only (a, b) and the decoder's final layer move.
struct BfVaeModel {
    VaeModel base;
    LatentAutoRegressor reg;
    std::vector<bool> trainable_mask;  // one flag per decoder layer

    static std::vector<bool> last_layer_mask(std::size_t decoder_layers) {
        std::vector<bool> m(decoder_layers, false);
        if (!m.empty()) m.back() = true;
        return m;
    }

    void validate() const {
        base.validate();
        reg.validate();
        require_shape(reg.dim() == base.latent_dim, "BfVaeModel: regressor dim != latent dim");
        require_shape(trainable_mask == last_layer_mask(base.decoder().layers.size()),
                      "BfVaeModel: only the final decoder layer may be trainable");
    }

    friend bool operator==(const BfVaeModel&, const BfVaeModel&) = default;
};

/// Builds the stage-2 starting point: LF weights, identity regressor.
inline BfVaeModel make_bf_vae(const VaeModel& lf_model, double gamma) {
    BfVaeModel m{lf_model, LatentAutoRegressor::identity(lf_model.latent_dim, gamma),
                 BfVaeModel::last_layer_mask(lf_model.decoder().layers.size())};
    m.validate();
    return m;
}

/// The trainable subset: regressor (a, b) and the decoder's last layer.
struct BfTrainable {
    Vector a;
    Vector b;
    DenseLayer last;

    friend bool operator==(const BfTrainable&, const BfTrainable&) = default;
};

inline std::vector<std::span<double>> tensors(BfTrainable& t) {
    return {t.a, t.b, t.last.weights.flat(), t.last.bias};
}

inline std::vector<std::span<const double>> tensors(const BfTrainable& t) {
    return {t.a, t.b, t.last.weights.flat(), t.last.bias};
}

inline BfTrainable zeros_like(const BfTrainable& t) {
    BfTrainable z = t;
    std::fill(z.a.begin(), z.a.end(), 0.0);
    std::fill(z.b.begin(), z.b.end(), 0.0);
    z.last.weights.fill(0.0);
    std::fill(z.last.bias.begin(), z.last.bias.end(), 0.0);
    return z;
}

inline BfTrainable extract_trainable(const BfVaeModel& m) {
    return {m.reg.a, m.reg.b, m.base.decoder().layers.back()};
}

inline void apply_trainable(BfVaeModel& m, const BfTrainable& t) {
    m.reg.a = t.a;
    m.reg.b = t.b;
    m.base.nets.decoder.layers.back() = t.last;
}

struct HfLossAndGrad {
    double loss = 0.0;
    BfTrainable grads;
};

/// Mean over pairs of ||D(z_H) - x_H||^2 with z_L = mu + sigma * eps from the
/// frozen encoder and z_H = a * z_L + b + gamma * eta. Inputs are in the
/// network's space. `eta` may be empty when gamma == 0.
inline HfLossAndGrad hf_loss_impl(const BfVaeModel& model, const Matrix& x_lf, const Matrix& x_hf,
                                  const Matrix& eps, const Matrix& eta, bool with_grad) {
    const auto& base = model.base;
    require_shape(x_lf.rows() > 0, "hf_loss: empty batch");
    require_shape(x_lf.rows() == x_hf.rows(), "hf_loss: LF and HF batches are not row-aligned");
    require_shape(x_lf.cols() == base.ambient_dim && x_hf.cols() == base.ambient_dim,
                  "hf_loss: sample width != D");
    require_shape(eps.rows() == x_lf.rows() && eps.cols() == base.latent_dim,
                  "hf_loss: need one eps of length d per pair");
    const std::size_t batch = x_lf.rows();
    const double inv_b = 1.0 / static_cast<double>(batch);

    const auto enc = encode(base, x_lf);
    const Matrix z_lf = reparameterize(enc, eps);
    const Matrix z_hf = sample_hf_latent(model.reg, z_lf, eta);
    auto dec_f = mlp_forward(base.decoder(), z_hf);

    std::vector<double> per_row(batch);
    Matrix d_out(batch, base.ambient_dim);
    for (std::size_t r = 0; r < batch; ++r) {
        auto xh = dec_f.output.row(r);
        auto target = x_hf.row(r);
        auto g = d_out.row(r);
        double rec = 0.0;
        for (std::size_t c = 0; c < xh.size(); ++c) {
            const double diff = xh[c] - target[c];
            rec += diff * diff;
            g[c] = 2.0 * diff * inv_b;
        }
        per_row[r] = rec;
    }
    HfLossAndGrad out;
    out.loss = pairwise_sum(per_row) * inv_b;
    if (!std::isfinite(out.loss)) throw NumericError("hf_loss: non-finite loss");
    if (!with_grad) return out;

    auto dec_g = mlp_backward(base.decoder(), dec_f.tape, d_out);
    out.grads = zeros_like(extract_trainable(model));
    out.grads.last = std::move(dec_g.params.layers.back());
    for (std::size_t r = 0; r < batch; ++r) {
        auto dz = dec_g.input.row(r);
        auto zl = z_lf.row(r);
        for (std::size_t j = 0; j < dz.size(); ++j) {
            out.grads.a[j] += dz[j] * zl[j];
            out.grads.b[j] += dz[j];
        }
    }
    return out;
}

inline double hf_loss(const BfVaeModel& model, const Matrix& x_lf, const Matrix& x_hf,
                      const Matrix& eps, const Matrix& eta = {}) {
    return hf_loss_impl(model, x_lf, x_hf, eps, eta, false).loss;
}

inline HfLossAndGrad hf_loss_and_grad(const BfVaeModel& model, const Matrix& x_lf,
                                      const Matrix& x_hf, const Matrix& eps, const Matrix& eta = {}) {
    return hf_loss_impl(model, x_lf, x_hf, eps, eta, true);
}

/// Row-aligned LF/HF samples: row i of both came from the same input draw.
struct BiFiDataset {
    Matrix lf;
    Matrix hf;
    Matrix lf_only;                  // optional extra LF rows, may be empty
    std::vector<Vector> inputs;      // per-row input log, may be empty
    std::string problem;

    std::size_t pairs() const noexcept { return lf.rows(); }
    std::size_t dim() const noexcept { return lf.cols(); }

    void validate() const {
        require_shape(lf.rows() == hf.rows(), "BiFiDataset: LF and HF row counts differ");
        require_shape(lf.cols() == hf.cols(), "BiFiDataset: LF and HF widths differ");
        require_shape(lf_only.empty() || lf_only.cols() == lf.cols(),
                      "BiFiDataset: LF-only width differs");
        require_shape(inputs.empty() || inputs.size() == lf.rows(),
                      "BiFiDataset: input log length differs from row count");
    }

    /// The first `n` pairs.
    BiFiDataset head(std::size_t n) const {
        require_shape(n <= pairs(), "BiFiDataset::head: not enough pairs");
        BiFiDataset out;
        out.lf = lf.slice_rows(0, n);
        out.hf = hf.slice_rows(0, n);
        if (!inputs.empty()) out.inputs.assign(inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(n));
        out.problem = problem;
        return out;
    }
};

struct BfTrainConfig {
    double gamma = 0.0;
    AdamSettings adam;
    std::size_t batch_size = 64;
    std::size_t epochs = 1000;

    void validate() const {
        if (!(gamma >= 0.0)) throw UsageError("gamma must be >= 0");
        if (batch_size == 0) throw UsageError("batch_size must be positive");
        if (epochs == 0) throw UsageError("epochs must be positive");
        if (!(adam.lr > 0.0)) throw UsageError("lr must be positive");
    }
};

struct BfTrainResult {
    BfVaeModel model;
    std::vector<double> epoch_loss;
};

/// Second training stage: identity-initialized regressor plus the LF
/// decoder's last layer, fitted to the pairs by Adam on hf_loss. Both LF and
/// HF rows are mapped with the LF model's standardizer. With gamma > 0 the
/// noise only perturbs z_H; the loss carries no beta factor.
inline BfTrainResult train_bf(const VaeModel& lf_model, const BiFiDataset& pairs,
                              const BfTrainConfig& cfg, std::uint64_t seed,
                              const EpochCallback& on_epoch = {}) {
    cfg.validate();
    pairs.validate();
    if (pairs.pairs() == 0) throw UsageError("train_bf: no LF/HF pairs");
    require_shape(pairs.dim() == lf_model.ambient_dim,
                  "train_bf: dataset dimension " + std::to_string(pairs.dim()) +
                      " != model dimension " + std::to_string(lf_model.ambient_dim));

    BfTrainResult res{make_bf_vae(lf_model, cfg.gamma), {}};
    const Matrix x_lf = lf_model.scaler.forward(pairs.lf);
    const Matrix x_hf = lf_model.scaler.forward(pairs.hf);
    const std::size_t d = lf_model.latent_dim;

    BfTrainable trainable = extract_trainable(res.model);
    AdamState<BfTrainable> adam(trainable, cfg.adam);
    Rng rng = make_rng(seed, {stream::kTrain});
    const std::size_t n = pairs.pairs();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto order = shuffled_indices(n, rng);
        double total = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            const std::size_t count = std::min(cfg.batch_size, n - start);
            const auto idx = std::span(order).subspan(start, count);
            const Matrix bl = x_lf.gather_rows(idx);
            const Matrix bh = x_hf.gather_rows(idx);
            const Matrix eps = standard_normal_matrix(rng, count, d);
            const Matrix eta = cfg.gamma > 0.0 ? standard_normal_matrix(rng, count, d) : Matrix();
            HfLossAndGrad lg;
            try {
                lg = hf_loss_and_grad(res.model, bl, bh, eps, eta);
                adam_step(adam, trainable, lg.grads);
            } catch (const NumericError& e) {
                throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_index) + ")");
            }
            apply_trainable(res.model, trainable);
            total += lg.loss * static_cast<double>(count);
        }
        const double mean = total / static_cast<double>(n);
        res.epoch_loss.push_back(mean);
        if (on_epoch) on_epoch(epoch, mean);
    }
    return res;
}

/// HF synthesis: z_L ~ N(0, I) -> regressor (+ gamma * eta) -> decoder,
/// returned in physical units. eta is drawn only when gamma > 0, so with
/// gamma = 0 the random stream matches sample_vae for the same seed.
inline Matrix generate_hf(const BfVaeModel& model, std::size_t count, std::uint64_t seed) {
    Rng rng = make_rng(seed, {stream::kSample});
    const std::size_t d = model.base.latent_dim;
    const Matrix z_lf = standard_normal_matrix(rng, count, d);
    if (count == 0) return Matrix(0, model.base.ambient_dim);
    const Matrix eta = model.reg.gamma > 0.0 ? standard_normal_matrix(rng, count, d) : Matrix();
    const Matrix z_hf = sample_hf_latent(model.reg, z_lf, eta);
    return model.base.scaler.inverse(decode(model.base, z_hf));
}

/// The HF-only baseline: an ordinary VAE fitted to the HF rows.
inline VaeTrainResult train_hf_baseline(const Matrix& hf_rows, const TrainConfig& cfg,
                                        std::uint64_t seed, const EpochCallback& on_epoch = {}) {
    return train_vae(hf_rows, cfg, seed, on_epoch);
}

/// Lists every tensor that differs between `before` and `after` outside the
/// stage-2 trainable set. Empty means the freeze held bitwise.
inline std::vector<std::string> freeze_violations(const VaeModel& before, const BfVaeModel& after) {
    std::vector<std::string> bad;
    if (!(before.nets.encoder == after.base.nets.encoder)) bad.emplace_back("encoder");
    const auto& d0 = before.decoder().layers;
    const auto& d1 = after.base.decoder().layers;
    if (d0.size() != d1.size()) {
        bad.emplace_back("decoder depth");
        return bad;
    }
    for (std::size_t k = 0; k + 1 < d0.size(); ++k)
        if (!(d0[k] == d1[k])) bad.push_back("decoder layer " + std::to_string(k));
    if (d0.back().activation != d1.back().activation ||
        d0.back().weights.rows() != d1.back().weights.rows() ||
        d0.back().weights.cols() != d1.back().weights.cols())
        bad.emplace_back("decoder last layer shape");
    if (!(before.scaler == after.base.scaler)) bad.emplace_back("standardizer");
    if (before.beta != after.base.beta) bad.emplace_back("beta");
    return bad;
}

}  // namespace bfvae
