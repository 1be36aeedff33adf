#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "bfvae/bifi/bifi.hpp"
#include "bfvae/error.hpp"
#include "bfvae/io/binary.hpp"
#include "bfvae/vae/vae.hpp"

namespace bfvae {

// BFVC layout (little-endian):
//   "BFVC" | u16 version=1 | u8 kind (0 = VAE, 1 = BF-VAE)
//   encoder architecture: u32 layers, then per layer u32 in | u32 out | u8 activation
//   decoder architecture: same
//   standardizer: D x f64 shift, D x f64 scale
//   encoder parameters, decoder parameters: per layer W (row-major) then b, f64
//   BF-VAE only: d x f64 a, d x f64 b, f64 gamma
//   f64 beta
inline constexpr std::string_view kCheckpointMagic = "BFVC";
inline constexpr std::uint16_t kCheckpointVersion = 1;

using Checkpoint = std::variant<VaeModel, BfVaeModel>;

namespace detail {

inline void write_architecture(io::ByteWriter& w, const MlpParams& p) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(p.layers.size()));
    for (const auto& l : p.layers) {
        w.uint<std::uint32_t>(static_cast<std::uint32_t>(l.in_dim()));
        w.uint<std::uint32_t>(static_cast<std::uint32_t>(l.out_dim()));
        w.uint<std::uint8_t>(static_cast<std::uint8_t>(l.activation));
    }
}

inline MlpParams read_architecture(io::ByteReader& r) {
    const auto n = r.uint<std::uint32_t>();
    if (n == 0 || n > 1024) throw IoError(r.origin() + ": implausible layer count");
    MlpParams p;
    for (std::uint32_t k = 0; k < n; ++k) {
        const auto in = r.uint<std::uint32_t>();
        const auto out = r.uint<std::uint32_t>();
        const auto act = r.uint<std::uint8_t>();
        DenseLayer l;
        l.weights = Matrix(out, in);
        l.bias.assign(out, 0.0);
        try {
            l.activation = activation_from_tag(act);
        } catch (const ShapeError& e) {
            throw IoError(r.origin() + ": " + e.what());
        }
        p.layers.push_back(std::move(l));
    }
    return p;
}

inline void write_parameters(io::ByteWriter& w, const MlpParams& p) {
    for (const auto& l : p.layers) {
        w.f64s(l.weights.flat());
        w.f64s(l.bias);
    }
}

inline void read_parameters(io::ByteReader& r, MlpParams& p) {
    for (auto& l : p.layers) {
        r.f64s(l.weights.flat());
        r.f64s(l.bias);
    }
}

}  // namespace detail

/// Parameter bytes of one network, in checkpoint order.
inline std::vector<std::uint8_t> encode_parameters(const MlpParams& p) {
    io::ByteWriter w;
    detail::write_parameters(w, p);
    return w.bytes();
}

inline std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
    const bool bf = std::holds_alternative<BfVaeModel>(ckpt);
    const VaeModel& base = bf ? std::get<BfVaeModel>(ckpt).base : std::get<VaeModel>(ckpt);
    if (bf) std::get<BfVaeModel>(ckpt).validate();
    else base.validate();

    io::ByteWriter w;
    w.magic(kCheckpointMagic);
    w.uint<std::uint16_t>(kCheckpointVersion);
    w.uint<std::uint8_t>(bf ? 1 : 0);
    detail::write_architecture(w, base.encoder());
    detail::write_architecture(w, base.decoder());
    w.f64s(base.scaler.shift);
    w.f64s(base.scaler.scale);
    detail::write_parameters(w, base.encoder());
    detail::write_parameters(w, base.decoder());
    if (bf) {
        const auto& reg = std::get<BfVaeModel>(ckpt).reg;
        w.f64s(reg.a);
        w.f64s(reg.b);
        w.f64(reg.gamma);
    }
    w.f64(base.beta);
    return w.bytes();
}

inline Checkpoint decode_checkpoint(std::vector<std::uint8_t> bytes, const std::string& origin) {
    io::ByteReader r(std::move(bytes), origin);
    r.expect_magic(kCheckpointMagic);
    const auto version = r.uint<std::uint16_t>();
    if (version != kCheckpointVersion)
        throw IoError(origin + ": unsupported checkpoint version " + std::to_string(version));
    const auto kind = r.uint<std::uint8_t>();
    if (kind > 1) throw IoError(origin + ": invalid model kind " + std::to_string(kind));

    VaeModel m;
    m.nets.encoder = detail::read_architecture(r);
    m.nets.decoder = detail::read_architecture(r);
    m.ambient_dim = m.nets.encoder.in_dim();
    m.latent_dim = m.nets.decoder.in_dim();
    m.scaler.shift.resize(m.ambient_dim);
    m.scaler.scale.resize(m.ambient_dim);
    r.f64s(m.scaler.shift);
    r.f64s(m.scaler.scale);
    detail::read_parameters(r, m.nets.encoder);
    detail::read_parameters(r, m.nets.decoder);
    LatentAutoRegressor reg;
    if (kind == 1) {
        reg.a.resize(m.latent_dim);
        reg.b.resize(m.latent_dim);
        r.f64s(reg.a);
        r.f64s(reg.b);
        reg.gamma = r.f64();
    }
    m.beta = r.f64();
    if (!r.at_end()) throw IoError(origin + ": trailing bytes after checkpoint");
    try {
        if (kind == 0) {
            m.validate();
            return m;
        }
        BfVaeModel bf{std::move(m), std::move(reg), {}};
        bf.trainable_mask = BfVaeModel::last_layer_mask(bf.base.decoder().layers.size());
        bf.validate();
        return bf;
    } catch (const ShapeError& e) {
        throw IoError(origin + ": inconsistent checkpoint: " + e.what());
    }
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    io::write_file(path, encode_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(io::read_file(path), path.string());
}

/// HF-space samples from either model kind, in physical units.
inline Matrix generate_from(const Checkpoint& ckpt, std::size_t count, std::uint64_t seed) {
    if (const auto* bf = std::get_if<BfVaeModel>(&ckpt)) return generate_hf(*bf, count, seed);
    return sample_vae(std::get<VaeModel>(ckpt), count, seed);
}

inline std::size_t ambient_dim(const Checkpoint& ckpt) {
    if (const auto* bf = std::get_if<BfVaeModel>(&ckpt)) return bf->base.ambient_dim;
    return std::get<VaeModel>(ckpt).ambient_dim;
}

}  // namespace bfvae
