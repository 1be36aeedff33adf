#pragma once

#include <cstdint>
#include <exception>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "bfvae/bifi/bifi.hpp"
#include "bfvae/datagen/beam.hpp"
#include "bfvae/datagen/burgers.hpp"
#include "bfvae/datagen/resample.hpp"
#include "bfvae/error.hpp"
#include "bfvae/ndcore/matrix.hpp"
#include "bfvae/ndcore/rng.hpp"

namespace bfvae {

enum class Problem { Beam, Burgers };
enum class DatasetKind : std::uint8_t { LfOnly = 0, HfOnly = 1, Paired = 2 };

inline Problem parse_problem(std::string_view s) {
    if (s == "beam") return Problem::Beam;
    if (s == "burgers") return Problem::Burgers;
    throw UsageError("unknown problem '" + std::string(s) + "' (expected beam or burgers)");
}

inline std::string_view to_string(Problem p) noexcept { return p == Problem::Beam ? "beam" : "burgers"; }

inline DatasetKind parse_mode(std::string_view s) {
    if (s == "lf_only" || s == "lf") return DatasetKind::LfOnly;
    if (s == "hf_only" || s == "hf") return DatasetKind::HfOnly;
    if (s == "paired") return DatasetKind::Paired;
    throw UsageError("unknown mode '" + std::string(s) + "' (expected lf_only, hf_only or paired)");
}

/// Sample rows plus the per-row input draws that produced them. Paired rows
/// are [x_L | x_H], so `rows` is 2D wide for Paired and D wide otherwise.
struct QoiDataset {
    DatasetKind kind = DatasetKind::LfOnly;
    std::size_t dim = 0;
    Matrix rows;
    std::vector<Vector> inputs;  // one entry per row; empty vectors when unknown

    std::size_t count() const noexcept { return rows.rows(); }
    std::size_t row_width() const noexcept { return kind == DatasetKind::Paired ? 2 * dim : dim; }

    void validate() const {
        require_shape(rows.cols() == row_width() || rows.rows() == 0,
                      "QoiDataset: row width does not match kind and D");
        require_shape(inputs.size() == rows.rows(), "QoiDataset: input log length != row count");
    }

    bool has_lf() const noexcept { return kind != DatasetKind::HfOnly; }
    bool has_hf() const noexcept { return kind != DatasetKind::LfOnly; }

    Matrix lf() const {
        if (!has_lf()) throw UsageError("dataset holds no LF rows");
        return kind == DatasetKind::Paired ? columns(0) : rows;
    }

    Matrix hf() const {
        if (!has_hf()) throw UsageError("dataset holds no HF rows");
        return kind == DatasetKind::Paired ? columns(dim) : rows;
    }

    BiFiDataset to_pairs() const {
        if (kind != DatasetKind::Paired) throw UsageError("dataset is not paired");
        BiFiDataset b;
        b.lf = lf();
        b.hf = hf();
        b.inputs = inputs;
        return b;
    }

    friend bool operator==(const QoiDataset&, const QoiDataset&) = default;

private:
    Matrix columns(std::size_t first) const {
        Matrix out(rows.rows(), dim);
        for (std::size_t r = 0; r < rows.rows(); ++r) {
            auto src = rows.row(r);
            std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(first), dim, out.row(r).begin());
        }
        return out;
    }
};

struct GenOptions {
    beam::BeamConfig beam;
    burgers::BurgersConfig burgers;
    unsigned threads = 1;
};

/// One generated input with whichever fidelities were requested.
struct QoISample {
    Vector inputs;
    Vector lf_qoi;
    Vector hf_qoi;
};

/// LF interior solution padded with boundary zeros and interpolated onto the
/// HF interior nodes.
inline Vector burgers_lf_on_hf_grid(const burgers::BurgersConfig& cfg, std::span<const double> lf_interior) {
    require_shape(lf_interior.size() + 1 == cfg.lf.intervals, "LF field has the wrong node count");
    Vector padded(lf_interior.size() + 2, 0.0);
    std::copy(lf_interior.begin(), lf_interior.end(), padded.begin() + 1);
    return resample_linear(padded, burgers::grid_nodes(cfg.lf.intervals),
                           burgers::interior_nodes(cfg.hf.intervals));
}

/// Evaluates the models for an already drawn input vector. Burgers inputs are
/// (xi_1..xi_{M-1}, nu); beam inputs are (xi_1..xi_4).
inline QoISample evaluate_inputs(Problem problem, DatasetKind kind, std::span<const double> inputs,
                                 const GenOptions& opt) {
    QoISample s;
    s.inputs.assign(inputs.begin(), inputs.end());
    if (problem == Problem::Beam) {
        if (kind != DatasetKind::LfOnly)
            throw UsageError("beam: HF samples require an external solver; only lf_only is supported");
        require_shape(inputs.size() == 4, "beam: expected 4 inputs");
        s.lf_qoi = beam::beam_lf_displacement(opt.beam, {inputs[0], inputs[1], inputs[2], inputs[3]});
        return s;
    }
    const auto& cfg = opt.burgers;
    require_shape(inputs.size() == cfg.input_dim() + 1, "burgers: expected M inputs");
    burgers::BurgersInputs in{Vector(inputs.begin(), inputs.end() - 1), inputs.back()};
    if (kind != DatasetKind::HfOnly)
        s.lf_qoi = burgers_lf_on_hf_grid(cfg, burgers::burgers_solve(cfg, burgers::Fidelity::Low, in));
    if (kind != DatasetKind::LfOnly) s.hf_qoi = burgers::burgers_solve(cfg, burgers::Fidelity::High, in);
    return s;
}

/// The input draw for row `index`; depends only on (seed, index).
inline Vector draw_inputs(Problem problem, std::uint64_t seed, std::size_t index, const GenOptions& opt) {
    Rng rng = make_rng(seed, {stream::kData, index});
    if (problem == Problem::Beam) {
        const auto xi = beam::sample_beam_inputs(opt.beam, rng);
        return Vector(xi.begin(), xi.end());
    }
    auto in = burgers::sample_burgers_inputs(opt.burgers, rng);
    Vector v = in.xi;
    v.push_back(in.nu);
    return v;
}

inline std::size_t qoi_dim(Problem problem, const GenOptions& opt) {
    return problem == Problem::Beam ? opt.beam.points : opt.burgers.qoi_dim();
}

/// Generates `count` rows. Row i of every mode uses the same input draw, so an
/// LF-only set and a paired set with one seed share their inputs.
inline QoiDataset gen_dataset(Problem problem, DatasetKind kind, std::size_t count, std::uint64_t seed,
                              const GenOptions& opt = {}) {
    if (problem == Problem::Beam && kind != DatasetKind::LfOnly)
        throw UsageError("beam: HF samples require an external solver; only lf_only is supported");
    QoiDataset ds;
    ds.kind = kind;
    ds.dim = qoi_dim(problem, opt);
    ds.rows = Matrix(count, ds.row_width());
    ds.inputs.resize(count);
    auto fill_row = [&](std::size_t i) {
        const Vector inputs = draw_inputs(problem, seed, i, opt);
        const QoISample s = evaluate_inputs(problem, kind, inputs, opt);
        auto row = ds.rows.row(i);
        if (kind == DatasetKind::HfOnly) {
            std::copy(s.hf_qoi.begin(), s.hf_qoi.end(), row.begin());
        } else {
            std::copy(s.lf_qoi.begin(), s.lf_qoi.end(), row.begin());
            if (kind == DatasetKind::Paired)
                std::copy(s.hf_qoi.begin(), s.hf_qoi.end(), row.begin() + static_cast<std::ptrdiff_t>(ds.dim));
        }
        ds.inputs[i] = s.inputs;
    };
    const unsigned threads = std::max(1u, opt.threads);
    if (threads == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fill_row(i);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < threads; ++w)
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t i = w; i < count; i += threads) fill_row(i);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return ds;
}

}  // namespace bfvae
