#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <variant>

#include "bfvae/bifi/bifi.hpp"
#include "bfvae/cli/checkpoint.hpp"
#include "bfvae/cli/config.hpp"
#include "bfvae/cli/experiment.hpp"
#include "bfvae/datagen/dataset.hpp"
#include "bfvae/datagen/dataset_io.hpp"
#include "bfvae/error.hpp"
#include "bfvae/metrics/kid.hpp"
#include "bfvae/vae/vae.hpp"

namespace bfvae::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3, kNumeric = 4 };

/// Runs `body`, mapping library exceptions onto exit codes.
inline int run_guarded(const std::function<void()>& body, std::ostream& err = std::cerr) {
    try {
        body();
        return kOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ShapeError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << "\n";
        return kIo;
    } catch (const NumericError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kFailure;
    }
}

struct GenDataArgs {
    std::string problem;
    std::string mode;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    unsigned threads = 1;
};

inline void gen_data(const GenDataArgs& a, std::ostream& out) {
    if (a.count == 0) throw UsageError("gen-data: --count must be positive");
    GenOptions opt;
    opt.threads = a.threads;
    const auto ds = gen_dataset(parse_problem(a.problem), parse_mode(a.mode), a.count, a.seed, opt);
    save_dataset(a.out, ds);
    out << "rows=" << ds.count() << " D=" << ds.dim << "\n";
}

struct TrainArgs {
    std::filesystem::path data;
    std::filesystem::path config;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    std::filesystem::path log;  // empty: log to `out` stream
};

namespace detail {

inline void emit_log(const std::filesystem::path& log, const std::vector<double>& losses, std::ostream& out) {
    std::string csv = "epoch,loss\n";
    for (std::size_t e = 0; e < losses.size(); ++e)
        csv += std::to_string(e) + "," + format_double(losses[e]) + "\n";
    if (log.empty()) out << csv;
    else io::write_text(log, csv);
}

inline void train_single(const TrainArgs& a, bool high_fidelity, std::ostream& out) {
    const RunConfig cfg = load_config(a.config);
    const QoiDataset ds = load_dataset(a.data, high_fidelity ? DatasetKind::HfOnly : DatasetKind::LfOnly);
    if (high_fidelity && !ds.has_hf()) throw UsageError("train-hf: dataset has no HF rows");
    if (!high_fidelity && !ds.has_lf()) throw UsageError("train-lf: dataset has no LF rows");
    const Matrix rows = high_fidelity ? ds.hf() : ds.lf();
    const auto res = high_fidelity ? train_hf_baseline(rows, cfg.hf_train(), a.seed)
                                   : train_vae(rows, cfg.lf_train(), a.seed);
    save_checkpoint(a.out, res.model);
    emit_log(a.log, res.epoch_loss, out);
}

}  // namespace detail

inline void train_lf(const TrainArgs& a, std::ostream& out) { detail::train_single(a, false, out); }
inline void train_hf(const TrainArgs& a, std::ostream& out) { detail::train_single(a, true, out); }

struct TrainBfArgs {
    std::filesystem::path lf_checkpoint;
    std::filesystem::path pairs;
    std::filesystem::path config;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    std::filesystem::path log;
    std::size_t count = 0;  // 0: all pairs
};

/// Trains the second stage, writes the checkpoint, then re-reads both
/// checkpoints and reports whether every frozen tensor survived bitwise.
inline void train_bf_cmd(const TrainBfArgs& a, std::ostream& out) {
    const RunConfig cfg = load_config(a.config);
    if (!std::filesystem::exists(a.lf_checkpoint))
        throw IoError("missing LF checkpoint '" + a.lf_checkpoint.string() + "'");
    const Checkpoint lf_ckpt = load_checkpoint(a.lf_checkpoint);
    const auto* lf = std::get_if<VaeModel>(&lf_ckpt);
    if (!lf) throw UsageError("train-bf: --lf-checkpoint must hold a plain VAE");
    BiFiDataset pairs = load_dataset(a.pairs, DatasetKind::Paired).to_pairs();
    if (a.count) pairs = pairs.head(a.count);
    if (pairs.dim() != lf->ambient_dim)
        throw UsageError("train-bf: pairs have D=" + std::to_string(pairs.dim()) + " but checkpoint has D=" +
                         std::to_string(lf->ambient_dim));
    const auto res = train_bf(*lf, pairs, cfg.bf_train(), a.seed);
    save_checkpoint(a.out, res.model);

    const Checkpoint reread = load_checkpoint(a.out);
    const auto& bf = std::get<BfVaeModel>(reread);
    const auto violations = freeze_violations(*lf, bf);
    const bool encoder_bytes_equal = encode_parameters(lf->encoder()) == encode_parameters(bf.base.encoder());
    detail::emit_log(a.log, res.epoch_loss, out);
    out << "freeze_check,encoder_bytes_equal," << (encoder_bytes_equal ? "yes" : "no") << "\n";
    for (const auto& v : violations) out << "freeze_check,changed," << v << "\n";
    out << "freeze_check," << (violations.empty() && encoder_bytes_equal ? "ok" : "FAILED") << "\n";
    if (!violations.empty() || !encoder_bytes_equal)
        throw NumericError("train-bf: frozen parameters changed");
}

struct GenerateArgs {
    std::filesystem::path checkpoint;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::filesystem::path out;
    bool csv = false;
};

inline void generate_cmd(const GenerateArgs& a, std::ostream& out) {
    if (a.count == 0) throw UsageError("generate: --count must be positive");
    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const Matrix rows = generate_from(ckpt, a.count, a.seed);
    if (a.csv) {
        io::write_text(a.out, matrix_to_csv(rows));
    } else {
        QoiDataset ds;
        ds.kind = DatasetKind::HfOnly;
        ds.dim = rows.cols();
        ds.rows = rows;
        ds.inputs.assign(rows.rows(), Vector{});
        save_dataset(a.out, ds);
    }
    out << "rows=" << rows.rows() << " D=" << rows.cols() << "\n";
}

struct EvalKidArgs {
    std::filesystem::path test;
    std::filesystem::path checkpoint;  // unused in self-check mode
    std::size_t samples = 1000;
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    bool self_check = false;
    unsigned threads = 1;
};

inline std::string kid_report_csv(const KidReport& r) {
    std::string csv = "trial,kid\n";
    for (std::size_t t = 0; t < r.per_trial.size(); ++t)
        csv += std::to_string(t) + "," + format_double(r.per_trial[t]) + "\n";
    csv += "mean," + format_double(r.mean) + "\n";
    csv += "std," + format_double(r.std) + "\n";
    return csv;
}

inline KidReport eval_kid(const EvalKidArgs& a, std::ostream& out) {
    const QoiDataset ds = load_dataset(a.test, DatasetKind::HfOnly);
    const Matrix test = ds.has_hf() ? ds.hf() : ds.rows;
    if (test.rows() < a.samples)
        throw UsageError("eval-kid: test file has " + std::to_string(test.rows()) + " rows, --T is " +
                         std::to_string(a.samples));
    SampleGenerator gen;
    std::optional<Checkpoint> ckpt;
    if (a.self_check) {
        gen = [&test](std::size_t count, std::uint64_t) { return test.slice_rows(0, count); };
    } else {
        ckpt = load_checkpoint(a.checkpoint);
        if (ambient_dim(*ckpt) != test.cols())
            throw UsageError("eval-kid: checkpoint D does not match test data D");
        gen = [&ckpt](std::size_t count, std::uint64_t s) { return generate_from(*ckpt, count, s); };
    }
    const KidReport r = kid_protocol(KernelSpec{}, test, gen, a.samples, a.trials, a.seed, a.threads);
    out << kid_report_csv(r);
    return r;
}

struct ExperimentArgs {
    std::filesystem::path config;
    std::filesystem::path out;  // empty: table to `out` stream
    std::optional<unsigned> threads;
};

inline ExperimentResult experiment_cmd(const ExperimentArgs& a, std::ostream& out, std::ostream* progress) {
    RunConfig cfg = load_config(a.config);
    if (a.threads) cfg.threads = *a.threads;
    const ExperimentData data = prepare_experiment_data(cfg);
    auto result = run_experiment(cfg, data, progress);
    const std::string csv = experiment_csv(result);
    if (a.out.empty()) out << csv;
    else io::write_text(a.out, csv);
    if (progress)
        for (const auto& row : result.rows)
            *progress << "n=" << row.n << " rows_bf=[0.." << row.n << ") rows_hf=[0.." << row.n << ")\n";
    return result;
}

}  // namespace bfvae::cli
