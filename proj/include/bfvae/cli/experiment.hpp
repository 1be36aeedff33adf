#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "bfvae/bifi/bifi.hpp"
#include "bfvae/cli/config.hpp"
#include "bfvae/datagen/dataset.hpp"
#include "bfvae/datagen/dataset_io.hpp"
#include "bfvae/metrics/kid.hpp"
#include "bfvae/vae/vae.hpp"

namespace bfvae {

struct ExperimentData {
    Matrix lf;           // LF-only training rows
    BiFiDataset pairs;   // pool of pairs; the first n are used at size n
    Matrix test;         // held-out HF rows
};

struct ExperimentRow {
    std::size_t n = 0;
    KidReport bf;
    KidReport hf;
    std::vector<std::size_t> bf_rows;  // pair indices fed to the BF arm
    std::vector<std::size_t> hf_rows;  // HF row indices fed to the HF-only arm
};

struct ExperimentResult {
    std::vector<double> lf_epoch_loss;
    std::vector<ExperimentRow> rows;
};

/// Loads the configured files, or generates Burgers data when none are given.
inline ExperimentData prepare_experiment_data(const RunConfig& cfg) {
    const std::size_t n_max = *std::max_element(cfg.n_hf.begin(), cfg.n_hf.end());
    ExperimentData data;
    GenOptions opt;
    opt.threads = cfg.threads;
    const bool from_files = !cfg.lf_data.empty() || !cfg.pairs_data.empty() || !cfg.test_data.empty();
    if (from_files) {
        if (cfg.lf_data.empty() || cfg.pairs_data.empty() || cfg.test_data.empty())
            throw UsageError("experiment: lf_data, pairs_data and test_data must be given together");
        data.lf = load_dataset(cfg.lf_data, DatasetKind::LfOnly).lf();
        data.pairs = load_dataset(cfg.pairs_data, DatasetKind::Paired).to_pairs();
        auto test = load_dataset(cfg.test_data, DatasetKind::HfOnly);
        data.test = test.has_hf() ? test.hf() : test.rows;
    } else {
        if (cfg.problem != Problem::Burgers)
            throw UsageError("experiment: no HF solver for '" + std::string(to_string(cfg.problem)) +
                             "'; provide lf_data, pairs_data and test_data");
        data.lf = gen_dataset(cfg.problem, DatasetKind::LfOnly, cfg.n_lf,
                              derive_seed(cfg.seed, {stream::kData, 1}), opt).rows;
        data.pairs = gen_dataset(cfg.problem, DatasetKind::Paired, n_max,
                                 derive_seed(cfg.seed, {stream::kData, 2}), opt).to_pairs();
        data.test = gen_dataset(cfg.problem, DatasetKind::HfOnly, cfg.samples,
                                derive_seed(cfg.seed, {stream::kData, 3}), opt).rows;
    }
    if (data.lf.rows() > cfg.n_lf) data.lf = data.lf.slice_rows(0, cfg.n_lf);
    if (data.pairs.pairs() < n_max)
        throw UsageError("experiment: need " + std::to_string(n_max) + " pairs, have " +
                         std::to_string(data.pairs.pairs()));
    if (data.test.rows() < cfg.samples)
        throw UsageError("experiment: need " + std::to_string(cfg.samples) + " test rows, have " +
                         std::to_string(data.test.rows()));
    require_shape(data.lf.cols() == data.pairs.dim() && data.test.cols() == data.pairs.dim(),
                  "experiment: LF, paired and test data disagree on D");
    return data;
}

/// For each n: BF-VAE from the shared LF model and an HF-only VAE, both on
/// the first n pairs, then averaged KID against the test rows.
inline ExperimentResult run_experiment(const RunConfig& cfg, const ExperimentData& data,
                                       std::ostream* progress = nullptr) {
    cfg.validate();
    ExperimentResult result;
    const KernelSpec kernel;
    if (progress) *progress << "training LF-VAE on " << data.lf.rows() << " rows\n";
    auto lf = train_vae(data.lf, cfg.lf_train(), derive_seed(cfg.seed, {10}));
    result.lf_epoch_loss = lf.epoch_loss;

    for (std::size_t n : cfg.n_hf) {
        ExperimentRow row;
        row.n = n;
        const BiFiDataset subset = data.pairs.head(n);
        row.bf_rows.resize(n);
        std::iota(row.bf_rows.begin(), row.bf_rows.end(), std::size_t{0});
        row.hf_rows = row.bf_rows;

        if (progress) *progress << "n=" << n << ": training BF-VAE\n";
        const auto bf = train_bf(lf.model, subset, cfg.bf_train(), derive_seed(cfg.seed, {20, n}));
        if (progress) *progress << "n=" << n << ": training HF-VAE\n";
        const auto hf = train_hf_baseline(subset.hf, cfg.hf_train(), derive_seed(cfg.seed, {30, n}));

        const std::uint64_t kid_seed = derive_seed(cfg.seed, {40, n});
        row.bf = kid_protocol(
            kernel, data.test,
            [&](std::size_t count, std::uint64_t s) { return generate_hf(bf.model, count, s); },
            cfg.samples, cfg.trials, kid_seed, cfg.threads);
        row.hf = kid_protocol(
            kernel, data.test,
            [&](std::size_t count, std::uint64_t s) { return sample_vae(hf.model, count, s); },
            cfg.samples, cfg.trials, kid_seed, cfg.threads);
        if (progress)
            *progress << "n=" << n << ": KID_BF=" << row.bf.mean << " KID_HF=" << row.hf.mean << "\n";
        result.rows.push_back(std::move(row));
    }
    return result;
}

inline std::string experiment_csv(const ExperimentResult& r) {
    std::string out = "n,kid_bf_mean,kid_bf_std,kid_hf_mean,kid_hf_std\n";
    for (const auto& row : r.rows)
        out += std::to_string(row.n) + "," + format_double(row.bf.mean) + "," + format_double(row.bf.std) +
               "," + format_double(row.hf.mean) + "," + format_double(row.hf.std) + "\n";
    return out;
}

}  // namespace bfvae
