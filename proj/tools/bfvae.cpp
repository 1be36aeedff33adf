// Command-line front end: dataset generation, training, synthesis and KID evaluation.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bfvae/cli/commands.hpp"

int main(int argc, char** argv) {
    using namespace bfvae::cli;

    CLI::App app{"Bi-fidelity variational auto-encoder toolkit"};
    app.require_subcommand(1);

    GenDataArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "Generate a BFQD dataset");
    gen_cmd->add_option("--problem", gen.problem, "beam | burgers")->required();
    gen_cmd->add_option("--mode", gen.mode, "lf_only | hf_only | paired")->required();
    gen_cmd->add_option("--count", gen.count, "Number of samples")->required();
    gen_cmd->add_option("--seed", gen.seed, "Base seed")->required();
    gen_cmd->add_option("--out", gen.out, "Output file")->required();
    gen_cmd->add_option("--threads", gen.threads, "Worker threads");

    TrainArgs lf;
    auto* lf_cmd = app.add_subcommand("train-lf", "Train the LF-VAE");
    TrainArgs hf;
    auto* hf_cmd = app.add_subcommand("train-hf", "Train the HF-only baseline VAE");
    for (auto [cmd, args] : {std::pair{lf_cmd, &lf}, std::pair{hf_cmd, &hf}}) {
        cmd->add_option("--data", args->data, "Training data (BFQD or CSV)")->required();
        cmd->add_option("--config", args->config, "Run config")->required();
        cmd->add_option("--seed", args->seed, "Seed")->required();
        cmd->add_option("--out", args->out, "Checkpoint to write")->required();
        cmd->add_option("--log", args->log, "Per-epoch loss CSV (default stdout)");
    }

    TrainBfArgs bf;
    auto* bf_cmd = app.add_subcommand("train-bf", "Adapt an LF-VAE to HF data");
    bf_cmd->add_option("--lf-checkpoint", bf.lf_checkpoint, "Trained LF-VAE")->required();
    bf_cmd->add_option("--pairs", bf.pairs, "Paired LF/HF data")->required();
    bf_cmd->add_option("--config", bf.config, "Run config")->required();
    bf_cmd->add_option("--seed", bf.seed, "Seed")->required();
    bf_cmd->add_option("--out", bf.out, "Checkpoint to write")->required();
    bf_cmd->add_option("--log", bf.log, "Per-epoch loss CSV (default stdout)");
    bf_cmd->add_option("--count", bf.count, "Use only the first N pairs");

    GenerateArgs g;
    auto* g_cmd = app.add_subcommand("generate", "Sample from a checkpoint");
    g_cmd->add_option("--checkpoint", g.checkpoint, "VAE or BF-VAE checkpoint")->required();
    g_cmd->add_option("--count", g.count, "Number of samples")->required();
    g_cmd->add_option("--seed", g.seed, "Seed")->required();
    g_cmd->add_option("--out", g.out, "Output file")->required();
    g_cmd->add_flag("--csv", g.csv, "Write CSV instead of BFQD");

    EvalKidArgs k;
    auto* k_cmd = app.add_subcommand("eval-kid", "Averaged KID against test data");
    k_cmd->add_option("--test", k.test, "Test data")->required();
    k_cmd->add_option("--checkpoint", k.checkpoint, "Model to evaluate");
    k_cmd->add_option("--T", k.samples, "Samples per side per trial");
    k_cmd->add_option("--trials", k.trials, "Number of trials");
    k_cmd->add_option("--seed", k.seed, "Seed");
    k_cmd->add_option("--threads", k.threads, "Parallel trials");
    k_cmd->add_flag("--self-check", k.self_check, "Compare the test rows with themselves");

    ExperimentArgs ex;
    unsigned ex_threads = 0;
    auto* ex_cmd = app.add_subcommand("experiment", "KID versus number of HF samples");
    ex_cmd->add_option("--config", ex.config, "Run config")->required();
    ex_cmd->add_option("--out", ex.out, "CSV table (default stdout)");
    auto* ex_threads_opt = ex_cmd->add_option("--threads", ex_threads, "Parallel KID trials / data generation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    auto& out = std::cout;
    if (*gen_cmd) return run_guarded([&] { gen_data(gen, out); });
    if (*lf_cmd) return run_guarded([&] { train_lf(lf, out); });
    if (*hf_cmd) return run_guarded([&] { train_hf(hf, out); });
    if (*bf_cmd) return run_guarded([&] { train_bf_cmd(bf, out); });
    if (*g_cmd) return run_guarded([&] { generate_cmd(g, out); });
    if (*k_cmd)
        return run_guarded([&] {
            if (!k.self_check && k.checkpoint.empty())
                throw bfvae::UsageError("eval-kid: --checkpoint is required unless --self-check");
            eval_kid(k, out);
        });
    if (*ex_cmd)
        return run_guarded([&] {
            if (ex_threads_opt->count()) ex.threads = ex_threads;
            experiment_cmd(ex, out, &std::cerr);
        });
    return kUsage;
}
