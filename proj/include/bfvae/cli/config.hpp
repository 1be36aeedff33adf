#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bfvae/bifi/bifi.hpp"
#include "bfvae/datagen/dataset.hpp"
#include "bfvae/error.hpp"
#include "bfvae/vae/vae.hpp"

namespace bfvae {

/// Everything one experiment needs. Loaded from a flat `key = value` file;
/// '#' starts a comment.
struct RunConfig {
    Problem problem = Problem::Burgers;
    std::vector<std::size_t> hidden{256, 128, 64, 16};
    Activation activation = Activation::GeLU;
    std::size_t latent_dim = 4;
    double beta = 5e-4;
    double gamma = 0.0;
    AdamSettings adam{1e-3, 0.9, 0.99, 1e-8};
    std::size_t batch_size = 64;
    std::size_t epochs_lf = 2000;
    std::size_t epochs_bf = 1000;
    std::size_t epochs_hf = 2000;
    std::size_t n_lf = 400;
    std::vector<std::size_t> n_hf{10, 50};
    std::size_t samples = 1000;  // T
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    bool standardize = true;
    unsigned threads = 1;
    std::string lf_data;
    std::string pairs_data;
    std::string test_data;

    void validate() const {
        if (latent_dim < 1) throw UsageError("config: latent_dim must be >= 1");
        if (!(beta > 0.0)) throw UsageError("config: beta must be > 0");
        if (!(gamma >= 0.0)) throw UsageError("config: gamma must be >= 0");
        if (!(adam.lr > 0.0)) throw UsageError("config: lr must be > 0");
        if (batch_size == 0 || epochs_lf == 0 || epochs_bf == 0 || epochs_hf == 0 || n_lf == 0 ||
            trials == 0)
            throw UsageError("config: counts must be positive");
        if (samples < 2) throw UsageError("config: T must be >= 2");
        for (auto h : hidden)
            if (h == 0) throw UsageError("config: hidden widths must be positive");
        if (n_hf.empty()) throw UsageError("config: n_hf list is empty");
        for (auto n : n_hf)
            if (n == 0) throw UsageError("config: n_hf entries must be positive");
    }

    VaeArchitecture architecture() const { return {hidden, activation, latent_dim}; }

    TrainConfig lf_train() const {
        return {architecture(), beta, adam, batch_size, epochs_lf, standardize};
    }

    TrainConfig hf_train() const {
        return {architecture(), beta, adam, batch_size, epochs_hf, standardize};
    }

    BfTrainConfig bf_train() const { return {gamma, adam, batch_size, epochs_bf}; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
    T out{};
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw UsageError("config: bad value for '" + std::string(key) + "': '" + std::string(v) + "'");
    return out;
}

inline std::vector<std::size_t> parse_list(std::string_view key, std::string_view v) {
    std::vector<std::size_t> out;
    while (!v.empty()) {
        const auto comma = v.find(',');
        out.push_back(parse_number<std::size_t>(key, trim(v.substr(0, comma))));
        if (comma == std::string_view::npos) break;
        v.remove_prefix(comma + 1);
    }
    return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("config: bad boolean for '" + std::string(key) + "': '" + std::string(v) + "'");
}

}  // namespace detail

/// Applies one key; unknown keys are an error.
inline void apply_config_value(RunConfig& c, std::string_view key, std::string_view value) {
    using detail::parse_number;
    if (key == "problem") c.problem = parse_problem(value);
    else if (key == "hidden") c.hidden = value.empty() ? std::vector<std::size_t>{} : detail::parse_list(key, value);
    else if (key == "activation") c.activation = parse_activation(value);
    else if (key == "latent_dim") c.latent_dim = parse_number<std::size_t>(key, value);
    else if (key == "beta") c.beta = parse_number<double>(key, value);
    else if (key == "gamma") c.gamma = parse_number<double>(key, value);
    else if (key == "lr") c.adam.lr = parse_number<double>(key, value);
    else if (key == "adam_beta1") c.adam.beta1 = parse_number<double>(key, value);
    else if (key == "adam_beta2") c.adam.beta2 = parse_number<double>(key, value);
    else if (key == "adam_eps") c.adam.eps = parse_number<double>(key, value);
    else if (key == "batch_size") c.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "epochs_lf") c.epochs_lf = parse_number<std::size_t>(key, value);
    else if (key == "epochs_bf") c.epochs_bf = parse_number<std::size_t>(key, value);
    else if (key == "epochs_hf") c.epochs_hf = parse_number<std::size_t>(key, value);
    else if (key == "n_lf") c.n_lf = parse_number<std::size_t>(key, value);
    else if (key == "n_hf") c.n_hf = detail::parse_list(key, value);
    else if (key == "T") c.samples = parse_number<std::size_t>(key, value);
    else if (key == "trials") c.trials = parse_number<std::size_t>(key, value);
    else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "standardize") c.standardize = detail::parse_bool(key, value);
    else if (key == "threads") c.threads = parse_number<unsigned>(key, value);
    else if (key == "lf_data") c.lf_data = value;
    else if (key == "pairs_data") c.pairs_data = value;
    else if (key == "test_data") c.test_data = value;
    else throw UsageError("config: unknown key '" + std::string(key) + "'");
}

inline RunConfig parse_config(std::istream& in, const std::string& origin = "config") {
    RunConfig c;
    bool epochs_hf_set = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view s(line);
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = detail::trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw UsageError(origin + ":" + std::to_string(line_no) + ": expected key = value");
        const auto key = detail::trim(s.substr(0, eq));
        const auto value = detail::trim(s.substr(eq + 1));
        apply_config_value(c, key, value);
        if (key == "epochs_hf") epochs_hf_set = true;
    }
    // the HF-only baseline trains as long as the LF model unless told otherwise
    if (!epochs_hf_set) c.epochs_hf = c.epochs_lf;
    c.validate();
    return c;
}

inline RunConfig parse_config_string(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    return parse_config(in, path.string());
}

}  // namespace bfvae
