#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bfvae/error.hpp"
#include "bfvae/ndcore/mlp.hpp"

namespace bfvae {

struct AdamSettings {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double eps = 1e-8;

    friend bool operator==(const AdamSettings&, const AdamSettings&) = default;
};

/// A parameter container whose tensors can be enumerated as flat spans in a
/// fixed order, and which can produce a zero-filled copy of itself.
template <class P>
concept ParameterSet = requires(P& p, const P& cp) {
    { tensors(p) } -> std::same_as<std::vector<std::span<double>>>;
    { tensors(cp) } -> std::same_as<std::vector<std::span<const double>>>;
    { zeros_like(cp) } -> std::same_as<P>;
};

template <ParameterSet P>
struct AdamState {
    AdamSettings settings;
    P first_moment;
    P second_moment;
    std::uint64_t step = 0;

    AdamState(const P& like, AdamSettings s)
        : settings(s), first_moment(zeros_like(like)), second_moment(zeros_like(like)) {}
};

/// One bias-corrected Adam update; the step counter is incremented first.
template <ParameterSet P>
void adam_step(AdamState<P>& state, P& params, const P& grads) {
    auto p = tensors(params);
    auto g = tensors(grads);
    auto m = tensors(state.first_moment);
    auto v = tensors(state.second_moment);
    require_shape(p.size() == g.size() && p.size() == m.size() && p.size() == v.size(),
                  "adam_step: tensor count mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) {
        require_shape(p[k].size() == g[k].size() && p[k].size() == m[k].size(),
                      "adam_step: tensor " + std::to_string(k) + " shape mismatch");
        if (!all_finite(g[k])) throw NumericError("adam_step: non-finite gradient");
    }
    const auto& s = state.settings;
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(s.beta1, t);
    const double c2 = 1.0 - std::pow(s.beta2, t);
    for (std::size_t k = 0; k < p.size(); ++k) {
        double* pp = p[k].data();
        const double* gp = g[k].data();
        double* mp = m[k].data();
        double* vp = v[k].data();
        for (std::size_t i = 0; i < p[k].size(); ++i) {
            mp[i] = s.beta1 * mp[i] + (1.0 - s.beta1) * gp[i];
            vp[i] = s.beta2 * vp[i] + (1.0 - s.beta2) * gp[i] * gp[i];
            const double mhat = mp[i] / c1;
            const double vhat = vp[i] / c2;
            pp[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
        }
        if (!all_finite(p[k])) throw NumericError("adam_step: non-finite parameter after update");
    }
}

}  // namespace bfvae
