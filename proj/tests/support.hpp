#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "bfvae/ndcore/matrix.hpp"
#include "bfvae/ndcore/mlp.hpp"
#include "bfvae/ndcore/rng.hpp"

namespace bfvae::test {

// Gradient entries smaller than this are compared on an absolute scale.
inline constexpr double kGradFloor = 1e-3;

inline double rel_err(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradFloor});
    return std::abs(analytic - numeric) / scale;
}

struct GradMismatch {
    std::size_t tensor = 0;
    std::size_t index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double err = 0.0;
};

/// Central differences of `f` over every entry of the spans in `params`,
/// compared against the matching entries of `analytic`. Returns the worst.
inline GradMismatch worst_fd_mismatch(const std::vector<std::span<double>>& params,
                                      const std::vector<std::span<const double>>& analytic,
                                      const std::function<double()>& f, double h = 1e-6) {
    GradMismatch worst;
    for (std::size_t t = 0; t < params.size(); ++t) {
        for (std::size_t i = 0; i < params[t].size(); ++i) {
            const double keep = params[t][i];
            params[t][i] = keep + h;
            const double up = f();
            params[t][i] = keep - h;
            const double down = f();
            params[t][i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            const double e = rel_err(analytic[t][i], numeric);
            if (e >= worst.err) worst = {t, i, analytic[t][i], numeric, e};
        }
    }
    return worst;
}

inline std::string describe(const GradMismatch& m) {
    return "tensor " + std::to_string(m.tensor) + "[" + std::to_string(m.index) +
           "]: analytic=" + std::to_string(m.analytic) + " numeric=" + std::to_string(m.numeric) +
           " rel=" + std::to_string(m.err);
}

inline bool near(const Matrix& a, const Matrix& b, double tol = 1e-12) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a.flat()[i] - b.flat()[i]) > tol * std::max(1.0, std::abs(b.flat()[i]))) return false;
    return true;
}

inline Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    Matrix m = standard_normal_matrix(rng, rows, cols);
    for (double& v : m.flat()) v *= scale;
    return m;
}

/// Straight-line MLP evaluation, one sample, no shared code with mlp_forward.
inline Vector reference_mlp(const MlpParams& p, std::span<const double> x) {
    Vector cur(x.begin(), x.end());
    for (const auto& l : p.layers) {
        Vector next(l.out_dim());
        for (std::size_t o = 0; o < l.out_dim(); ++o) {
            double s = l.bias[o];
            for (std::size_t i = 0; i < l.in_dim(); ++i) s += l.weights(o, i) * cur[i];
            switch (l.activation) {
                case Activation::Identity: next[o] = s; break;
                case Activation::ReLU: next[o] = s > 0.0 ? s : 0.0; break;
                case Activation::GeLU: {
                    const double c = std::sqrt(2.0 / 3.14159265358979323846);
                    next[o] = 0.5 * s * (1.0 + std::tanh(c * (s + 0.044715 * s * s * s)));
                    break;
                }
            }
        }
        cur = std::move(next);
    }
    return cur;
}

}  // namespace bfvae::test
