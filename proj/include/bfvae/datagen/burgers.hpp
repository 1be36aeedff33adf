#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "bfvae/error.hpp"
#include "bfvae/ndcore/matrix.hpp"
#include "bfvae/ndcore/rng.hpp"

namespace bfvae::burgers {

enum class Fidelity { Low, High };

struct Grid {
    std::size_t intervals;
    double dt;
};

/// Viscous Burgers on [0, 1] x [0, t_final] with homogeneous Dirichlet ends.
struct BurgersConfig {
    Grid lf{85, 2e-2};
    Grid hf{255, 2e-4};
    double t_final = 2.0;
    double sigma_g = 1.2840e-1;
    std::size_t modes = 6;  // M; the perturbation uses modes 2..M
    double nu_lo = 0.01;
    double nu_hi = 0.05;
    double beta_a = 0.5;
    std::size_t beta_b = 5;  // integer shape, sampled as a sum of exponentials

    const Grid& grid(Fidelity f) const noexcept { return f == Fidelity::Low ? lf : hf; }
    std::size_t input_dim() const noexcept { return modes - 1; }
    std::size_t qoi_dim() const noexcept { return hf.intervals - 1; }
};

struct BurgersInputs {
    Vector xi;  // length M - 1, each in [-1, 1]
    double nu = 0.0;
};

/// xi_k ~ U[-1, 1]; nu = lo + (hi - lo) B with B ~ Beta(a, b) built from
/// G1 = Z^2 / 2 ~ Gamma(1/2) and G2 = sum of b unit exponentials.
inline BurgersInputs sample_burgers_inputs(const BurgersConfig& cfg, Rng& rng) {
    BurgersInputs in;
    in.xi.resize(cfg.input_dim());
    for (double& v : in.xi) v = uniform(rng, -1.0, 1.0);
    const double z = standard_normal(rng);
    const double g1 = 0.5 * z * z;
    std::exponential_distribution<double> expo(1.0);
    double g2 = 0.0;
    for (std::size_t k = 0; k < cfg.beta_b; ++k) g2 += expo(rng);
    const double b = g1 / (g1 + g2);
    in.nu = cfg.nu_lo + (cfg.nu_hi - cfg.nu_lo) * b;
    return in;
}

/// g(x) = sin(pi x) + sigma_g sum_{k=2}^{M} (1/k) sin(pi k x) xi_{k-1}, exactly 0 at x = 0, 1.
inline Vector burgers_initial(std::span<const double> x, std::span<const double> xi,
                              const BurgersConfig& cfg) {
    require_shape(xi.size() == cfg.input_dim(), "burgers_initial: xi length != M - 1");
    Vector g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0 || x[i] == 1.0) {
            g[i] = 0.0;
            continue;
        }
        double v = std::sin(std::numbers::pi * x[i]);
        for (std::size_t k = 2; k <= cfg.modes; ++k)
            v += cfg.sigma_g / static_cast<double>(k) *
                 std::sin(std::numbers::pi * static_cast<double>(k) * x[i]) * xi[k - 2];
        g[i] = v;
    }
    return g;
}

/// All nodes i / intervals, i = 0..intervals.
inline Vector grid_nodes(std::size_t intervals) {
    Vector x(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i)
        x[i] = static_cast<double>(i) / static_cast<double>(intervals);
    return x;
}

/// Interior nodes only.
inline Vector interior_nodes(std::size_t intervals) {
    Vector x(intervals - 1);
    for (std::size_t i = 1; i < intervals; ++i)
        x[i - 1] = static_cast<double>(i) / static_cast<double>(intervals);
    return x;
}

/// Solves (1 + 2r) u_i - r u_{i-1} - r u_{i+1} = rhs_i over the interior,
/// zero boundary values. `rhs` is overwritten with the solution.
inline void solve_implicit_diffusion(double r, std::span<double> rhs, std::span<double> scratch) {
    const std::size_t n = rhs.size();
    const double diag = 1.0 + 2.0 * r;
    const double off = -r;
    // Thomas sweep with constant coefficients
    scratch[0] = off / diag;
    rhs[0] /= diag;
    for (std::size_t i = 1; i < n; ++i) {
        const double denom = diag - off * scratch[i - 1];
        scratch[i] = off / denom;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= scratch[i] * rhs[i + 1];
}

/// Full-grid state at t_final from a semi-implicit scheme: second-order
/// Adams-Bashforth on -u u_x (central differences, forward Euler for the
/// first step) and backward Euler on nu u_xx.
inline Vector solve_on_grid(const BurgersConfig& cfg, const Grid& grid, const BurgersInputs& in) {
    if (grid.intervals < 3) throw UsageError("burgers: need at least 3 intervals");
    const double steps_real = cfg.t_final / grid.dt;
    const auto steps = static_cast<std::size_t>(std::llround(steps_real));
    if (std::abs(steps_real - static_cast<double>(steps)) > 1e-9 * steps_real)
        throw UsageError("burgers: dt does not divide the final time");
    if (!(in.nu > 0.0)) throw UsageError("burgers: viscosity must be positive");

    const std::size_t n = grid.intervals;
    const double dx = 1.0 / static_cast<double>(n);
    const double r = in.nu * grid.dt / (dx * dx);
    Vector u = burgers_initial(grid_nodes(n), in.xi, cfg);
    Vector adv(n + 1, 0.0);
    Vector adv_prev(n + 1, 0.0);
    Vector rhs(n - 1);
    Vector scratch(n - 1);
    const double inv2dx = 1.0 / (2.0 * dx);

    for (std::size_t step = 0; step < steps; ++step) {
        for (std::size_t i = 1; i < n; ++i) adv[i] = -u[i] * (u[i + 1] - u[i - 1]) * inv2dx;
        for (std::size_t i = 1; i < n; ++i) {
            const double explicit_part =
                step == 0 ? adv[i] : 1.5 * adv[i] - 0.5 * adv_prev[i];
            rhs[i - 1] = u[i] + grid.dt * explicit_part;
        }
        solve_implicit_diffusion(r, rhs, scratch);
        for (std::size_t i = 1; i < n; ++i) u[i] = rhs[i - 1];
        u[0] = 0.0;
        u[n] = 0.0;
        if (!all_finite(u))
            throw NumericError("burgers: non-finite state at step " + std::to_string(step + 1));
        std::swap(adv, adv_prev);
    }
    return u;
}

/// Interior values at t_final (84 for LF, 254 for HF with the default grids).
inline Vector burgers_solve(const BurgersConfig& cfg, Fidelity fidelity, const BurgersInputs& in) {
    Vector full = solve_on_grid(cfg, cfg.grid(fidelity), in);
    return Vector(full.begin() + 1, full.end() - 1);
}

/// dx-weighted discrete energy of a full-grid state.
inline double discrete_energy(std::span<const double> full_state) {
    const double dx = 1.0 / static_cast<double>(full_state.size() - 1);
    double e = 0.0;
    for (double v : full_state) e += v * v;
    return e * dx;
}

}  // namespace bfvae::burgers
