#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "bfvae/error.hpp"
#include "bfvae/ndcore/matrix.hpp"
#include "bfvae/ndcore/rng.hpp"

namespace bfvae {

struct KernelSpec {
    std::vector<double> length_scales{0.2, 0.5, 1.0, 2.0, 5.0};

    void validate() const {
        if (length_scales.empty()) throw UsageError("KernelSpec: no length scales");
        for (double l : length_scales)
            if (!(l > 0.0)) throw UsageError("KernelSpec: length scales must be positive");
    }
};

/// Rational-quadratic mixture evaluated at a squared distance.
inline double rq_kernel_sq(const KernelSpec& spec, double sq_dist) noexcept {
    double k = 0.0;
    for (double l : spec.length_scales) k += std::exp(-l * std::log1p(sq_dist / (2.0 * l)));
    return k;
}

/// k(x, y) = sum_l (1 + |x - y|^2 / (2 l))^(-l)
inline double rq_kernel(const KernelSpec& spec, std::span<const double> x, std::span<const double> y) {
    require_shape(x.size() == y.size(), "rq_kernel: length mismatch");
    return rq_kernel_sq(spec, squared_distance(x, y));
}

namespace detail {

/// Sum of k(a_i, b_j) over all i, j (skipping i == j when `skip_diagonal`).
inline double kernel_block_sum(const KernelSpec& spec, const Matrix& a, const Matrix& b,
                               bool skip_diagonal) {
    std::vector<double> row_sums(a.rows());
    std::vector<double> buf(b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < b.rows(); ++j) {
            if (skip_diagonal && i == j) continue;
            buf[m++] = rq_kernel_sq(spec, squared_distance(a.row(i), b.row(j)));
        }
        row_sums[i] = pairwise_sum(std::span<const double>(buf.data(), m));
    }
    return pairwise_sum(row_sums);
}

}  // namespace detail

/// Unbiased MMD^2 estimate between the row sets X (m rows) and Y (n rows).
inline double kid(const KernelSpec& spec, const Matrix& x, const Matrix& y) {
    spec.validate();
    if (x.rows() < 2 || y.rows() < 2) throw UsageError("kid: each side needs at least 2 rows");
    require_shape(x.cols() == y.cols(), "kid: sample widths differ");
    const double m = static_cast<double>(x.rows());
    const double n = static_cast<double>(y.rows());
    const double sxx = detail::kernel_block_sum(spec, x, x, true);
    const double syy = detail::kernel_block_sum(spec, y, y, true);
    const double sxy = detail::kernel_block_sum(spec, x, y, false);
    return sxx / (m * (m - 1.0)) - 2.0 * sxy / (m * n) + syy / (n * (n - 1.0));
}

struct KidReport {
    std::vector<double> per_trial;
    double mean = 0.0;
    double std = 0.0;  // population
    std::size_t samples = 0;
    std::size_t trials = 0;

    static KidReport from_trials(std::vector<double> values, std::size_t samples) {
        KidReport r;
        r.per_trial = std::move(values);
        r.samples = samples;
        r.trials = r.per_trial.size();
        if (r.trials == 0) return r;
        const double k = static_cast<double>(r.trials);
        r.mean = pairwise_sum(r.per_trial) / k;
        double var = 0.0;
        for (double v : r.per_trial) var += (v - r.mean) * (v - r.mean);
        r.std = std::sqrt(var / k);
        return r;
    }
};

/// Produces `count` fresh rows from the given seed.
using SampleGenerator = std::function<Matrix(std::size_t count, std::uint64_t seed)>;

/// Averaged KID: each trial compares the first T test rows with T fresh
/// generated rows drawn from a per-trial derived seed. Trials may run on
/// `threads` workers; the result does not depend on the thread count.
inline KidReport kid_protocol(const KernelSpec& spec, const Matrix& test, const SampleGenerator& gen,
                              std::size_t samples, std::size_t trials, std::uint64_t seed,
                              unsigned threads = 1) {
    if (samples < 2) throw UsageError("kid_protocol: T must be >= 2");
    if (trials == 0) throw UsageError("kid_protocol: trials must be >= 1");
    if (test.rows() < samples)
        throw UsageError("kid_protocol: test set has " + std::to_string(test.rows()) +
                         " rows, need " + std::to_string(samples));
    const Matrix reference = test.slice_rows(0, samples);
    std::vector<double> values(trials);
    auto run_trial = [&](std::size_t t) {
        const Matrix g = gen(samples, derive_seed(seed, {stream::kTrial, t}));
        require_shape(g.rows() == samples && g.cols() == reference.cols(),
                      "kid_protocol: generator returned " + std::to_string(g.rows()) + "x" +
                          std::to_string(g.cols()) + ", expected " + std::to_string(samples) + "x" +
                          std::to_string(reference.cols()));
        values[t] = kid(spec, reference, g);
    };
    if (threads <= 1 || trials == 1) {
        for (std::size_t t = 0; t < trials; ++t) run_trial(t);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < threads; ++w)
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t t = w; t < trials; t += threads) run_trial(t);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return KidReport::from_trials(std::move(values), samples);
}

}  // namespace bfvae
