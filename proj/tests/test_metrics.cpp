#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bfvae/metrics/kid.hpp"
#include "support.hpp"

using namespace bfvae;
using Catch::Approx;

namespace {

// Direct double loop over every pair, no shared code with kid().
double brute_kid(const KernelSpec& spec, const Matrix& X, const Matrix& Y) {
    auto k = [&](std::span<const double> a, std::span<const double> b) {
        double s2 = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s2 += (a[i] - b[i]) * (a[i] - b[i]);
        double v = 0.0;
        for (double l : spec.length_scales) v += std::pow(1.0 + s2 / (2.0 * l), -l);
        return v;
    };
    const double m = static_cast<double>(X.rows());
    const double n = static_cast<double>(Y.rows());
    double xx = 0.0, yy = 0.0, xy = 0.0;
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < X.rows(); ++j)
            if (i != j) xx += k(X.row(i), X.row(j));
    for (std::size_t i = 0; i < Y.rows(); ++i)
        for (std::size_t j = 0; j < Y.rows(); ++j)
            if (i != j) yy += k(Y.row(i), Y.row(j));
    for (std::size_t i = 0; i < X.rows(); ++i)
        for (std::size_t j = 0; j < Y.rows(); ++j) xy += k(X.row(i), Y.row(j));
    return xx / (m * (m - 1)) - 2.0 * xy / (m * n) + yy / (n * (n - 1));
}

SampleGenerator gaussian(std::size_t dim, double shift) {
    return [dim, shift](std::size_t count, std::uint64_t seed) {
        Rng rng = make_rng(seed, {stream::kSample});
        Matrix m = standard_normal_matrix(rng, count, dim);
        for (double& v : m.flat()) v += shift;
        return m;
    };
}

Matrix gaussian_test(std::size_t count, std::size_t dim, std::uint64_t seed) {
    return gaussian(dim, 0.0)(count, seed);
}

}  // namespace

TEST_CASE("rational quadratic kernel examples", "[kid][kernel]") {
    const KernelSpec spec;
    CHECK(spec.length_scales == std::vector<double>{0.2, 0.5, 1.0, 2.0, 5.0});
    const Vector x{0.3, -1.0, 2.0};
    CHECK(rq_kernel(spec, x, x) == 5.0);
    // tests/oracles/scalar_oracles.py
    CHECK(rq_kernel(spec, Vector{0.0}, Vector{1.0}) == Approx(3.4130653124635404).epsilon(1e-15));
    CHECK_THROWS_AS(rq_kernel(spec, Vector{0.0}, Vector{1.0, 2.0}), ShapeError);
}

TEST_CASE("rational quadratic kernel is symmetric and bounded", "[kid][kernel]") {
    const KernelSpec spec;
    Rng rng = make_rng(1, {stream::kSample});
    for (int t = 0; t < 200; ++t) {
        Vector a(4), b(4);
        fill_standard_normal(rng, a);
        fill_standard_normal(rng, b);
        for (double& v : b) v *= 1.0 + t;
        const double kab = rq_kernel(spec, a, b);
        CHECK(kab == rq_kernel(spec, b, a));
        CHECK(kab > 0.0);
        CHECK(kab <= 5.0);
    }
}

TEST_CASE("kernel length scales are validated", "[kid][kernel]") {
    KernelSpec empty{{}};
    CHECK_THROWS(empty.validate());
    KernelSpec negative{{1.0, -0.5}};
    CHECK_THROWS(negative.validate());
}

TEST_CASE("kid on identical rows is exactly zero", "[kid]") {
    const KernelSpec spec;
    const Matrix X{{0.7, -1.2}, {0.7, -1.2}};
    CHECK(kid(spec, X, X) == 0.0);
    const Matrix many(9, 3, 2.5);
    CHECK(kid(spec, many, Matrix(4, 3, 2.5)) == 0.0);
}

TEST_CASE("kid one-dimensional brute-force oracle", "[kid]") {
    const KernelSpec spec;
    const Matrix X{{0.0}, {1.0}};
    const Matrix Y{{0.0}, {2.0}};
    // tests/oracles/scalar_oracles.py
    CHECK(kid(spec, X, Y) == Approx(-1.5822373592004964).epsilon(1e-14));
    CHECK(kid(spec, X, Y) == Approx(brute_kid(spec, X, Y)).epsilon(1e-14));
}

TEST_CASE("kid matches the direct double loop on random instances", "[kid]") {
    const KernelSpec spec;
    Rng rng = make_rng(2, {stream::kSample});
    std::uniform_int_distribution<std::size_t> rows(2, 6);
    std::uniform_int_distribution<std::size_t> dims(1, 3);
    for (int t = 0; t < 40; ++t) {
        const std::size_t D = dims(rng);
        const Matrix X = test::random_matrix(rng, rows(rng), D);
        const Matrix Y = test::random_matrix(rng, rows(rng), D, 1.5);
        CHECK(std::abs(kid(spec, X, Y) - brute_kid(spec, X, Y)) <= 1e-12);
    }
}

TEST_CASE("kid is symmetric in its arguments", "[kid]") {
    const KernelSpec spec;
    Rng rng = make_rng(3, {stream::kSample});
    for (int t = 0; t < 20; ++t) {
        const Matrix X = test::random_matrix(rng, 5 + t, 3);
        const Matrix Y = test::random_matrix(rng, 40 - t, 3, 2.0);
        CHECK(std::abs(kid(spec, X, Y) - kid(spec, Y, X)) <= 1e-12);
    }
}

TEST_CASE("kid is invariant under row permutations", "[kid]") {
    const KernelSpec spec;
    Rng rng = make_rng(4, {stream::kSample});
    const Matrix X = test::random_matrix(rng, 300, 4);
    const Matrix Y = test::random_matrix(rng, 250, 4, 1.3);
    const double base = kid(spec, X, Y);
    for (int t = 0; t < 5; ++t) {
        std::vector<std::size_t> px(X.rows()), py(Y.rows());
        std::iota(px.begin(), px.end(), std::size_t{0});
        std::iota(py.begin(), py.end(), std::size_t{0});
        std::shuffle(px.begin(), px.end(), rng);
        std::shuffle(py.begin(), py.end(), rng);
        CHECK(std::abs(kid(spec, X.gather_rows(px), Y.gather_rows(py)) - base) <= 1e-12);
    }
}

TEST_CASE("kid requires two rows per side and equal widths", "[kid]") {
    const KernelSpec spec;
    CHECK_THROWS_AS(kid(spec, Matrix(1, 2), Matrix(3, 2)), UsageError);
    CHECK_THROWS_AS(kid(spec, Matrix(3, 2), Matrix(1, 2)), UsageError);
    CHECK_THROWS_AS(kid(spec, Matrix(3, 2), Matrix(3, 3)), ShapeError);
}

TEST_CASE("replaying the test rows gives the closed-form self-KID", "[kid][protocol]") {
    // With both sides equal, kid = (2/T)(mean off-diagonal kernel - k(0)),
    // which is <= 0 and vanishes only when every row is the same.
    const KernelSpec spec;
    const Matrix test_rows = gaussian_test(60, 3, 5);
    const std::size_t T = 40;
    const Matrix ref = test_rows.slice_rows(0, T);
    const SampleGenerator replay = [&](std::size_t count, std::uint64_t) { return test_rows.slice_rows(0, count); };
    const KidReport r = kid_protocol(spec, test_rows, replay, T, 4, 9);
    double off = 0.0;
    for (std::size_t i = 0; i < T; ++i)
        for (std::size_t j = 0; j < T; ++j)
            if (i != j) off += rq_kernel(spec, ref.row(i), ref.row(j));
    off /= static_cast<double>(T * (T - 1));
    const double closed = 2.0 / static_cast<double>(T) * (off - 5.0);
    for (double v : r.per_trial) CHECK(v == Approx(closed).epsilon(1e-12));
    CHECK(r.std == 0.0);
    CHECK(closed < 0.0);

    const Matrix flat(30, 3, -0.4);
    const SampleGenerator replay_flat = [&](std::size_t count, std::uint64_t) { return flat.slice_rows(0, count); };
    const KidReport z = kid_protocol(spec, flat, replay_flat, 30, 3, 9);
    for (double v : z.per_trial) CHECK(v == 0.0);
    CHECK(z.mean == 0.0);
}

TEST_CASE("single-trial report", "[kid][protocol]") {
    const KernelSpec spec;
    const Matrix t = gaussian_test(50, 2, 6);
    const KidReport r = kid_protocol(spec, t, gaussian(2, 0.5), 50, 1, 3);
    REQUIRE(r.per_trial.size() == 1);
    CHECK(r.trials == 1);
    CHECK(r.samples == 50);
    CHECK(r.mean == r.per_trial[0]);
    CHECK(r.std == 0.0);
}

TEST_CASE("report statistics are recomputable", "[kid][protocol]") {
    const KidReport r = KidReport::from_trials({1.0, 2.0, 4.0, 5.0}, 10);
    CHECK(r.mean == 3.0);
    CHECK(r.std == Approx(std::sqrt(2.5)));
    CHECK(r.trials == 4);
}

TEST_CASE("kid_protocol is deterministic and thread-count independent", "[kid][protocol]") {
    const KernelSpec spec;
    const Matrix t = gaussian_test(80, 3, 7);
    const KidReport a = kid_protocol(spec, t, gaussian(3, 0.2), 80, 5, 11, 1);
    const KidReport b = kid_protocol(spec, t, gaussian(3, 0.2), 80, 5, 11, 1);
    const KidReport c = kid_protocol(spec, t, gaussian(3, 0.2), 80, 5, 11, 3);
    const KidReport d = kid_protocol(spec, t, gaussian(3, 0.2), 80, 5, 12, 1);
    CHECK(a.per_trial == b.per_trial);
    CHECK(a.per_trial == c.per_trial);
    CHECK(a.mean == c.mean);
    CHECK(a.per_trial != d.per_trial);
    // trials are distinct draws
    CHECK(a.per_trial[0] != a.per_trial[1]);
}

TEST_CASE("kid_protocol argument errors", "[kid][protocol]") {
    const KernelSpec spec;
    const Matrix t = gaussian_test(20, 3, 8);
    CHECK_THROWS_AS(kid_protocol(spec, t, gaussian(3, 0.0), 21, 2, 1), UsageError);
    CHECK_THROWS_AS(kid_protocol(spec, t, gaussian(3, 0.0), 10, 0, 1), UsageError);
    CHECK_THROWS_AS(kid_protocol(spec, t, gaussian(4, 0.0), 10, 2, 1), ShapeError);
    CHECK_THROWS_AS(kid_protocol(spec, t, gaussian(4, 0.0), 10, 4, 1, 2), ShapeError);
    const SampleGenerator short_gen = [](std::size_t count, std::uint64_t) { return Matrix(count - 1, 3); };
    CHECK_THROWS_AS(kid_protocol(spec, t, short_gen, 10, 2, 1), ShapeError);
}

TEST_CASE("same-distribution KID concentrates near zero", "[kid][statistics]") {
    const KernelSpec spec;
    const Matrix t = gaussian_test(1000, 4, 100);
    const KidReport r = kid_protocol(spec, t, gaussian(4, 0.0), 1000, 10, 101);
    INFO("mean=" << r.mean << " std=" << r.std);
    CHECK(std::abs(r.mean) <= 0.01);
    const KidReport shifted = kid_protocol(spec, t, gaussian(4, 2.0), 1000, 10, 101);
    INFO("shifted mean=" << shifted.mean);
    CHECK(shifted.mean >= 10.0 * std::abs(r.mean));
    CHECK(shifted.mean >= 10.0 * 0.01);
}

TEST_CASE("KID grows with the mean shift", "[kid][statistics]") {
    const KernelSpec spec;
    const Matrix t = gaussian_test(500, 4, 200);
    double prev = -1.0;
    for (double c : {0.0, 1.0, 2.0}) {
        const KidReport r = kid_protocol(spec, t, gaussian(4, c), 500, 10, 201);
        INFO("c=" << c << " mean=" << r.mean);
        CHECK(r.mean > prev);
        prev = r.mean;
    }
}
