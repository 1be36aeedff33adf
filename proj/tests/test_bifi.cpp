#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bfvae/bifi/bifi.hpp"
#include "support.hpp"

using namespace bfvae;
using Catch::Approx;

namespace {

VaeModel random_vae(Rng& rng, std::size_t D, std::vector<std::size_t> hidden, std::size_t d) {
    VaeModel m = make_vae(D, VaeArchitecture{std::move(hidden), Activation::GeLU, d}, 1.0, rng);
    for (auto t : tensors(m.nets))
        for (double& v : t) v = 0.5 * standard_normal(rng);
    return m;
}

VaeModel linear_vae(std::size_t D, std::size_t d) {
    Rng rng = make_rng(1, {stream::kInit});
    return make_vae(D, VaeArchitecture{{}, Activation::GeLU, d}, 1.0, rng);
}

// Rows on a smooth one-parameter curve in R^D.
Matrix curve_data(std::size_t n, std::size_t D, std::uint64_t seed) {
    Rng rng = make_rng(seed, {stream::kData});
    Matrix m(n, D);
    for (std::size_t r = 0; r < n; ++r) {
        const double t = uniform(rng, -1.0, 1.0);
        for (std::size_t c = 0; c < D; ++c)
            m(r, c) = std::sin(1.3 * t + 0.4 * static_cast<double>(c)) + 0.5 * t;
    }
    return m;
}

TrainConfig small_train(std::size_t epochs) {
    TrainConfig c;
    c.arch = VaeArchitecture{{16, 8}, Activation::GeLU, 2};
    c.beta = 1e-3;
    c.batch_size = 16;
    c.epochs = epochs;
    return c;
}

BfTrainConfig small_bf(std::size_t epochs) {
    BfTrainConfig c;
    c.batch_size = 16;
    c.epochs = epochs;
    return c;
}

BiFiDataset make_pairs(Matrix lf, Matrix hf) {
    BiFiDataset p;
    p.lf = std::move(lf);
    p.hf = std::move(hf);
    return p;
}

}  // namespace

TEST_CASE("latent_regress examples", "[bifi][regress]") {
    const auto id = LatentAutoRegressor::identity(3);
    const Vector z{0.4, -1.2, 3.0};
    CHECK(latent_regress(id, z) == z);
    const LatentAutoRegressor zero_a{{0.0, 0.0}, {0.7, -0.1}, 0.0};
    CHECK(latent_regress(zero_a, Vector{5.0, -9.0}) == zero_a.b);
    const LatentAutoRegressor r{{2.0, -1.0}, {0.5, 0.5}, 0.0};
    CHECK(latent_regress(r, Vector{1.0, 1.0}) == Vector{2.5, -0.5});
    CHECK_THROWS_AS(latent_regress(r, Vector{1.0}), ShapeError);
}

TEST_CASE("sample_hf_latent examples", "[bifi][regress]") {
    const LatentAutoRegressor r{{2.0, -1.0}, {0.5, 0.5}, 0.0};
    const Vector zl{0.3, 0.9};
    CHECK(sample_hf_latent(r, zl, Vector{1.7, -2.2}) == latent_regress(r, zl));
    LatentAutoRegressor noisy = r;
    noisy.gamma = 0.8;
    CHECK(sample_hf_latent(noisy, zl, Vector{0.0, 0.0}) == latent_regress(r, zl));
    const auto id = LatentAutoRegressor::identity(2, 1.0);
    const Vector e{0.25, -1.5};
    CHECK(sample_hf_latent(id, Vector{0.0, 0.0}, e) == e);
    // batch form agrees with the single-row form
    const Matrix zb{{0.3, 0.9}, {-1.0, 2.0}};
    const Matrix eb{{0.1, 0.2}, {0.3, -0.4}};
    const Matrix out = sample_hf_latent(noisy, zb, eb);
    for (std::size_t r2 = 0; r2 < 2; ++r2) CHECK(out.row_vector(r2) == sample_hf_latent(noisy, zb.row(r2), eb.row(r2)));
}

TEST_CASE("regressor invariants", "[bifi][regress]") {
    LatentAutoRegressor r = LatentAutoRegressor::identity(2);
    r.gamma = -0.1;
    CHECK_THROWS(r.validate());
    LatentAutoRegressor bad{{1.0}, {0.0, 0.0}, 0.0};
    CHECK_THROWS(bad.validate());
}

TEST_CASE("BF model marks only the last decoder layer trainable", "[bifi]") {
    Rng rng = make_rng(2, {stream::kInit});
    const VaeModel lf = random_vae(rng, 5, {4, 3}, 2);
    const BfVaeModel bf = make_bf_vae(lf, 0.0);
    CHECK(bf.trainable_mask == std::vector<bool>{false, false, true});
    CHECK(bf.reg == LatentAutoRegressor::identity(2));
    BfVaeModel wrong = bf;
    wrong.trainable_mask = {false, true, true};
    CHECK_THROWS_AS(wrong.validate(), ShapeError);
}

TEST_CASE("hf_loss reduces to the LF reconstruction error", "[bifi][loss]") {
    VaeModel lf = linear_vae(3, 2);
    for (auto t : tensors(lf.nets)) std::fill(t.begin(), t.end(), 0.0);
    const Vector v{0.5, -1.5, 2.0};
    lf.nets.decoder.layers.back().bias = v;
    const BfVaeModel bf = make_bf_vae(lf, 0.0);
    Matrix x(2, 3);
    for (std::size_t r = 0; r < 2; ++r) std::copy(v.begin(), v.end(), x.row(r).begin());
    const Matrix zeros(2, 2, 0.0);
    CHECK(hf_loss(bf, x, x, zeros, zeros) == 0.0);

    Rng rng = make_rng(3, {stream::kInit});
    const VaeModel rnd = random_vae(rng, 4, {3}, 2);
    const Matrix xl = test::random_matrix(rng, 5, 4);
    const Matrix eps0(5, 2, 0.0);
    // identity regressor, eps = eta = 0, x_H = x_L: reconstruction of x_L from z = mu
    const Matrix rec = decode(rnd, encode(rnd, xl).mu);
    double lf_rec = 0.0;
    for (std::size_t r = 0; r < 5; ++r) lf_rec += squared_distance(rec.row(r), xl.row(r));
    lf_rec /= 5.0;
    CHECK(hf_loss(make_bf_vae(rnd, 0.0), xl, xl, eps0, eps0) == Approx(lf_rec).epsilon(1e-12));
}

TEST_CASE("hf_loss of a zero decoder scales quadratically with x_H", "[bifi][loss]") {
    VaeModel lf = linear_vae(3, 2);
    for (auto t : tensors(lf.nets.decoder)) std::fill(t.begin(), t.end(), 0.0);
    const BfVaeModel bf = make_bf_vae(lf, 0.0);
    Rng rng = make_rng(4, {stream::kInit});
    const Matrix xl = test::random_matrix(rng, 4, 3);
    Matrix xh = test::random_matrix(rng, 4, 3);
    const Matrix eps = test::random_matrix(rng, 4, 2);
    const double base = hf_loss(bf, xl, xh, eps);
    for (double& v : xh.flat()) v *= -3.0;
    CHECK(hf_loss(bf, xl, xh, eps) == Approx(9.0 * base).epsilon(1e-14));
}

TEST_CASE("hf_loss single-pair hand evaluation", "[bifi][loss]") {
    VaeModel lf = linear_vae(1, 1);
    lf.nets.encoder.layers[0].weights = Matrix{{0.5}, {-1.0}};
    lf.nets.encoder.layers[0].bias = Vector{0.1, 0.2};
    lf.nets.decoder.layers[0].weights = Matrix{{2.0}};
    lf.nets.decoder.layers[0].bias = Vector{-0.3};
    BfVaeModel bf = make_bf_vae(lf, 0.4);
    bf.reg.a = Vector{1.5};
    bf.reg.b = Vector{-0.2};
    const double xl = 0.8, xh = 1.1, eps = 1.3, eta = -0.6;
    const double mu = 0.5 * xl + 0.1;
    const double lv = -1.0 * xl + 0.2;
    const double zl = std::exp(lv / 2) * eps + mu;
    const double zh = 1.5 * zl - 0.2 + 0.4 * eta;
    const double xhat = 2.0 * zh - 0.3;
    CHECK(hf_loss(bf, Matrix{{xl}}, Matrix{{xh}}, Matrix{{eps}}, Matrix{{eta}}) ==
          Approx((xhat - xh) * (xhat - xh)).epsilon(1e-14));
}

TEST_CASE("hf_loss rejects empty and misaligned batches", "[bifi][loss]") {
    const BfVaeModel bf = make_bf_vae(linear_vae(3, 2), 0.0);
    CHECK_THROWS_AS(hf_loss(bf, Matrix(0, 3), Matrix(0, 3), Matrix(0, 2)), ShapeError);
    CHECK_THROWS_AS(hf_loss(bf, Matrix(2, 3), Matrix(3, 3), Matrix(2, 2)), ShapeError);
    CHECK_THROWS_AS(hf_loss(bf, Matrix(2, 3), Matrix(2, 4), Matrix(2, 2)), ShapeError);
    const BfVaeModel noisy = make_bf_vae(linear_vae(3, 2), 0.5);
    CHECK_THROWS_AS(hf_loss(noisy, Matrix(2, 3), Matrix(2, 3), Matrix(2, 2)), ShapeError);
}

TEST_CASE("hf_loss gradients match central differences", "[bifi][gradcheck]") {
    Rng rng = make_rng(5, {stream::kInit});
    std::uniform_int_distribution<std::size_t> width(1, 8);
    std::uniform_int_distribution<std::size_t> latent(1, 3);
    std::uniform_int_distribution<std::size_t> depth(0, 2);
    for (int cfg = 0; cfg < 25; ++cfg) {
        const std::size_t D = width(rng);
        const std::size_t d = latent(rng);
        std::vector<std::size_t> hidden(depth(rng));
        for (auto& h : hidden) h = width(rng);
        const double gamma = cfg % 2 ? uniform(rng, 0.1, 1.0) : 0.0;
        BfVaeModel m = make_bf_vae(random_vae(rng, D, hidden, d), gamma);
        for (double& a : m.reg.a) a = uniform(rng, 0.5, 1.5);
        for (double& b : m.reg.b) b = 0.3 * standard_normal(rng);
        const Matrix xl = test::random_matrix(rng, 4, D);
        const Matrix xh = test::random_matrix(rng, 4, D);
        const Matrix eps = test::random_matrix(rng, 4, d);
        const Matrix eta = test::random_matrix(rng, 4, d);

        const auto lg = hf_loss_and_grad(m, xl, xh, eps, eta);
        BfTrainable t = extract_trainable(m);
        BfVaeModel probe = m;
        const auto worst = test::worst_fd_mismatch(tensors(t), tensors(lg.grads), [&] {
            apply_trainable(probe, t);
            return hf_loss(probe, xl, xh, eps, eta);
        });
        INFO("config " << cfg << " D=" << D << " d=" << d << " gamma=" << gamma << " " << test::describe(worst));
        CHECK(worst.err < 1e-4);
    }
}

TEST_CASE("train_bf freezes everything but a, b and the last decoder layer", "[bifi][train]") {
    const Matrix lf_rows = curve_data(64, 6, 1);
    const auto lf = train_vae(lf_rows, small_train(50), 7);
    Matrix hf_rows = curve_data(24, 6, 2);
    const BiFiDataset pairs = make_pairs(hf_rows, [&] {
        Matrix h = hf_rows;
        for (double& v : h.flat()) v = 1.1 * v + 0.2;
        return h;
    }());
    const auto bf = train_bf(lf.model, pairs, small_bf(40), 9);
    CHECK(freeze_violations(lf.model, bf.model).empty());
    CHECK(bf.model.base.nets.encoder == lf.model.nets.encoder);
    const auto& d0 = lf.model.decoder().layers;
    const auto& d1 = bf.model.base.decoder().layers;
    for (std::size_t k = 0; k + 1 < d0.size(); ++k) CHECK(d0[k] == d1[k]);
    CHECK_FALSE(d0.back() == d1.back());
    CHECK_FALSE(bf.model.reg == LatentAutoRegressor::identity(2));
    CHECK(bf.epoch_loss.size() == 40);

    // determinism
    const auto again = train_bf(lf.model, pairs, small_bf(40), 9);
    CHECK(again.model == bf.model);
    CHECK(again.epoch_loss == bf.epoch_loss);
}

TEST_CASE("freeze_violations names the changed tensors", "[bifi]") {
    Rng rng = make_rng(6, {stream::kInit});
    const VaeModel lf = random_vae(rng, 4, {3}, 2);
    BfVaeModel bf = make_bf_vae(lf, 0.0);
    CHECK(freeze_violations(lf, bf).empty());
    bf.base.nets.decoder.layers.back().bias[0] += 1.0;
    bf.reg.a[0] = 3.0;
    CHECK(freeze_violations(lf, bf).empty());
    bf.base.nets.encoder.layers[0].weights(0, 0) = std::nextafter(bf.base.nets.encoder.layers[0].weights(0, 0), 10.0);
    bf.base.nets.decoder.layers[0].bias[1] = -7.0;
    const auto v = freeze_violations(lf, bf);
    CHECK(v == std::vector<std::string>{"encoder", "decoder layer 0"});
}

TEST_CASE("train_bf lowers the fixed-noise training loss", "[bifi][train]") {
    const Matrix lf_rows = curve_data(64, 6, 3);
    const auto lf = train_vae(lf_rows, small_train(100), 11);
    const Matrix pl = curve_data(20, 6, 4);
    Matrix ph = pl;
    for (std::size_t r = 0; r < ph.rows(); ++r)
        for (std::size_t c = 0; c < ph.cols(); ++c) ph(r, c) = 0.9 * pl(r, c) + 0.1 * static_cast<double>(c);
    const BiFiDataset pairs = make_pairs(pl, ph);
    const auto bf = train_bf(lf.model, pairs, small_bf(200), 12);

    Rng rng = make_rng(13, {stream::kSample});
    const Matrix eps = standard_normal_matrix(rng, pairs.pairs(), 2);
    const Matrix xl = lf.model.scaler.forward(pairs.lf);
    const Matrix xh = lf.model.scaler.forward(pairs.hf);
    const double before = hf_loss(make_bf_vae(lf.model, 0.0), xl, xh, eps);
    const double after = hf_loss(bf.model, xl, xh, eps);
    INFO("before=" << before << " after=" << after);
    CHECK(after <= before);
}

TEST_CASE("train_bf on x_H = x_L keeps the regressor near identity", "[bifi][train]") {
    const Matrix rows = curve_data(64, 6, 5);
    const auto lf = train_vae(rows, small_train(400), 14);
    const BiFiDataset pairs = make_pairs(rows.slice_rows(0, 32), rows.slice_rows(0, 32));
    const auto bf = train_bf(lf.model, pairs, small_bf(200), 15);

    Rng rng = make_rng(16, {stream::kSample});
    const Matrix eps = standard_normal_matrix(rng, pairs.pairs(), 2);
    const Matrix x = lf.model.scaler.forward(pairs.lf);
    const double before = hf_loss(make_bf_vae(lf.model, 0.0), x, x, eps);
    const double after = hf_loss(bf.model, x, x, eps);
    INFO("before=" << before << " after=" << after);
    CHECK(after <= before);
    double drift = 0.0;
    for (double a : bf.model.reg.a) drift = std::max(drift, std::abs(a - 1.0));
    double offset = 0.0;
    for (double b : bf.model.reg.b) offset = std::max(offset, std::abs(b));
    INFO("max|a-1|=" << drift << " max|b|=" << offset);
    CHECK(drift + offset <= 0.5);
}

TEST_CASE("train_bf rejects mismatched and empty data", "[bifi][train]") {
    const auto lf = train_vae(curve_data(16, 6, 6), small_train(2), 1);
    CHECK_THROWS_AS(train_bf(lf.model, make_pairs(Matrix(4, 5), Matrix(4, 5)), small_bf(1), 1), ShapeError);
    CHECK_THROWS_AS(train_bf(lf.model, make_pairs(Matrix(4, 6), Matrix(3, 6)), small_bf(1), 1), ShapeError);
    CHECK_THROWS_AS(train_bf(lf.model, make_pairs(Matrix(0, 6), Matrix(0, 6)), small_bf(1), 1), UsageError);
}

TEST_CASE("generate_hf with identity regressor replays sample_vae", "[bifi][generate]") {
    Rng rng = make_rng(7, {stream::kInit});
    VaeModel lf = random_vae(rng, 5, {4}, 3);
    lf.scaler.shift = Vector{1, 2, 3, 4, 5};
    lf.scaler.scale = Vector{0.5, 1, 2, 1, 3};
    const BfVaeModel bf = make_bf_vae(lf, 0.0);
    CHECK(generate_hf(bf, 40, 21) == sample_vae(lf, 40, 21));
    CHECK(generate_hf(bf, 40, 21) == generate_hf(bf, 40, 21));
    const Matrix g = generate_hf(bf, 7, 1);
    CHECK(g.rows() == 7);
    CHECK(g.cols() == 5);
}

TEST_CASE("generate_hf mean of a linear chain", "[bifi][generate]") {
    VaeModel lf = linear_vae(3, 2);
    lf.nets.decoder.layers[0].weights = Matrix{{1.0, -0.5}, {0.2, 2.0}, {0.0, 0.7}};
    lf.nets.decoder.layers[0].bias = Vector{3.0, -1.0, 0.5};
    BfVaeModel bf = make_bf_vae(lf, 0.0);
    bf.reg.a = Vector{0.8, 1.3};
    bf.reg.b = Vector{0.4, -0.6};
    const std::size_t n = 100000;
    const Matrix s = generate_hf(bf, n, 5);
    const auto& W = lf.nets.decoder.layers[0].weights;
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += s(r, c);
        mean /= static_cast<double>(n);
        const double want = W(c, 0) * 0.4 + W(c, 1) * -0.6 + lf.nets.decoder.layers[0].bias[c];
        const double sd = std::hypot(W(c, 0) * 0.8, W(c, 1) * 1.3);
        const double se = sd / std::sqrt(static_cast<double>(n));
        INFO("column " << c << " mean=" << mean << " want=" << want);
        CHECK(std::abs(mean - want) < 3 * se);
    }
}

TEST_CASE("train_hf_baseline matches train_vae", "[bifi][train]") {
    const Matrix rows = curve_data(20, 4, 8);
    const auto a = train_hf_baseline(rows, small_train(5), 3);
    const auto b = train_vae(rows, small_train(5), 3);
    CHECK(a.model == b.model);
}

TEST_CASE("BiFiDataset head keeps rows aligned", "[bifi]") {
    BiFiDataset p = make_pairs(Matrix{{1, 2}, {3, 4}, {5, 6}}, Matrix{{7, 8}, {9, 10}, {11, 12}});
    p.inputs = {{0.1}, {0.2}, {0.3}};
    const auto h = p.head(2);
    CHECK(h.lf == Matrix{{1, 2}, {3, 4}});
    CHECK(h.hf == Matrix{{7, 8}, {9, 10}});
    CHECK(h.inputs.size() == 2);
    CHECK_THROWS(p.head(4));
}
