#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cspnet/euclid.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace cspnet;
using namespace cspnet::euclid;
using layers::SpdBatch;

namespace {

SpdBatch random_sym_batch(int b, int w, int f, int n, rng::Engine& eng) {
    SpdBatch x(b, w, f, n);
    for (auto& s : x.s) s = testsup::random_sym(n, eng).mat();
    return x;
}

std::vector<TangentGrid> random_grids(int b, int w, int f, int o,
                                      rng::Engine& eng) {
    std::vector<TangentGrid> g(static_cast<std::size_t>(b));
    for (auto& tg : g) {
        tg.bands = f;
        tg.dim = o;
        tg.g = rng::gaussian_matrix(w, static_cast<Eigen::Index>(f) * o * o,
                                    eng);
    }
    return g;
}

double out_dot(const std::vector<ConvOut>& a, const std::vector<ConvOut>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i].flat.dot(b[i].flat);
    return s;
}

}  // namespace

TEST_CASE("flatten_concat shapes") {
    auto eng = testsup::engine(1);
    SpdBatch x = random_sym_batch(2, 5, 9, 20, eng);
    auto grids = flatten_concat(x);
    CHECK(grids.size() == 2);
    CHECK(grids[0].g.rows() == 5);
    CHECK(grids[0].g.cols() == 3600);
}

TEST_CASE("flatten_concat single slice is row-major order") {
    SpdBatch x(1, 1, 1, 2);
    x.s[0] << 1.0, 2.0, 2.0, 4.0;
    auto grids = flatten_concat(x);
    CHECK(grids[0].g.rows() == 1);
    CHECK(grids[0].g.cols() == 4);
    CHECK(grids[0].g(0, 0) == 1.0);
    CHECK(grids[0].g(0, 1) == 2.0);
    CHECK(grids[0].g(0, 2) == 2.0);
    CHECK(grids[0].g(0, 3) == 4.0);
}

TEST_CASE("flatten round-trips exactly") {
    auto eng = testsup::engine(2);
    SpdBatch x = random_sym_batch(3, 2, 4, 5, eng);
    SpdBatch back = unflatten(flatten_concat(x));
    CHECK(back.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back.s[i] == x.s[i]);
}

TEST_CASE("conv output shape law") {
    auto eng = testsup::engine(3);
    struct Case {
        int w, f, o, p, q, r, outr, outc;
    };
    for (const Case& c : std::vector<Case>{{5, 9, 4, 9, 5, 10, 1, 1},
                                           {5, 9, 4, 1, 2, 20, 4, 9},
                                           {3, 2, 3, 2, 1, 7, 3, 1},
                                           {4, 6, 2, 1, 4, 1, 1, 6}}) {
        auto grids = random_grids(2, c.w, c.f, c.o, eng);
        ConvParams params =
            conv_init(ConvSpec{c.p, c.q, c.r}, c.o, false, eng);
        auto [out, ctx] = conv_forward(params, grids);
        CHECK(out[0].rows == c.outr);
        CHECK(out[0].cols == c.outc);
        CHECK(out[0].chans == c.r);
        CHECK(out[0].flat.size() == c.outr * c.outc * c.r);
    }
}

TEST_CASE("conv spec (1,2,20) on W=5, F=9 flattens to a 720-vector") {
    auto eng = testsup::engine(4);
    auto grids = random_grids(1, 5, 9, 4, eng);
    ConvParams params = conv_init(ConvSpec{1, 2, 20}, 4, false, eng);
    auto [out, ctx] = conv_forward(params, grids);
    CHECK(out[0].flat.size() == 720);  // 9 * (5-1) * 20
}

TEST_CASE("conv with zero weights and bias b is constant b") {
    auto eng = testsup::engine(5);
    auto grids = random_grids(1, 3, 2, 2, eng);
    ConvParams params = conv_init(ConvSpec{1, 2, 3}, 2, true, eng);
    for (auto& w : params.weight) w.setZero();
    params.bias << 1.5, -2.0, 0.25;
    auto [out, ctx] = conv_forward(params, grids);
    for (int y = 0; y < out[0].rows; ++y)
        for (int x = 0; x < out[0].cols; ++x) {
            CHECK(out[0].at(y, x, 0) == 1.5);
            CHECK(out[0].at(y, x, 1) == -2.0);
            CHECK(out[0].at(y, x, 2) == 0.25);
        }
}

TEST_CASE("conv validates p and q") {
    auto eng = testsup::engine(6);
    auto grids = random_grids(1, 3, 4, 2, eng);
    ConvParams bad_q = conv_init(ConvSpec{1, 5, 2}, 2, false, eng);
    CHECK_THROWS_AS(conv_forward(bad_q, grids), ArgumentError);
    ConvParams bad_p = conv_init(ConvSpec{2, 1, 2}, 2, false, eng);
    CHECK_THROWS_AS(conv_forward(bad_p, grids), ArgumentError);
}

TEST_CASE("conv backward matches finite differences") {
    auto eng = testsup::engine(7);
    for (int rep = 0; rep < 20; ++rep) {
        const int w = 4, f = 3, o = 2;
        auto grids = random_grids(2, w, f, o, eng);
        ConvParams params = conv_init(ConvSpec{1, 2, 3}, o, true, eng);
        auto [out, ctx] = conv_forward(params, grids);

        std::vector<ConvOut> go = out;
        for (auto& g : go)
            g.flat = rng::gaussian_matrix(g.flat.size(), 1, eng);
        ConvGrads grads = conv_backward(params, ctx, go);

        // weight direction
        Matrix dw = rng::gaussian_matrix(params.weight[0].rows(),
                                         params.weight[0].cols(), eng);
        auto loss_w = [&](const Matrix& wmat) {
            ConvParams pp = params;
            pp.weight[0] = wmat;
            auto [oo, cc] = conv_forward(pp, grids);
            return out_dot(oo, go);
        };
        double fd = testsup::directional_fd(loss_w, params.weight[0], dw);
        double an = (grads.grad_weight[0].array() * dw.array()).sum();
        CHECK(testsup::rel_err(an, fd) < 1e-5);

        // input direction
        Matrix dg = rng::gaussian_matrix(grids[0].g.rows(),
                                         grids[0].g.cols(), eng);
        auto loss_g = [&](const Matrix& gmat) {
            auto gg = grids;
            gg[0].g = gmat;
            auto [oo, cc] = conv_forward(params, gg);
            return out_dot(oo, go);
        };
        double fdg = testsup::directional_fd(loss_g, grids[0].g, dg);
        double ang = (grads.grad_grids[0].g.array() * dg.array()).sum();
        CHECK(testsup::rel_err(ang, fdg) < 1e-5);

        // bias: grad is the sum of output grads per channel
        double bsum = 0.0;
        for (const auto& g : go)
            for (int y = 0; y < g.rows; ++y)
                for (int x = 0; x < g.cols; ++x) bsum += g.at(y, x, 1);
        CHECK(grads.grad_bias(1) == doctest::Approx(bsum).epsilon(1e-12));
    }
}

TEST_CASE("dense identity and zero input") {
    auto eng = testsup::engine(8);
    DenseParams p;
    p.W = Matrix::Identity(4, 4);
    p.b = Vector();
    Vector x = rng::gaussian_matrix(4, 1, eng);
    CHECK((dense_forward(p, x) - x).norm() == 0.0);

    DenseParams pb = dense_init(3, 4, true, eng);
    pb.b << 1.0, 2.0, 3.0;
    Vector zero = Vector::Zero(4);
    CHECK((dense_forward(pb, zero) - pb.b).norm() == 0.0);
}

TEST_CASE("dense backward matches finite differences") {
    auto eng = testsup::engine(9);
    for (int rep = 0; rep < 20; ++rep) {
        DenseParams p = dense_init(3, 5, true, eng);
        Vector x = rng::gaussian_matrix(5, 1, eng);
        Vector go = rng::gaussian_matrix(3, 1, eng);
        DenseGrads g = dense_backward(p, x, go);

        Matrix dw = rng::gaussian_matrix(3, 5, eng);
        auto loss_w = [&](const Matrix& w) {
            DenseParams pp = p;
            pp.W = w;
            return dense_forward(pp, x).dot(go);
        };
        double fd = testsup::directional_fd(loss_w, p.W, dw, 1e-6);
        double an = (g.grad_W.array() * dw.array()).sum();
        CHECK(testsup::rel_err(an, fd) < 1e-6);

        Matrix dx = rng::gaussian_matrix(5, 1, eng);
        auto loss_x = [&](const Matrix& xv) {
            return dense_forward(p, Vector(xv)).dot(go);
        };
        double fdx = testsup::directional_fd(loss_x, x, dx, 1e-6);
        double anx = g.grad_x.dot(Vector(dx));
        CHECK(testsup::rel_err(anx, fdx) < 1e-6);
    }
}

TEST_CASE("softmax_ce symmetric two-logit case") {
    Vector logits = Vector::Zero(2);
    SoftmaxCe r = softmax_ce(logits, 0);
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(r.grad_logits(0) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(r.grad_logits(1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax_ce is log-sum-exp stabilized") {
    Vector logits(2);
    logits << 1000.0, 0.0;
    SoftmaxCe r = softmax_ce(logits, 0);
    CHECK(std::isfinite(r.loss));
    CHECK(r.loss < 1e-12);
    CHECK(r.grad_logits.allFinite());
}

TEST_CASE("softmax_ce rejects out-of-range labels") {
    Vector logits = Vector::Zero(3);
    CHECK_THROWS_AS(softmax_ce(logits, 3), ArgumentError);
    CHECK_THROWS_AS(softmax_ce(logits, -1), ArgumentError);
}

TEST_CASE("softmax_ce gradient sums to zero and matches finite differences") {
    auto eng = testsup::engine(10);
    for (int rep = 0; rep < 20; ++rep) {
        Vector logits = rng::gaussian_matrix(4, 1, eng);
        int label = static_cast<int>(rng::below(eng, 4));
        SoftmaxCe r = softmax_ce(logits, label);
        CHECK(std::abs(r.grad_logits.sum()) < 1e-12);

        Matrix dir = rng::gaussian_matrix(4, 1, eng);
        auto loss = [&](const Matrix& l) {
            return softmax_ce(Vector(l), label).loss;
        };
        double fd = testsup::directional_fd(loss, logits, dir, 1e-6);
        double an = r.grad_logits.dot(Vector(dir));
        CHECK(testsup::rel_err(an, fd) < 1e-8);
    }
}
