#include "cspnet/euclid.hpp"

#include <cmath>

namespace cspnet::euclid {

std::vector<TangentGrid> flatten_concat(const layers::SpdBatch& x) {
    const int o2 = x.dim * x.dim;
    std::vector<TangentGrid> out(static_cast<std::size_t>(x.items));
    for (int b = 0; b < x.items; ++b) {
        TangentGrid& tg = out[static_cast<std::size_t>(b)];
        tg.bands = x.bands;
        tg.dim = x.dim;
        tg.g.resize(x.wins, static_cast<Eigen::Index>(x.bands) * o2);
        for (int w = 0; w < x.wins; ++w) {
            for (int f = 0; f < x.bands; ++f) {
                const Matrix& s = x.at(b, w, f);
                for (int i = 0; i < x.dim; ++i)
                    for (int j = 0; j < x.dim; ++j)
                        tg.g(w, static_cast<Eigen::Index>(f) * o2 +
                                    i * x.dim + j) = s(i, j);
            }
        }
    }
    return out;
}

layers::SpdBatch unflatten(const std::vector<TangentGrid>& grids) {
    require(!grids.empty(), "unflatten: empty batch");
    const int bands = grids.front().bands;
    const int dim = grids.front().dim;
    const int wins = static_cast<int>(grids.front().g.rows());
    const int o2 = dim * dim;
    layers::SpdBatch out(static_cast<int>(grids.size()), wins, bands, dim);
    for (std::size_t b = 0; b < grids.size(); ++b) {
        const TangentGrid& tg = grids[b];
        require(tg.bands == bands && tg.dim == dim &&
                    tg.g.rows() == wins &&
                    tg.g.cols() == static_cast<Eigen::Index>(bands) * o2,
                "unflatten: inconsistent grid shapes");
        for (int w = 0; w < wins; ++w)
            for (int f = 0; f < bands; ++f) {
                Matrix& s = out.at(static_cast<int>(b), w, f);
                for (int i = 0; i < dim; ++i)
                    for (int j = 0; j < dim; ++j)
                        s(i, j) = tg.g(w, static_cast<Eigen::Index>(f) * o2 +
                                              i * dim + j);
            }
    }
    return out;
}

namespace {

double glorot_limit(Eigen::Index fan_in, Eigen::Index fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

double uniform_pm(double limit, rng::Engine& eng) {
    return limit * (2.0 * rng::unit(eng) - 1.0);
}

void check_conv_args(const ConvSpec& spec, int wins, int bands) {
    require(spec.q >= 1 && spec.q <= wins,
            "conv: kernel height q must satisfy 1 <= q <= windows");
    require(spec.p == 1 || spec.p == bands,
            "conv: kernel width p must be 1 or the band count");
    require(spec.r >= 1, "conv: need at least one output channel");
}

}  // namespace

ConvParams conv_init(const ConvSpec& spec, int dim, bool with_bias,
                     rng::Engine& eng) {
    ConvParams p;
    p.spec = spec;
    const Eigen::Index kw = static_cast<Eigen::Index>(spec.p) * dim * dim;
    const double limit = glorot_limit(spec.q * kw, spec.r);
    p.weight.reserve(static_cast<std::size_t>(spec.r));
    for (int c = 0; c < spec.r; ++c) {
        Matrix k(spec.q, kw);
        for (Eigen::Index i = 0; i < spec.q; ++i)
            for (Eigen::Index j = 0; j < kw; ++j)
                k(i, j) = uniform_pm(limit, eng);
        p.weight.push_back(std::move(k));
    }
    p.bias = with_bias ? Vector(Vector::Zero(spec.r)) : Vector();
    return p;
}

std::pair<std::vector<ConvOut>, ConvContext> conv_forward(
    const ConvParams& params, const std::vector<TangentGrid>& grids) {
    require(!grids.empty(), "conv_forward: empty batch");
    const ConvSpec& spec = params.spec;
    const int dim = grids.front().dim;
    const int o2 = dim * dim;
    const int wins = static_cast<int>(grids.front().g.rows());
    const int bands = grids.front().bands;
    check_conv_args(spec, wins, bands);

    const int rows = wins - spec.q + 1;
    const int cols = bands - spec.p + 1;
    std::vector<ConvOut> out(grids.size());
    for (std::size_t b = 0; b < grids.size(); ++b) {
        const Matrix& g = grids[b].g;
        ConvOut& co = out[b];
        co.rows = rows;
        co.cols = cols;
        co.chans = spec.r;
        co.flat = Vector::Zero(static_cast<Eigen::Index>(rows) * cols *
                               spec.r);
        for (int y = 0; y < rows; ++y) {
            for (int x = 0; x < cols; ++x) {
                const auto window =
                    g.block(y, static_cast<Eigen::Index>(x) * o2, spec.q,
                            static_cast<Eigen::Index>(spec.p) * o2);
                for (int c = 0; c < spec.r; ++c) {
                    double v =
                        (window.array() * params.weight[static_cast<std::size_t>(c)].array())
                            .sum();
                    if (params.bias.size() > 0) v += params.bias(c);
                    co.at(y, x, c) = v;
                }
            }
        }
    }
    ConvContext ctx{grids, spec, dim};
    return {std::move(out), std::move(ctx)};
}

ConvGrads conv_backward(const ConvParams& params, const ConvContext& ctx,
                        const std::vector<ConvOut>& grad_out) {
    require(grad_out.size() == ctx.input.size(),
            "conv_backward: batch size mismatch");
    const ConvSpec& spec = ctx.spec;
    const int o2 = ctx.dim * ctx.dim;

    ConvGrads g;
    g.grad_weight.assign(
        static_cast<std::size_t>(spec.r),
        Matrix::Zero(spec.q, static_cast<Eigen::Index>(spec.p) * o2));
    g.grad_bias = params.bias.size() > 0 ? Vector(Vector::Zero(spec.r))
                                         : Vector();
    g.grad_grids.resize(ctx.input.size());
    for (std::size_t b = 0; b < ctx.input.size(); ++b) {
        const Matrix& in = ctx.input[b].g;
        TangentGrid& gg = g.grad_grids[b];
        gg.bands = ctx.input[b].bands;
        gg.dim = ctx.input[b].dim;
        gg.g = Matrix::Zero(in.rows(), in.cols());
        const ConvOut& go = grad_out[b];
        for (int y = 0; y < go.rows; ++y) {
            for (int x = 0; x < go.cols; ++x) {
                const auto window =
                    in.block(y, static_cast<Eigen::Index>(x) * o2, spec.q,
                             static_cast<Eigen::Index>(spec.p) * o2);
                auto grad_window =
                    gg.g.block(y, static_cast<Eigen::Index>(x) * o2, spec.q,
                               static_cast<Eigen::Index>(spec.p) * o2);
                for (int c = 0; c < spec.r; ++c) {
                    const double d = go.at(y, x, c);
                    g.grad_weight[static_cast<std::size_t>(c)] += d * window;
                    grad_window += d * params.weight[static_cast<std::size_t>(c)];
                    if (g.grad_bias.size() > 0) g.grad_bias(c) += d;
                }
            }
        }
    }
    return g;
}

DenseParams dense_init(int out, int in, bool with_bias, rng::Engine& eng) {
    DenseParams p;
    p.W.resize(out, in);
    const double limit = glorot_limit(in, out);
    for (int i = 0; i < out; ++i)
        for (int j = 0; j < in; ++j) p.W(i, j) = uniform_pm(limit, eng);
    p.b = with_bias ? Vector(Vector::Zero(out)) : Vector();
    return p;
}

Vector dense_forward(const DenseParams& p, const Vector& x) {
    require(x.size() == p.W.cols(), "dense_forward: dimension mismatch");
    Vector y = p.W * x;
    if (p.b.size() > 0) y += p.b;
    return y;
}

DenseGrads dense_backward(const DenseParams& p, const Vector& x,
                          const Vector& grad_out) {
    require(x.size() == p.W.cols() && grad_out.size() == p.W.rows(),
            "dense_backward: dimension mismatch");
    DenseGrads g;
    g.grad_x = p.W.transpose() * grad_out;
    g.grad_W = grad_out * x.transpose();
    g.grad_b = p.b.size() > 0 ? grad_out : Vector();
    return g;
}

SoftmaxCe softmax_ce(const Vector& logits, int label) {
    require(label >= 0 && label < logits.size(),
            "softmax_ce: label out of range");
    const double m = logits.maxCoeff();
    Vector z = logits.array() - m;
    const double lse = std::log(z.array().exp().sum());
    SoftmaxCe out;
    out.loss = lse - z(label);
    out.grad_logits = (z.array() - lse).exp();
    out.grad_logits(label) -= 1.0;
    return out;
}

}  // namespace cspnet::euclid
