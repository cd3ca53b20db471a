#include "cspnet/layers.hpp"

#include <cmath>

namespace cspnet::layers {

using symmat::EigPair;
using symmat::fun_spd;
using symmat::Spectral;
using symmat::sym_eig;

SpdBatch SpdBatch::band(int f) const {
    SpdBatch out(items, wins, 1, dim);
    for (int b = 0; b < items; ++b)
        for (int w = 0; w < wins; ++w) out.at(b, w, 0) = at(b, w, f);
    return out;
}

void SpdBatch::set_band(int f, const SpdBatch& one) {
    require(one.items == items && one.wins == wins && one.bands == 1,
            "SpdBatch::set_band: shape mismatch");
    dim = one.dim;
    for (int b = 0; b < items; ++b)
        for (int w = 0; w < wins; ++w) at(b, w, f) = one.at(b, w, 0);
}

StiefelParam stiefel_random(Eigen::Index o, Eigen::Index c, rng::Engine& eng) {
    const Eigen::Index big = std::max(o, c), small = std::min(o, c);
    Matrix g = rng::gaussian_matrix(big, small, eng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = Matrix(qr.householderQ()).leftCols(small);
    Matrix r = qr.matrixQR().topRows(small).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < small; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    StiefelParam p;
    p.W = (o <= c) ? Matrix(q.transpose()) : q;
    return p;
}

double stiefel_residual(const StiefelParam& p) {
    const Eigen::Index o = p.out_dim(), c = p.in_dim();
    if (o <= c)
        return (p.W * p.W.transpose() - Matrix::Identity(o, o)).norm();
    return (p.W.transpose() * p.W - Matrix::Identity(c, c)).norm();
}

namespace {

/// QR-based re-orthonormalization of a tall matrix, diag(R) forced positive.
Matrix qr_orthonormalize(const Matrix& a) {
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = Matrix(qr.householderQ()).leftCols(a.cols());
    Matrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

}  // namespace

StiefelParam stiefel_retract(const StiefelParam& p, const Matrix& euclid_grad,
                             double lr) {
    require(euclid_grad.rows() == p.W.rows() &&
                euclid_grad.cols() == p.W.cols(),
            "stiefel_retract: gradient shape mismatch");
    const bool wide = p.out_dim() <= p.in_dim();
    // work with the tall orientation (orthonormal columns)
    Matrix x = wide ? Matrix(p.W.transpose()) : p.W;
    Matrix g = wide ? Matrix(euclid_grad.transpose()) : euclid_grad;

    // tangent projection at x: g - x * sym(x^T g)
    Matrix xg = x.transpose() * g;
    Matrix tangent = g - x * symmetrized(xg);
    Matrix stepped = x - lr * tangent;
    Matrix q = qr_orthonormalize(stepped);

    StiefelParam out;
    out.W = wide ? Matrix(q.transpose()) : q;
    return out;
}

std::pair<SpdBatch, BiMapContext> bimap_forward(const StiefelParam& p,
                                                const SpdBatch& x) {
    require(p.in_dim() == x.dim, "bimap_forward: W columns must match slice dim");
    const int o = static_cast<int>(p.out_dim());
    SpdBatch out(x.items, x.wins, x.bands, o);
    for (std::size_t i = 0; i < x.size(); ++i)
        out.s[i] = symmetrized(p.W * x.s[i] * p.W.transpose());
    return {std::move(out), BiMapContext{p.W, x}};
}

BiMapGrads bimap_backward(const BiMapContext& ctx, const SpdBatch& grad_out) {
    require(grad_out.size() == ctx.input.size() &&
                grad_out.dim == ctx.W.rows(),
            "bimap_backward: gradient shape mismatch");
    BiMapGrads g;
    g.grad_x = SpdBatch(ctx.input.items, ctx.input.wins, ctx.input.bands,
                        ctx.input.dim);
    g.grad_W = Matrix::Zero(ctx.W.rows(), ctx.W.cols());
    for (std::size_t i = 0; i < ctx.input.size(); ++i) {
        const Matrix& go = grad_out.s[i];
        g.grad_x.s[i] = symmetrized(ctx.W.transpose() * go * ctx.W);
        g.grad_W += (go + go.transpose()) * ctx.W * ctx.input.s[i];
    }
    return g;
}

std::pair<SpdBatch, ReEigContext> reeig_forward(const SpdBatch& x,
                                                double eps) {
    require(eps > 0.0, "reeig_forward: eps must be positive");
    SpdBatch out(x.items, x.wins, x.bands, x.dim);
    ReEigContext ctx;
    ctx.eps = eps;
    ctx.items = x.items;
    ctx.wins = x.wins;
    ctx.bands = x.bands;
    ctx.dim = x.dim;
    ctx.eigs.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        EigPair e = sym_eig(SymMatrix::from_symmetric(x.s[i]));
        Vector clamped = e.lam.cwiseMax(eps);
        out.s[i] = symmetrized(e.U * clamped.asDiagonal() * e.U.transpose());
        ctx.eigs.push_back(std::move(e));
    }
    return {std::move(out), std::move(ctx)};
}

SpdBatch reeig_backward(const ReEigContext& ctx, const SpdBatch& grad_out) {
    require(grad_out.size() == ctx.eigs.size(),
            "reeig_backward: gradient shape mismatch");
    const double eps = ctx.eps;
    SpdBatch grad_x(ctx.items, ctx.wins, ctx.bands, ctx.dim);
    for (std::size_t i = 0; i < ctx.eigs.size(); ++i) {
        grad_x.s[i] =
            symmat::fun_spd_backward(
                ctx.eigs[i],
                [eps](double l) { return std::max(eps, l); },
                [eps](double l) { return l > eps ? 1.0 : 0.0; },
                SymMatrix::from_symmetric(grad_out.s[i]))
                .mat();
    }
    return grad_x;
}

std::pair<SpdBatch, LogEigContext> logeig_forward(const SpdBatch& x) {
    SpdBatch out(x.items, x.wins, x.bands, x.dim);
    LogEigContext ctx;
    ctx.items = x.items;
    ctx.wins = x.wins;
    ctx.bands = x.bands;
    ctx.dim = x.dim;
    ctx.eigs.reserve(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        EigPair e = sym_eig(SymMatrix::from_symmetric(x.s[i]));
        if (e.lam.minCoeff() <= 0.0) {
            throw DomainError(
                "logeig_forward: slice has eigenvalue " +
                std::to_string(e.lam.minCoeff()) +
                " <= 0; input must be rectified (ReEig) before LOG");
        }
        out.s[i] = fun_spd(e, Spectral::Log).mat();
        ctx.eigs.push_back(std::move(e));
    }
    return {std::move(out), std::move(ctx)};
}

SpdBatch logeig_backward(const LogEigContext& ctx, const SpdBatch& grad_out) {
    require(grad_out.size() == ctx.eigs.size(),
            "logeig_backward: gradient shape mismatch");
    SpdBatch grad_x(ctx.items, ctx.wins, ctx.bands, ctx.dim);
    for (std::size_t i = 0; i < ctx.eigs.size(); ++i) {
        grad_x.s[i] = symmat::fun_spd_backward(
                          ctx.eigs[i], [](double l) { return std::log(l); },
                          [](double l) { return 1.0 / l; },
                          SymMatrix::from_symmetric(grad_out.s[i]))
                          .mat();
    }
    return grad_x;
}

namespace {

/// Barycenter of the batch slices. Eigenvalues are floored at a tiny
/// relative threshold first so rank-deficient slices (o > C before ReEig)
/// keep the mean well-defined; slices already SPD pass through unchanged.
SpdMatrix batch_barycenter(const SpdBatch& x) {
    std::vector<SpdMatrix> pts;
    pts.reserve(x.size());
    for (const Matrix& m : x.s) {
        EigPair e = sym_eig(SymMatrix::from_symmetric(m));
        const double floor = 1e-12 * std::max(1.0, e.lam.cwiseAbs().maxCoeff());
        if (e.lam.minCoeff() > floor) {
            pts.push_back(SpdMatrix::from_symmetric(m));
        } else {
            Vector lam = e.lam.cwiseMax(floor);
            pts.push_back(SpdMatrix::from_symmetric(
                symmetrized(e.U * lam.asDiagonal() * e.U.transpose())));
        }
    }
    return geometry::frechet_mean(pts);
}

}  // namespace

std::pair<SpdBatch, RbnContext> rbn_forward(const SpdBatch& x, RbnState& state,
                                            Mode mode) {
    require(state.running_mean.n() == x.dim && state.G.n() == x.dim,
            "rbn_forward: state dimension mismatch");
    RbnContext ctx;
    ctx.input = x;
    if (mode == Mode::Train) {
        require(x.items >= 2, "rbn_forward: train mode needs batch size >= 2");
        ctx.batch_mean = batch_barycenter(x);
        state.running_mean = geometry::geodesic(
            state.running_mean, ctx.batch_mean, 1.0 - state.momentum);
    } else {
        ctx.batch_mean = state.running_mean;
    }
    ctx.whiten = fun_spd(ctx.batch_mean, Spectral::InvSqrt).mat();
    ctx.bias = state.G.mat();
    ctx.g_eig = sym_eig(state.G);
    if (ctx.g_eig.lam.minCoeff() <= 0.0)
        throw DomainError("rbn_forward: bias parameter G is not SPD");
    ctx.bias_sqrt = fun_spd(ctx.g_eig, Spectral::Sqrt).mat();

    SpdBatch out(x.items, x.wins, x.bands, x.dim);
    const Matrix carrier = ctx.bias_sqrt * ctx.whiten;
    for (std::size_t i = 0; i < x.size(); ++i)
        out.s[i] = symmetrized(carrier * x.s[i] * carrier.transpose());
    return {std::move(out), std::move(ctx)};
}

RbnGrads rbn_backward(const RbnContext& ctx, const SpdBatch& grad_out) {
    require(grad_out.size() == ctx.input.size(),
            "rbn_backward: gradient shape mismatch");
    const Eigen::Index n = ctx.whiten.rows();
    const Matrix& a = ctx.whiten;     // constant under stop-gradient
    const Matrix& h = ctx.bias_sqrt;  // G^{1/2}

    RbnGrads g;
    g.grad_x = SpdBatch(ctx.input.items, ctx.input.wins, ctx.input.bands,
                        ctx.input.dim);
    Matrix grad_h = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < ctx.input.size(); ++i) {
        const Matrix& go = grad_out.s[i];
        g.grad_x.s[i] = symmetrized(a * h * go * h * a);
        const Matrix m = a * ctx.input.s[i] * a;  // whitened slice
        grad_h += go * h * m + m * h * go;
    }
    g.euclid_grad_G = symmat::fun_spd_backward(
        ctx.g_eig, [](double l) { return std::sqrt(l); },
        [](double l) { return 0.5 / std::sqrt(l); },
        SymMatrix::from_symmetric(symmetrized(grad_h)));
    g.riem_grad_G = SymMatrix::from_symmetric(
        symmetrized(ctx.bias * g.euclid_grad_G.mat() * ctx.bias));
    return g;
}

}  // namespace cspnet::layers
