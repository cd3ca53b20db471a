#include "cspnet/symmat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cspnet::symmat {

namespace {

double offdiag_norm(const Matrix& a) {
    const Eigen::Index n = a.rows();
    double s = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
        for (Eigen::Index q = p + 1; q < n; ++q) s += 2.0 * a(p, q) * a(p, q);
    return std::sqrt(s);
}

constexpr int kMaxSweeps = 100;

}  // namespace

EigPair sym_eig(const SymMatrix& S) {
    const Eigen::Index n = S.n();
    Matrix a = S.mat();
    Matrix v = Matrix::Identity(n, n);

    const double tol = 1e-12 * a.norm();
    double off = offdiag_norm(a);
    int sweep = 0;
    while (off > tol) {
        if (sweep++ >= kMaxSweeps) {
            throw NumericalError(
                "sym_eig: Jacobi sweeps exhausted, off-diagonal residual " +
                    std::to_string(off),
                off);
        }
        // one full cyclic sweep, row order
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t =
                    (theta >= 0.0 ? 1.0 : -1.0) /
                    (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                const double app = a(p, p), aqq = a(q, q);
                a(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(p, i) = a(i, p);
                    a(i, q) = s * aip + c * aiq;
                    a(q, i) = a(i, q);
                }
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
        off = offdiag_norm(a);
    }

    // sort descending, stable so exact ties keep the lowest original index
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index i, Eigen::Index j) {
                         return a(i, i) > a(j, j);
                     });

    EigPair out;
    out.lam.resize(n);
    out.U.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out.lam(j) = a(order[static_cast<std::size_t>(j)],
                       order[static_cast<std::size_t>(j)]);
        out.U.col(j) = v.col(order[static_cast<std::size_t>(j)]);
        // sign convention: largest-magnitude component positive
        Eigen::Index imax = 0;
        double amax = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double m = std::abs(out.U(i, j));
            if (m > amax) {
                amax = m;
                imax = i;
            }
        }
        if (out.U(imax, j) < 0.0) out.U.col(j) = -out.U.col(j);
    }
    return out;
}

namespace {

double apply_spectral(Spectral f, double lam, double t, Eigen::Index idx) {
    auto domain_fail = [&](const char* name) {
        std::ostringstream os;
        os << "fun_spd: eigenvalue " << idx << " = " << lam
           << " is not positive, outside the domain of " << name;
        throw DomainError(os.str());
    };
    switch (f) {
        case Spectral::Log:
            if (lam <= 0.0) domain_fail("log");
            return std::log(lam);
        case Spectral::Exp:
            return std::exp(lam);
        case Spectral::Sqrt:
            if (lam <= 0.0) domain_fail("sqrt");
            return std::sqrt(lam);
        case Spectral::InvSqrt:
            if (lam <= 0.0) domain_fail("invsqrt");
            return 1.0 / std::sqrt(lam);
        case Spectral::Pow:
            if (lam <= 0.0) domain_fail("pow");
            return std::pow(lam, t);
    }
    throw ArgumentError("fun_spd: unknown spectral function");
}

}  // namespace

SymMatrix fun_spd(const EigPair& eig, Spectral f, double t) {
    const Eigen::Index n = eig.lam.size();
    Vector flam(n);
    for (Eigen::Index i = 0; i < n; ++i)
        flam(i) = apply_spectral(f, eig.lam(i), t, i);
    return SymMatrix::from_symmetric(
        symmetrized(eig.U * flam.asDiagonal() * eig.U.transpose()));
}

SymMatrix fun_spd(const SymMatrix& S, Spectral f, double t) {
    return fun_spd(sym_eig(S), f, t);
}

SymMatrix fun_spd_backward(const EigPair& ctx, const ScalarFn& f,
                           const ScalarFn& df, const SymMatrix& grad_out) {
    const Eigen::Index n = ctx.lam.size();
    require(grad_out.n() == n, "fun_spd_backward: dimension mismatch");

    const double delta = 1e-8 * std::max(1.0, std::abs(ctx.lam(0)));
    Matrix g = ctx.U.transpose() * grad_out.mat() * ctx.U;

    Vector flam(n);
    for (Eigen::Index i = 0; i < n; ++i) flam(i) = f(ctx.lam(i));

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double gap = ctx.lam(i) - ctx.lam(j);
            const double l = std::abs(gap) > delta
                                 ? (flam(i) - flam(j)) / gap
                                 : df(0.5 * (ctx.lam(i) + ctx.lam(j)));
            g(i, j) *= l;
        }
    }
    return SymMatrix::from_symmetric(
        symmetrized(ctx.U * g * ctx.U.transpose()));
}

bool is_spd(const SymMatrix& S, double tol) {
    if (S.n() == 0) return false;
    return sym_eig(S).lam.minCoeff() > tol;
}

}  // namespace cspnet::symmat
