#pragma once

#include "cspnet/common.hpp"

#include <functional>

namespace cspnet::symmat {

/// Eigendecomposition of a symmetric matrix: S = U * diag(lam) * U^T with
/// orthogonal U and eigenvalues sorted descending. The sign of each
/// eigenvector is fixed so its largest-magnitude component is positive
/// (ties broken by lowest index), making the decomposition deterministic.
struct EigPair {
    Matrix U;
    Vector lam;

    Matrix reconstruct() const {
        return symmetrized(U * lam.asDiagonal() * U.transpose());
    }
};

/// Cyclic Jacobi eigensolver. Off-diagonal Frobenius tolerance
/// 1e-12 * ||S||_F, at most 100 sweeps; throws NumericalError (carrying the
/// residual) if the cap is hit.
EigPair sym_eig(const SymMatrix& S);

enum class Spectral { Log, Exp, Sqrt, InvSqrt, Pow };

/// U * f(Lambda) * U^T. Log/Sqrt/InvSqrt/Pow require positive eigenvalues
/// and raise DomainError naming the offending eigenvalue otherwise; Exp
/// accepts any symmetric input. `t` is the exponent for Spectral::Pow.
SymMatrix fun_spd(const SymMatrix& S, Spectral f, double t = 1.0);
SymMatrix fun_spd(const EigPair& eig, Spectral f, double t = 1.0);

using ScalarFn = std::function<double(double)>;

/// Reverse-mode derivative of the spectral map S -> U f(Lambda) U^T via the
/// Loewner (divided-difference) matrix: eigenvalue pairs closer than
/// delta_eig = 1e-8 * max(1, |lam_1|) use the midpoint derivative
/// f'((lam_i + lam_j)/2) instead of the divided difference.
SymMatrix fun_spd_backward(const EigPair& ctx, const ScalarFn& f,
                           const ScalarFn& df, const SymMatrix& grad_out);

/// True iff the smallest eigenvalue exceeds tol.
bool is_spd(const SymMatrix& S, double tol = 0.0);

}  // namespace cspnet::symmat
