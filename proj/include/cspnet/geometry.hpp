#pragma once

#include "cspnet/common.hpp"
#include "cspnet/symmat.hpp"

namespace cspnet::geometry {

/// Tangent vector v at base point P of the SPD manifold.
struct TangentVector {
    SpdMatrix base;
    SymMatrix vec;
};

/// Affine-invariant inner product
/// g_P(v, w) = <P^{-1/2} v P^{-1/2}, P^{-1/2} w P^{-1/2}>_F.
double airm_inner(const SpdMatrix& P, const SymMatrix& v, const SymMatrix& w);

/// Geodesic P1^{1/2} (P1^{-1/2} P2 P1^{-1/2})^t P1^{1/2}, t in [0, 1].
SpdMatrix geodesic(const SpdMatrix& P1, const SpdMatrix& P2, double t);

/// Geodesic distance ||log(P1^{-1/2} P2 P1^{-1/2})||_F.
double distance(const SpdMatrix& P1, const SpdMatrix& P2);

/// Log_P(Q) = P^{1/2} log(P^{-1/2} Q P^{-1/2}) P^{1/2}.
SymMatrix log_map(const SpdMatrix& P, const SpdMatrix& Q);

/// Exp_P(v) = P^{1/2} exp(P^{-1/2} v P^{-1/2}) P^{1/2}.
SpdMatrix exp_map(const SpdMatrix& P, const SymMatrix& v);

/// Parallel transport of v from T_{P1} to T_{P2}:
/// (P2 P1^{-1})^{1/2} v (P2 P1^{-1})^{1/2}, evaluated through SPD principal
/// square roots only (E = P1^{1/2}, M = E^{-1} P2 E^{-1}):
/// E M^{1/2} E^{-1} v E^{-1} M^{1/2} E.
SymMatrix parallel_transport(const SpdMatrix& P1, const SpdMatrix& P2,
                             const SymMatrix& v);

/// Weighted Frechet mean (Riemannian barycenter) by Karcher flow with unit
/// step, initialized at the weighted arithmetic mean. Returns M with
/// ||sum_i w_i Log_M(P_i)||_F < tol; throws NumericalError carrying the last
/// gradient norm after max_iter iterations. When `objective_trace` is given
/// it receives sum_i w_i d(M, P_i)^2 at the start of every iteration.
SpdMatrix frechet_mean(const std::vector<SpdMatrix>& batch,
                       const std::vector<double>& weights, double tol = 1e-8,
                       int max_iter = 50,
                       std::vector<double>* objective_trace = nullptr);

/// Unweighted convenience overload (equal weights).
SpdMatrix frechet_mean(const std::vector<SpdMatrix>& batch, double tol = 1e-8,
                       int max_iter = 50);

/// Congruence W P W^T for a (possibly rectangular) o x n map W.
SymMatrix congruence(const Matrix& W, const SymMatrix& P);

}  // namespace cspnet::geometry
