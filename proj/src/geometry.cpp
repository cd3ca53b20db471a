#include "cspnet/geometry.hpp"

#include <cmath>

namespace cspnet::geometry {

using symmat::EigPair;
using symmat::fun_spd;
using symmat::Spectral;
using symmat::sym_eig;

double airm_inner(const SpdMatrix& P, const SymMatrix& v, const SymMatrix& w) {
    require(P.n() == v.n() && P.n() == w.n(),
            "airm_inner: dimension mismatch");
    const Matrix pis = fun_spd(P, Spectral::InvSqrt).mat();
    const Matrix a = pis * v.mat() * pis;
    const Matrix b = pis * w.mat() * pis;
    return (a.array() * b.array()).sum();
}

SpdMatrix geodesic(const SpdMatrix& P1, const SpdMatrix& P2, double t) {
    require(t >= 0.0 && t <= 1.0, "geodesic: t must lie in [0, 1]");
    require(P1.n() == P2.n(), "geodesic: dimension mismatch");
    const EigPair e1 = sym_eig(P1);
    const Matrix rs = fun_spd(e1, Spectral::Sqrt).mat();
    const Matrix ris = fun_spd(e1, Spectral::InvSqrt).mat();
    const SymMatrix inner =
        SymMatrix::from_symmetric(symmetrized(ris * P2.mat() * ris));
    const Matrix powt = fun_spd(inner, Spectral::Pow, t).mat();
    return SpdMatrix::from_symmetric(symmetrized(rs * powt * rs));
}

double distance(const SpdMatrix& P1, const SpdMatrix& P2) {
    require(P1.n() == P2.n(), "distance: dimension mismatch");
    const Matrix ris = fun_spd(P1, Spectral::InvSqrt).mat();
    const SymMatrix inner =
        SymMatrix::from_symmetric(symmetrized(ris * P2.mat() * ris));
    return fun_spd(inner, Spectral::Log).mat().norm();
}

SymMatrix log_map(const SpdMatrix& P, const SpdMatrix& Q) {
    require(P.n() == Q.n(), "log_map: dimension mismatch");
    const EigPair e = sym_eig(P);
    const Matrix rs = fun_spd(e, Spectral::Sqrt).mat();
    const Matrix ris = fun_spd(e, Spectral::InvSqrt).mat();
    const SymMatrix inner =
        SymMatrix::from_symmetric(symmetrized(ris * Q.mat() * ris));
    const Matrix lg = fun_spd(inner, Spectral::Log).mat();
    return SymMatrix::from_symmetric(symmetrized(rs * lg * rs));
}

SpdMatrix exp_map(const SpdMatrix& P, const SymMatrix& v) {
    require(P.n() == v.n(), "exp_map: dimension mismatch");
    const EigPair e = sym_eig(P);
    const Matrix rs = fun_spd(e, Spectral::Sqrt).mat();
    const Matrix ris = fun_spd(e, Spectral::InvSqrt).mat();
    const SymMatrix inner =
        SymMatrix::from_symmetric(symmetrized(ris * v.mat() * ris));
    const Matrix ex = fun_spd(inner, Spectral::Exp).mat();
    return SpdMatrix::from_symmetric(symmetrized(rs * ex * rs));
}

SymMatrix parallel_transport(const SpdMatrix& P1, const SpdMatrix& P2,
                             const SymMatrix& v) {
    require(P1.n() == P2.n() && P1.n() == v.n(),
            "parallel_transport: dimension mismatch");
    const EigPair e1 = sym_eig(P1);
    const Matrix e = fun_spd(e1, Spectral::Sqrt).mat();
    const Matrix einv = fun_spd(e1, Spectral::InvSqrt).mat();
    const SymMatrix m =
        SymMatrix::from_symmetric(symmetrized(einv * P2.mat() * einv));
    const Matrix ms = fun_spd(m, Spectral::Sqrt).mat();
    const Matrix carrier = e * ms * einv;
    return SymMatrix::from_symmetric(
        symmetrized(carrier * v.mat() * carrier.transpose()));
}

SpdMatrix frechet_mean(const std::vector<SpdMatrix>& batch,
                       const std::vector<double>& weights, double tol,
                       int max_iter, std::vector<double>* objective_trace) {
    require(!batch.empty(), "frechet_mean: empty batch");
    require(weights.size() == batch.size(),
            "frechet_mean: weights/batch size mismatch");
    const Eigen::Index n = batch.front().n();
    double wsum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        require(batch[i].n() == n, "frechet_mean: dimension mismatch");
        require(weights[i] >= 0.0, "frechet_mean: negative weight");
        wsum += weights[i];
    }
    require(std::abs(wsum - 1.0) <= 1e-12,
            "frechet_mean: weights must sum to 1");

    Matrix init = Matrix::Zero(n, n);
    for (std::size_t i = 0; i < batch.size(); ++i)
        init += weights[i] * batch[i].mat();
    SpdMatrix mean = SpdMatrix::from_symmetric(symmetrized(init));

    double grad_norm = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        if (objective_trace) {
            double obj = 0.0;
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const double d = distance(mean, batch[i]);
                obj += weights[i] * d * d;
            }
            objective_trace->push_back(obj);
        }
        Matrix tangent = Matrix::Zero(n, n);
        for (std::size_t i = 0; i < batch.size(); ++i)
            tangent += weights[i] * log_map(mean, batch[i]).mat();
        grad_norm = tangent.norm();
        if (grad_norm < tol) return mean;
        mean = exp_map(mean, SymMatrix::from_symmetric(symmetrized(tangent)));
    }
    throw NumericalError("frechet_mean: Karcher flow did not converge, "
                         "gradient norm " +
                             std::to_string(grad_norm),
                         grad_norm);
}

SpdMatrix frechet_mean(const std::vector<SpdMatrix>& batch, double tol,
                       int max_iter) {
    require(!batch.empty(), "frechet_mean: empty batch");
    std::vector<double> w(batch.size(), 1.0 / static_cast<double>(batch.size()));
    return frechet_mean(batch, w, tol, max_iter);
}

SymMatrix congruence(const Matrix& W, const SymMatrix& P) {
    require(W.cols() == P.n(), "congruence: dimension mismatch");
    require(W.allFinite(), "congruence: W must be finite");
    return SymMatrix::from_symmetric(symmetrized(W * P.mat() * W.transpose()));
}

}  // namespace cspnet::geometry
