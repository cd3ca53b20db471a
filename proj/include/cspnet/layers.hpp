#pragma once

#include "cspnet/common.hpp"
#include "cspnet/geometry.hpp"
#include "cspnet/symmat.hpp"

namespace cspnet::layers {

/// Stack of symmetric matrices for one trial, indexed [window][band].
struct SpdTensor {
    int wins = 0;
    int bands = 0;
    int dim = 0;
    std::vector<Matrix> s;  // wins * bands slices, window-major

    SpdTensor() = default;
    SpdTensor(int w, int f, int n)
        : wins(w), bands(f), dim(n),
          s(static_cast<std::size_t>(w) * f, Matrix::Zero(n, n)) {}

    Matrix& at(int w, int f) { return s[static_cast<std::size_t>(w) * bands + f]; }
    const Matrix& at(int w, int f) const {
        return s[static_cast<std::size_t>(w) * bands + f];
    }
};

/// Batched stack, indexed [item][window][band]. Slices are symmetric by
/// construction; SPD wherever the producing pipeline stage guarantees it.
struct SpdBatch {
    int items = 0;
    int wins = 0;
    int bands = 0;
    int dim = 0;
    std::vector<Matrix> s;  // items * wins * bands, item-major then window

    SpdBatch() = default;
    SpdBatch(int b, int w, int f, int n)
        : items(b), wins(w), bands(f), dim(n),
          s(static_cast<std::size_t>(b) * w * f, Matrix::Zero(n, n)) {}

    std::size_t index(int b, int w, int f) const {
        return (static_cast<std::size_t>(b) * wins + w) * bands + f;
    }
    Matrix& at(int b, int w, int f) { return s[index(b, w, f)]; }
    const Matrix& at(int b, int w, int f) const { return s[index(b, w, f)]; }

    std::size_t size() const { return s.size(); }

    /// Copies band f of every (item, window) into a single-band batch.
    SpdBatch band(int f) const;
    /// Writes a single-band batch back into band f.
    void set_band(int f, const SpdBatch& one);
};

/// Transformation matrix constrained to the Stiefel manifold: whichever of
/// the two dimensions is smaller indexes an orthonormal set (W W^T = I for
/// wide/square, W^T W = I for tall).
struct StiefelParam {
    Matrix W;  // o x c

    Eigen::Index out_dim() const { return W.rows(); }
    Eigen::Index in_dim() const { return W.cols(); }
};

/// Orthonormal start: QR of a standard Gaussian draw.
StiefelParam stiefel_random(Eigen::Index o, Eigen::Index c, rng::Engine& eng);

/// Frobenius norm of the orthonormality residual (W W^T - I or W^T W - I,
/// whichever applies).
double stiefel_residual(const StiefelParam& p);

/// Project the Euclidean gradient onto the tangent space at W, take a step
/// of -lr, and re-orthonormalize by QR with the positive-diagonal sign fix.
StiefelParam stiefel_retract(const StiefelParam& p, const Matrix& euclid_grad,
                             double lr);

// ---------------------------------------------------------------------------
// BiMap: slice-wise congruence W S W^T with one shared W.

struct BiMapContext {
    Matrix W;
    SpdBatch input;
};

std::pair<SpdBatch, BiMapContext> bimap_forward(const StiefelParam& p,
                                                const SpdBatch& x);

struct BiMapGrads {
    SpdBatch grad_x;
    Matrix grad_W;  // Euclidean, summed over slices
};

BiMapGrads bimap_backward(const BiMapContext& ctx, const SpdBatch& grad_out);

// ---------------------------------------------------------------------------
// ReEig: eigenvalue clamp max(eps, lambda); repairs rank deficiency.

struct ReEigContext {
    std::vector<symmat::EigPair> eigs;
    double eps = 0.0;
    int items = 0, wins = 0, bands = 0, dim = 0;
};

std::pair<SpdBatch, ReEigContext> reeig_forward(const SpdBatch& x, double eps);
SpdBatch reeig_backward(const ReEigContext& ctx, const SpdBatch& grad_out);

// ---------------------------------------------------------------------------
// LOG: slice-wise U log(Lambda) U^T onto the tangent space.

struct LogEigContext {
    std::vector<symmat::EigPair> eigs;
    int items = 0, wins = 0, bands = 0, dim = 0;
};

std::pair<SpdBatch, LogEigContext> logeig_forward(const SpdBatch& x);
SpdBatch logeig_backward(const LogEigContext& ctx, const SpdBatch& grad_out);

// ---------------------------------------------------------------------------
// Riemannian batch normalization: recenter the batch at the identity by
// congruence with the batch barycenter's inverse square root, then bias by
// the learned SPD parameter G.

struct RbnState {
    SpdMatrix running_mean;
    SpdMatrix G;
    double momentum = 0.9;

    static RbnState identity(Eigen::Index n, double momentum = 0.9) {
        return RbnState{SpdMatrix::identity(n), SpdMatrix::identity(n),
                        momentum};
    }
};

enum class Mode { Train, Eval };

struct RbnContext {
    Matrix whiten;         // B_mean^{-1/2} (or running mean's in eval)
    Matrix bias;           // G
    Matrix bias_sqrt;      // G^{1/2}
    symmat::EigPair g_eig; // eigendecomposition of G
    SpdBatch input;
    SpdMatrix batch_mean;
};

/// Train mode computes the batch barycenter per call (the caller passes one
/// band's slices), normalizes with it and updates state.running_mean along
/// the geodesic by (1 - momentum). Eval mode normalizes with the stored
/// running mean and leaves the state untouched. Train mode requires at
/// least 2 items in the batch.
std::pair<SpdBatch, RbnContext> rbn_forward(const SpdBatch& x, RbnState& state,
                                            Mode mode);

struct RbnGrads {
    SpdBatch grad_x;
    SymMatrix euclid_grad_G;  // raw dL/dG (for finite-difference checks)
    SymMatrix riem_grad_G;    // G * sym(dL/dG) * G (for the optimizer)
};

/// Backward through the two congruences with the batch mean treated as a
/// constant (stop-gradient).
RbnGrads rbn_backward(const RbnContext& ctx, const SpdBatch& grad_out);

}  // namespace cspnet::layers
