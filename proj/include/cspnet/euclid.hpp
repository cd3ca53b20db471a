#pragma once

#include "cspnet/common.hpp"
#include "cspnet/layers.hpp"

namespace cspnet::euclid {

/// Flattened tangent features for one item: one row per window, each row
/// the concatenation over bands of the row-major slice entries, so the
/// shape is wins x (bands * dim^2).
struct TangentGrid {
    int bands = 0;
    int dim = 0;
    Matrix g;  // wins x (bands * dim^2)
};

std::vector<TangentGrid> flatten_concat(const layers::SpdBatch& x);

/// Exact inverse of flatten_concat (reshaping is lossless).
layers::SpdBatch unflatten(const std::vector<TangentGrid>& grids);

/// Blockwise 2D convolution geometry: the kernel spans p band-blocks
/// (p * dim^2 scalars) by q window rows and slides with horizontal stride of
/// one band-block and vertical stride 1, no padding.
struct ConvSpec {
    int p = 1;  // width in band-blocks, 1 or F
    int q = 1;  // height in window rows
    int r = 1;  // output channels
};

struct ConvParams {
    ConvSpec spec;
    std::vector<Matrix> weight;  // r kernels, each q x (p * dim^2)
    Vector bias;                 // size r, or size 0 when bias-free
};

ConvParams conv_init(const ConvSpec& spec, int dim, bool with_bias,
                     rng::Engine& eng);

/// Per-item conv output, indexed [row y][col x][channel c] with c fastest.
struct ConvOut {
    int rows = 0;  // wins - q + 1
    int cols = 0;  // bands - p + 1
    int chans = 0;
    Vector flat;

    double& at(int y, int x, int c) {
        return flat[(static_cast<Eigen::Index>(y) * cols + x) * chans + c];
    }
    double at(int y, int x, int c) const {
        return flat[(static_cast<Eigen::Index>(y) * cols + x) * chans + c];
    }
};

struct ConvContext {
    std::vector<TangentGrid> input;
    ConvSpec spec;
    int dim = 0;
};

std::pair<std::vector<ConvOut>, ConvContext> conv_forward(
    const ConvParams& params, const std::vector<TangentGrid>& grids);

struct ConvGrads {
    std::vector<TangentGrid> grad_grids;
    std::vector<Matrix> grad_weight;
    Vector grad_bias;  // size 0 when bias-free
};

ConvGrads conv_backward(const ConvParams& params, const ConvContext& ctx,
                        const std::vector<ConvOut>& grad_out);

// ---------------------------------------------------------------------------
// Dense (affine) layer.

struct DenseParams {
    Matrix W;    // out x in
    Vector b;    // size out, or 0 when bias-free
};

DenseParams dense_init(int out, int in, bool with_bias, rng::Engine& eng);

Vector dense_forward(const DenseParams& p, const Vector& x);

struct DenseGrads {
    Vector grad_x;
    Matrix grad_W;
    Vector grad_b;  // size 0 when bias-free
};

DenseGrads dense_backward(const DenseParams& p, const Vector& x,
                          const Vector& grad_out);

// ---------------------------------------------------------------------------
// Softmax cross-entropy (log-sum-exp stabilized).

struct SoftmaxCe {
    double loss = 0.0;
    Vector grad_logits;
};

SoftmaxCe softmax_ce(const Vector& logits, int label);

}  // namespace cspnet::euclid
