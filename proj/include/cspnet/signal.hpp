#pragma once

#include "cspnet/common.hpp"
#include "cspnet/layers.hpp"

namespace cspnet::signal {

/// One recording: channels x samples at a fixed sampling rate.
struct Trial {
    Matrix x;  // C x T
    double fs = 0.0;
};

/// Filter-bank portfolio. Each band is designed as a Chebyshev Type II
/// bandpass whose stopband edges sit `stop_margin_hz` outside the passband.
struct BandSpec {
    std::vector<std::pair<double, double>> bands;
    int order = 4;                 // analog prototype order (biquad count)
    double stopband_atten_db = 30.0;
    double stop_margin_hz = 2.0;

    /// The conventional 9-band portfolio 4-8, 8-12, ..., 36-40 Hz.
    static BandSpec standard_9band();
};

/// Temporal segmentation: window length, stride and zero padding, all in
/// samples. Padding is split evenly front/back (p zeros each side).
struct SegSpec {
    int omega = 0;
    int stride = 1;
    int pad = 0;
};

/// Raised when a requested filter cannot be realized (invalid edges for the
/// sampling rate, or an unstable discretized design).
struct FilterDesignError : Error {
    using Error::Error;
};

struct Biquad {
    double b0 = 0, b1 = 0, b2 = 0;  // numerator (z^0, z^-1, z^-2)
    double a1 = 0, a2 = 0;          // denominator, a0 normalized to 1
};

/// Cascade of second-order sections with a single overall input gain.
struct SosFilter {
    std::vector<Biquad> sections;
    double gain = 1.0;

    /// Causal forward pass, zero initial state.
    Vector apply(const Vector& x) const;
};

/// Chebyshev Type II bandpass with stopband edges at [stop_lo, stop_hi] Hz.
SosFilter design_cheby2_bandpass(double stop_lo, double stop_hi, int order,
                                 double atten_db, double fs);

/// Channel-wise zero mean, then the whole trial divided by the pooled
/// standard deviation. A constant trial (zero variance) is rejected.
Trial center_scale(const Trial& trial);

/// Applies every band of the portfolio to every channel, causal
/// forward-only filtering. Output is indexed [band][channel][sample].
std::vector<Matrix> apply_filterbank(const Trial& trial, const BandSpec& spec);

/// Tensor stacking: W = floor((T + 2p - omega)/s) + 1 windows, window i of
/// band j being the exact sub-block starting at sample i*s of the padded
/// signal. Output indexed [window][band] of C x omega blocks.
std::vector<std::vector<Matrix>> segment_stack(const std::vector<Matrix>& x,
                                               const SegSpec& seg);

/// Per-window spatial covariance (X X^T)/omega plus a relative ridge
/// ridge * trace/C * I. A zero window (trace 0) is rejected as degenerate.
layers::SpdTensor covariance(const std::vector<std::vector<Matrix>>& seg,
                             double ridge);

/// Number of windows produced by segment_stack for the given signal length.
int window_count(int T, const SegSpec& seg);

}  // namespace cspnet::signal
