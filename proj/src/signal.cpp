#include "cspnet/signal.hpp"

#include <cmath>
#include <complex>
#include <sstream>

namespace cspnet::signal {

namespace {

using Complex = std::complex<double>;
constexpr double kPi = 3.14159265358979323846;

struct Zpk {
    std::vector<Complex> zeros;
    std::vector<Complex> poles;
    double gain = 1.0;
};

/// Analog Chebyshev Type II lowpass prototype, stopband edge at 1 rad/s,
/// unit DC gain.
Zpk cheby2_prototype(int order, double atten_db) {
    const double eps = 1.0 / std::sqrt(std::pow(10.0, atten_db / 10.0) - 1.0);
    const double mu = std::asinh(1.0 / eps) / order;

    Zpk out;
    for (int k = 0; k < order; ++k) {
        const double theta = kPi * (2.0 * k + 1.0) / (2.0 * order);
        // inverted Chebyshev pole
        const Complex p(-std::sinh(mu) * std::sin(theta),
                        std::cosh(mu) * std::cos(theta));
        out.poles.push_back(1.0 / p);
        // zeros on the imaginary axis; the middle one of an odd order is at
        // infinity and omitted
        const double c = std::cos(theta);
        if (std::abs(c) > 1e-14) out.zeros.emplace_back(0.0, 1.0 / c);
    }
    Complex num(1.0, 0.0), den(1.0, 0.0);
    for (const Complex& z : out.zeros) num *= -z;
    for (const Complex& p : out.poles) den *= -p;
    out.gain = (den / num).real();
    return out;
}

/// Lowpass (stop edge 1) -> bandpass with angular stop edges [w1, w2].
Zpk lp_to_bp(const Zpk& lp, double w1, double w2) {
    const double bw = w2 - w1;
    const double wo2 = w1 * w2;
    const int degree =
        static_cast<int>(lp.poles.size()) - static_cast<int>(lp.zeros.size());

    auto transform = [&](const std::vector<Complex>& xs) {
        std::vector<Complex> out;
        out.reserve(xs.size() * 2);
        for (const Complex& x : xs) {
            const Complex s = x * (bw / 2.0);
            const Complex d = std::sqrt(s * s - wo2);
            out.push_back(s + d);
            out.push_back(s - d);
        }
        return out;
    };

    Zpk bp;
    bp.zeros = transform(lp.zeros);
    bp.poles = transform(lp.poles);
    for (int i = 0; i < degree; ++i) bp.zeros.emplace_back(0.0, 0.0);
    bp.gain = lp.gain * std::pow(bw, degree);
    return bp;
}

/// Bilinear transform with prewarping handled by the caller.
Zpk bilinear(const Zpk& analog, double fs) {
    const double fs2 = 2.0 * fs;
    Zpk digital;
    Complex num(1.0, 0.0), den(1.0, 0.0);
    for (const Complex& z : analog.zeros) {
        digital.zeros.push_back((fs2 + z) / (fs2 - z));
        num *= fs2 - z;
    }
    for (const Complex& p : analog.poles) {
        digital.poles.push_back((fs2 + p) / (fs2 - p));
        den *= fs2 - p;
    }
    const std::size_t extra = analog.poles.size() - analog.zeros.size();
    for (std::size_t i = 0; i < extra; ++i)
        digital.zeros.emplace_back(-1.0, 0.0);
    digital.gain = analog.gain * (num / den).real();
    return digital;
}

}  // namespace

SosFilter design_cheby2_bandpass(double stop_lo, double stop_hi, int order,
                                 double atten_db, double fs) {
    if (!(stop_lo > 0.0 && stop_lo < stop_hi && stop_hi < fs / 2.0)) {
        std::ostringstream os;
        os << "filter design: stop edges [" << stop_lo << ", " << stop_hi
           << "] Hz invalid for fs = " << fs << " Hz";
        throw FilterDesignError(os.str());
    }
    require(order >= 1, "filter design: order must be >= 1");

    // prewarped angular edges for the bilinear transform
    const double w1 = 2.0 * fs * std::tan(kPi * stop_lo / fs);
    const double w2 = 2.0 * fs * std::tan(kPi * stop_hi / fs);

    Zpk digital = bilinear(lp_to_bp(cheby2_prototype(order, atten_db),
                                    w1, w2),
                           fs);

    for (const Complex& p : digital.poles) {
        if (std::abs(p) >= 1.0) {
            std::ostringstream os;
            os << "filter design: unstable pole |p| = " << std::abs(p)
               << " for stop band [" << stop_lo << ", " << stop_hi << "] Hz";
            throw FilterDesignError(os.str());
        }
    }

    // group into conjugate pairs; bandpass from a real prototype always has
    // an even count of poles and zeros
    std::vector<Complex> zpairs, ppairs;
    std::vector<std::pair<double, double>> zreal, preal;  // (sum, product)
    auto split = [](const std::vector<Complex>& xs,
                    std::vector<Complex>& pairs,
                    std::vector<std::pair<double, double>>& reals,
                    const char* what) {
        std::vector<double> axis;
        for (const Complex& x : xs) {
            if (std::abs(x.imag()) < 1e-10)
                axis.push_back(x.real());
            else if (x.imag() > 0.0)
                pairs.push_back(x);
        }
        if (axis.size() % 2 != 0)
            throw FilterDesignError(std::string("filter design: unpaired ") +
                                    what);
        std::sort(axis.begin(), axis.end());
        for (std::size_t i = 0; i < axis.size(); i += 2)
            reals.emplace_back(axis[i] + axis[i + 1], axis[i] * axis[i + 1]);
        std::sort(pairs.begin(), pairs.end(),
                  [](const Complex& a, const Complex& b) {
                      if (a.real() != b.real()) return a.real() < b.real();
                      return a.imag() < b.imag();
                  });
    };
    split(digital.zeros, zpairs, zreal, "zero");
    split(digital.poles, ppairs, preal, "pole");

    // quadratic coefficients (1 + c1 z^-1 + c2 z^-2) per pair
    std::vector<std::pair<double, double>> zq, pq;
    for (const Complex& z : zpairs)
        zq.emplace_back(-2.0 * z.real(), std::norm(z));
    for (const auto& [sum, prod] : zreal) zq.emplace_back(-sum, prod);
    for (const Complex& p : ppairs)
        pq.emplace_back(-2.0 * p.real(), std::norm(p));
    for (const auto& [sum, prod] : preal) pq.emplace_back(-sum, prod);

    if (zq.size() != pq.size())
        throw FilterDesignError(
            "filter design: zero/pole section count mismatch");

    SosFilter f;
    f.gain = digital.gain;
    for (std::size_t i = 0; i < pq.size(); ++i) {
        Biquad s;
        s.b0 = 1.0;
        s.b1 = zq[i].first;
        s.b2 = zq[i].second;
        s.a1 = pq[i].first;
        s.a2 = pq[i].second;
        f.sections.push_back(s);
    }
    return f;
}

Vector SosFilter::apply(const Vector& x) const {
    Vector y = gain * x;
    for (const Biquad& s : sections) {
        double s1 = 0.0, s2 = 0.0;  // direct form II transposed state
        for (Eigen::Index t = 0; t < y.size(); ++t) {
            const double in = y(t);
            const double out = s.b0 * in + s1;
            s1 = s.b1 * in - s.a1 * out + s2;
            s2 = s.b2 * in - s.a2 * out;
            y(t) = out;
        }
    }
    return y;
}

BandSpec BandSpec::standard_9band() {
    BandSpec spec;
    for (int lo = 4; lo <= 36; lo += 4)
        spec.bands.emplace_back(static_cast<double>(lo),
                                static_cast<double>(lo + 4));
    return spec;
}

Trial center_scale(const Trial& trial) {
    require(trial.x.size() > 0, "center_scale: empty trial");
    Trial out;
    out.fs = trial.fs;
    out.x = trial.x;
    for (Eigen::Index c = 0; c < out.x.rows(); ++c)
        out.x.row(c).array() -= out.x.row(c).mean();
    const double var =
        out.x.array().square().sum() / static_cast<double>(out.x.size());
    if (var <= 0.0)
        throw ArgumentError("center_scale: trial has zero variance");
    out.x /= std::sqrt(var);
    return out;
}

std::vector<Matrix> apply_filterbank(const Trial& trial,
                                     const BandSpec& spec) {
    require(!spec.bands.empty(), "apply_filterbank: no bands configured");
    std::vector<Matrix> out;
    out.reserve(spec.bands.size());
    for (const auto& [lo, hi] : spec.bands) {
        require(0.0 < lo && lo < hi && hi < trial.fs / 2.0,
                "apply_filterbank: band edges must satisfy 0 < lo < hi < fs/2");
        SosFilter f = design_cheby2_bandpass(lo - spec.stop_margin_hz,
                                             hi + spec.stop_margin_hz,
                                             spec.order,
                                             spec.stopband_atten_db,
                                             trial.fs);
        Matrix banded(trial.x.rows(), trial.x.cols());
        for (Eigen::Index c = 0; c < trial.x.rows(); ++c)
            banded.row(c) = f.apply(trial.x.row(c).transpose()).transpose();
        out.push_back(std::move(banded));
    }
    return out;
}

int window_count(int T, const SegSpec& seg) {
    require(seg.omega >= 2, "segment_stack: window length must be >= 2");
    require(seg.stride >= 1, "segment_stack: stride must be >= 1");
    require(seg.pad >= 0, "segment_stack: padding must be >= 0");
    const int padded = T + 2 * seg.pad;
    if (padded < seg.omega)
        throw ArgumentError(
            "segment_stack: padded signal shorter than the window");
    return (padded - seg.omega) / seg.stride + 1;
}

std::vector<std::vector<Matrix>> segment_stack(const std::vector<Matrix>& x,
                                               const SegSpec& seg) {
    require(!x.empty(), "segment_stack: no bands");
    const Eigen::Index C = x.front().rows();
    const Eigen::Index T = x.front().cols();
    for (const Matrix& band : x)
        require(band.rows() == C && band.cols() == T,
                "segment_stack: inconsistent band shapes");
    const int wins = window_count(static_cast<int>(T), seg);

    std::vector<std::vector<Matrix>> out(static_cast<std::size_t>(wins));
    for (int w = 0; w < wins; ++w) {
        out[static_cast<std::size_t>(w)].reserve(x.size());
        for (const Matrix& band : x) {
            Matrix block = Matrix::Zero(C, seg.omega);
            // window in padded coordinates [start, start + omega)
            const int start = w * seg.stride;
            for (int t = 0; t < seg.omega; ++t) {
                const int src = start + t - seg.pad;
                if (src >= 0 && src < static_cast<int>(T))
                    block.col(t) = band.col(src);
            }
            out[static_cast<std::size_t>(w)].push_back(std::move(block));
        }
    }
    return out;
}

layers::SpdTensor covariance(const std::vector<std::vector<Matrix>>& seg,
                             double ridge) {
    require(!seg.empty() && !seg.front().empty(), "covariance: empty input");
    require(ridge >= 0.0, "covariance: ridge must be >= 0");
    const int wins = static_cast<int>(seg.size());
    const int bands = static_cast<int>(seg.front().size());
    const Eigen::Index C = seg.front().front().rows();
    const Eigen::Index omega = seg.front().front().cols();
    require(omega >= 2, "covariance: window length must be >= 2");

    layers::SpdTensor out(wins, bands, static_cast<int>(C));
    for (int w = 0; w < wins; ++w) {
        for (int f = 0; f < bands; ++f) {
            const Matrix& block = seg[static_cast<std::size_t>(w)]
                                     [static_cast<std::size_t>(f)];
            Matrix s = symmetrized(block * block.transpose() /
                                   static_cast<double>(omega));
            const double tr = s.trace();
            if (tr <= 0.0) {
                std::ostringstream os;
                os << "covariance: degenerate zero window (window " << w
                   << ", band " << f << ")";
                throw DomainError(os.str());
            }
            if (ridge > 0.0)
                s += ridge * tr / static_cast<double>(C) *
                     Matrix::Identity(C, C);
            out.at(w, f) = std::move(s);
        }
    }
    return out;
}

}  // namespace cspnet::signal
