#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cspnet/signal.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace cspnet;
using namespace cspnet::signal;

namespace {

constexpr double kPi = 3.14159265358979323846;

Trial sine_trial(double freq, double fs, int T, int C = 1) {
    Trial tr;
    tr.fs = fs;
    tr.x.resize(C, T);
    for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t)
            tr.x(c, t) = std::sin(2.0 * kPi * freq * t / fs);
    return tr;
}

/// Steady-state RMS ratio out/in, skipping the leading transient.
double tone_gain(const SosFilter& f, double freq, double fs) {
    const int T = static_cast<int>(16 * fs);
    Vector x(T);
    for (int t = 0; t < T; ++t) x(t) = std::sin(2.0 * kPi * freq * t / fs);
    Vector y = f.apply(x);
    double rx = 0.0, ry = 0.0;
    for (int t = T / 4; t < T; ++t) {
        rx += x(t) * x(t);
        ry += y(t) * y(t);
    }
    return std::sqrt(ry / rx);
}

}  // namespace

TEST_CASE("center_scale leaves a centered unit-variance trial unchanged") {
    auto eng = testsup::engine(1);
    Trial tr;
    tr.fs = 100.0;
    tr.x = rng::gaussian_matrix(3, 200, eng);
    Trial once = center_scale(tr);
    Trial twice = center_scale(once);
    CHECK((twice.x - once.x).norm() < 1e-12);
}

TEST_CASE("center_scale removes per-channel offsets") {
    auto eng = testsup::engine(2);
    Trial tr;
    tr.fs = 100.0;
    tr.x = rng::gaussian_matrix(4, 100, eng);
    tr.x.row(1).array() += 17.0;
    tr.x.row(3).array() -= 4.0;
    Trial out = center_scale(tr);
    for (int c = 0; c < 4; ++c)
        CHECK(std::abs(out.x.row(c).mean()) < 1e-12);
    const double var = out.x.array().square().sum() / out.x.size();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("center_scale rejects a constant trial") {
    Trial tr;
    tr.fs = 100.0;
    tr.x = Matrix::Constant(2, 50, 3.0);
    CHECK_THROWS_AS(center_scale(tr), ArgumentError);
}

TEST_CASE("standard portfolio has nine bands") {
    BandSpec spec = BandSpec::standard_9band();
    CHECK(spec.bands.size() == 9);
    CHECK(spec.bands.front().first == 4.0);
    CHECK(spec.bands.back().second == 40.0);

    Trial tr = sine_trial(6.0, 250.0, 500, 2);
    auto out = apply_filterbank(tr, spec);
    CHECK(out.size() == 9);
    CHECK(out[0].rows() == 2);
    CHECK(out[0].cols() == 500);
}

TEST_CASE("filter passes in-band tones and rejects out-of-band tones") {
    SosFilter f48 = design_cheby2_bandpass(2.0, 10.0, 4, 30.0, 250.0);
    CHECK(tone_gain(f48, 6.0, 250.0) >= 0.7);

    SosFilter f2024 = design_cheby2_bandpass(18.0, 26.0, 4, 30.0, 250.0);
    const double atten_db = -20.0 * std::log10(tone_gain(f2024, 6.0, 250.0));
    CHECK(atten_db >= 30.0);
}

TEST_CASE("filter design matches the analytic stopband attenuation") {
    SosFilter f = design_cheby2_bandpass(2.0, 10.0, 4, 30.0, 250.0);
    // Chebyshev II is equiripple in the stopband: exactly -30 dB at edges
    const double at2 = -20.0 * std::log10(tone_gain(f, 2.0, 250.0));
    const double at10 = -20.0 * std::log10(tone_gain(f, 10.0, 250.0));
    CHECK(at2 == doctest::Approx(30.0).epsilon(1e-3));
    CHECK(at10 == doctest::Approx(30.0).epsilon(1e-3));
}

TEST_CASE("filters stay stable at high sampling rates") {
    BandSpec spec = BandSpec::standard_9band();
    Trial tr = sine_trial(6.0, 1000.0, 2500, 1);
    auto out = apply_filterbank(tr, spec);  // throws on unstable designs
    CHECK(out.size() == 9);
    for (const auto& band : out) CHECK(band.allFinite());
}

TEST_CASE("filter design rejects invalid edges") {
    CHECK_THROWS_AS(design_cheby2_bandpass(-1.0, 10.0, 4, 30.0, 250.0),
                    FilterDesignError);
    CHECK_THROWS_AS(design_cheby2_bandpass(2.0, 130.0, 4, 30.0, 250.0),
                    FilterDesignError);
}

TEST_CASE("zero signal filters to zero") {
    SosFilter f = design_cheby2_bandpass(2.0, 10.0, 4, 30.0, 250.0);
    Vector zero = Vector::Zero(100);
    CHECK(f.apply(zero).norm() == 0.0);
}

TEST_CASE("filtering is causal: sample t only affects outputs >= t") {
    auto eng = testsup::engine(3);
    SosFilter f = design_cheby2_bandpass(2.0, 10.0, 4, 30.0, 250.0);
    Vector x = rng::gaussian_matrix(200, 1, eng);
    Vector base = f.apply(x);
    for (int t : {0, 50, 150, 199}) {
        Vector perturbed = x;
        perturbed(t) += 1.0;
        Vector y = f.apply(perturbed);
        for (int i = 0; i < t; ++i) CHECK(y(i) == base(i));
        CHECK(y(t) != base(t));  // b0 != 0 for these designs
    }
}

TEST_CASE("segment_stack window counts reproduce the reference configs") {
    // 2.5 s at 1000 Hz, non-overlapping 0.5 s windows
    CHECK(window_count(2500, SegSpec{500, 500, 0}) == 5);
    // 4 s at 250 Hz, 2 s windows with 0.5 s stride
    CHECK(window_count(1000, SegSpec{500, 125, 0}) == 5);
    // window equals signal
    CHECK(window_count(500, SegSpec{500, 77, 0}) == 1);
}

TEST_CASE("segment_stack slices are exact sub-blocks of the padded input") {
    auto eng = testsup::engine(4);
    const int C = 3, T = 40;
    std::vector<Matrix> bands{rng::gaussian_matrix(C, T, eng),
                              rng::gaussian_matrix(C, T, eng)};
    SegSpec seg{16, 8, 4};
    auto out = segment_stack(bands, seg);
    const int wins = window_count(T, seg);
    CHECK(static_cast<int>(out.size()) == wins);

    // padded coordinates: p zeros, signal, p zeros
    for (int w = 0; w < wins; ++w) {
        for (int f = 0; f < 2; ++f) {
            const Matrix& block = out[w][f];
            for (int t = 0; t < seg.omega; ++t) {
                const int src = w * seg.stride + t - seg.pad;
                for (int c = 0; c < C; ++c) {
                    const double want =
                        (src >= 0 && src < T) ? bands[f](c, src) : 0.0;
                    CHECK(block(c, t) == want);
                }
            }
        }
    }
}

TEST_CASE("segment_stack rejects windows longer than the padded signal") {
    auto eng = testsup::engine(5);
    std::vector<Matrix> bands{rng::gaussian_matrix(2, 10, eng)};
    CHECK_THROWS_AS(segment_stack(bands, SegSpec{20, 1, 2}), ArgumentError);
}

TEST_CASE("covariance closed form") {
    Matrix w(2, 2);
    w << 1.0, 1.0, -1.0, 1.0;
    std::vector<std::vector<Matrix>> seg{{w}};
    auto out = covariance(seg, 0.0);
    CHECK((out.at(0, 0) - Matrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("covariance of a single channel is the mean square") {
    Matrix w(1, 4);
    w << 1.0, 2.0, 3.0, 4.0;
    std::vector<std::vector<Matrix>> seg{{w}};
    auto out = covariance(seg, 0.0);
    CHECK(out.at(0, 0)(0, 0) ==
          doctest::Approx((1.0 + 4.0 + 9.0 + 16.0) / 4.0).epsilon(1e-14));
}

TEST_CASE("covariance rejects a zero window") {
    std::vector<std::vector<Matrix>> seg{{Matrix::Zero(3, 10)}};
    CHECK_THROWS_AS(covariance(seg, 1e-4), DomainError);
}

TEST_CASE("covariance with ridge is symmetric SPD") {
    auto eng = testsup::engine(6);
    std::vector<std::vector<Matrix>> seg{
        {rng::gaussian_matrix(4, 3, eng)}};  // omega < C: singular without ridge
    auto out = covariance(seg, 1e-4);
    const Matrix& s = out.at(0, 0);
    CHECK((s - s.transpose()).norm() < 1e-15);
    CHECK(symmat::is_spd(SymMatrix::from_symmetric(s)));
}
