#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cspnet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base class for everything this library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration (maps to CLI exit code 2).
struct ArgumentError : Error {
    using Error::Error;
};

/// Input outside the mathematical domain of an operation (e.g. log of a
/// matrix with a non-positive eigenvalue).
struct DomainError : Error {
    using Error::Error;
};

/// Iterative procedure failed to converge; carries the last residual.
struct NumericalError : Error {
    double residual;
    NumericalError(const std::string& msg, double res)
        : Error(msg), residual(res) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ArgumentError(msg);
}

/// Exact symmetrization: 0.5*(A(i,j)+A(j,i)) is commutative, so the result
/// satisfies M(i,j) == M(j,i) bit for bit.
inline Matrix symmetrized(const Matrix& a) {
    return 0.5 * (a + a.transpose());
}

/// Symmetric matrix; entries are symmetrized exactly on construction.
class SymMatrix {
  public:
    SymMatrix() = default;

    explicit SymMatrix(const Matrix& a) {
        require(a.rows() == a.cols(), "SymMatrix: input must be square");
        require(a.allFinite(), "SymMatrix: entries must be finite");
        m_ = symmetrized(a);
    }

    /// Wraps a matrix already known to be exactly symmetric (no copy-fix).
    static SymMatrix from_symmetric(Matrix m) {
        SymMatrix s;
        s.m_ = std::move(m);
        return s;
    }

    const Matrix& mat() const { return m_; }
    Eigen::Index n() const { return m_.rows(); }

  protected:
    Matrix m_;
};

/// Symmetric matrix claimed positive definite. Definiteness is not checked
/// at construction; operations that need it verify on demand (see
/// symmat::is_spd) and raise DomainError when the claim is false.
class SpdMatrix : public SymMatrix {
  public:
    SpdMatrix() = default;
    explicit SpdMatrix(const Matrix& a) : SymMatrix(a) {}
    explicit SpdMatrix(const SymMatrix& s) : SymMatrix(s) {}

    static SpdMatrix from_symmetric(Matrix m) {
        SpdMatrix s;
        s.m_ = std::move(m);
        return s;
    }

    static SpdMatrix identity(Eigen::Index n) {
        return SpdMatrix::from_symmetric(Matrix::Identity(n, n));
    }
};

namespace rng {

// All randomness flows through these helpers rather than <random>
// distributions, whose output is implementation-defined. Same seed, same
// stream of values, on any standard library.
using Engine = std::mt19937_64;

inline std::uint64_t below(Engine& eng, std::uint64_t n) {
    // rejection sampling, no modulo bias
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t v;
    do {
        v = eng();
    } while (v >= limit);
    return v % n;
}

inline double unit(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double normal(Engine& eng) {
    // Box-Muller, one value per call; u clamped away from 0
    double u = unit(eng);
    double v = unit(eng);
    if (u <= 0.0) u = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u)) *
           std::cos(2.0 * 3.14159265358979323846 * v);
}

template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[below(eng, i)]);
    }
}

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Engine& eng) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(eng);
    return m;
}

}  // namespace rng

}  // namespace cspnet
