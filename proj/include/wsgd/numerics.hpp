#pragma once

// Dense linear algebra and seeded randomness shared by every other module.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "wsgd/errors.hpp"

namespace wsgd {

using Vector = Eigen::VectorXd;

/// Row-major so that a matrix row is a contiguous block (row-action methods
/// touch one row per iteration).
using DenseMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline double dot(std::span<const double> u, std::span<const double> v)
{
    if (u.size() != v.size()) {
        throw DimensionError("dot: length mismatch (" + std::to_string(u.size()) + " vs "
                             + std::to_string(v.size()) + ")");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        s += u[k] * v[k];
    }
    return s;
}

inline double dot(const Vector& u, const Vector& v)
{
    return dot(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
               std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

inline void check_matrix(const DenseMatrix& A, const char* what)
{
    if (A.rows() < 1 || A.cols() < 1) {
        throw DimensionError(std::string(what) + ": empty matrix");
    }
    if (!A.allFinite()) {
        throw ParameterError(std::string(what) + ": matrix has non-finite entries");
    }
}

/// Minimizer of 1/2 ||Ax - b||^2. Rank-deficient A yields the minimum-norm
/// minimizer (complete orthogonal decomposition on top of pivoted Householder QR).
inline Vector solve_least_squares(const DenseMatrix& A, const Vector& b)
{
    check_matrix(A, "solve_least_squares");
    if (b.size() != A.rows()) {
        throw DimensionError("solve_least_squares: rhs has " + std::to_string(b.size())
                             + " entries, matrix has " + std::to_string(A.rows()) + " rows");
    }
    Eigen::MatrixXd colmajor = A;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(colmajor);
    return cod.solve(b);
}

/// Eigenvalues below this fraction of the largest one count as zero.
inline constexpr double kEigenThreshold = 1e-12;

struct ExtremalEigs {
    double max = 0.0;
    double min_nonzero = 0.0;
};

/// Largest eigenvalue and smallest eigenvalue above kEigenThreshold * max of
/// a symmetric positive semidefinite matrix.
inline ExtremalEigs extremal_eigs(const Eigen::MatrixXd& M)
{
    if (M.rows() != M.cols() || M.rows() < 1) {
        throw DimensionError("extremal_eigs: matrix must be square and nonempty");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw DegenerateProblemError("extremal_eigs: eigensolver did not converge");
    }
    const Vector& ev = es.eigenvalues(); // ascending
    const double top = ev(ev.size() - 1);
    if (!(top > 0.0)) {
        throw DegenerateProblemError("extremal_eigs: matrix has no positive eigenvalue");
    }
    const double cut = kEigenThreshold * top;
    double low = top;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (ev(k) > cut) {
            low = ev(k);
            break;
        }
    }
    return {top, low};
}

inline Vector row_norms_sq(const DenseMatrix& A)
{
    return A.rowwise().squaredNorm();
}

/// Mixes a 64-bit value (splitmix64 finalizer).
inline constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for an independent sub-stream, e.g. (seed_base, trial, lambda index).
inline constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                           std::uint64_t b = 0)
{
    return mix64(mix64(mix64(base) ^ a) ^ (b + 0x632be59bd9b4e019ULL));
}

/// Deterministic random stream.
///
/// Raw bits come from std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniforms take the top 53 bits; normals use the Marsaglia
/// polar method with a cached second deviate. None of the <random>
/// distributions are used because their algorithms differ between standard
/// libraries.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal deviate.
    double standard_normal()
    {
        if (spare_) {
            const double s = *spare_;
            spare_.reset();
            return s;
        }
        double u = 0.0;
        double v = 0.0;
        double s = 0.0;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        return u * f;
    }

    double gaussian(double mean, double variance)
    {
        if (!(variance >= 0.0)) {
            throw ParameterError("gaussian: variance must be nonnegative");
        }
        if (variance == 0.0) {
            return mean;
        }
        return mean + std::sqrt(variance) * standard_normal();
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

inline double gaussian(RngStream& rng, double mean, double variance)
{
    return rng.gaussian(mean, variance);
}

} // namespace wsgd
