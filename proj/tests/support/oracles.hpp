#pragma once

// Reference computations for the tests. Deliberately written with plain
// std::vector loops and <random> so they share no code path with the
// library (which runs on Eigen and its own RNG stream).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "wsgd/numerics.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat to_mat(const wsgd::DenseMatrix& A)
{
    Mat M(static_cast<std::size_t>(A.rows()), Vec(static_cast<std::size_t>(A.cols())));
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            M[i][j] = A(i, j);
        }
    }
    return M;
}

inline Vec to_vec(const wsgd::Vector& v)
{
    return Vec(v.data(), v.data() + v.size());
}

inline wsgd::Vector from_vec(const Vec& v)
{
    wsgd::Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = v[i];
    }
    return out;
}

inline double dot(const Vec& a, const Vec& b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

inline double norm_sq(const Vec& a) { return dot(a, a); }

inline Vec sub(const Vec& a, const Vec& b)
{
    Vec r(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        r[i] = a[i] - b[i];
    }
    return r;
}

/// A^T A
inline Mat gram(const Mat& A)
{
    const std::size_t d = A.front().size();
    Mat G(d, Vec(d, 0.0));
    for (const auto& row : A) {
        for (std::size_t j = 0; j < d; ++j) {
            for (std::size_t k = 0; k < d; ++k) {
                G[j][k] += row[j] * row[k];
            }
        }
    }
    return G;
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, ascending.
inline Vec jacobi_eigenvalues(Mat S, int max_sweeps = 100)
{
    const std::size_t n = S.size();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                off += S[p][q] * S[p][q];
            }
        }
        if (off < 1e-30) {
            break;
        }
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(S[p][q]) < 1e-300) {
                    continue;
                }
                const double theta = (S[q][q] - S[p][p]) / (2.0 * S[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0)
                                 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double skp = S[k][p];
                    const double skq = S[k][q];
                    S[k][p] = c * skp - s * skq;
                    S[k][q] = s * skp + c * skq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double spk = S[p][k];
                    const double sqk = S[q][k];
                    S[p][k] = c * spk - s * sqk;
                    S[q][k] = s * spk + c * sqk;
                }
            }
        }
    }
    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i) {
        ev[i] = S[i][i];
    }
    std::sort(ev.begin(), ev.end());
    return ev;
}

/// Solve S x = r by Gaussian elimination with partial pivoting.
inline Vec gauss_solve(Mat S, Vec r)
{
    const std::size_t n = S.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t i = c + 1; i < n; ++i) {
            if (std::abs(S[i][c]) > std::abs(S[piv][c])) {
                piv = i;
            }
        }
        if (std::abs(S[piv][c]) < 1e-300) {
            throw std::runtime_error("gauss_solve: singular");
        }
        std::swap(S[c], S[piv]);
        std::swap(r[c], r[piv]);
        for (std::size_t i = c + 1; i < n; ++i) {
            const double f = S[i][c] / S[c][c];
            for (std::size_t k = c; k < n; ++k) {
                S[i][k] -= f * S[c][k];
            }
            r[i] -= f * r[c];
        }
    }
    Vec x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = r[i];
        for (std::size_t k = i + 1; k < n; ++k) {
            s -= S[i][k] * x[k];
        }
        x[i] = s / S[i][i];
    }
    return x;
}

/// Full-column-rank least squares through the normal equations.
inline Vec lsq_normal(const Mat& A, const Vec& b)
{
    const std::size_t d = A.front().size();
    Vec r(d, 0.0);
    for (std::size_t i = 0; i < A.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            r[j] += A[i][j] * b[i];
        }
    }
    return gauss_solve(gram(A), r);
}

/// Gaussian test data from <random>, independent of the library stream.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : eng_(seed) {}

    double normal() { return norm_(eng_); }
    double unif(double a = 0.0, double b = 1.0)
    {
        return std::uniform_real_distribution<double>(a, b)(eng_);
    }
    std::size_t index(std::size_t n)
    {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_);
    }

    wsgd::DenseMatrix matrix(Eigen::Index n, Eigen::Index d, double row_spread = 0.0)
    {
        wsgd::DenseMatrix A(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = std::exp(row_spread * unif(-1.0, 1.0));
            for (Eigen::Index j = 0; j < d; ++j) {
                A(i, j) = s * normal();
            }
        }
        return A;
    }

    wsgd::Vector vector(Eigen::Index n, double scale = 1.0)
    {
        wsgd::Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = scale * normal();
        }
        return v;
    }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> norm_;
};

inline double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

} // namespace oracle
