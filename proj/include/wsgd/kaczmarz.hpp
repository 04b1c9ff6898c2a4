#pragma once

// Randomized Kaczmarz row-action solvers for least squares: row selection
// proportional to ||a_i||^2, uniform, or the half/half mixture with the
// modified update. Each is a weighted SGD run on f_i = (n/2)(<a_i,x> - b_i)^2.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wsgd/errors.hpp"
#include "wsgd/numerics.hpp"
#include "wsgd/problem.hpp"
#include "wsgd/sampling.hpp"
#include "wsgd/sgd.hpp"

namespace wsgd {

struct KaczmarzVariant {
    enum class Kind { Weighted, Uniform, Hybrid };

    Kind kind = Kind::Weighted;
    double c = 1.0;

    static KaczmarzVariant weighted(double c) { return {Kind::Weighted, c}; }
    static KaczmarzVariant uniform(double c) { return {Kind::Uniform, c}; }
    static KaczmarzVariant hybrid(double c) { return {Kind::Hybrid, c}; }

    /// Upper end of the step range where the error bound holds.
    double c_limit() const { return kind == Kind::Hybrid ? 0.5 : 1.0; }
    bool bound_applies() const { return c > 0.0 && c < c_limit(); }

    std::string name() const
    {
        switch (kind) {
        case Kind::Weighted: return "weighted";
        case Kind::Uniform: return "uniform";
        case Kind::Hybrid: return "hybrid";
        }
        return "unknown";
    }
};

/// x + c (b_i - <a, x>) / ||a||^2 a
inline Vector kaczmarz_step(const Vector& x, const Vector& a, double b_i, double c)
{
    if (a.size() != x.size()) {
        throw DimensionError("kaczmarz_step: row and iterate differ in length");
    }
    const double nsq = a.squaredNorm();
    if (!(nsq > 0.0)) {
        throw ZeroRowError("kaczmarz_step: zero row");
    }
    return x + (c * (b_i - a.dot(x)) / nsq) * a;
}

/// x + 2c (b_i - <a, x>) / (||A||_F^2 / n + ||a||^2) a
inline Vector hybrid_step(const Vector& x, const Vector& a, double b_i, double c, double frob_sq,
                          std::size_t n)
{
    if (a.size() != x.size()) {
        throw DimensionError("hybrid_step: row and iterate differ in length");
    }
    if (!(frob_sq > 0.0) || n == 0) {
        throw ParameterError("hybrid_step: need ||A||_F^2 > 0 and n > 0");
    }
    const double denom = frob_sq / static_cast<double>(n) + a.squaredNorm();
    return x + (2.0 * c * (b_i - a.dot(x)) / denom) * a;
}

/// SGD step size under which a Kaczmarz step with relaxation c coincides with
/// weighted SGD on the least-squares components (fully biased weights for the
/// weighted step, lambda = 1/2 weights for the hybrid step).
inline double equivalence_gamma(double c, double frob_sq)
{
    if (!(frob_sq > 0.0)) {
        throw ParameterError("equivalence_gamma: ||A||_F^2 must be positive");
    }
    return c / frob_sq;
}

/// Row-selection probabilities of a variant.
inline Vector row_distribution(const DenseMatrix& A, KaczmarzVariant::Kind kind)
{
    const auto n = A.rows();
    const Vector norms = row_norms_sq(A);
    const double frob = norms.sum();
    if (!(frob > 0.0)) {
        throw DegenerateProblemError("row_distribution: matrix is zero");
    }
    const Vector uni = Vector::Constant(n, 1.0 / static_cast<double>(n));
    switch (kind) {
    case KaczmarzVariant::Kind::Weighted: return norms / frob;
    case KaczmarzVariant::Kind::Uniform: return uni;
    case KaczmarzVariant::Kind::Hybrid: return 0.5 * (norms / frob) + 0.5 * uni;
    }
    return uni;
}

enum class KaczmarzReference { Lsq, WeightedLsq };

struct KaczmarzOptions {
    std::size_t max_iters = 1000;
    std::uint64_t seed = 0;
    std::optional<KaczmarzReference> reference; ///< default: WeightedLsq for Uniform, else Lsq
    std::optional<Vector> x0;
    std::vector<std::size_t> extra_checkpoints;
    std::optional<double> error_target;
};

inline KaczmarzReference default_reference(const KaczmarzVariant& v)
{
    return v.kind == KaczmarzVariant::Kind::Uniform ? KaczmarzReference::WeightedLsq
                                                    : KaczmarzReference::Lsq;
}

inline RunRecord run_kaczmarz(const DenseMatrix& A, const Vector& b, const KaczmarzVariant& v,
                              const KaczmarzOptions& opts)
{
    check_matrix(A, "run_kaczmarz");
    if (b.size() != A.rows()) {
        throw DimensionError("run_kaczmarz: rhs length does not match row count");
    }
    const auto n = A.rows();
    const Vector norms = row_norms_sq(A);
    if (v.kind != KaczmarzVariant::Kind::Hybrid) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!(norms(i) > 0.0)) {
                throw ZeroRowError("run_kaczmarz: row " + std::to_string(i) + " is zero");
            }
        }
    }
    const double frob = norms.sum();

    const KaczmarzReference which = opts.reference.value_or(default_reference(v));
    const Vector ref =
        which == KaczmarzReference::Lsq ? solve_least_squares(A, b) : weighted_solution(A, b);
    const Vector x0 = opts.x0 ? *opts.x0 : Vector::Zero(A.cols());
    if (x0.size() != A.cols()) {
        throw DimensionError("run_kaczmarz: x0 has wrong dimension");
    }

    const AliasTable alias = build_alias(row_distribution(A, v.kind));
    // Per-row multiplier on the residual.
    Vector coef(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        coef(i) = v.kind == KaczmarzVariant::Kind::Hybrid
                      ? 2.0 * v.c / (frob / static_cast<double>(n) + norms(i))
                      : v.c / norms(i);
    }
    auto step = [&](Vector& x, RngStream& rng) {
        const auto i = static_cast<Eigen::Index>(alias.draw(rng));
        const double r = b(i) - A.row(i).dot(x);
        x.noalias() += (coef(i) * r) * A.row(i).transpose();
    };
    auto no_grad = [](const Vector&) { return std::numeric_limits<double>::infinity(); };

    RunRecord rec = detail::drive(step, no_grad, x0, ref, opts.max_iters, 0.0, 0, opts.seed,
                                  opts.extra_checkpoints, opts.error_target, false);
    rec.step_size = v.c;
    rec.config.max_iters = opts.max_iters;
    rec.config.seed = opts.seed;
    if (!v.bound_applies()) {
        rec.warnings.push_back(v.name() + " Kaczmarz with c = " + std::to_string(v.c)
                               + " is outside (0, " + std::to_string(v.c_limit())
                               + "); no error bound applies");
    }
    return rec;
}

/// Matrix quantities the Kaczmarz bounds read.
struct KaczmarzStats {
    std::size_t n = 0;
    double frob_sq = 0.0;  ///< ||A||_F^2
    double a_min_sq = 0.0; ///< min_i ||a_i||^2
    double cond_K = 0.0;   ///< K(A)
    double sigma_sq = 0.0; ///< n sum_i ||a_i||^2 (<a_i, x*> - b_i)^2
    Vector x_star;
    Vector e;              ///< A x* - b
    // Row-normalized system D^-1 A; empty when A has a zero row.
    std::optional<double> cond_K_w;
    std::optional<Vector> x_star_w;
    std::optional<double> e_w_sq; ///< ||D^-1 (A x*_w - b)||^2
};

inline KaczmarzStats kaczmarz_stats(const DenseMatrix& A, const Vector& b)
{
    const Problem prob = from_least_squares(A, b);
    const ProblemStats s = stats(prob);
    KaczmarzStats k;
    k.n = static_cast<std::size_t>(A.rows());
    k.frob_sq = s.L_bar;
    k.a_min_sq = row_norms_sq(A).minCoeff();
    k.cond_K = s.cond_K;
    k.sigma_sq = s.sigma_sq;
    k.x_star = s.x_star;
    k.e = A * s.x_star - b;
    if (k.a_min_sq > 0.0) {
        const auto [An, bn] = row_normalized(A, b);
        const ProblemStats sw = stats(from_least_squares(An, bn));
        k.cond_K_w = sw.cond_K;
        k.x_star_w = sw.x_star;
        k.e_w_sq = (An * sw.x_star - bn).squaredNorm();
    }
    return k;
}

struct KaczmarzBound {
    double rate = 1.0;
    double horizon = 0.0;
    KaczmarzVariant variant;

    double operator()(double k, double eps0) const { return std::pow(rate, k) * eps0 + horizon; }
};

inline KaczmarzBound kaczmarz_bound(const KaczmarzVariant& v, const KaczmarzStats& s)
{
    if (!v.bound_applies()) {
        throw BoundUndefinedError(v.name() + " Kaczmarz bound needs 0 < c < "
                                  + std::to_string(v.c_limit()));
    }
    const double c = v.c;
    const double n = static_cast<double>(s.n);
    KaczmarzBound kb;
    kb.variant = v;
    switch (v.kind) {
    case KaczmarzVariant::Kind::Weighted: {
        kb.rate = 1.0 - 2.0 * c * (1.0 - c) / s.cond_K;
        if (s.sigma_sq == 0.0) {
            kb.horizon = 0.0;
        } else if (!(s.a_min_sq > 0.0)) {
            kb.horizon = std::numeric_limits<double>::infinity();
        } else {
            const double r = s.sigma_sq / (n * s.frob_sq * s.a_min_sq);
            kb.horizon = c / (1.0 - c) * s.cond_K * r;
        }
        break;
    }
    case KaczmarzVariant::Kind::Uniform: {
        if (!s.cond_K_w || !s.e_w_sq) {
            throw ZeroRowError("uniform Kaczmarz bound needs a matrix without zero rows");
        }
        kb.rate = 1.0 - 2.0 * c * (1.0 - c) / *s.cond_K_w;
        kb.horizon = c / (1.0 - c) * *s.cond_K_w * (*s.e_w_sq / n);
        break;
    }
    case KaczmarzVariant::Kind::Hybrid: {
        kb.rate = 1.0 - 2.0 * c * (1.0 - 2.0 * c) / s.cond_K;
        // Theorem bound at gamma = c/||A||_F^2, sup L_(w) <= 2 Lbar, sigma_(w)^2 <= 2 sigma^2.
        kb.horizon = c * s.cond_K / (1.0 - 2.0 * c) * 2.0 * s.sigma_sq / (s.frob_sq * s.frob_sq);
        break;
    }
    }
    return kb;
}

} // namespace wsgd
