#pragma once

// Finite-sum objectives G(x) = sum_i p_i f_i(x) over quadratic components
// f_i(x) = (alpha_i / 2) (<z_i, x> - b_i)^2, and the constants that govern
// SGD on them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "wsgd/errors.hpp"
#include "wsgd/numerics.hpp"

namespace wsgd {

struct QuadraticComponent {
    Vector z;
    double offset = 0.0;
    double scale = 1.0;

    /// Lipschitz constant of the gradient, alpha ||z||^2.
    double lipschitz() const { return scale * z.squaredNorm(); }

    double residual(const Vector& x) const { return z.dot(x) - offset; }

    double value(const Vector& x) const
    {
        const double r = residual(x);
        return 0.5 * scale * r * r;
    }

    Vector gradient(const Vector& x) const { return (scale * residual(x)) * z; }
};

/// Immutable finite sum. Directions are stored as the rows of one matrix so a
/// component gradient touches a single contiguous row.
class Problem {
public:
    Problem(DenseMatrix directions, Vector offsets, Vector scales, Vector probs)
        : directions_(std::move(directions)), offsets_(std::move(offsets)),
          scales_(std::move(scales)), probs_(std::move(probs))
    {
        const auto n = directions_.rows();
        if (n < 1 || directions_.cols() < 1) {
            throw DimensionError("Problem: need at least one component of positive dimension");
        }
        if (offsets_.size() != n || scales_.size() != n || probs_.size() != n) {
            throw DimensionError("Problem: offsets, scales and probabilities must have one entry per component");
        }
        if (!directions_.allFinite() || !offsets_.allFinite() || !scales_.allFinite()) {
            throw ParameterError("Problem: non-finite component data");
        }
        if ((scales_.array() <= 0.0).any()) {
            throw ParameterError("Problem: component scales must be positive");
        }
        if ((probs_.array() < 0.0).any() || std::abs(probs_.sum() - 1.0) > 1e-9) {
            throw DistributionError("Problem: source probabilities must be nonnegative and sum to 1");
        }
        lipschitz_ = scales_.cwiseProduct(directions_.rowwise().squaredNorm());
    }

    static Problem from_components(const std::vector<QuadraticComponent>& comps,
                                   std::optional<Vector> probs = std::nullopt)
    {
        if (comps.empty()) {
            throw DimensionError("Problem: no components");
        }
        const auto n = static_cast<Eigen::Index>(comps.size());
        const auto d = comps.front().z.size();
        DenseMatrix Z(n, d);
        Vector off(n);
        Vector sc(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& c = comps[static_cast<std::size_t>(i)];
            if (c.z.size() != d) {
                throw DimensionError("Problem: components have different dimensions");
            }
            Z.row(i) = c.z.transpose();
            off(i) = c.offset;
            sc(i) = c.scale;
        }
        Vector p = probs ? *probs : Vector::Constant(n, 1.0 / static_cast<double>(n));
        return Problem(std::move(Z), std::move(off), std::move(sc), std::move(p));
    }

    std::size_t size() const { return static_cast<std::size_t>(directions_.rows()); }
    Eigen::Index dim() const { return directions_.cols(); }

    const DenseMatrix& directions() const { return directions_; }
    const Vector& offsets() const { return offsets_; }
    const Vector& scales() const { return scales_; }
    const Vector& probs() const { return probs_; }
    const Vector& lipschitz() const { return lipschitz_; }

    QuadraticComponent component(std::size_t i) const
    {
        check_index(i);
        const auto k = static_cast<Eigen::Index>(i);
        return {directions_.row(k).transpose(), offsets_(k), scales_(k)};
    }

    double residual(std::size_t i, const Vector& x) const
    {
        const auto k = static_cast<Eigen::Index>(i);
        return directions_.row(k).dot(x) - offsets_(k);
    }

    Vector gradient(std::size_t i, const Vector& x) const
    {
        check_index(i);
        check_point(x);
        const auto k = static_cast<Eigen::Index>(i);
        return (scales_(k) * residual(i, x)) * directions_.row(k).transpose();
    }

    /// Gradient of G, sum_i p_i grad f_i(x).
    Vector full_gradient(const Vector& x) const
    {
        check_point(x);
        const Vector r = directions_ * x - offsets_;
        const Vector coef = probs_.cwiseProduct(scales_).cwiseProduct(r);
        return directions_.transpose() * coef;
    }

    double objective(const Vector& x) const
    {
        check_point(x);
        const Vector r = directions_ * x - offsets_;
        return 0.5 * probs_.dot(scales_.cwiseProduct(r.cwiseAbs2()));
    }

    /// Hessian of G, sum_i p_i alpha_i z_i z_i^T.
    Eigen::MatrixXd hessian() const
    {
        const Vector c = probs_.cwiseProduct(scales_);
        Eigen::MatrixXd H = directions_.transpose() * c.asDiagonal() * directions_;
        return 0.5 * (H + H.transpose());
    }

private:
    void check_index(std::size_t i) const
    {
        if (i >= size()) {
            throw DimensionError("Problem: component index " + std::to_string(i)
                                 + " out of range (n = " + std::to_string(size()) + ")");
        }
    }

    void check_point(const Vector& x) const
    {
        if (x.size() != dim()) {
            throw DimensionError("Problem: point has dimension " + std::to_string(x.size())
                                 + ", expected " + std::to_string(dim()));
        }
    }

    DenseMatrix directions_;
    Vector offsets_;
    Vector scales_;
    Vector probs_;
    Vector lipschitz_;
};

struct ProblemStats {
    Vector L;            ///< per-component Lipschitz constants of the gradients
    double L_bar = 0.0;  ///< E_p L_i
    double sup_L = 0.0;  ///< max over components with p_i > 0
    double inf_L = 0.0;  ///< min over components with p_i > 0
    double L_sq_bar = 0.0;
    double mu = 0.0;     ///< smallest nonzero Hessian eigenvalue
    double lambda_max = 0.0;
    double sigma_sq = 0.0;
    double cond_K = 0.0; ///< L_bar / mu
    Vector x_star;
    Vector grad_norms_sq_at_xstar;
};

/// Least squares 1/2 ||Ax - b||^2 as a uniform finite sum with alpha_i = n.
inline Problem from_least_squares(const DenseMatrix& A, const Vector& b)
{
    if (A.rows() < 1 || A.cols() < 1) {
        throw DimensionError("from_least_squares: empty matrix");
    }
    if (b.size() != A.rows()) {
        throw DimensionError("from_least_squares: rhs length " + std::to_string(b.size())
                             + " does not match " + std::to_string(A.rows()) + " rows");
    }
    const auto n = A.rows();
    const double dn = static_cast<double>(n);
    return Problem(A, b, Vector::Constant(n, dn), Vector::Constant(n, 1.0 / dn));
}

inline ProblemStats stats(const Problem& prob)
{
    const Vector& L = prob.lipschitz();
    const Vector& p = prob.probs();
    if (!(L.maxCoeff() > 0.0)) {
        throw DegenerateProblemError("stats: every component has zero curvature");
    }

    ProblemStats s;
    s.L = L;
    s.L_bar = p.dot(L);
    s.L_sq_bar = p.dot(L.cwiseAbs2());
    s.sup_L = 0.0;
    s.inf_L = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < L.size(); ++i) {
        if (p(i) > 0.0) {
            s.sup_L = std::max(s.sup_L, L(i));
            s.inf_L = std::min(s.inf_L, L(i));
        }
    }

    const ExtremalEigs eig = extremal_eigs(prob.hessian());
    s.mu = eig.min_nonzero;
    s.lambda_max = eig.max;
    s.cond_K = s.L_bar / s.mu;

    // Equivalent least-squares system: rows sqrt(p_i alpha_i) z_i.
    const Vector w = p.cwiseProduct(prob.scales()).cwiseSqrt();
    const DenseMatrix M = w.asDiagonal() * prob.directions();
    const Vector t = w.cwiseProduct(prob.offsets());
    s.x_star = solve_least_squares(M, t);

    const Vector r = prob.directions() * s.x_star - prob.offsets();
    s.grad_norms_sq_at_xstar = prob.scales().cwiseAbs2().cwiseProduct(r.cwiseAbs2()).cwiseProduct(
        prob.directions().rowwise().squaredNorm());
    s.sigma_sq = p.dot(s.grad_norms_sq_at_xstar);
    return s;
}

/// Rows and targets scaled by 1 / ||a_i||.
inline std::pair<DenseMatrix, Vector> row_normalized(const DenseMatrix& A, const Vector& b)
{
    if (b.size() != A.rows()) {
        throw DimensionError("row_normalized: rhs length does not match row count");
    }
    const Vector norms = A.rowwise().norm();
    for (Eigen::Index i = 0; i < norms.size(); ++i) {
        if (!(norms(i) > 0.0)) {
            throw ZeroRowError("row " + std::to_string(i) + " has zero norm");
        }
    }
    const Vector inv = norms.cwiseInverse();
    return {inv.asDiagonal() * A, inv.cwiseProduct(b)};
}

/// argmin 1/2 ||D^-1 (Ax - b)||^2 with D = diag(||a_i||).
inline Vector weighted_solution(const DenseMatrix& A, const Vector& b)
{
    check_matrix(A, "weighted_solution");
    const auto [An, bn] = row_normalized(A, b);
    return solve_least_squares(An, bn);
}

/// N+1 quadratics in two dimensions: (N/2)(x[0] - sign)^2 once, (1/2) x[1]^2
/// N times, uniform source distribution.
inline Problem tightness_instance(int N, int sign = 1)
{
    if (N < 1) {
        throw ParameterError("tightness_instance: N must be at least 1");
    }
    if (sign != 1 && sign != -1) {
        throw ParameterError("tightness_instance: sign must be +1 or -1");
    }
    const Eigen::Index n = N + 1;
    DenseMatrix Z = DenseMatrix::Zero(n, 2);
    Vector off = Vector::Zero(n);
    Vector sc = Vector::Ones(n);
    Z(0, 0) = 1.0;
    off(0) = static_cast<double>(sign);
    sc(0) = static_cast<double>(N);
    for (Eigen::Index i = 1; i < n; ++i) {
        Z(i, 1) = 1.0;
    }
    return Problem(std::move(Z), std::move(off), std::move(sc),
                   Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

/// L <x - y, g(x) - g(y)> - ||g(x) - g(y)||^2, nonnegative for L-smooth convex f.
inline double cocoercivity_gap(const QuadraticComponent& c, const Vector& x, const Vector& y)
{
    const double L = c.lipschitz();
    const Vector dg = c.gradient(x) - c.gradient(y);
    return L * (x - y).dot(dg) - dg.squaredNorm();
}

} // namespace wsgd
