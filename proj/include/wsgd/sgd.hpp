#pragma once

// Weighted SGD x <- x - (gamma / w(i)) grad f_i(x), i ~ p^(w), with the
// closed-form step sizes, iteration counts and error envelope that go with it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wsgd/errors.hpp"
#include "wsgd/io.hpp"
#include "wsgd/numerics.hpp"
#include "wsgd/problem.hpp"
#include "wsgd/sampling.hpp"
#include "wsgd/weighting.hpp"

namespace wsgd {

// ---------------------------------------------------------------------------
// Step sizes

namespace detail {

inline void check_step_args(double mu, double eps, double sigma_sq, const char* what)
{
    if (!(mu > 0.0)) {
        throw ParameterError(std::string(what) + ": mu must be positive");
    }
    if (!(eps > 0.0)) {
        throw ParameterError(std::string(what) + ": epsilon must be positive");
    }
    if (!(sigma_sq >= 0.0)) {
        throw ParameterError(std::string(what) + ": sigma^2 must be nonnegative");
    }
}

} // namespace detail

/// gamma = mu eps / (2 eps mu supL + 2 sigma^2); pass the weighted constants
/// when a weighting is active.
inline double step_size_cor22(double mu, double eps, double sup_L_w, double sigma_sq_w)
{
    detail::check_step_args(mu, eps, sigma_sq_w, "step_size_cor22");
    if (!(sup_L_w > 0.0)) {
        throw ParameterError("step_size_cor22: sup L must be positive");
    }
    return mu * eps / (2.0 * eps * mu * sup_L_w + 2.0 * sigma_sq_w);
}

/// Step for the half-biased weights: gamma = mu eps / (4 (eps mu Lbar + sigma^2)).
inline double step_size_cor31(double mu, double eps, double L_bar, double sigma_sq)
{
    detail::check_step_args(mu, eps, sigma_sq, "step_size_cor31");
    if (!(L_bar > 0.0)) {
        throw ParameterError("step_size_cor31: Lbar must be positive");
    }
    return mu * eps / (4.0 * (eps * mu * L_bar + sigma_sq));
}

/// Step for the lambda-family of partially biased weights, using the
/// envelope bounds on sup L_(w) and sigma^2_(w).
inline double step_size_cor33(double mu, double eps, double lambda, double L_bar, double sup_L,
                              double inf_L, double sigma_sq)
{
    detail::check_step_args(mu, eps, sigma_sq, "step_size_cor33");
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw ParameterError("step_size_cor33: lambda must lie in [0, 1]");
    }
    if (!(L_bar > 0.0) || !(sup_L > 0.0) || !(inf_L >= 0.0)) {
        throw ParameterError("step_size_cor33: Lipschitz constants out of range");
    }
    const double sup_bound = partial_bias_sup_bound(lambda, L_bar, sup_L);
    double noise = 0.0;
    if (sigma_sq > 0.0) {
        const double factor = partial_bias_sigma_factor(lambda, L_bar, inf_L);
        if (std::isinf(factor)) {
            throw BoundUndefinedError("step_size_cor33: lambda = 0 with inf L = 0 and sigma^2 > 0");
        }
        noise = 2.0 * factor * sigma_sq;
    }
    return mu * eps / (2.0 * eps * mu * sup_bound + noise);
}

// ---------------------------------------------------------------------------
// Iteration counts

enum class IterBound { Cor22, Cor31, Cor33, BachMoulines };

/// Constants an iteration count may read. For Cor22 under a weighting, put
/// sup L_(w) in sup_L and sigma^2_(w) in sigma_sq.
struct BoundConstants {
    double mu = 0.0;
    double sup_L = 0.0;
    double L_bar = 0.0;
    double inf_L = 0.0;
    double L_sq_bar = 0.0;
    double sigma_sq = 0.0;
    double lambda = 0.5;
};

/// Unrounded iteration count; zero when eps is already reachable at k = 0.
inline double iter_bound_exact(IterBound which, const BoundConstants& c, double eps, double eps0)
{
    if (!(c.mu > 0.0) || !(eps > 0.0) || !(eps0 >= 0.0)) {
        throw ParameterError("iter_bound: need mu > 0, eps > 0, eps0 >= 0");
    }
    const double mu = c.mu;
    const double noise = c.sigma_sq / (mu * mu * eps);
    switch (which) {
    case IterBound::Cor22: {
        if (eps >= 2.0 * eps0) {
            return 0.0;
        }
        return 2.0 * std::log(2.0 * eps0 / eps) * (c.sup_L / mu + noise);
    }
    case IterBound::Cor31: {
        if (eps >= 2.0 * eps0) {
            return 0.0;
        }
        return 4.0 * std::log(2.0 * eps0 / eps) * (c.L_bar / mu + noise);
    }
    case IterBound::Cor33: {
        if (eps >= 2.0 * eps0) {
            return 0.0;
        }
        const double a = partial_bias_sup_bound(c.lambda, c.L_bar, c.sup_L);
        double b = 0.0;
        if (c.sigma_sq > 0.0) {
            b = partial_bias_sigma_factor(c.lambda, c.L_bar, c.inf_L);
            if (std::isinf(b)) {
                throw BoundUndefinedError("iter_bound: sigma factor undefined for lambda = 0, inf L = 0");
            }
        }
        return 2.0 * std::log(2.0 * eps0 / eps) * (a / mu + b * noise);
    }
    case IterBound::BachMoulines: {
        if (eps >= eps0) {
            return 0.0;
        }
        return 2.0 * std::log(eps0 / eps) * (c.L_sq_bar / (mu * mu) + noise);
    }
    }
    return 0.0;
}

inline std::uint64_t iter_bound(IterBound which, const BoundConstants& c, double eps, double eps0)
{
    const double k = iter_bound_exact(which, c, eps, eps0);
    if (!std::isfinite(k) || k > 1.8e19) {
        throw BoundUndefinedError("iter_bound: count is not finite");
    }
    return static_cast<std::uint64_t>(std::ceil(k));
}

// ---------------------------------------------------------------------------
// Error envelope

/// E||x_k - x*||^2 <= rate^k eps0 + horizon, rate = 1 - 2 gamma mu (1 - gamma supL_w).
struct BoundCurve {
    double gamma = 0.0;
    double mu = 0.0;
    double sup_L_w = 0.0;
    double sigma_sq_w = 0.0;
    double eps0 = 0.0;

    double rate() const { return 1.0 - 2.0 * gamma * mu * (1.0 - gamma * sup_L_w); }
    double horizon() const { return gamma * sigma_sq_w / (mu * (1.0 - gamma * sup_L_w)); }
    double operator()(double k) const { return std::pow(rate(), k) * eps0 + horizon(); }
};

inline BoundCurve bound_curve(double gamma, double mu, double sup_L_w, double sigma_sq_w,
                              double eps0)
{
    if (!(gamma > 0.0) || !(mu > 0.0) || !(sup_L_w > 0.0) || !(sigma_sq_w >= 0.0)
        || !(eps0 >= 0.0)) {
        throw ParameterError("bound_curve: need gamma, mu, sup L > 0 and sigma^2, eps0 >= 0");
    }
    if (!(gamma * sup_L_w < 1.0)) {
        throw ParameterError("bound_curve: requires gamma < 1 / sup L_(w) (gamma * sup L = "
                             + std::to_string(gamma * sup_L_w) + ")");
    }
    return {gamma, mu, sup_L_w, sigma_sq_w, eps0};
}

// ---------------------------------------------------------------------------
// Engine

inline Vector sgd_step(const Vector& x, std::size_t i, double inv_w, double gamma,
                       const Problem& prob)
{
    return x - (gamma * inv_w) * prob.gradient(i, x);
}

struct SgdConfig {
    WeightScheme scheme = WeightScheme::uniform();
    std::optional<double> step_size; ///< gamma; exactly one of step_size / epsilon
    std::optional<double> epsilon;   ///< target accuracy, gamma from the matching corollary
    std::size_t max_iters = 1000;
    double grad_tol = 0.0;                ///< delta; 0 disables the gradient stop
    std::size_t grad_check_interval = 0;  ///< 0 means n
    std::uint64_t seed = 0;
    std::optional<Vector> x0;             ///< default: origin
    std::optional<Vector> g;              ///< gradient bounds for the G schemes
    std::optional<Vector> reference;      ///< error reference, default x*
    std::vector<std::size_t> extra_checkpoints;
    std::optional<double> error_target;   ///< record first k with error <= target
    bool stop_at_error_target = false;
};

struct Checkpoint {
    std::size_t iteration = 0;
    double error_sq = 0.0;

    bool operator==(const Checkpoint&) const = default;
};

struct RunRecord {
    std::vector<Checkpoint> errors_sq;
    std::size_t iterations_run = 0;
    std::optional<std::size_t> hit_tolerance_at;   ///< gradient stop
    std::optional<std::size_t> first_below_target; ///< error_target crossing
    double step_size = 0.0;
    SgdConfig config;
    Vector final_x;
    std::vector<std::string> warnings;
};

/// Step size implied by cfg.epsilon for the configured weighting.
inline double derive_step_size(const WeightScheme& scheme, const ProblemStats& s,
                               const EffectiveConstants& eff, double eps)
{
    if (scheme.kind == WeightScheme::Kind::PartiallyBiasedL) {
        return step_size_cor33(s.mu, eps, scheme.lambda, s.L_bar, s.sup_L, s.inf_L, s.sigma_sq);
    }
    return step_size_cor22(s.mu, eps, eff.sup_L_w, eff.sigma_sq_w);
}

namespace detail {

/// Checkpoints at 0, powers of two, user ticks and the final iterate.
class CheckpointSchedule {
public:
    explicit CheckpointSchedule(std::vector<std::size_t> extra) : extra_(std::move(extra))
    {
        std::sort(extra_.begin(), extra_.end());
        extra_.erase(std::unique(extra_.begin(), extra_.end()), extra_.end());
    }

    bool due(std::size_t k)
    {
        bool hit = false;
        if (k == next_pow2_) {
            hit = true;
            next_pow2_ *= 2;
        }
        while (pos_ < extra_.size() && extra_[pos_] <= k) {
            hit = hit || extra_[pos_] == k;
            ++pos_;
        }
        return hit;
    }

private:
    std::vector<std::size_t> extra_;
    std::size_t pos_ = 0;
    std::size_t next_pow2_ = 1;
};

/// Shared iteration driver for SGD and the Kaczmarz variants. `step(x, rng)`
/// advances the iterate in place.
template <class Step, class GradNorm>
RunRecord drive(Step&& step, GradNorm&& grad_norm, Vector x, const Vector& reference,
                std::size_t max_iters, double grad_tol, std::size_t grad_check_interval,
                std::uint64_t seed, const std::vector<std::size_t>& extra,
                std::optional<double> error_target, bool stop_at_target)
{
    RunRecord rec;
    RngStream rng(seed);
    CheckpointSchedule schedule(extra);
    rec.errors_sq.push_back({0, (x - reference).squaredNorm()});
    if (error_target && rec.errors_sq.front().error_sq <= *error_target) {
        rec.first_below_target = 0;
    }
    const bool track = error_target.has_value();
    std::size_t k = 0;
    while (k < max_iters) {
        step(x, rng);
        ++k;
        const bool log_now = schedule.due(k);
        if (log_now || track) {
            const double e = (x - reference).squaredNorm();
            if (log_now) {
                rec.errors_sq.push_back({k, e});
            }
            if (track && !rec.first_below_target && e <= *error_target) {
                rec.first_below_target = k;
                if (stop_at_target) {
                    break;
                }
            }
        }
        if (grad_tol > 0.0 && grad_check_interval > 0 && k % grad_check_interval == 0
            && grad_norm(x) <= grad_tol) {
            rec.hit_tolerance_at = k;
            break;
        }
    }
    if (rec.errors_sq.back().iteration != k) {
        rec.errors_sq.push_back({k, (x - reference).squaredNorm()});
    }
    rec.iterations_run = k;
    rec.final_x = std::move(x);
    return rec;
}

} // namespace detail

/// Runs weighted SGD with precomputed problem statistics.
inline RunRecord run(const Problem& prob, const ProblemStats& s, const SgdConfig& cfg)
{
    if (cfg.step_size.has_value() == cfg.epsilon.has_value()) {
        throw ParameterError("run: give exactly one of step_size and epsilon");
    }
    const WeightTable table = build_weights(cfg.scheme, s.L, prob.probs(), cfg.g);
    const EffectiveConstants eff =
        effective_constants(table, s.L, s.grad_norms_sq_at_xstar, prob.probs());

    double gamma = 0.0;
    if (cfg.step_size) {
        gamma = *cfg.step_size;
        if (!(gamma > 0.0)) {
            throw ParameterError("run: step size must be positive");
        }
    } else {
        gamma = derive_step_size(cfg.scheme, s, eff, *cfg.epsilon);
    }

    const Vector x0 = cfg.x0 ? *cfg.x0 : Vector::Zero(prob.dim());
    const Vector& ref = cfg.reference ? *cfg.reference : s.x_star;
    if (x0.size() != prob.dim() || ref.size() != prob.dim()) {
        throw DimensionError("run: x0 / reference dimension mismatch");
    }

    const AliasTable alias = build_alias(table.sampling_probs);
    const DenseMatrix& Z = prob.directions();
    const Vector& off = prob.offsets();
    // Per-index multiplier gamma * alpha_i / w(i).
    const Vector coef = gamma * prob.scales().cwiseProduct(table.inv_w);

    auto step = [&](Vector& x, RngStream& rng) {
        const auto i = static_cast<Eigen::Index>(alias.draw(rng));
        const double r = Z.row(i).dot(x) - off(i);
        x.noalias() -= (coef(i) * r) * Z.row(i).transpose();
    };
    auto grad_norm = [&](const Vector& x) { return prob.full_gradient(x).norm(); };

    const std::size_t interval = cfg.grad_check_interval ? cfg.grad_check_interval : prob.size();
    RunRecord rec = detail::drive(step, grad_norm, x0, ref, cfg.max_iters, cfg.grad_tol, interval,
                                  cfg.seed, cfg.extra_checkpoints, cfg.error_target,
                                  cfg.stop_at_error_target);
    rec.step_size = gamma;
    rec.config = cfg;
    if (gamma * eff.sup_L_w >= 1.0) {
        std::ostringstream msg;
        msg << "step size " << gamma << " violates gamma < 1/sup L_(w) = " << 1.0 / eff.sup_L_w
            << "; convergence bound does not apply";
        rec.warnings.push_back(msg.str());
    }
    return rec;
}

inline RunRecord run(const Problem& prob, const SgdConfig& cfg)
{
    return run(prob, stats(prob), cfg);
}

/// `iteration,error_sq`, shortest round-trip decimals.
inline void write_csv(std::ostream& os, const RunRecord& rec)
{
    os << "iteration,error_sq\n";
    for (const auto& c : rec.errors_sq) {
        os << c.iteration << ',' << io::format_double(c.error_sq) << '\n';
    }
}

} // namespace wsgd
