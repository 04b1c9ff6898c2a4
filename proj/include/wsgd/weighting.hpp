#pragma once

// Normalized weight functions w(i) with E_p[w] = 1, the reweighted sampling
// distribution p^(w)(i) = w(i) p(i), and the constants SGD sees under it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "wsgd/errors.hpp"
#include "wsgd/numerics.hpp"

namespace wsgd {

struct WeightScheme {
    enum class Kind { Uniform, FullyBiasedL, PartiallyBiasedL, BiasedG, MixedGL };

    Kind kind = Kind::Uniform;
    double lambda = 1.0; ///< only meaningful for PartiallyBiasedL

    static WeightScheme uniform() { return {Kind::Uniform, 1.0}; }
    static WeightScheme fully_biased() { return {Kind::FullyBiasedL, 0.0}; }
    static WeightScheme partially_biased(double lambda) { return {Kind::PartiallyBiasedL, lambda}; }
    static WeightScheme biased_g() { return {Kind::BiasedG, 0.0}; }
    static WeightScheme mixed_gl() { return {Kind::MixedGL, 0.0}; }

    bool needs_g() const { return kind == Kind::BiasedG || kind == Kind::MixedGL; }

    std::string name() const
    {
        switch (kind) {
        case Kind::Uniform: return "uniform";
        case Kind::FullyBiasedL: return "fully-biased-L";
        case Kind::PartiallyBiasedL: return "partially-biased-L(" + std::to_string(lambda) + ")";
        case Kind::BiasedG: return "biased-G";
        case Kind::MixedGL: return "mixed-GL";
        }
        return "unknown";
    }
};

struct WeightTable {
    Vector w;              ///< normalized weights, sum_i p_i w(i) = 1
    Vector inv_w;          ///< 1 / w(i), zero where w(i) = 0 (never sampled)
    Vector sampling_probs; ///< p^(w)(i) = w(i) p(i)
    WeightScheme scheme;
};

struct EffectiveConstants {
    double sup_L_w = 0.0;    ///< sup_i L_i / w(i)
    double sigma_sq_w = 0.0; ///< E_p[ ||grad f_i(x*)||^2 / w(i) ]
    double L_sq_bar_w = 0.0; ///< E_p[ L_i^2 / w(i) ]
};

namespace detail {

inline void check_probs(const Vector& p, Eigen::Index n, const char* what)
{
    if (p.size() != n) {
        throw DimensionError(std::string(what) + ": probability vector has wrong length");
    }
    if ((p.array() < 0.0).any() || std::abs(p.sum() - 1.0) > 1e-9) {
        throw DistributionError(std::string(what) + ": probabilities must be nonnegative and sum to 1");
    }
}

} // namespace detail

inline WeightTable build_weights(const WeightScheme& scheme, const Vector& L, const Vector& p,
                                 const std::optional<Vector>& g = std::nullopt)
{
    const auto n = L.size();
    detail::check_probs(p, n, "build_weights");
    if ((L.array() < 0.0).any()) {
        throw ParameterError("build_weights: Lipschitz constants must be nonnegative");
    }
    const double L_bar = p.dot(L);
    if (!(L_bar > 0.0)) {
        throw DegenerateProblemError("build_weights: all Lipschitz constants are zero");
    }

    double g_bar = 0.0;
    if (scheme.needs_g()) {
        if (!g) {
            throw ParameterError("build_weights: " + scheme.name() + " needs gradient bounds g");
        }
        if (g->size() != n) {
            throw DimensionError("build_weights: g has wrong length");
        }
        if ((g->array() < 0.0).any()) {
            throw ParameterError("build_weights: g must be nonnegative");
        }
        g_bar = p.dot(*g);
        if (!(g_bar > 0.0)) {
            throw DegenerateProblemError("build_weights: all gradient bounds g are zero");
        }
    }

    Vector w(n);
    switch (scheme.kind) {
    case WeightScheme::Kind::Uniform:
        w.setOnes();
        break;
    case WeightScheme::Kind::FullyBiasedL:
        w = L / L_bar;
        break;
    case WeightScheme::Kind::PartiallyBiasedL: {
        const double lam = scheme.lambda;
        if (!(lam >= 0.0 && lam <= 1.0)) {
            throw ParameterError("build_weights: lambda must lie in [0, 1]");
        }
        w = (lam + (1.0 - lam) * (L / L_bar).array()).matrix();
        break;
    }
    case WeightScheme::Kind::BiasedG:
        w = *g / g_bar;
        break;
    case WeightScheme::Kind::MixedGL:
        w = 0.5 * (*g / g_bar) + 0.5 * (L / L_bar);
        break;
    }

    // Absorb rounding so that E_p[w] = 1 to machine precision.
    w /= p.dot(w);

    WeightTable t;
    t.scheme = scheme;
    t.inv_w = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w(i) > 0.0) {
            t.inv_w(i) = 1.0 / w(i);
        }
    }
    t.sampling_probs = w.cwiseProduct(p);
    t.sampling_probs /= t.sampling_probs.sum();
    t.w = std::move(w);
    return t;
}

inline EffectiveConstants effective_constants(const WeightTable& t, const Vector& L,
                                              const Vector& grad_norms_sq_at_xstar,
                                              const Vector& p)
{
    const auto n = t.w.size();
    if (L.size() != n || grad_norms_sq_at_xstar.size() != n || p.size() != n) {
        throw DimensionError("effective_constants: inputs have different lengths");
    }
    EffectiveConstants c;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (p(i) == 0.0) {
            continue;
        }
        if (t.w(i) == 0.0) {
            if (L(i) > 0.0 || grad_norms_sq_at_xstar(i) > 0.0) {
                throw UnreachableComponentError("effective_constants: component "
                                                + std::to_string(i)
                                                + " has zero weight but nonzero curvature or gradient");
            }
            continue;
        }
        c.sup_L_w = std::max(c.sup_L_w, L(i) / t.w(i));
        c.sigma_sq_w += p(i) * grad_norms_sq_at_xstar(i) / t.w(i);
        c.L_sq_bar_w += p(i) * L(i) * L(i) / t.w(i);
    }
    return c;
}

/// Upper bound on sup_i L_i / w^lambda(i): min(Lbar / (1 - lambda), sup L / lambda).
inline double partial_bias_sup_bound(double lambda, double L_bar, double sup_L)
{
    const double inf = std::numeric_limits<double>::infinity();
    const double a = lambda < 1.0 ? L_bar / (1.0 - lambda) : inf;
    const double b = lambda > 0.0 ? sup_L / lambda : inf;
    return std::min(a, b);
}

/// Factor bounding sigma^2_(w^lambda) / sigma^2:
/// max(1 / lambda, Lbar / ((1 - lambda) inf L)), over the branches that are
/// finite. Each branch alone bounds 1 / w^lambda(i), so a branch made
/// infinite by lambda in {0, 1} or inf L = 0 is dropped. Returns +inf when
/// neither branch is finite.
inline double partial_bias_sigma_factor(double lambda, double L_bar, double inf_L)
{
    const double inf = std::numeric_limits<double>::infinity();
    const double a = lambda > 0.0 ? 1.0 / lambda : inf;
    const double b = (lambda < 1.0 && inf_L > 0.0) ? L_bar / ((1.0 - lambda) * inf_L) : inf;
    if (std::isinf(a)) {
        return b;
    }
    if (std::isinf(b)) {
        return a;
    }
    return std::max(a, b);
}

} // namespace wsgd
