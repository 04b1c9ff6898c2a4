#pragma once

// Index samplers: Vose alias tables for O(1) draws from an explicit
// distribution, and rejection sampling that simulates the reweighted
// distribution from draws of the source distribution alone.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "wsgd/errors.hpp"
#include "wsgd/numerics.hpp"

namespace wsgd {

class AliasTable {
public:
    AliasTable() = default;

    std::size_t size() const { return prob_.size(); }
    const std::vector<double>& cell_prob() const { return prob_; }
    const std::vector<std::uint32_t>& alias() const { return alias_; }

    /// One uniform, one comparison.
    std::size_t draw(RngStream& rng) const
    {
        const double u = rng.uniform() * static_cast<double>(prob_.size());
        std::size_t j = static_cast<std::size_t>(u);
        if (j >= prob_.size()) {
            j = prob_.size() - 1;
        }
        return (u - static_cast<double>(j)) < prob_[j] ? j : alias_[j];
    }

    /// Probability of each index implied by the cells.
    Vector induced_probabilities() const
    {
        const auto n = prob_.size();
        Vector mass = Vector::Zero(static_cast<Eigen::Index>(n));
        const double inv = 1.0 / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j) {
            mass(static_cast<Eigen::Index>(j)) += prob_[j] * inv;
            mass(static_cast<Eigen::Index>(alias_[j])) += (1.0 - prob_[j]) * inv;
        }
        return mass;
    }

private:
    friend AliasTable build_alias(const Vector& p);

    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

inline AliasTable build_alias(const Vector& p)
{
    const auto n = static_cast<std::size_t>(p.size());
    if (n == 0) {
        throw DistributionError("build_alias: empty distribution");
    }
    if (n > 0xffffffffULL) {
        throw DistributionError("build_alias: too many indices");
    }
    if ((p.array() < 0.0).any() || !p.allFinite()) {
        throw DistributionError("build_alias: negative or non-finite probability");
    }
    const double total = p.sum();
    if (std::abs(total - 1.0) > 1e-9) {
        throw DistributionError("build_alias: probabilities sum to " + std::to_string(total));
    }

    AliasTable t;
    t.prob_.assign(n, 0.0);
    t.alias_.resize(n);
    std::vector<double> q(n);
    std::vector<std::uint32_t> small;
    std::vector<std::uint32_t> large;
    small.reserve(n);
    large.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = p(static_cast<Eigen::Index>(i)) / total * static_cast<double>(n);
        t.alias_[i] = static_cast<std::uint32_t>(i);
        (q[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
        const auto s = small.back();
        small.pop_back();
        const auto l = large.back();
        large.pop_back();
        t.prob_[s] = q[s];
        t.alias_[s] = l;
        q[l] = (q[l] + q[s]) - 1.0;
        (q[l] < 1.0 ? small : large).push_back(l);
    }
    // Whatever is left has mass 1 up to rounding.
    for (auto l : large) {
        t.prob_[l] = 1.0;
    }
    for (auto s : small) {
        t.prob_[s] = 1.0;
    }
    return t;
}

inline std::size_t draw(const AliasTable& t, RngStream& rng)
{
    return t.draw(rng);
}

/// Simulates D^(w) from source draws: propose i ~ p, accept with w(i) / cap.
///
/// In two-stage mode (partially biased weights lambda + (1 - lambda) L_i / Lbar)
/// the first proposal is accepted outright with probability lambda; otherwise
/// acceptance switches to L_i / sup L for that proposal and every later one.
class RejectionSampler {
public:
    enum class Mode { SingleStage, TwoStage };

    static RejectionSampler single_stage(const Vector& source_probs, Vector weights, double cap)
    {
        if (weights.size() != source_probs.size()) {
            throw DimensionError("RejectionSampler: weights and probabilities differ in length");
        }
        if ((weights.array() < 0.0).any()) {
            throw ParameterError("RejectionSampler: weights must be nonnegative");
        }
        const double wmax = weights.maxCoeff();
        if (!(cap > 0.0) || cap < wmax * (1.0 - 1e-12)) {
            throw ParameterError("RejectionSampler: cap " + std::to_string(cap)
                                 + " is below the largest weight " + std::to_string(wmax));
        }
        RejectionSampler s;
        s.mode_ = Mode::SingleStage;
        s.source_ = build_alias(source_probs);
        s.source_probs_ = source_probs;
        s.accept_ = weights / cap;
        s.weights_ = std::move(weights);
        s.cap_ = cap;
        return s;
    }

    static RejectionSampler two_stage(const Vector& source_probs, double lambda, const Vector& L)
    {
        if (!(lambda >= 0.0 && lambda <= 1.0)) {
            throw ParameterError("RejectionSampler: lambda must lie in [0, 1]");
        }
        if (L.size() != source_probs.size()) {
            throw DimensionError("RejectionSampler: L and probabilities differ in length");
        }
        const double L_bar = source_probs.dot(L);
        if (!(L_bar > 0.0)) {
            throw DegenerateProblemError("RejectionSampler: all Lipschitz constants are zero");
        }
        double sup_L = 0.0;
        for (Eigen::Index i = 0; i < L.size(); ++i) {
            if (source_probs(i) > 0.0) {
                sup_L = std::max(sup_L, L(i));
            }
        }
        RejectionSampler s;
        s.mode_ = Mode::TwoStage;
        s.lambda_ = lambda;
        s.source_ = build_alias(source_probs);
        s.source_probs_ = source_probs;
        s.weights_ = (lambda + (1.0 - lambda) * (L / L_bar).array()).matrix();
        s.cap_ = lambda + (1.0 - lambda) * sup_L / L_bar;
        s.accept_ = L / sup_L;
        return s;
    }

    Mode mode() const { return mode_; }
    double cap() const { return cap_; }
    double lambda() const { return lambda_; }
    const Vector& weights() const { return weights_; }
    const Vector& source_probs() const { return source_probs_; }

    struct Draw {
        std::size_t index = 0;
        std::size_t proposals = 0;
    };

    Draw draw(RngStream& rng) const
    {
        Draw d;
        if (mode_ == Mode::TwoStage) {
            d.index = source_.draw(rng);
            d.proposals = 1;
            if (rng.uniform() < lambda_) {
                return d;
            }
            if (rng.uniform() < accept_(static_cast<Eigen::Index>(d.index))) {
                return d;
            }
        }
        for (;;) {
            d.index = source_.draw(rng);
            ++d.proposals;
            if (rng.uniform() < accept_(static_cast<Eigen::Index>(d.index))) {
                return d;
            }
        }
    }

private:
    RejectionSampler() = default;

    Mode mode_ = Mode::SingleStage;
    AliasTable source_;
    Vector source_probs_;
    Vector weights_;
    Vector accept_;
    double cap_ = 1.0;
    double lambda_ = 0.0;
};

inline RejectionSampler::Draw draw_rejection(const RejectionSampler& s, RngStream& rng)
{
    return s.draw(rng);
}

} // namespace wsgd
