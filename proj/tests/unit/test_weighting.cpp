#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support/oracles.hpp"
#include "wsgd/problem.hpp"
#include "wsgd/weighting.hpp"

using namespace wsgd;

namespace {

struct Fixture {
    Problem prob;
    ProblemStats s;
};

Fixture random_fixture(oracle::Gen& gen, Eigen::Index n = 30, Eigen::Index d = 4)
{
    const DenseMatrix A = gen.matrix(n, d, 2.0);
    const Vector b = A * gen.vector(d) + gen.vector(n, 0.3);
    Problem p = from_least_squares(A, b);
    ProblemStats s = stats(p);
    return {std::move(p), std::move(s)};
}

std::vector<WeightScheme> all_schemes()
{
    return {WeightScheme::uniform(), WeightScheme::fully_biased(),
            WeightScheme::partially_biased(0.3), WeightScheme::partially_biased(0.5),
            WeightScheme::biased_g(), WeightScheme::mixed_gl()};
}

} // namespace

TEST(Weights, NormalizedUnderSource)
{
    oracle::Gen gen(31);
    for (int rep = 0; rep < 20; ++rep) {
        const auto f = random_fixture(gen);
        const Vector g = f.s.L.cwiseSqrt();
        for (const auto& sch : all_schemes()) {
            const WeightTable t = build_weights(sch, f.s.L, f.prob.probs(), g);
            EXPECT_NEAR(f.prob.probs().dot(t.w), 1.0, 1e-12) << sch.name();
            EXPECT_NEAR(t.sampling_probs.sum(), 1.0, 1e-12);
            EXPECT_TRUE((t.sampling_probs.array() >= 0.0).all());
        }
    }
}

TEST(Weights, ReweightedObjectiveUnchanged)
{
    oracle::Gen gen(32);
    for (int rep = 0; rep < 20; ++rep) {
        const auto f = random_fixture(gen);
        const Vector x = gen.vector(f.prob.dim());
        for (const auto& sch : all_schemes()) {
            const WeightTable t = build_weights(sch, f.s.L, f.prob.probs(), f.s.L.cwiseSqrt());
            double reweighted = 0.0;
            Vector grad = Vector::Zero(f.prob.dim());
            for (std::size_t i = 0; i < f.prob.size(); ++i) {
                const auto k = static_cast<Eigen::Index>(i);
                reweighted += t.sampling_probs(k) * t.inv_w(k) * f.prob.component(i).value(x);
                grad += t.sampling_probs(k) * t.inv_w(k) * f.prob.gradient(i, x);
            }
            EXPECT_LT(oracle::rel_err(reweighted, f.prob.objective(x)), 1e-12) << sch.name();
            EXPECT_LT((grad - f.prob.full_gradient(x)).norm(),
                      1e-10 * (1.0 + grad.norm()));
        }
    }
}

TEST(Weights, PartialBiasEndpointsCollapse)
{
    oracle::Gen gen(33);
    const auto f = random_fixture(gen);
    const auto& p = f.prob.probs();
    const WeightTable one = build_weights(WeightScheme::partially_biased(1.0), f.s.L, p);
    const WeightTable uni = build_weights(WeightScheme::uniform(), f.s.L, p);
    const WeightTable zero = build_weights(WeightScheme::partially_biased(0.0), f.s.L, p);
    const WeightTable full = build_weights(WeightScheme::fully_biased(), f.s.L, p);
    EXPECT_LT((one.w - uni.w).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((zero.w - full.w).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((zero.sampling_probs - full.sampling_probs).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Weights, FullBiasEffectiveConstants)
{
    oracle::Gen gen(34);
    for (int rep = 0; rep < 20; ++rep) {
        const auto f = random_fixture(gen);
        const auto& p = f.prob.probs();
        const WeightTable t = build_weights(WeightScheme::fully_biased(), f.s.L, p);
        const EffectiveConstants e = effective_constants(t, f.s.L, f.s.grad_norms_sq_at_xstar, p);
        EXPECT_LT(oracle::rel_err(e.sup_L_w, f.s.L_bar), 1e-12);
        // sigma^2_(w) = Lbar E[ ||grad f_i||^2 / L_i ] and E[L^2/w] = Lbar^2.
        double ref = 0.0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            ref += p(i) * f.s.grad_norms_sq_at_xstar(i) / f.s.L(i);
        }
        EXPECT_LT(oracle::rel_err(e.sigma_sq_w, f.s.L_bar * ref), 1e-12);
        EXPECT_LT(oracle::rel_err(e.L_sq_bar_w, f.s.L_bar * f.s.L_bar), 1e-12);
    }
}

TEST(Weights, HalfBiasFactorTwoBounds)
{
    oracle::Gen gen(35);
    for (int rep = 0; rep < 20; ++rep) {
        const auto f = random_fixture(gen);
        const auto& p = f.prob.probs();
        const WeightTable t = build_weights(WeightScheme::partially_biased(0.5), f.s.L, p);
        const EffectiveConstants e = effective_constants(t, f.s.L, f.s.grad_norms_sq_at_xstar, p);
        EXPECT_LE(e.sup_L_w, 2.0 * f.s.L_bar * (1.0 + 1e-12));
        EXPECT_LE(e.sigma_sq_w, 2.0 * f.s.sigma_sq * (1.0 + 1e-12));
    }
}

TEST(Weights, PartialBiasEnvelopeDominatesExactConstants)
{
    oracle::Gen gen(36);
    const auto f = random_fixture(gen);
    const auto& p = f.prob.probs();
    for (int k = 0; k <= 10; ++k) {
        const double lam = k / 10.0;
        const WeightTable t = build_weights(WeightScheme::partially_biased(lam), f.s.L, p);
        const EffectiveConstants e = effective_constants(t, f.s.L, f.s.grad_norms_sq_at_xstar, p);
        EXPECT_LE(e.sup_L_w, partial_bias_sup_bound(lam, f.s.L_bar, f.s.sup_L) * (1 + 1e-12));
        EXPECT_LE(e.sigma_sq_w, partial_bias_sigma_factor(lam, f.s.L_bar, f.s.inf_L) * f.s.sigma_sq
                                    * (1 + 1e-12));
    }
}

TEST(Weights, EnvelopeHelpersAtEndpoints)
{
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_DOUBLE_EQ(partial_bias_sup_bound(0.0, 2.0, 5.0), 2.0);
    EXPECT_DOUBLE_EQ(partial_bias_sup_bound(1.0, 2.0, 5.0), 5.0);
    EXPECT_DOUBLE_EQ(partial_bias_sup_bound(0.5, 2.0, 5.0), 4.0);
    EXPECT_DOUBLE_EQ(partial_bias_sigma_factor(1.0, 2.0, 0.5), 1.0);
    EXPECT_DOUBLE_EQ(partial_bias_sigma_factor(0.0, 2.0, 0.5), 4.0);
    EXPECT_DOUBLE_EQ(partial_bias_sigma_factor(0.5, 2.0, 0.5), 8.0);
    EXPECT_DOUBLE_EQ(partial_bias_sigma_factor(0.5, 2.0, 0.0), 2.0);
    EXPECT_EQ(partial_bias_sigma_factor(0.0, 2.0, 0.0), inf);
}

TEST(Weights, GradientBoundSchemes)
{
    Vector L(3);
    L << 1.0, 2.0, 3.0;
    Vector g(3);
    g << 3.0, 0.0, 3.0;
    const Vector p = Vector::Constant(3, 1.0 / 3.0);
    const WeightTable t = build_weights(WeightScheme::biased_g(), L, p, g);
    EXPECT_DOUBLE_EQ(t.w(0), 1.5);
    EXPECT_DOUBLE_EQ(t.w(1), 0.0);
    EXPECT_DOUBLE_EQ(t.inv_w(1), 0.0);
    // Component 1 has curvature but can never be drawn.
    EXPECT_THROW(effective_constants(t, L, Vector::Zero(3), p), UnreachableComponentError);

    const WeightTable m = build_weights(WeightScheme::mixed_gl(), L, p, g);
    EXPECT_NEAR(m.w(1), 0.5, 1e-15);
    EXPECT_THROW(build_weights(WeightScheme::biased_g(), L, p), ParameterError);
}

TEST(Weights, RejectsBadInputs)
{
    const Vector p = Vector::Constant(2, 0.5);
    EXPECT_THROW(build_weights(WeightScheme::uniform(), Vector::Zero(2), p), DegenerateProblemError);
    EXPECT_THROW(build_weights(WeightScheme::partially_biased(1.5), Vector::Ones(2), p),
                 ParameterError);
    EXPECT_THROW(build_weights(WeightScheme::uniform(), Vector::Ones(3), p), DimensionError);
    EXPECT_THROW(build_weights(WeightScheme::uniform(), Vector::Ones(2), Vector::Constant(2, 0.3)),
                 DistributionError);
}
