#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "support.hpp"

using namespace fwdre;
using namespace fwdre::testing;

namespace {

// E[Z^k e^{sZ}] for Gamma(shape, scale) by adaptive Gauss-Kronrod on [0, inf).
double gamma_moment_quad(double shape, double scale, int k, double s) {
    const double norm = std::tgamma(shape) * std::pow(scale, shape);
    auto f = [&](double z) {
        if (z <= 0.0) return 0.0;
        return std::pow(z, shape - 1.0 + k) * std::exp(s * z - z / scale) / norm;
    };
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, 0.0, std::numeric_limits<double>::infinity(), 15, 1e-13, &err);
}

CombinedMarket simple_market(Coefficient lambda, ClaimSizeDistribution dist) {
    CombinedMarket m = section6_1_market();
    m.claims = {std::move(lambda), std::move(dist)};
    return m;
}

}  // namespace

TEST(Coefficients, BuiltInForms) {
    EXPECT_DOUBLE_EQ(Coefficient(Constant{0.1})(0.0, 5.0), 0.1);
    EXPECT_DOUBLE_EQ(Coefficient(Affine{0.2, -1.0})(0.0, 0.3), -0.1);
    EXPECT_DOUBLE_EQ(Coefficient(Quadratic{1.0, 1.0, 0.5})(0.0, 2.0), 5.0);
    EXPECT_NEAR(Coefficient(Scott{0.27, 0.01, 0.0})(0.0, 0.0), 0.27 * std::sqrt(1.01), 1e-15);
    EXPECT_NEAR(Coefficient(Exponential{std::exp(0.2), 1.0})(0.0, -0.2), 1.0, 1e-15);
}

TEST(Coefficients, TabulatedInterpolatesAndClamps) {
    Coefficient c(Tabulated{{-1.0, 0.0, 1.0}, {2.0, 0.0, 4.0}});
    EXPECT_DOUBLE_EQ(c(0.0, -0.5), 1.0);
    EXPECT_DOUBLE_EQ(c(0.0, 0.25), 1.0);
    EXPECT_DOUBLE_EQ(c(0.0, -3.0), 2.0);
    EXPECT_DOUBLE_EQ(c(0.0, 3.0), 4.0);
    EXPECT_THROW(Coefficient(Tabulated{{0.0, 0.0}, {1.0, 2.0}}), DomainError);
}

TEST(Section6, InitialIntensityEqualsK) {
    const auto c = section6();
    EXPECT_NEAR(c.market.lambda(0.0, c.market.factor.y0), 1.0, 1e-15);
}

TEST(ExpMoment, Examples) {
    const auto g11 = ClaimSizeDistribution::gamma(1, 1);
    EXPECT_DOUBLE_EQ(exp_moment(g11, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(exp_moment(g11, 0.5), 2.0);
    EXPECT_THROW(exp_moment(ClaimSizeDistribution::gamma(1, 2), 0.5), DomainError);
}

TEST(TiltedMean, Examples) {
    const auto g11 = ClaimSizeDistribution::gamma(1, 1);
    EXPECT_DOUBLE_EQ(tilted_mean(ClaimSizeDistribution::gamma(1, 2), 0.0), 2.0);
    EXPECT_DOUBLE_EQ(tilted_mean(g11, 0.5), 4.0);
    EXPECT_NEAR(tilted_mean(g11, 0.23304), 1.7000, 1e-4);
}

TEST(TiltedSecondMoment, Examples) {
    EXPECT_DOUBLE_EQ(tilted_second_moment(ClaimSizeDistribution::gamma(1, 1), 0.0), 2.0);
    EXPECT_DOUBLE_EQ(tilted_second_moment(ClaimSizeDistribution::gamma(2, 1), 0.0), 6.0);
    EXPECT_DOUBLE_EQ(tilted_second_moment(ClaimSizeDistribution::gamma(1, 1), 0.5), 16.0);
}

TEST(TiltedMoments, AgreeWithQuadratureOnRandomSamples) {
    Draw d(11);
    for (int i = 0; i < 20; ++i) {
        const double shape = d.uniform(1.0, 4.0), scale = d.uniform(0.2, 3.0);
        const double s = d.uniform(-1.0, 0.8 / scale);
        const auto dist = ClaimSizeDistribution::gamma(shape, scale);
        const double m0 = gamma_moment_quad(shape, scale, 0, s);
        const double m1 = gamma_moment_quad(shape, scale, 1, s);
        const double m2 = gamma_moment_quad(shape, scale, 2, s);
        EXPECT_NEAR(exp_moment(dist, s) / m0, 1.0, 1e-8) << shape << ' ' << scale << ' ' << s;
        EXPECT_NEAR(tilted_mean(dist, s) / m1, 1.0, 1e-8) << shape << ' ' << scale << ' ' << s;
        EXPECT_NEAR(tilted_second_moment(dist, s) / m2, 1.0, 1e-8) << shape << ' ' << scale << ' ' << s;
    }
}

TEST(TiltedMoments, IncreasingInTilt) {
    Draw d(12);
    for (int i = 0; i < 20; ++i) {
        const auto dist = ClaimSizeDistribution::gamma(d.uniform(0.5, 3.0), d.uniform(0.2, 3.0));
        const double b = dist.mgf_bound();
        double prev1 = 0.0, prev2 = 0.0;
        for (int k = 0; k < 20; ++k) {
            const double s = 0.99 * b * k / 20.0;
            const double m1 = tilted_mean(dist, s), m2 = tilted_second_moment(dist, s);
            EXPECT_GT(m1, prev1);
            EXPECT_GT(m2, prev2);
            prev1 = m1;
            prev2 = m2;
        }
    }
}

TEST(CustomClaims, QuadratureFallbackMatchesGamma) {
    CustomClaims c;
    c.label = "exp(2)";
    c.pdf = [](double z) { return 0.5 * std::exp(-0.5 * z); };
    c.mgf_bound = 0.5;
    c.sample = [](std::mt19937_64& r) { return std::exponential_distribution<double>(0.5)(r); };
    const auto custom = ClaimSizeDistribution::custom(c);
    const auto gamma = ClaimSizeDistribution::gamma(1, 2);
    for (double s : {-0.5, 0.0, 0.2, 0.4}) {
        EXPECT_NEAR(exp_moment(custom, s) / exp_moment(gamma, s), 1.0, 1e-8);
        EXPECT_NEAR(tilted_mean(custom, s) / tilted_mean(gamma, s), 1.0, 1e-8);
        EXPECT_NEAR(tilted_second_moment(custom, s) / tilted_second_moment(gamma, s), 1.0, 1e-8);
    }
    EXPECT_THROW(exp_moment(custom, 0.5), DomainError);
}

TEST(Correlation, IdentityFactor) {
    const auto c = build_correlation(0, 0, 0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) EXPECT_EQ(c.chol[i][j], i == j ? 1.0 : 0.0);
}

TEST(Correlation, ValidAndInvalidTriples) {
    EXPECT_NO_THROW(build_correlation(0.9, 0.9, 0.9));
    EXPECT_THROW(build_correlation(0.9, 0.9, -0.9), NotPSD);
    EXPECT_THROW(build_correlation(1.1, 0, 0), RangeError);
}

TEST(Correlation, FactorReproducesMatrix) {
    Draw d(13);
    int accepted = 0;
    while (accepted < 50) {
        const double r = d.uniform(-1, 1), rs = d.uniform(-1, 1), ry = d.uniform(-1, 1);
        // determinant of the unit-diagonal matrix, by hand
        const double det = 1 + 2 * r * rs * ry - r * r - rs * rs - ry * ry;
        if (det < 1e-9) {
            if (det < -1e-9) {
                EXPECT_THROW(build_correlation(r, rs, ry), NotPSD);
            }
            continue;
        }
        ++accepted;
        const auto c = build_correlation(r, rs, ry);
        const auto want = c.matrix();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double v = 0;
                for (int k = 0; k < 3; ++k) v += c.chol[i][k] * c.chol[j][k];
                EXPECT_NEAR(v, want[i][j], 1e-12);
            }
    }
}

TEST(Correlation, SingularTripleStillFactors) {
    const auto c = build_correlation(1.0, 1.0, 1.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double v = 0;
            for (int k = 0; k < 3; ++k) v += c.chol[i][k] * c.chol[j][k];
            EXPECT_NEAR(v, 1.0, 1e-12);
        }
}

TEST(StandingAssumptions, ExponentialPresetPassesWithBoundaryWarning) {
    const auto c = section6();
    const auto rep = validate_standing_assumptions(c.market, {0, 1, 11, -0.3, 0.3, 61});
    EXPECT_TRUE(rep.passed()) << rep.summary();
    ASSERT_NE(rep.find("claim_exponential_moments"), nullptr);
    EXPECT_EQ(rep.find("claim_exponential_moments")->status, CheckStatus::warn);
}

TEST(StandingAssumptions, ZeroVolatilityFails) {
    auto c = section6();
    c.market.stock.sigma = Constant{0.0};
    const auto rep = validate_standing_assumptions(c.market, {0, 1, 3, -0.3, 0.3, 5});
    EXPECT_FALSE(rep.passed());
    EXPECT_EQ(rep.find("volatility_positive")->status, CheckStatus::fail);
}

TEST(StandingAssumptions, DivergentMomentFails) {
    auto c = section6(3.0);
    const auto rep = validate_standing_assumptions(c.market, {0, 1, 3, -0.3, 0.3, 5});
    EXPECT_FALSE(rep.passed());
    EXPECT_EQ(rep.find("claim_exponential_moments")->status, CheckStatus::fail);
}

// ---------------------------------------------------------------------------
// Premia
// ---------------------------------------------------------------------------

TEST(Premia, InsuranceExamples) {
    auto m = simple_market(Constant{1.0}, ClaimSizeDistribution::gamma(1, 1));
    EXPECT_NEAR(PremiumPrinciple({PremiumKind::expected_value, 0.4, 0.7}).insurance(m, 0, 0), 1.4, 1e-15);
    EXPECT_DOUBLE_EQ(PremiumPrinciple({PremiumKind::expected_value, 0.0, 0.0}).insurance(m, 0, 0), 1.0);
    m.claims.dist = ClaimSizeDistribution::gamma(1, 2);
    EXPECT_NEAR(PremiumPrinciple({PremiumKind::modified_variance, 0.3, 0.5}).insurance(m, 0, 0), 3.2, 1e-14);
}

TEST(Premia, ReinsuranceExamples) {
    auto m = simple_market(Constant{1.0}, ClaimSizeDistribution::gamma(1, 1));
    for (auto k : {PremiumKind::expected_value, PremiumKind::variance, PremiumKind::modified_variance,
                   PremiumKind::rp_na})
        EXPECT_EQ(PremiumPrinciple({k, 0.3, 0.5}).reinsurance(m, 0, 0.1, 0.0), 0.0);
    EXPECT_NEAR(PremiumPrinciple({PremiumKind::expected_value, 0.4, 0.7}).reinsurance(m, 0, 0, 1.0), 1.7, 1e-15);

    const auto c = section6();
    EXPECT_NEAR(c.premium.reinsurance(c.market, 0, 0, 0.5), 2 * std::exp(0.2) * 0.5 + 0.5, 1e-12);
    EXPECT_NEAR(c.premium.reinsurance(c.market, 0, 0, 0.5), 1.7214, 1e-4);
    EXPECT_THROW(c.premium.reinsurance(c.market, 0, 0, 1.5), RangeError);
}

TEST(Premia, DerivativeExamples) {
    auto m = simple_market(Constant{1.0}, ClaimSizeDistribution::gamma(1, 1));
    const auto d = PremiumPrinciple{PremiumKind::variance, 0.4, 0.7}.derivatives(m, 0, 0, 0.5);
    EXPECT_NEAR(d.first, 2.4, 1e-14);
    EXPECT_NEAR(d.second, 2.8, 1e-14);
    const auto ev = PremiumPrinciple{PremiumKind::expected_value, 0.4, 0.7}.derivatives(m, 0, 0, 0.3);
    EXPECT_NEAR(ev.first, 1.7, 1e-15);
    EXPECT_EQ(ev.second, 0.0);
}

TEST(Premia, DerivativesMatchFiniteDifferences) {
    Draw d(21);
    const PremiumKind kinds[] = {PremiumKind::expected_value, PremiumKind::variance, PremiumKind::modified_variance,
                                 PremiumKind::rp_na};
    for (int i = 0; i < 50; ++i) {
        auto m = section6().market;
        m.claims.dist = ClaimSizeDistribution::gamma(d.uniform(0.5, 3.0), d.uniform(0.2, 3.0));
        const PremiumPrinciple p{kinds[d.integer(0, 3)], d.uniform(0, 1), d.uniform(0, 1)};
        const double t = d.uniform(0, 1), y = d.uniform(-0.3, 0.3), th = d.uniform(0.01, 0.99);
        const double h = 1e-6;
        auto b = [&](double x) { return p.reinsurance(m, t, y, x); };
        auto b1 = [&](double x) { return p.derivatives(m, t, y, x).first; };
        const auto an = p.derivatives(m, t, y, th);
        EXPECT_NEAR(an.first, (b(th + h) - b(th - h)) / (2 * h), 1e-6) << to_string(p.kind);
        EXPECT_NEAR(an.second, (b1(th + h) - b1(th - h)) / (2 * h), 1e-6) << to_string(p.kind);
    }
}

TEST(Premia, NondecreasingAndLinearInIntensity) {
    Draw d(22);
    for (int i = 0; i < 30; ++i) {
        auto c = section6_1();
        const PremiumPrinciple p{PremiumKind(d.integer(0, 3)), d.uniform(0, 1), d.uniform(0, 1)};
        if (p.kind == PremiumKind::rp_na) continue;
        const double y = d.uniform(-0.3, 0.3);
        double prev = -1.0;
        for (int k = 0; k <= 20; ++k) {
            const double b = p.reinsurance(c.market, 0, y, k / 20.0);
            EXPECT_GE(b, prev);
            prev = b;
        }
        const PremiumPrinciple ev{PremiumKind::expected_value, p.deltaI, p.deltaR};
        auto doubled = c.market;
        doubled.claims.lambda = Quadratic{2.0, 2.0, 1.0};
        EXPECT_NEAR(ev.insurance(doubled, 0, y), 2 * ev.insurance(c.market, 0, y), 1e-13);
    }
}

TEST(Premia, AssumptionReport) {
    const EvalGrid grid{0, 1, 3, -0.3, 0.3, 13};
    auto c = section6_1();
    EXPECT_TRUE(validate_premium_assumptions(c.premium, c.market, grid).passed());

    const PremiumPrinciple bad{PremiumKind::expected_value, 0.7, 0.4};
    const auto rep = validate_premium_assumptions(bad, c.market, grid);
    EXPECT_FALSE(rep.passed());
    EXPECT_EQ(rep.find("full_cover_exceeds_premium")->status, CheckStatus::fail);

    const auto s6 = section6();
    const auto r6 = validate_premium_assumptions(s6.premium, s6.market, grid);
    ASSERT_EQ(r6.checks.size(), 3u);
    EXPECT_EQ(r6.find("null_protection_free")->status, CheckStatus::pass);
    EXPECT_EQ(r6.find("premium_nondecreasing")->status, CheckStatus::pass);
}

TEST(Premia, RpNaNeedsGammaClaims) {
    CustomClaims c;
    c.label = "u";
    c.pdf = [](double z) { return z < 1 ? 1.0 : 0.0; };
    c.sample = [](std::mt19937_64& r) { return std::uniform_real_distribution<double>(0, 1)(r); };
    auto m = section6().market;
    m.claims.dist = ClaimSizeDistribution::custom(c);
    EXPECT_THROW(PremiumPrinciple({PremiumKind::rp_na, 0.3, 0.5}).insurance(m, 0, 0), DomainError);
}
