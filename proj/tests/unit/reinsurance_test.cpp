#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace fwdre;
using namespace fwdre::testing;

namespace {

// b = c*theta - 5 theta^2: second derivative -10, the concavity condition fails for small lambda.
struct ConcaveDownPremium {
    double c = 20.0;
    double insurance(const CombinedMarket&, double, double) const { return 1.0; }
    double reinsurance(const CombinedMarket&, double, double, double th) const { return c * th - 5.0 * th * th; }
    ThetaDerivatives derivatives(const CombinedMarket&, double, double, double th) const {
        return {c - 10.0 * th, -10.0};
    }
};

// First-order residual for Gamma claims and rp_na premia, written out by hand.
double rp_na_foc(double shape, double scale, double lam, double deltaR, double gam, double th) {
    const double cost = shape * scale * lam + deltaR * scale;
    const double gain = lam * shape * scale * std::pow(1.0 - scale * gam * (1.0 - th), -(shape + 1.0));
    return cost - gain;
}

}  // namespace

TEST(Reinsurance, LargeClaimsClosedForm) {
    const auto c = section6(2.0);
    const auto sol = optimal_theta(c.market, c.premium, 0.0, 0.0);
    const double lam = std::exp(0.2);
    const double closed = std::pow(1.0 + 0.5 / lam, -0.5);
    EXPECT_EQ(sol.region, Region::interior);
    EXPECT_NEAR(sol.theta, closed, 1e-10);
    EXPECT_NEAR(sol.theta, 0.8424, 1e-4);
}

TEST(Reinsurance, SmallClaimsClosedForm) {
    const auto c = section6(1.0 / 3.0);
    const auto sol = optimal_theta(c.market, c.premium, 0.0, 0.0);
    const double u = std::pow(1.0 + 0.5 / std::exp(0.2), -0.5);
    EXPECT_EQ(sol.region, Region::interior);
    EXPECT_NEAR(sol.theta, 1.0 - 6.0 * (1.0 - u), 1e-10);
    EXPECT_NEAR(sol.theta, 0.054049, 1e-6);
}

TEST(Reinsurance, Section61Root) {
    const auto c = section6_1();
    const auto sol = optimal_theta(c.market, c.premium, 0.0, 0.0);
    // 1.7 = (1 - 0.5 (1 - theta))^{-2}
    const double closed = 1.0 - 2.0 * (1.0 - 1.0 / std::sqrt(1.7));
    EXPECT_NEAR(sol.theta, closed, 1e-10);
    EXPECT_NEAR(sol.theta, 0.5339, 1e-4);
    // lambda-free: the same root at every y
    for (double y : {-0.3, 0.1, 0.3}) EXPECT_NEAR(optimal_theta(c.market, c.premium, 0.5, y).theta, closed, 1e-10);
}

TEST(Reinsurance, NullReinsuranceThreshold) {
    const auto c = section6(1.0 / 3.0);
    // lambda (1.2^2 - 1) = 0.5  =>  lambda* = 0.5/0.44, y* = ln(lambda*) - 0.2
    const double ystar = std::log(0.5 / 0.44) - 0.2;
    EXPECT_NEAR(ystar, -0.0720, 1e-3);
    EXPECT_EQ(classify_region(c.market, c.premium, 0, -0.2), Region::D0);
    EXPECT_EQ(classify_region(c.market, c.premium, 0, ystar - 1e-6), Region::D0);
    EXPECT_EQ(classify_region(c.market, c.premium, 0, ystar + 1e-6), Region::interior);
    for (int k = 0; k <= 40; ++k) {
        const double y = -0.3 + (ystar + 0.3) * k / 40.0 - 1e-9;
        EXPECT_EQ(optimal_theta(c.market, c.premium, 0, y).theta, 0.0) << y;
    }
}

TEST(Reinsurance, RegionExamples) {
    auto c = section6(2.0);
    EXPECT_EQ(classify_region(c.market, c.premium, 0, -0.2), Region::interior);

    auto s = section6_1();
    s.premium.deltaR = 0.0;
    EXPECT_EQ(classify_region(s.market, s.premium, 0, 0), Region::D1);
    const auto sol = optimal_theta(s.market, s.premium, 0, 0);
    EXPECT_EQ(sol.theta, 1.0);
    EXPECT_NEAR(phi(s.market, s.premium, 0, 0), s.market.gamma * s.premium.reinsurance(s.market, 0, 0, 1.0), 1e-15);
}

TEST(Reinsurance, AgreesWithBisectionOracle) {
    Draw d(31);
    for (int i = 0; i < 60; ++i) {
        auto c = section6(d.uniform(0.2, 2.5));
        const double shape = d.uniform(0.5, 3.0);
        const double scale = c.market.claims.dist.as_gamma()->scale;
        c.market.claims.dist = ClaimSizeDistribution::gamma(shape, scale);
        c.premium.deltaR = d.uniform(0.05, 1.0);
        const double y = d.uniform(-0.3, 0.3);
        const double lam = c.market.lambda(0, y), gam = c.market.gamma;
        const auto sol = optimal_theta(c.market, c.premium, 0, y);
        if (sol.region != Region::interior) continue;
        auto f = [&](double th) { return rp_na_foc(shape, scale, lam, c.premium.deltaR, gam, th); };
        const double lo = scale * gam >= 1.0 ? 1.0 - 1.0 / (scale * gam) + 1e-9 : 0.0;
        EXPECT_NEAR(sol.theta, bisect(f, lo, 1.0), 1e-9) << shape << ' ' << scale << ' ' << y;
        EXPECT_LE(std::abs(sol.residual), 1e-12);
        EXPECT_GT(sol.theta, 0.0);
        EXPECT_LT(sol.theta, 1.0);
    }
}

TEST(Reinsurance, BracketSignsBeforeSolve) {
    const auto c = section6(2.0);
    const double lam = c.market.lambda(0, 0.1);
    auto f = [&](double th) { return rp_na_foc(1.0, 2.0, lam, 0.5, 0.5, th); };
    EXPECT_LT(f(1e-9), 0.0);
    EXPECT_GT(f(1.0), 0.0);
}

TEST(Reinsurance, NondecreasingInFactor) {
    for (double scale : {2.0, 1.0 / 3.0}) {
        const auto c = section6(scale);
        double prev = -1.0;
        for (int k = 0; k < 100; ++k) {
            const double y = -0.3 + 0.6 * k / 99.0;
            const double th = optimal_theta(c.market, c.premium, 0, y).theta;
            EXPECT_GE(th, prev - 1e-14) << y;
            prev = th;
        }
    }
}

TEST(Reinsurance, StableUnderToleranceRefinement) {
    Draw d(32);
    for (int i = 0; i < 20; ++i) {
        const auto c = section6(d.uniform(0.3, 2.0));
        const double y = d.uniform(-0.3, 0.3);
        ThetaSolverOptions coarse, fine;
        coarse.tol = 1e-9;
        fine.tol = 1e-10;
        const double a = optimal_theta(c.market, c.premium, 0, y, coarse).theta;
        const double b = optimal_theta(c.market, c.premium, 0, y, fine).theta;
        EXPECT_NEAR(a, b, 1e-8);
    }
}

TEST(Reinsurance, ConcavityExamples) {
    const auto s = section6_1();
    EXPECT_EQ(concavity_check(s.market, s.premium, 0, 0), Verdict::holds);
    EXPECT_EQ(concavity_check(s.market, PremiumPrinciple({PremiumKind::variance, 0.4, 0.7}), 0, 0), Verdict::holds);

    auto m = s.market;
    m.claims.lambda = Constant{0.01};
    EXPECT_EQ(concavity_check(m, ConcaveDownPremium{}, 0, 0), Verdict::fails);
    EXPECT_THROW(optimal_theta(m, ConcaveDownPremium{}, 0, 0), ConcavityViolation);
}

TEST(Reinsurance, ZeroIntensityMeansNoReinsurance) {
    auto s = section6_1();
    s.market.claims.lambda = Constant{0.0};
    const auto sol = optimal_theta(s.market, s.premium, 0, 0);
    EXPECT_EQ(sol.region, Region::D0);
    EXPECT_EQ(phi(s.market, s.premium, 0, 0), 0.0);
}

TEST(Reinsurance, DivergentTiltNeverInD0) {
    // gamma * scale = 1.5: E[Z e^{gamma Z}] diverges, so protection must be positive.
    auto c = section6(3.0);
    c.premium.deltaR = 100.0;
    EXPECT_NE(classify_region(c.market, c.premium, 0, -0.3), Region::D0);
    const auto sol = optimal_theta(c.market, c.premium, 0, -0.3);
    EXPECT_GT(sol.theta, 1.0 - 1.0 / 1.5);
}

TEST(Phi, Section61Value) {
    const auto s = section6_1();
    const double th = 1.0 - 2.0 * (1.0 - 1.0 / std::sqrt(1.7));
    const double want = 0.5 * 1.7 * th + (1.0 / (1.0 - 0.5 * (1.0 - th)) - 1.0);
    EXPECT_NEAR(phi(s.market, s.premium, 0, 0), want, 1e-10);
    EXPECT_NEAR(phi(s.market, s.premium, 0, 0), 0.7577, 1e-3);
}

TEST(Phi, DominatesReinsuranceCost) {
    Draw d(33);
    for (int i = 0; i < 100; ++i) {
        const auto c = d.integer(0, 1) ? section6(d.uniform(0.2, 1.9)) : section6_1();
        const double t = d.uniform(0, 1), y = d.uniform(-0.3, 0.3);
        const auto sol = optimal_theta(c.market, c.premium, t, y);
        EXPECT_GE(phi(c.market, c.premium, t, y) - c.market.gamma * c.premium.reinsurance(c.market, t, y, sol.theta),
                  0.0);
    }
}
