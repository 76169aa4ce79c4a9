#pragma once

// Forward exponential performance -exp(-gamma x - P_t): the g-h coupling,
// the four penalizer volatilities, the optimal investment rule and a
// pointwise check of the generator applied to the value function.

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "reinsurance.hpp"

namespace fwdre {

enum class HKind { h1_zero, h2_drift_coupled, h3_claims_coupled, h4_affine };

inline const char* to_string(HKind k) {
    switch (k) {
        case HKind::h1_zero: return "h1_zero";
        case HKind::h2_drift_coupled: return "h2_drift_coupled";
        case HKind::h3_claims_coupled: return "h3_claims_coupled";
        case HKind::h4_affine: return "h4_affine";
    }
    return "?";
}

inline HKind h_kind_from_string(std::string_view s) {
    if (s == "h1_zero" || s == "h1") return HKind::h1_zero;
    if (s == "h2_drift_coupled" || s == "h2") return HKind::h2_drift_coupled;
    if (s == "h3_claims_coupled" || s == "h3") return HKind::h3_claims_coupled;
    if (s == "h4_affine" || s == "h4") return HKind::h4_affine;
    throw ConfigError("unknown penalizer kind '" + std::string(s) + "'");
}

struct PenalizerSpec {
    HKind kind = HKind::h1_zero;
    double kbar = 0.5;  // h4 only: the optimal amount becomes kbar * x
};

// Everything at (t, y) that the forward formulas need, evaluated once.
struct LocalCoeffs {
    double t = 0.0, y = 0.0;
    double mu = 0.0, sigma = 1.0, lambda = 0.0;
    double a = 0.0;      // insurance premium
    double theta = 0.0;  // optimal protection level
    double b = 0.0;      // reinsurance premium at theta
    double phi = 0.0;
};

template <PremiumModel P>
LocalCoeffs local_coeffs_at(const CombinedMarket& m, const P& p, double t, double y, double theta) {
    LocalCoeffs c;
    c.t = t;
    c.y = y;
    c.mu = m.mu(t, y);
    c.sigma = m.sigma(t, y);
    c.lambda = m.lambda(t, y);
    c.a = p.insurance(m, t, y);
    c.theta = theta;
    c.b = p.reinsurance(m, t, y, theta);
    c.phi = phi_at(m, p, t, y, theta);
    return c;
}

template <PremiumModel P>
LocalCoeffs local_coeffs(const CombinedMarket& m, const P& p, double t, double y, const ThetaSolverOptions& opt = {}) {
    return local_coeffs_at(m, p, t, y, optimal_theta(m, p, t, y, opt).theta);
}

inline double g_zero_vol(const CombinedMarket& m, const LocalCoeffs& c) {
    const double sr = c.mu / c.sigma;
    return -0.5 * sr * sr - m.gamma * c.a + c.phi;
}

/// g(t, y) of the zero-volatility penalizer (h = 0).
template <PremiumModel P>
double g_zero_vol(const CombinedMarket& m, const P& p, double t, double y, const ThetaSolverOptions& opt = {}) {
    return g_zero_vol(m, local_coeffs(m, p, t, y, opt));
}

inline double eval_h(const PenalizerSpec& spec, const CombinedMarket& m, const LocalCoeffs& c, double x) {
    const double rs = m.corr.rhoS;
    switch (spec.kind) {
        case HKind::h1_zero: return 0.0;
        case HKind::h2_drift_coupled: {
            if (std::abs(rs) == 1.0) throw DegenerateCorrelation("h2 needs |rhoS| < 1");
            return -2.0 * rs / (1.0 - rs * rs) * c.mu / c.sigma;
        }
        case HKind::h3_claims_coupled: {
            if (rs == 0.0) throw DegenerateCorrelation("h3 divides by rhoS = 0");
            const double jump = std::max(0.0, c.phi - m.gamma * c.b);
            return c.mu / (rs * c.sigma) - std::sqrt(jump) / rs;
        }
        case HKind::h4_affine: {
            if (rs == 0.0) throw DegenerateCorrelation("h4 divides by rhoS = 0");
            return (c.mu / c.sigma - m.gamma * c.sigma * spec.kbar * x) / rs;
        }
    }
    return 0.0;
}

template <PremiumModel P>
double eval_h(const PenalizerSpec& spec, const CombinedMarket& m, const P& p, double t, double x, double y,
              const ThetaSolverOptions& opt = {}) {
    return eval_h(spec, m, local_coeffs(m, p, t, y, opt), x);
}

// g = -gamma a + h^2/2 - (mu - rhoS sigma h)^2 / (2 sigma^2) + phi
inline double g_from_h(const CombinedMarket& m, const LocalCoeffs& c, double h) {
    const double d = c.mu - m.corr.rhoS * c.sigma * h;
    return -m.gamma * c.a + 0.5 * h * h - d * d / (2.0 * c.sigma * c.sigma) + c.phi;
}

template <PremiumModel P>
double g_from_h(const CombinedMarket& m, const P& p, const PenalizerSpec& spec, double t, double x, double y,
                const ThetaSolverOptions& opt = {}) {
    const LocalCoeffs c = local_coeffs(m, p, t, y, opt);
    return g_from_h(m, c, eval_h(spec, m, c, x));
}

// Pi* = mu/(gamma sigma^2) - rhoS h/(gamma sigma)
inline double optimal_pi(const CombinedMarket& m, const LocalCoeffs& c, double h) {
    if (!(c.sigma > 0.0)) throw DomainError("optimal investment needs sigma > 0");
    return c.mu / (m.gamma * c.sigma * c.sigma) - m.corr.rhoS * h / (m.gamma * c.sigma);
}

template <PremiumModel P>
double optimal_pi(const CombinedMarket& m, const PenalizerSpec& spec, const P& p, double t, double x, double y,
                  const ThetaSolverOptions& opt = {}) {
    const LocalCoeffs c = local_coeffs(m, p, t, y, opt);
    return optimal_pi(m, c, eval_h(spec, m, c, x));
}

inline double myopic_pi(const CombinedMarket& m, double t, double y) {
    const double s = m.sigma(t, y);
    return m.mu(t, y) / (m.gamma * s * s);
}

/// U = -exp(-gamma x - p). Underflows to -0 for very large gamma x + p.
inline double forward_value(double gamma, double x, double p) { return -std::exp(-gamma * x - p); }

struct Control {
    double theta = 0.0;
    double pi = 0.0;
};

struct StatePoint {
    double t = 0.0, x = 0.0, y = 0.0, p = 0.0;
};

// Central-difference steps for the optional numerical evaluation of u's derivatives.
struct FdSteps {
    double t = 1e-4, x = 1e-4, y = 1e-4, p = 1e-4;
};

namespace detail {

// Generator of (t, X, Y, P) under the control, applied to a smooth f(t, x, y, p)
// whose partial derivatives are supplied.
struct Partials {
    double f = 0, ft = 0, fx = 0, fy = 0, fp = 0;
    double fxx = 0, fyy = 0, fpp = 0, fxy = 0, fxp = 0, fyp = 0;
    double jump = 0;  // E[f(x - (1-theta) Z) - f(x)]
};

inline double apply_generator(const CombinedMarket& m, const LocalCoeffs& c, double b, const Control& u, double g,
                              double h, const Partials& d) {
    const double alpha = m.alpha(c.t, c.y), beta = m.beta(c.t, c.y);
    const auto& k = m.corr;
    return d.ft + (c.a - b + u.pi * c.mu) * d.fx + 0.5 * u.pi * u.pi * c.sigma * c.sigma * d.fxx + alpha * d.fy +
           0.5 * beta * beta * d.fyy + g * d.fp + 0.5 * h * h * d.fpp + k.rho * u.pi * c.sigma * beta * d.fxy +
           k.rhoS * u.pi * c.sigma * h * d.fxp + k.rhoY * beta * h * d.fyp + c.lambda * d.jump;
}

}  // namespace detail

/// The generator applied to u = -exp(-gamma x - p) at a state point, with the
/// penalizer (g, h) from `spec`. Zero at the optimal control, negative elsewhere.
template <PremiumModel P>
double hjb_residual(const CombinedMarket& m, const P& p, const PenalizerSpec& spec, const Control& ctl,
                    const StatePoint& s, std::optional<FdSteps> fd_steps = std::nullopt,
                    const ThetaSolverOptions& opt = {}) {
    const LocalCoeffs c = local_coeffs(m, p, s.t, s.y, opt);
    const double h = eval_h(spec, m, c, s.x);
    const double g = g_from_h(m, c, h);
    const double b = p.reinsurance(m, s.t, s.y, ctl.theta);
    const double gam = m.gamma;
    const double tilt = ctl.theta >= 1.0 ? 0.0 : exp_moment(m.claims.dist, gam * (1.0 - ctl.theta)) - 1.0;

    auto u = [gam](double x, double pp) { return forward_value(gam, x, pp); };
    detail::Partials d;
    d.f = u(s.x, s.p);
    d.jump = d.f * tilt;
    if (!fd_steps) {
        d.fx = -gam * d.f;
        d.fxx = gam * gam * d.f;
        d.fp = -d.f;
        d.fpp = d.f;
        d.fxp = gam * d.f;
    } else {
        // u has no (t, y) dependence, so those differences are identically zero;
        // they are still taken to exercise every term.
        const FdSteps& e = *fd_steps;
        auto f4 = [&](double, double x, double, double pp) { return u(x, pp); };
        const double t = s.t, x = s.x, y = s.y, q = s.p;
        d.ft = (f4(t + e.t, x, y, q) - f4(t - e.t, x, y, q)) / (2 * e.t);
        d.fx = (f4(t, x + e.x, y, q) - f4(t, x - e.x, y, q)) / (2 * e.x);
        d.fy = (f4(t, x, y + e.y, q) - f4(t, x, y - e.y, q)) / (2 * e.y);
        d.fp = (f4(t, x, y, q + e.p) - f4(t, x, y, q - e.p)) / (2 * e.p);
        d.fxx = (f4(t, x + e.x, y, q) - 2 * d.f + f4(t, x - e.x, y, q)) / (e.x * e.x);
        d.fyy = (f4(t, x, y + e.y, q) - 2 * d.f + f4(t, x, y - e.y, q)) / (e.y * e.y);
        d.fpp = (f4(t, x, y, q + e.p) - 2 * d.f + f4(t, x, y, q - e.p)) / (e.p * e.p);
        auto mixed = [&](auto&& shift, double h1, double h2) {
            return (shift(h1, h2) - shift(h1, -h2) - shift(-h1, h2) + shift(-h1, -h2)) / (4 * h1 * h2);
        };
        d.fxy = mixed([&](double a1, double a2) { return f4(t, x + a1, y + a2, q); }, e.x, e.y);
        d.fxp = mixed([&](double a1, double a2) { return f4(t, x + a1, y, q + a2); }, e.x, e.p);
        d.fyp = mixed([&](double a1, double a2) { return f4(t, x, y + a1, q + a2); }, e.y, e.p);
    }
    return detail::apply_generator(m, c, b, ctl, g, h, d);
}

}  // namespace fwdre
