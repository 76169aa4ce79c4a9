#pragma once

// Optimal proportional reinsurance: marginal cost of protection (db/dtheta)
// against marginal gain lambda * E[Z exp(gamma (1 - theta) Z)].

#include <cmath>
#include <optional>

#include "market.hpp"
#include "premia.hpp"

namespace fwdre {

// D0: no reinsurance is optimal. D1: full reinsurance is optimal.
enum class Region { D0, D1, interior };

inline const char* to_string(Region r) {
    switch (r) {
        case Region::D0: return "D0";
        case Region::D1: return "D1";
        case Region::interior: return "interior";
    }
    return "?";
}

struct ReinsuranceSolution {
    double theta = 0.0;
    Region region = Region::interior;
    double residual = 0.0;  // first-order residual; 0 in D0/D1
    int iterations = 0;
};

enum class Verdict { holds, fails, indeterminate };

struct ThetaSolverOptions {
    double tol = 1e-12;
    int max_iter = 200;
    bool verify_concavity = true;
    std::size_t concavity_probes = 21;
    // Warm start for Newton (e.g. the previous value along a path).
    std::optional<double> guess;
};

namespace detail {

// Smallest protection level whose tilt gamma*(1-theta) is strictly inside the MGF domain.
inline double finite_tilt_floor(const CombinedMarket& m) {
    const double bound = m.claims.mgf_bound();
    if (m.gamma < bound) return 0.0;
    return 1.0 - bound / m.gamma + 1e-9;
}

inline double marginal_gain(const CombinedMarket& m, double lam, double theta) {
    return lam * tilted_mean(m.claims.dist, m.gamma * (1.0 - theta));
}

}  // namespace detail

// Strict concavity of the reinsurance objective on a probe grid of [0, 1]:
// -d2b/dtheta2 < gamma * lambda * E[Z^2 exp(gamma (1-theta) Z)].
// A divergent right-hand side counts as +inf (the inequality then holds).
template <PremiumModel P>
Verdict concavity_check(const CombinedMarket& m, const P& p, double t, double y, std::size_t probes = 21) {
    const double lam = m.lambda(t, y);
    for (std::size_t k = 0; k < probes; ++k) {
        const double theta = probes < 2 ? 0.0 : double(k) / double(probes - 1);
        const double lhs = -p.derivatives(m, t, y, theta).second;
        const double tilt = m.gamma * (1.0 - theta);
        double rhs = kInf;
        if (tilt < m.claims.mgf_bound()) {
            try {
                rhs = m.gamma * lam * tilted_second_moment(m.claims.dist, tilt);
            } catch (const DomainError&) {
                return Verdict::indeterminate;
            }
        }
        if (!std::isfinite(lhs) || std::isnan(rhs)) return Verdict::indeterminate;
        if (!(lhs < rhs)) return Verdict::fails;
    }
    return Verdict::holds;
}

// Ties fall into the boundary regions. When the tilted mean at theta = 0
// diverges the marginal gain is unbounded and the point is never in D0.
template <PremiumModel P>
Region classify_region(const CombinedMarket& m, const P& p, double t, double y) {
    const double lam = m.lambda(t, y);
    if (m.gamma < m.claims.mgf_bound()) {
        if (detail::marginal_gain(m, lam, 0.0) <= p.derivatives(m, t, y, 0.0).first) return Region::D0;
    }
    if (p.derivatives(m, t, y, 1.0).first <= lam * claim_mean(m.claims.dist)) return Region::D1;
    return Region::interior;
}

/// Optimal protection level: 0 on D0, 1 on D1, otherwise the root of
/// db/dtheta = lambda E[Z exp(gamma (1-theta) Z)] by safeguarded Newton.
template <PremiumModel P>
ReinsuranceSolution optimal_theta(const CombinedMarket& m, const P& p, double t, double y,
                                  const ThetaSolverOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw RangeError("solver tolerance must be positive");
    // Without claims the objective is gamma*b, minimized at 0 since b(0) = 0 and b is nondecreasing.
    if (m.lambda(t, y) == 0.0) return {0.0, Region::D0, 0.0, 0};
    if (opt.verify_concavity) {
        switch (concavity_check(m, p, t, y, opt.concavity_probes)) {
            case Verdict::holds: break;
            case Verdict::fails: throw ConcavityViolation("reinsurance objective is not strictly concave");
            case Verdict::indeterminate: throw DomainError("concavity could not be evaluated");
        }
    }

    const Region region = classify_region(m, p, t, y);
    if (region == Region::D0) return {0.0, Region::D0, 0.0, 0};
    if (region == Region::D1) return {1.0, Region::D1, 0.0, 0};

    const double lam = m.lambda(t, y);
    auto f = [&](double th) { return p.derivatives(m, t, y, th).first - detail::marginal_gain(m, lam, th); };
    auto df = [&](double th) {
        return p.derivatives(m, t, y, th).second +
               m.gamma * lam * tilted_second_moment(m.claims.dist, m.gamma * (1.0 - th));
    };

    double lo = detail::finite_tilt_floor(m);
    double hi = 1.0;
    const double f_lo = f(lo), f_hi = f(hi);
    if (!(f_lo < 0.0 && f_hi > 0.0)) throw NoBracket("first-order condition has no sign change on the bracket");

    double x = 0.5 * (lo + hi);
    if (opt.guess && *opt.guess > lo && *opt.guess < hi) x = *opt.guess;

    ReinsuranceSolution sol;
    sol.region = Region::interior;
    for (int it = 1; it <= opt.max_iter; ++it) {
        const double fx = f(x);
        sol.iterations = it;
        sol.theta = x;
        sol.residual = fx;
        if (std::abs(fx) <= opt.tol) return sol;
        if (fx < 0.0) lo = x;
        else hi = x;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) return sol;

        const double d = df(x);
        double next = (d > 0.0 && std::isfinite(d)) ? x - fx / d : lo - 1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
    }
    return sol;
}

/// phi = gamma * b(theta) + lambda * (E[exp(gamma (1-theta) Z)] - 1) at a given protection level.
template <PremiumModel P>
double phi_at(const CombinedMarket& m, const P& p, double t, double y, double theta) {
    const double lam = m.lambda(t, y);
    const double jump = (theta >= 1.0 || lam == 0.0) ? 0.0 : exp_moment(m.claims.dist, m.gamma * (1.0 - theta)) - 1.0;
    return m.gamma * p.reinsurance(m, t, y, theta) + lam * jump;
}

/// phi at the optimal protection level.
template <PremiumModel P>
double phi(const CombinedMarket& m, const P& p, double t, double y, const ThetaSolverOptions& opt = {}) {
    return phi_at(m, p, t, y, optimal_theta(m, p, t, y, opt).theta);
}

}  // namespace fwdre
