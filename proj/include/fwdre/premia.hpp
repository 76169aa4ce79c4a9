#pragma once

// Conditional premium principles for the insurer (a) and the proportional
// reinsurance contract (b), with analytic protection-level derivatives.

#include <concepts>
#include <string>
#include <string_view>

#include "market.hpp"

namespace fwdre {

enum class PremiumKind {
    expected_value,
    variance,
    modified_variance,
    // Loading proportional to the Gamma scale: b = shape*scale*lambda*theta + deltaR*scale*theta.
    rp_na,
};

inline const char* to_string(PremiumKind k) {
    switch (k) {
        case PremiumKind::expected_value: return "expected_value";
        case PremiumKind::variance: return "variance";
        case PremiumKind::modified_variance: return "modified_variance";
        case PremiumKind::rp_na: return "rp_na";
    }
    return "?";
}

inline PremiumKind premium_kind_from_string(std::string_view s) {
    if (s == "expected_value") return PremiumKind::expected_value;
    if (s == "variance") return PremiumKind::variance;
    if (s == "modified_variance") return PremiumKind::modified_variance;
    if (s == "rp_na") return PremiumKind::rp_na;
    throw ConfigError("unknown premium kind '" + std::string(s) + "'");
}

// d b / d theta and d^2 b / d theta^2 (one-sided at the endpoints).
struct ThetaDerivatives {
    double first = 0.0;
    double second = 0.0;
};

// Anything that prices insurance and reinsurance the way PremiumPrinciple does.
template <class P>
concept PremiumModel = requires(const P& p, const CombinedMarket& m, double t, double y, double theta) {
    { p.insurance(m, t, y) } -> std::convertible_to<double>;
    { p.reinsurance(m, t, y, theta) } -> std::convertible_to<double>;
    { p.derivatives(m, t, y, theta) } -> std::same_as<ThetaDerivatives>;
};

namespace detail {

inline void require_protection_level(double theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) throw RangeError("protection level outside [0, 1]");
}

inline const GammaClaims& require_gamma(const CombinedMarket& m) {
    const GammaClaims* g = m.claims.dist.as_gamma();
    if (!g) throw DomainError("rp_na premium requires Gamma claim sizes");
    return *g;
}

}  // namespace detail

struct PremiumPrinciple {
    PremiumKind kind = PremiumKind::expected_value;
    double deltaI = 0.3;
    double deltaR = 0.5;

    double insurance(const CombinedMarket& m, double t, double y) const;
    double reinsurance(const CombinedMarket& m, double t, double y, double theta) const;
    ThetaDerivatives derivatives(const CombinedMarket& m, double t, double y, double theta) const;
};

/// Insurance premium rate a(t, y).
inline double insurance_premium(const PremiumPrinciple& p, const CombinedMarket& m, double t, double y) {
    const double lam = m.lambda(t, y);
    switch (p.kind) {
        case PremiumKind::expected_value:
            return (1.0 + p.deltaI) * lam * claim_mean(m.claims.dist);
        case PremiumKind::variance:
            return lam * (claim_mean(m.claims.dist) + p.deltaI * claim_second_moment(m.claims.dist));
        case PremiumKind::modified_variance: {
            const double ez = claim_mean(m.claims.dist);
            return lam * ez + p.deltaI * claim_second_moment(m.claims.dist) / ez;
        }
        case PremiumKind::rp_na: {
            // Same shape as the reinsurance side at full cover, with deltaI.
            const auto& g = detail::require_gamma(m);
            return g.shape * g.scale * lam + p.deltaI * g.scale;
        }
    }
    return 0.0;
}

/// Reinsurance premium rate b(t, y, theta), theta in [0, 1].
inline double reinsurance_premium(const PremiumPrinciple& p, const CombinedMarket& m, double t, double y,
                                  double theta) {
    detail::require_protection_level(theta);
    const double lam = m.lambda(t, y);
    switch (p.kind) {
        case PremiumKind::expected_value:
            return (1.0 + p.deltaR) * theta * lam * claim_mean(m.claims.dist);
        case PremiumKind::variance:
            return theta * lam * (claim_mean(m.claims.dist) + theta * p.deltaR * claim_second_moment(m.claims.dist));
        case PremiumKind::modified_variance: {
            const double ez = claim_mean(m.claims.dist);
            return theta * lam * ez + p.deltaR * theta * claim_second_moment(m.claims.dist) / ez;
        }
        case PremiumKind::rp_na: {
            const auto& g = detail::require_gamma(m);
            return g.shape * g.scale * lam * theta + p.deltaR * g.scale * theta;
        }
    }
    return 0.0;
}

inline ThetaDerivatives premium_theta_derivatives(const PremiumPrinciple& p, const CombinedMarket& m, double t,
                                                  double y, double theta) {
    detail::require_protection_level(theta);
    const double lam = m.lambda(t, y);
    switch (p.kind) {
        case PremiumKind::expected_value:
            return {(1.0 + p.deltaR) * lam * claim_mean(m.claims.dist), 0.0};
        case PremiumKind::variance: {
            const double ez2 = claim_second_moment(m.claims.dist);
            return {lam * (claim_mean(m.claims.dist) + 2.0 * theta * p.deltaR * ez2), 2.0 * lam * p.deltaR * ez2};
        }
        case PremiumKind::modified_variance: {
            const double ez = claim_mean(m.claims.dist);
            return {lam * ez + p.deltaR * claim_second_moment(m.claims.dist) / ez, 0.0};
        }
        case PremiumKind::rp_na: {
            const auto& g = detail::require_gamma(m);
            return {g.shape * g.scale * lam + p.deltaR * g.scale, 0.0};
        }
    }
    return {};
}

inline double PremiumPrinciple::insurance(const CombinedMarket& m, double t, double y) const {
    return insurance_premium(*this, m, t, y);
}
inline double PremiumPrinciple::reinsurance(const CombinedMarket& m, double t, double y, double theta) const {
    return reinsurance_premium(*this, m, t, y, theta);
}
inline ThetaDerivatives PremiumPrinciple::derivatives(const CombinedMarket& m, double t, double y,
                                                      double theta) const {
    return premium_theta_derivatives(*this, m, t, y, theta);
}

static_assert(PremiumModel<PremiumPrinciple>);

// Checks b(.,.,0) = 0, db/dtheta >= 0 on a protection-level probe grid, and
// b(.,.,1) > a on the (t, y) grid. Each check records its worst point.
template <PremiumModel P>
ValidationReport validate_premium_assumptions(const P& p, const CombinedMarket& m, const EvalGrid& grid,
                                              std::size_t theta_probes = 11) {
    ValidationReport rep;
    CheckResult zero, mono, noarb;
    zero.name = "null_protection_free";
    mono.name = "premium_nondecreasing";
    noarb.name = "full_cover_exceeds_premium";
    double worst_zero = 0.0, worst_mono = kInf, worst_noarb = kInf;

    grid.for_each([&](double t, double y) {
        const double b0 = p.reinsurance(m, t, y, 0.0);
        zero.min = std::min(zero.min, b0);
        zero.max = std::max(zero.max, b0);
        if (std::abs(b0) > worst_zero) {
            worst_zero = std::abs(b0);
            zero.worst_t = t;
            zero.worst_y = y;
        }
        for (std::size_t k = 0; k < theta_probes; ++k) {
            const double th = theta_probes < 2 ? 0.0 : double(k) / double(theta_probes - 1);
            const double d = p.derivatives(m, t, y, th).first;
            mono.min = std::min(mono.min, d);
            mono.max = std::max(mono.max, d);
            if (d < worst_mono) {
                worst_mono = d;
                mono.worst_t = t;
                mono.worst_y = y;
            }
        }
        const double margin = p.reinsurance(m, t, y, 1.0) - p.insurance(m, t, y);
        noarb.min = std::min(noarb.min, margin);
        noarb.max = std::max(noarb.max, margin);
        if (margin < worst_noarb) {
            worst_noarb = margin;
            noarb.worst_t = t;
            noarb.worst_y = y;
        }
    });

    zero.status = worst_zero == 0.0 ? CheckStatus::pass : CheckStatus::fail;
    mono.status = worst_mono >= 0.0 ? CheckStatus::pass : CheckStatus::fail;
    noarb.status = worst_noarb > 0.0 ? CheckStatus::pass : CheckStatus::fail;
    noarb.note = "min over grid of b(t,y,1) - a(t,y)";
    rep.checks = {zero, mono, noarb};
    return rep;
}

}  // namespace fwdre
