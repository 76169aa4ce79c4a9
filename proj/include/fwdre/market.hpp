#pragma once

// Combined insurance-financial market: factor, stock, claims, correlations.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>

#include "errors.hpp"

namespace fwdre {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Coefficient functions (t, y) -> value. All built-ins are time-homogeneous.
// ---------------------------------------------------------------------------

struct Constant {
    double c = 0.0;
};
// c0 + c1*y
struct Affine {
    double c0 = 0.0, c1 = 0.0;
};
// c0 + c1*y + c2*y^2
struct Quadratic {
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
};
// scale * exp(rate*y)
struct Exponential {
    double scale = 1.0, rate = 1.0;
};
// Scott volatility: cbar * sqrt(eps1 + exp(eps2*y))
struct Scott {
    double cbar = 1.0, eps1 = 0.0, eps2 = 0.0;
};
// Piecewise linear in y through the knots, flat outside.
struct Tabulated {
    std::vector<double> y;
    std::vector<double> v;
};

class Coefficient {
public:
    using Form = std::variant<Constant, Affine, Quadratic, Exponential, Scott, Tabulated>;

    Coefficient() : form_(Constant{}) {}
    Coefficient(Form form) : form_(std::move(form)) {  // NOLINT(implicit)
        if (auto* tab = std::get_if<Tabulated>(&form_)) {
            if (tab->y.size() < 2 || tab->y.size() != tab->v.size())
                throw DomainError("tabulated coefficient needs >= 2 knots with matching values");
            if (!std::is_sorted(tab->y.begin(), tab->y.end()) ||
                std::adjacent_find(tab->y.begin(), tab->y.end()) != tab->y.end())
                throw DomainError("tabulated coefficient knots must be strictly increasing");
        }
    }

    double operator()(double /*t*/, double y) const {
        return std::visit([y](const auto& f) { return eval(f, y); }, form_);
    }

    template <class F>
        requires(!std::is_same_v<std::decay_t<F>, Form> && std::is_constructible_v<Form, F>)
    Coefficient(F&& f) : Coefficient(Form(std::forward<F>(f))) {}  // NOLINT(implicit)

    const Form& form() const noexcept { return form_; }

    template <class F>
    const F* as() const noexcept { return std::get_if<F>(&form_); }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        std::visit(
            [&os](const auto& f) {
                using F = std::decay_t<decltype(f)>;
                if constexpr (std::is_same_v<F, Constant>) os << "constant(" << f.c << ")";
                else if constexpr (std::is_same_v<F, Affine>) os << "affine(" << f.c0 << ", " << f.c1 << ")";
                else if constexpr (std::is_same_v<F, Quadratic>)
                    os << "quadratic(" << f.c0 << ", " << f.c1 << ", " << f.c2 << ")";
                else if constexpr (std::is_same_v<F, Exponential>)
                    os << "exponential(" << f.scale << ", " << f.rate << ")";
                else if constexpr (std::is_same_v<F, Scott>)
                    os << "scott(" << f.cbar << ", " << f.eps1 << ", " << f.eps2 << ")";
                else {
                    os << "tabulated(";
                    for (std::size_t i = 0; i < f.y.size(); ++i)
                        os << (i ? "; " : "") << f.y[i] << ":" << f.v[i];
                    os << ")";
                }
            },
            form_);
        return os.str();
    }

private:
    static double eval(const Constant& f, double) { return f.c; }
    static double eval(const Affine& f, double y) { return f.c0 + f.c1 * y; }
    static double eval(const Quadratic& f, double y) { return f.c0 + y * (f.c1 + f.c2 * y); }
    static double eval(const Exponential& f, double y) { return f.scale * std::exp(f.rate * y); }
    static double eval(const Scott& f, double y) { return f.cbar * std::sqrt(f.eps1 + std::exp(f.eps2 * y)); }
    static double eval(const Tabulated& f, double y) {
        if (y <= f.y.front()) return f.v.front();
        if (y >= f.y.back()) return f.v.back();
        auto it = std::upper_bound(f.y.begin(), f.y.end(), y);
        const auto i = static_cast<std::size_t>(it - f.y.begin());
        const double w = (y - f.y[i - 1]) / (f.y[i] - f.y[i - 1]);
        return f.v[i - 1] + w * (f.v[i] - f.v[i - 1]);
    }

    Form form_;
};

// ---------------------------------------------------------------------------
// Claim-size distributions
// ---------------------------------------------------------------------------

// Gamma with SHAPE and SCALE (mean = shape*scale). Exponential = Gamma(1, mean).
struct GammaClaims {
    double shape = 1.0;
    double scale = 1.0;
};

// User-supplied density on [0, inf); moments go through quadrature.
struct CustomClaims {
    std::string label;
    std::function<double(double)> pdf;
    // Supremum of s with E[e^{sZ}] < inf (kInf for bounded support).
    double mgf_bound = kInf;
    std::function<double(std::mt19937_64&)> sample;
};

class ClaimSizeDistribution {
public:
    static ClaimSizeDistribution gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0))
            throw DomainError("gamma claim sizes need shape > 0 and scale > 0");
        return ClaimSizeDistribution(GammaClaims{shape, scale});
    }
    static ClaimSizeDistribution exponential(double mean) { return gamma(1.0, mean); }
    static ClaimSizeDistribution custom(CustomClaims c) {
        if (!c.pdf || !c.sample) throw DomainError("custom claim distribution needs pdf and sampler");
        return ClaimSizeDistribution(std::move(c));
    }

    const GammaClaims* as_gamma() const noexcept { return std::get_if<GammaClaims>(&form_); }
    const CustomClaims* as_custom() const noexcept { return std::get_if<CustomClaims>(&form_); }

    double mgf_bound() const noexcept {
        if (auto* g = as_gamma()) return 1.0 / g->scale;
        return as_custom()->mgf_bound;
    }

    double sample(std::mt19937_64& rng) const {
        if (auto* g = as_gamma()) return std::gamma_distribution<double>(g->shape, g->scale)(rng);
        return as_custom()->sample(rng);
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        if (auto* g = as_gamma()) os << "gamma(" << g->shape << ", " << g->scale << ")";
        else os << "custom(" << as_custom()->label << ")";
        return os.str();
    }

private:
    explicit ClaimSizeDistribution(std::variant<GammaClaims, CustomClaims> f) : form_(std::move(f)) {}
    std::variant<GammaClaims, CustomClaims> form_;
};

namespace detail {

[[noreturn, gnu::noinline, gnu::cold]] inline void tilt_diverges(double s, double bound) {
    std::ostringstream os;
    os.precision(17);
    os << "exponential moment diverges: tilt " << s << " >= mgf bound " << bound;
    throw DomainError(os.str());
}

inline void require_tilt(const ClaimSizeDistribution& dist, double s) {
    const double bound = dist.mgf_bound();
    if (!(s < bound)) tilt_diverges(s, bound);
}

// base^{-k}; small integer k avoids pow on the simulation hot path.
inline double pow_neg(double base, double k) {
    if (k >= 0.0 && k <= 8.0 && k == std::floor(k)) {
        double r = 1.0;
        for (int i = 0; i < int(k); ++i) r *= base;
        return 1.0 / r;
    }
    return std::pow(base, -k);
}

// E[Z^k e^{sZ}] by exp-sinh quadrature on [0, inf).
inline double custom_moment(const CustomClaims& c, int k, double s) {
    boost::math::quadrature::exp_sinh<double> integrator;
    auto f = [&](double z) {
        const double p = c.pdf(z);
        if (p == 0.0) return 0.0;
        return std::pow(z, k) * std::exp(s * z) * p;
    };
    return integrator.integrate(f, 0.0, kInf);
}

}  // namespace detail

/// E[e^{sZ}]. Throws DomainError when s >= mgf_bound.
inline double exp_moment(const ClaimSizeDistribution& dist, double s) {
    detail::require_tilt(dist, s);
    if (auto* g = dist.as_gamma()) return detail::pow_neg(1.0 - g->scale * s, g->shape);
    return detail::custom_moment(*dist.as_custom(), 0, s);
}

/// E[Z e^{sZ}].
inline double tilted_mean(const ClaimSizeDistribution& dist, double s) {
    detail::require_tilt(dist, s);
    if (auto* g = dist.as_gamma())
        return g->shape * g->scale * detail::pow_neg(1.0 - g->scale * s, g->shape + 1.0);
    return detail::custom_moment(*dist.as_custom(), 1, s);
}

/// E[Z^2 e^{sZ}].
inline double tilted_second_moment(const ClaimSizeDistribution& dist, double s) {
    detail::require_tilt(dist, s);
    if (auto* g = dist.as_gamma())
        return g->shape * (g->shape + 1.0) * g->scale * g->scale *
               detail::pow_neg(1.0 - g->scale * s, g->shape + 2.0);
    return detail::custom_moment(*dist.as_custom(), 2, s);
}

inline double claim_mean(const ClaimSizeDistribution& dist) { return tilted_mean(dist, 0.0); }
inline double claim_second_moment(const ClaimSizeDistribution& dist) { return tilted_second_moment(dist, 0.0); }

// ---------------------------------------------------------------------------
// Correlation of the drivers (W^Y, W^S, W^P)
// ---------------------------------------------------------------------------

using Matrix3 = std::array<std::array<double, 3>, 3>;

struct CorrelationStructure {
    double rho = 0.0;   // W^S - W^Y
    double rhoS = 0.0;  // W^P - W^S
    double rhoY = 0.0;  // W^P - W^Y
    Matrix3 chol{};     // lower triangular, driver order (W^Y, W^S, W^P)

    Matrix3 matrix() const {
        return {{{1.0, rho, rhoY}, {rho, 1.0, rhoS}, {rhoY, rhoS, 1.0}}};
    }
};

inline CorrelationStructure build_correlation(double rho, double rhoS, double rhoY) {
    for (double c : {rho, rhoS, rhoY})
        if (!(c >= -1.0 && c <= 1.0)) throw RangeError("correlation coefficient outside [-1, 1]");

    CorrelationStructure cs;
    cs.rho = rho;
    cs.rhoS = rhoS;
    cs.rhoY = rhoY;
    const Matrix3 c = cs.matrix();

    Eigen::Matrix3d m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) m(i, j) = c[i][j];
    const double min_eig = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(m, Eigen::EigenvaluesOnly)
                               .eigenvalues()
                               .minCoeff();
    if (min_eig < -1e-12) {
        std::ostringstream os;
        os << "correlation matrix not PSD (min eigenvalue " << min_eig << ")";
        throw NotPSD(os.str());
    }

    // Semidefinite Cholesky: a vanishing pivot zeroes its column.
    Matrix3& l = cs.chol;
    for (int j = 0; j < 3; ++j) {
        double d = c[j][j];
        for (int k = 0; k < j; ++k) d -= l[j][k] * l[j][k];
        const double pivot = d > 1e-14 ? std::sqrt(d) : 0.0;
        l[j][j] = pivot;
        for (int i = j + 1; i < 3; ++i) {
            double s = c[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            l[i][j] = pivot > 0.0 ? s / pivot : 0.0;
        }
    }
    return cs;
}

// ---------------------------------------------------------------------------
// Model components
// ---------------------------------------------------------------------------

struct FactorModel {
    Coefficient alpha;  // drift (1/time)
    Coefficient beta;   // diffusion
    double y0 = 0.0;
};

struct StockModel {
    Coefficient mu;
    Coefficient sigma;
    double s0 = 1.0;
};

struct ClaimModel {
    Coefficient lambda;
    ClaimSizeDistribution dist = ClaimSizeDistribution::exponential(1.0);

    double mgf_bound() const noexcept { return dist.mgf_bound(); }
};

struct CombinedMarket {
    FactorModel factor;
    StockModel stock;
    ClaimModel claims;
    CorrelationStructure corr;
    double gamma = 0.5;  // risk aversion
    double x0 = 0.0;     // initial wealth
    double r0 = 1.0;     // initial surplus

    double alpha(double t, double y) const { return factor.alpha(t, y); }
    double beta(double t, double y) const { return factor.beta(t, y); }
    double mu(double t, double y) const { return stock.mu(t, y); }
    double sigma(double t, double y) const { return stock.sigma(t, y); }
    double lambda(double t, double y) const { return claims.lambda(t, y); }
    double sharpe(double t, double y) const { return mu(t, y) / sigma(t, y); }
};

// ---------------------------------------------------------------------------
// Standing-assumption validation on a finite grid
// ---------------------------------------------------------------------------

struct EvalGrid {
    double t_min = 0.0, t_max = 1.0;
    std::size_t nt = 11;
    double y_min = -0.3, y_max = 0.3;
    std::size_t ny = 61;

    double t_at(std::size_t i) const { return nt < 2 ? t_min : t_min + (t_max - t_min) * double(i) / double(nt - 1); }
    double y_at(std::size_t j) const { return ny < 2 ? y_min : y_min + (y_max - y_min) * double(j) / double(ny - 1); }

    template <class F>
    void for_each(F&& f) const {
        for (std::size_t i = 0; i < std::max<std::size_t>(nt, 1); ++i)
            for (std::size_t j = 0; j < std::max<std::size_t>(ny, 1); ++j) f(t_at(i), y_at(j));
    }
};

enum class CheckStatus { pass, warn, fail };

inline const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "PASS";
        case CheckStatus::warn: return "WARN";
        case CheckStatus::fail: return "FAIL";
    }
    return "?";
}

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::pass;
    double min = kInf;
    double max = -kInf;
    double worst_t = 0.0, worst_y = 0.0;
    std::string note;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool passed() const {
        return std::none_of(checks.begin(), checks.end(),
                            [](const CheckResult& c) { return c.status == CheckStatus::fail; });
    }
    const CheckResult* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
    std::string summary() const {
        std::ostringstream os;
        for (const auto& c : checks) {
            os << to_string(c.status) << "  " << c.name << "  min=" << c.min << " max=" << c.max;
            if (!c.note.empty()) os << "  (" << c.note << ")";
            os << '\n';
        }
        return os.str();
    }
};

namespace detail {

// Tracks min/max of f over the grid; `ok` decides pass/fail per point.
template <class F, class Ok>
CheckResult grid_check(std::string name, const EvalGrid& grid, F&& f, Ok&& ok) {
    CheckResult r;
    r.name = std::move(name);
    bool failed = false;
    grid.for_each([&](double t, double y) {
        const double v = f(t, y);
        if (v < r.min || std::isnan(v)) r.min = v;
        if (v > r.max) r.max = v;
        if (!failed && !ok(v)) {
            failed = true;
            r.worst_t = t;
            r.worst_y = y;
        }
    });
    r.status = failed ? CheckStatus::fail : CheckStatus::pass;
    return r;
}

}  // namespace detail

// Checks positivity of intensity and volatility, finiteness of coefficients
// and of the Sharpe ratio, and finiteness of the claim exponential moments at
// the largest tilt ever used (gamma). A tilt exactly at the MGF boundary is a
// warning: the moments are finite for every positive protection level.
inline ValidationReport validate_standing_assumptions(const CombinedMarket& m, const EvalGrid& grid) {
    ValidationReport rep;
    auto finite = [](double v) { return std::isfinite(v); };

    rep.checks.push_back(detail::grid_check(
        "intensity_positive", grid, [&](double t, double y) { return m.lambda(t, y); },
        [](double v) { return std::isfinite(v) && v > 0.0; }));
    rep.checks.push_back(detail::grid_check(
        "volatility_positive", grid, [&](double t, double y) { return m.sigma(t, y); },
        [](double v) { return std::isfinite(v) && v > 0.0; }));
    rep.checks.push_back(detail::grid_check(
        "sharpe_finite", grid, [&](double t, double y) { return m.sharpe(t, y); }, finite));
    rep.checks.push_back(detail::grid_check(
        "factor_drift_finite", grid, [&](double t, double y) { return m.alpha(t, y); }, finite));
    rep.checks.push_back(detail::grid_check(
        "factor_diffusion_nonnegative", grid, [&](double t, double y) { return m.beta(t, y); },
        [](double v) { return std::isfinite(v) && v >= 0.0; }));

    {
        CheckResult r;
        r.name = "risk_aversion_positive";
        r.min = r.max = m.gamma;
        r.status = (m.gamma > 0.0 && std::isfinite(m.gamma)) ? CheckStatus::pass : CheckStatus::fail;
        rep.checks.push_back(r);
    }

    {
        CheckResult r;
        r.name = "claim_exponential_moments";
        const double bound = m.claims.mgf_bound();
        r.min = r.max = m.gamma;
        const double rel = std::abs(m.gamma - bound) / std::max(1.0, std::abs(bound));
        if (std::isfinite(bound) && rel <= 1e-12) {
            r.status = CheckStatus::warn;
            r.note = "tilt gamma sits on the mgf bound; moments finite only for protection level > 0";
        } else if (m.gamma > bound) {
            r.status = CheckStatus::fail;
            std::ostringstream os;
            os << "tilt " << m.gamma << " exceeds mgf bound " << bound;
            r.note = os.str();
        } else {
            try {
                const double vals[] = {claim_mean(m.claims.dist), exp_moment(m.claims.dist, m.gamma),
                                       tilted_mean(m.claims.dist, m.gamma),
                                       tilted_second_moment(m.claims.dist, m.gamma)};
                for (double v : vals)
                    if (!std::isfinite(v)) r.status = CheckStatus::fail;
                r.max = *std::max_element(std::begin(vals), std::end(vals));
            } catch (const DomainError& e) {
                r.status = CheckStatus::fail;
                r.note = e.what();
            }
        }
        rep.checks.push_back(r);
    }
    return rep;
}

}  // namespace fwdre
