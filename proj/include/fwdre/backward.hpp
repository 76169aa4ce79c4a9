#pragma once

// Backward exponential utility -exp(-gamma x) at horizon T. The value is
// V = -exp(-gamma x - phi(t, y; T)) with phi solving a semilinear Cauchy
// problem; phi is obtained from a quadratic ansatz (Riccati ODEs) or from
// Feynman-Kac after the logarithmic distortion.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "forward.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace fwdre {

// Sign of the quadratic term 1/2 (1-rho^2) beta^2 phi_y^2 in the Cauchy problem.
// verified: -1, what V = -exp(-gamma x - phi) actually requires.
// as_printed: +1, the literal printed problem; paired with the matching distortion.
enum class BackwardConvention { verified, as_printed };

inline const char* to_string(BackwardConvention c) {
    return c == BackwardConvention::verified ? "verified" : "as_printed";
}

inline BackwardConvention backward_convention_from_string(std::string_view s) {
    if (s == "verified") return BackwardConvention::verified;
    if (s == "as_printed") return BackwardConvention::as_printed;
    throw ConfigError("unknown backward convention '" + std::string(s) + "'");
}

inline double quadratic_sign(BackwardConvention c) { return c == BackwardConvention::verified ? -1.0 : 1.0; }

// phi = kappa ln xi; the FK exponent is  xi_exponent_sign * (1-rho^2) * int g.
inline double kappa(double rho, BackwardConvention c) {
    const double k = 1.0 - rho * rho;
    if (k == 0.0) throw DegenerateCorrelation("distortion undefined for |rho| = 1");
    return c == BackwardConvention::verified ? -1.0 / k : 1.0 / k;
}
inline double xi_exponent_sign(BackwardConvention c) { return c == BackwardConvention::verified ? 1.0 : -1.0; }

inline double phi_from_xi(double xi, double rho, BackwardConvention c = BackwardConvention::verified) {
    if (!(xi > 0.0)) throw DomainError("xi must be positive");
    return kappa(rho, c) * std::log(xi);
}

inline double xi_from_phi(double phi, double rho, BackwardConvention c = BackwardConvention::verified) {
    return std::exp(phi / kappa(rho, c));
}

// ---------------------------------------------------------------------------
// Quadratic ansatz phi = phi0(t) + phi1(t) y + phi2(t) y^2
// ---------------------------------------------------------------------------

struct AnsatzSystem {
    double A0 = 0, A1 = 0;          // P~ drift alpha - rho mu beta / sigma = A0 + A1 y
    double beta = 0;                // constant factor diffusion
    double g0 = 0, g1 = 0, g2 = 0;  // g = g0 + g1 y + g2 y^2
    double k = 1;                   // 1 - rho^2
    double s = -1;                  // quadratic_sign

    std::array<double, 3> rhs(const std::array<double, 3>& p) const {
        const double b2 = beta * beta;
        return {-A0 * p[1] - b2 * p[2] - s * 0.5 * k * b2 * p[1] * p[1] + g0,
                -A1 * p[1] - 2.0 * A0 * p[2] - s * 2.0 * k * b2 * p[1] * p[2] + g1,
                -2.0 * A1 * p[2] - s * 2.0 * k * b2 * p[2] * p[2] + g2};
    }
};

struct QuadraticValueCoeffs {
    double T = 1.0;
    std::vector<double> t_grid;
    std::vector<double> phi0, phi1, phi2;
    // time derivatives at the nodes (ODE right-hand sides), used for Hermite interpolation
    std::vector<double> dphi0, dphi1, dphi2;
    AnsatzSystem system;
    BackwardConvention convention = BackwardConvention::verified;

    struct Node {
        double c0, c1, c2;  // coefficients
        double d0, d1, d2;  // their time derivatives
    };

    Node at(double t) const {
        if (!(t >= t_grid.front() - 1e-12 && t <= t_grid.back() + 1e-12)) throw RangeError("time outside ansatz grid");
        const std::size_t n = t_grid.size();
        const double dt = t_grid[1] - t_grid[0];
        std::size_t i = std::min<std::size_t>(std::size_t(std::max(0.0, (t - t_grid[0]) / dt)), n - 2);
        const double h = t_grid[i + 1] - t_grid[i];
        const double u = std::clamp((t - t_grid[i]) / h, 0.0, 1.0);
        const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
        const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
        const double e00 = 6 * u * u - 6 * u, e10 = 3 * u * u - 4 * u + 1;
        const double e01 = -e00, e11 = 3 * u * u - 2 * u;
        auto val = [&](const std::vector<double>& v, const std::vector<double>& d) {
            return h00 * v[i] + h10 * h * d[i] + h01 * v[i + 1] + h11 * h * d[i + 1];
        };
        auto der = [&](const std::vector<double>& v, const std::vector<double>& d) {
            return (e00 * v[i] + e01 * v[i + 1]) / h + e10 * d[i] + e11 * d[i + 1];
        };
        return {val(phi0, dphi0), val(phi1, dphi1), val(phi2, dphi2),
                der(phi0, dphi0), der(phi1, dphi1), der(phi2, dphi2)};
    }

    double phi(double t, double y) const {
        const Node c = at(t);
        return c.c0 + c.c1 * y + c.c2 * y * y;
    }
    double phi_y(double t, double y) const {
        const Node c = at(t);
        return c.c1 + 2.0 * c.c2 * y;
    }
    double phi_t(double t, double y) const {
        const Node c = at(t);
        return c.d0 + c.d1 * y + c.d2 * y * y;
    }
};

namespace detail {

inline bool nearly(double a, double b, double rel = 1e-9) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

// Reads the coefficients of A(y) and g(y) by exact interpolation through
// y = -1, 0, 1 and checks the forms at y = 2 and y = -2.
template <PremiumModel P>
AnsatzSystem ansatz_system(const CombinedMarket& m, const P& p, BackwardConvention conv,
                           const ThetaSolverOptions& opt = {}) {
    AnsatzSystem sys;
    const double rho = m.corr.rho;
    auto A = [&](double y) { return m.alpha(0, y) - rho * m.mu(0, y) * m.beta(0, y) / m.sigma(0, y); };
    auto g = [&](double y) { return g_zero_vol(m, p, 0.0, y, opt); };

    const double am = A(-1), a0 = A(0), ap = A(1);
    sys.A0 = a0;
    sys.A1 = 0.5 * (ap - am);
    if (!detail::nearly(ap - a0, a0 - am) || !detail::nearly(A(2), sys.A0 + 2 * sys.A1))
        throw DomainError("quadratic ansatz needs an affine P~ factor drift");

    sys.beta = m.beta(0, 0);
    for (double y : {-2.0, -1.0, 1.0, 2.0})
        if (!detail::nearly(m.beta(0, y), sys.beta)) throw DomainError("quadratic ansatz needs a constant beta");

    const double gm = g(-1), g0 = g(0), gp = g(1);
    sys.g0 = g0;
    sys.g1 = 0.5 * (gp - gm);
    sys.g2 = 0.5 * (gp + gm) - g0;
    for (double y : {-2.0, 2.0}) {
        const double want = sys.g0 + sys.g1 * y + sys.g2 * y * y;
        if (!detail::nearly(g(y), want, 1e-8)) throw DomainError("quadratic ansatz needs g quadratic in y");
    }
    sys.k = 1.0 - rho * rho;
    sys.s = quadratic_sign(conv);
    return sys;
}

inline QuadraticValueCoeffs integrate_ansatz(const AnsatzSystem& sys, double T, double dt,
                                             BackwardConvention conv = BackwardConvention::verified) {
    if (!(T > 0.0) || !(dt > 0.0)) throw RangeError("T and dt must be positive");
    const std::size_t n = std::max<std::size_t>(1, std::size_t(std::llround(T / dt)));
    const double h = T / double(n);

    QuadraticValueCoeffs out;
    out.T = T;
    out.system = sys;
    out.convention = conv;
    out.t_grid.resize(n + 1);
    for (auto* v : {&out.phi0, &out.phi1, &out.phi2, &out.dphi0, &out.dphi1, &out.dphi2}) v->resize(n + 1);

    auto store = [&](std::size_t i, const std::array<double, 3>& p) {
        for (double c : p)
            if (!std::isfinite(c) || std::abs(c) > 1e12) throw BlowUp("ansatz coefficient exceeded 1e12");
        const auto d = sys.rhs(p);
        out.t_grid[i] = double(i) * h;
        out.phi0[i] = p[0];
        out.phi1[i] = p[1];
        out.phi2[i] = p[2];
        out.dphi0[i] = d[0];
        out.dphi1[i] = d[1];
        out.dphi2[i] = d[2];
    };

    std::array<double, 3> p{0.0, 0.0, 0.0};
    store(n, p);
    out.t_grid[n] = T;
    // RK4 in reversed time: dp/dt = f(p), stepping t -> t - h.
    for (std::size_t i = n; i-- > 0;) {
        auto axpy = [](const std::array<double, 3>& a, double c, const std::array<double, 3>& b) {
            return std::array<double, 3>{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]};
        };
        const auto k1 = sys.rhs(p);
        const auto k2 = sys.rhs(axpy(p, -0.5 * h, k1));
        const auto k3 = sys.rhs(axpy(p, -0.5 * h, k2));
        const auto k4 = sys.rhs(axpy(p, -h, k3));
        for (int j = 0; j < 3; ++j) p[j] -= h / 6.0 * (k1[j] + 2 * k2[j] + 2 * k3[j] + k4[j]);
        store(i, p);
    }
    return out;
}

/// Integrates the three coupled coefficient ODEs backward from zero data at T.
template <PremiumModel P>
QuadraticValueCoeffs solve_quadratic_ansatz(const CombinedMarket& m, const P& p, double T, double dt = 1e-4,
                                            BackwardConvention conv = BackwardConvention::verified) {
    return integrate_ansatz(ansatz_system(m, p, conv), T, dt, conv);
}

// ---------------------------------------------------------------------------
// Strategy
// ---------------------------------------------------------------------------

inline double backward_pi(double phi_y, const CombinedMarket& m, double t, double y) {
    const double s = m.sigma(t, y);
    return m.mu(t, y) / (m.gamma * s * s) - m.corr.rho * m.beta(t, y) * phi_y / (m.gamma * s);
}

inline double backward_pi(const QuadraticValueCoeffs& c, const CombinedMarket& m, double t, double y) {
    return backward_pi(c.phi_y(t, y), m, t, y);
}

// ---------------------------------------------------------------------------
// Feynman-Kac
// ---------------------------------------------------------------------------

struct FKEstimate {
    double xi = 1.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
};

struct FKConfig {
    std::size_t n_paths = 100000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
};

namespace detail {

// Simulates Y under P~ on [t, T] and returns per-path int_t^T g(s, Y_s) ds by the trapezoid rule.
template <class G>
std::vector<double> integrated_g_paths(const CombinedMarket& m, G&& g, double t, double y, double T,
                                       const FKConfig& cfg) {
    if (!(T > t)) return std::vector<double>(cfg.n_paths, 0.0);
    if (!(cfg.dt > 0.0) || cfg.n_paths == 0) throw RangeError("FK needs dt > 0 and n_paths >= 1");
    const std::size_t steps = std::max<std::size_t>(1, std::size_t(std::llround((T - t) / cfg.dt)));
    const double h = (T - t) / double(steps), sh = std::sqrt(h);
    const double rho = m.corr.rho;
    std::vector<double> out(cfg.n_paths);
    for (std::size_t path = 0; path < cfg.n_paths; ++path) {
        auto rng = path_rng(cfg.seed, path);
        std::normal_distribution<double> nd;
        double s = t, yy = y, gl = g(s, yy), acc = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const double beta = m.beta(s, yy);
            const double drift = m.alpha(s, yy) - rho * m.mu(s, yy) * beta / m.sigma(s, yy);
            yy += drift * h + beta * sh * nd(rng);
            s = t + double(k + 1) * h;
            const double gr = g(s, yy);
            acc += 0.5 * (gl + gr) * h;
            gl = gr;
        }
        out[path] = acc;
    }
    return out;
}

}  // namespace detail

/// g(t, y) of the zero-volatility case along paths, warm-starting the
/// protection-level solve from the previous call.
template <PremiumModel P>
auto make_g_evaluator(const CombinedMarket& m, const P& p) {
    return [&m, &p, last = std::optional<double>{}](double t, double y) mutable {
        ThetaSolverOptions opt;
        opt.verify_concavity = false;
        opt.guess = last;
        const ReinsuranceSolution sol = optimal_theta(m, p, t, y, opt);
        if (sol.region == Region::interior) last = sol.theta;
        return g_zero_vol(m, local_coeffs_at(m, p, t, y, sol.theta));
    };
}

/// xi(t, y) = E~[exp(sign (1-rho^2) int_t^T g ds)], sign fixed by the convention.
template <class G>
FKEstimate xi_feynman_kac_g(const CombinedMarket& m, G&& g, double t, double y, double T, const FKConfig& cfg,
                            BackwardConvention conv = BackwardConvention::verified) {
    const double k = 1.0 - m.corr.rho * m.corr.rho;
    if (k == 0.0) throw DegenerateCorrelation("|rho| = 1: use phi_direct_fk");
    const auto ints = detail::integrated_g_paths(m, g, t, y, T, cfg);
    const double c = xi_exponent_sign(conv) * k;
    RunningStats st;
    for (double v : ints) st.add(std::exp(c * v));
    return {st.mean, st.stderr_(), st.n};
}

template <PremiumModel P>
FKEstimate xi_feynman_kac(const CombinedMarket& m, const P& p, double t, double y, double T, const FKConfig& cfg,
                          BackwardConvention conv = BackwardConvention::verified) {
    if (m.lambda(t, y) != 0.0 && concavity_check(m, p, t, y) == Verdict::fails)
        throw ConcavityViolation("reinsurance objective not concave");
    return xi_feynman_kac_g(m, make_g_evaluator(m, p), t, y, T, cfg, conv);
}

struct PhiEstimate {
    double phi = 0.0;
    double stderr_ = 0.0;
    std::size_t n_paths = 0;
};

/// |rho| = 1: the quadratic term drops out, the Cauchy problem is linear
/// and phi = -E~[int g] under either convention.
template <PremiumModel P>
PhiEstimate phi_direct_fk(const CombinedMarket& m, const P& p, double t, double y, double T, const FKConfig& cfg) {
    const auto ints = detail::integrated_g_paths(m, make_g_evaluator(m, p), t, y, T, cfg);
    RunningStats st;
    for (double v : ints) st.add(-v);
    return {st.mean, st.stderr_(), st.n};
}

// ---------------------------------------------------------------------------
// Residual checks
// ---------------------------------------------------------------------------

using PhiFunction = std::function<double(double t, double y)>;

struct FdSteps2 {
    double t = 1e-4, y = 1e-4;
};

struct PhiDerivs {
    double f, ft, fy, fyy;
};

inline PhiDerivs phi_derivatives(const PhiFunction& phi, double t, double y, const FdSteps2& h) {
    const double f = phi(t, y);
    const double fyp = phi(t, y + h.y), fym = phi(t, y - h.y);
    return {f, (phi(t + h.t, y) - phi(t - h.t, y)) / (2 * h.t), (fyp - fym) / (2 * h.y),
            (fyp - 2 * f + fym) / (h.y * h.y)};
}

/// Residual of the Cauchy problem phi_t + A phi_y + beta^2 phi_yy / 2
/// + s (1-rho^2) beta^2 phi_y^2 / 2 - g, s from the convention.
template <PremiumModel P>
double pde_residual(const PhiFunction& phi, const CombinedMarket& m, const P& p, double t, double y,
                    const FdSteps2& h = {}, BackwardConvention conv = BackwardConvention::verified) {
    const PhiDerivs d = phi_derivatives(phi, t, y, h);
    const double beta = m.beta(t, y);
    const double A = m.alpha(t, y) - m.corr.rho * m.mu(t, y) * beta / m.sigma(t, y);
    const double k = 1.0 - m.corr.rho * m.corr.rho;
    return d.ft + A * d.fy + 0.5 * beta * beta * d.fyy + quadratic_sign(conv) * 0.5 * k * beta * beta * d.fy * d.fy -
           g_zero_vol(m, p, t, y);
}

/// The backward HJB generator applied to V = -exp(-gamma x - phi) at the
/// candidate optimal control (theta_bar, backward_pi), divided by V.
/// Zero when phi is the true value exponent.
template <PremiumModel P>
double backward_hjb_residual(const PhiFunction& phi, const CombinedMarket& m, const P& p, double t, double y,
                             const FdSteps2& h = {}) {
    const PhiDerivs d = phi_derivatives(phi, t, y, h);
    const LocalCoeffs c = local_coeffs(m, p, t, y);
    const double gam = m.gamma, beta = m.beta(t, y), alpha = m.alpha(t, y);
    const double pi = backward_pi(d.fy, m, t, y);
    // V-relative partials: V_x/V = -gamma, V_xx/V = gamma^2, V_y/V = -phi_y,
    // V_yy/V = phi_y^2 - phi_yy, V_xy/V = gamma phi_y, V_t/V = -phi_t.
    const double jump = c.theta >= 1.0 || c.lambda == 0.0
                            ? 0.0
                            : exp_moment(m.claims.dist, gam * (1.0 - c.theta)) - 1.0;
    const double rel = -d.ft + (c.a - c.b + pi * c.mu) * (-gam) + 0.5 * pi * pi * c.sigma * c.sigma * gam * gam +
                       m.corr.rho * pi * c.sigma * beta * gam * d.fy + alpha * (-d.fy) +
                       0.5 * beta * beta * (d.fy * d.fy - d.fyy) + c.lambda * jump;
    return rel;
}

}  // namespace fwdre
