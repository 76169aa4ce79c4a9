#pragma once

// Monte Carlo of (Y, S, X, P) with doubly stochastic claims, plus the
// diagnostics built on it: martingale check of the forward value, claim
// compensator, admissibility, and conditional certainty equivalents.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "backward.hpp"
#include "forward.hpp"
#include "rng.hpp"
#include "stats.hpp"

namespace fwdre {

struct SimConfig {
    double dt = 1e-3;
    double T = 1.0;
    std::size_t n_paths = 1000;
    std::uint64_t seed = 1;
    double thinning_margin = 1.5;
    std::size_t branch_count = 200;
    std::size_t batches = 20;
    // Bundle storage: every record_every-th step (the final step is always kept).
    std::size_t record_every = 1;
    bool record_Y = true, record_S = true, record_X = true, record_P = true, record_strategy = true;
    bool record_claims = false;
    bool validate = true;
    EvalGrid validation_grid{0.0, 1.0, 5, -0.3, 0.3, 13};

    void check() const {
        if (!(dt > 0.0) || !(T > 0.0)) throw ConfigError("dt and T must be positive");
        if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
        if (!(thinning_margin >= 1.0)) throw ConfigError("thinning_margin must be >= 1");
        if (record_every < 1) throw ConfigError("record_every must be >= 1");
    }
    std::size_t steps() const { return std::max<std::size_t>(1, std::size_t(std::llround(T / dt))); }
};

// What a feedback rule sees at the left end of a step.
struct StepState {
    double t = 0.0, x = 0.0, y = 0.0;
    double theta_bar = 0.0;
    const LocalCoeffs* coeffs = nullptr;  // evaluated at (t, y, theta_bar)
};

struct StrategyPolicy {
    std::function<double(const StepState&)> theta_rule;
    std::function<double(const StepState&)> pi_rule;
    std::string label;
};

inline StrategyPolicy forward_optimal_policy(const CombinedMarket& m, const PenalizerSpec& pen = {}) {
    StrategyPolicy pol;
    pol.label = std::string("forward_optimal_") + to_string(pen.kind);
    pol.theta_rule = [](const StepState& s) { return s.theta_bar; };
    pol.pi_rule = [&m, pen](const StepState& s) { return optimal_pi(m, *s.coeffs, eval_h(pen, m, *s.coeffs, s.x)); };
    return pol;
}

inline StrategyPolicy constant_policy(double theta, double pi, std::string label = "constant") {
    if (!(theta >= 0.0 && theta <= 1.0)) throw RangeError("constant protection level outside [0, 1]");
    StrategyPolicy pol;
    pol.label = std::move(label);
    pol.theta_rule = [theta](const StepState&) { return theta; };
    pol.pi_rule = [pi](const StepState&) { return pi; };
    return pol;
}

inline StrategyPolicy backward_optimal_policy(const CombinedMarket& m, const QuadraticValueCoeffs& c) {
    StrategyPolicy pol;
    pol.label = "backward_optimal";
    pol.theta_rule = [](const StepState& s) { return s.theta_bar; };
    pol.pi_rule = [&m, &c](const StepState& s) { return backward_pi(c, m, s.t, s.y); };
    return pol;
}

struct ClaimMark {
    double t = 0.0;
    double z = 0.0;
};

struct PathBundle {
    std::uint64_t seed = 0;
    std::string policy_label;
    double gamma = 0.0;
    std::vector<double> t_grid;  // recorded nodes
    std::size_t n_paths = 0;
    // [path * t_grid.size() + node]; empty when not recorded
    std::vector<double> Y, S, X, P, theta, pi;
    std::vector<std::vector<ClaimMark>> claims;
    // per path
    std::vector<double> X_T, P_T, int_lambda, admissibility;
    std::vector<std::size_t> N_T;

    std::size_t nodes() const { return t_grid.size(); }
    double at(const std::vector<double>& f, std::size_t path, std::size_t node) const {
        return f[path * nodes() + node];
    }
};

namespace detail {

struct PathState {
    double t = 0.0, y = 0.0, logs = 0.0, x = 0.0, p = 0.0;
    std::optional<double> warm;  // last interior protection level
    double int_lambda = 0.0;
    std::size_t n_claims = 0;
    double adm = 0.0;
};

struct StepControls {
    LocalCoeffs c;
    double h = 0.0, g = 0.0;
    double theta = 0.0, pi = 0.0, b = 0.0;
};

template <PremiumModel P>
class PathEngine {
public:
    PathEngine(const CombinedMarket& m, const P& prem, const StrategyPolicy& pol, const PenalizerSpec& pen,
               double margin)
        : m_(m), prem_(prem), pol_(pol), pen_(pen), margin_(margin) {}

    StepControls controls(PathState& s) const {
        ThetaSolverOptions opt;
        opt.verify_concavity = false;
        opt.guess = s.warm;
        const ReinsuranceSolution sol = optimal_theta(m_, prem_, s.t, s.y, opt);
        if (sol.region == Region::interior) s.warm = sol.theta;

        StepControls k;
        k.c = local_coeffs_at(m_, prem_, s.t, s.y, sol.theta);
        k.h = eval_h(pen_, m_, k.c, s.x);
        k.g = g_from_h(m_, k.c, k.h);
        const StepState st{s.t, s.x, s.y, sol.theta, &k.c};
        k.theta = pol_.theta_rule(st);
        k.pi = pol_.pi_rule(st);
        if (!(k.theta >= 0.0 && k.theta <= 1.0)) throw RangeError("policy protection level outside [0, 1]");
        if (!std::isfinite(k.pi)) throw DomainError("policy investment is not finite");
        k.b = k.theta == sol.theta ? k.c.b : prem_.reinsurance(m_, s.t, s.y, k.theta);
        return k;
    }

    // Advances s over [s.t, t_next] with controls k frozen at the left end.
    template <class OnClaim>
    void step(PathState& s, double t_next, const StepControls& k, std::mt19937_64& rng,
              std::normal_distribution<double>& nd, OnClaim&& on_claim) const {
        const double h = t_next - s.t, sh = std::sqrt(h);
        const double z0 = nd(rng), z1 = nd(rng), z2 = nd(rng);
        const auto& L = m_.corr.chol;
        const double dwy = sh * L[0][0] * z0;
        const double dws = sh * (L[1][0] * z0 + L[1][1] * z1);
        const double dwp = sh * (L[2][0] * z0 + L[2][1] * z1 + L[2][2] * z2);

        const double mu = k.c.mu, sig = k.c.sigma;
        const double y0 = s.y;
        const double y1 = y0 + m_.alpha(s.t, y0) * h + m_.beta(s.t, y0) * dwy;
        s.logs += (mu - 0.5 * sig * sig) * h + sig * dws;
        s.x += (k.c.a - k.b + k.pi * mu) * h + k.pi * sig * dws;
        s.p += k.g * h + k.h * dwp;
        s.adm += (std::abs(k.pi) * std::abs(mu) + k.pi * k.pi * sig * sig) * h;

        const double lam_l = k.c.lambda, lam_r = m_.lambda(t_next, y1);
        s.int_lambda += 0.5 * (lam_l + lam_r) * h;
        const double bound = margin_ * std::max(lam_l, lam_r);
        if (bound > 0.0) {
            std::exponential_distribution<double> ex(bound);
            std::uniform_real_distribution<double> un(0.0, 1.0);
            for (double tau = ex(rng); tau < h; tau += ex(rng)) {
                const double lt = m_.lambda(s.t + tau, y0 + (tau / h) * (y1 - y0));
                if (lt > bound) throw ThinningBoundExceeded("intensity exceeded the thinning bound; reduce dt");
                if (un(rng) * bound <= lt) {
                    const double z = m_.claims.dist.sample(rng);
                    s.x -= (1.0 - k.theta) * z;
                    ++s.n_claims;
                    on_claim(t_next, z);
                }
            }
        }
        s.y = y1;
        s.t = t_next;
    }

private:
    const CombinedMarket& m_;
    const P& prem_;
    const StrategyPolicy& pol_;
    const PenalizerSpec& pen_;
    double margin_;
};

template <PremiumModel P>
void validate_for_simulation(const CombinedMarket& m, const P& prem, const SimConfig& cfg) {
    if (!cfg.validate) return;
    const ValidationReport rep = validate_standing_assumptions(m, cfg.validation_grid);
    if (!rep.passed()) throw AssumptionViolation("standing assumptions fail:\n" + rep.summary());
    bool bad = false;
    cfg.validation_grid.for_each([&](double t, double y) {
        if (!bad && m.lambda(t, y) != 0.0 && concavity_check(m, prem, t, y) == Verdict::fails) bad = true;
    });
    if (bad) throw ConcavityViolation("reinsurance objective not strictly concave on the validation grid");
}

}  // namespace detail

/// Simulates cfg.n_paths paths of the market under `policy`. P uses the
/// penalizer `pen`. Deterministic given (cfg.seed, path index).
template <PremiumModel P>
PathBundle simulate(const CombinedMarket& m, const P& prem, const StrategyPolicy& policy,
                    const PenalizerSpec& pen, const SimConfig& cfg) {
    cfg.check();
    detail::validate_for_simulation(m, prem, cfg);
    const std::size_t n = cfg.steps();
    const double h = cfg.T / double(n);

    PathBundle out;
    out.seed = cfg.seed;
    out.policy_label = policy.label;
    out.gamma = m.gamma;
    out.n_paths = cfg.n_paths;
    std::vector<std::size_t> rec_steps;
    for (std::size_t k = 0; k <= n; ++k)
        if (k % cfg.record_every == 0 || k == n) rec_steps.push_back(k);
    for (std::size_t k : rec_steps) out.t_grid.push_back(double(k) * h);
    const std::size_t nodes = rec_steps.size();
    auto alloc = [&](bool on, std::vector<double>& v) {
        if (on) v.assign(cfg.n_paths * nodes, 0.0);
    };
    alloc(cfg.record_Y, out.Y);
    alloc(cfg.record_S, out.S);
    alloc(cfg.record_X, out.X);
    alloc(cfg.record_P, out.P);
    alloc(cfg.record_strategy, out.theta);
    alloc(cfg.record_strategy, out.pi);
    if (cfg.record_claims) out.claims.resize(cfg.n_paths);
    for (auto* v : {&out.X_T, &out.P_T, &out.int_lambda, &out.admissibility}) v->resize(cfg.n_paths);
    out.N_T.resize(cfg.n_paths);

    detail::PathEngine<P> eng(m, prem, policy, pen, cfg.thinning_margin);
    for (std::size_t path = 0; path < cfg.n_paths; ++path) {
        auto rng = path_rng(cfg.seed, path);
        std::normal_distribution<double> nd;
        detail::PathState s;
        s.y = m.factor.y0;
        s.logs = std::log(m.stock.s0);
        s.x = m.x0;
        std::size_t node = 0;
        for (std::size_t k = 0;; ++k) {
            const detail::StepControls ctl = eng.controls(s);
            if (node < nodes && rec_steps[node] == k) {
                const std::size_t i = path * nodes + node;
                if (cfg.record_Y) out.Y[i] = s.y;
                if (cfg.record_S) out.S[i] = std::exp(s.logs);
                if (cfg.record_X) out.X[i] = s.x;
                if (cfg.record_P) out.P[i] = s.p;
                if (cfg.record_strategy) {
                    out.theta[i] = ctl.theta;
                    out.pi[i] = ctl.pi;
                }
                ++node;
            }
            if (k == n) break;
            eng.step(s, double(k + 1) * h, ctl, rng, nd, [&](double t, double z) {
                if (cfg.record_claims) out.claims[path].push_back({t, z});
            });
        }
        out.X_T[path] = s.x;
        out.P_T[path] = s.p;
        out.int_lambda[path] = s.int_lambda;
        out.admissibility[path] = s.adm;
        out.N_T[path] = s.n_claims;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Diagnostics on a bundle
// ---------------------------------------------------------------------------

struct MartingaleReport {
    std::vector<double> t, mean, stderr_;
    // max over nodes of |mean_t - mean_0| / stderr_t
    double flatness = 0.0;
    // (mean_0 - mean_T) / stderr_T; positive when the value drifts down
    double terminal_drop_z = 0.0;
};

/// Per-node sample mean of U_t = -exp(-gamma X_t - P_t).
inline MartingaleReport martingale_diagnostic(const PathBundle& b, double gamma) {
    if (b.X.empty() || b.P.empty()) throw ConfigError("martingale diagnostic needs recorded X and P");
    MartingaleReport r;
    for (std::size_t k = 0; k < b.nodes(); ++k) {
        RunningStats st;
        for (std::size_t p = 0; p < b.n_paths; ++p) st.add(forward_value(gamma, b.at(b.X, p, k), b.at(b.P, p, k)));
        r.t.push_back(b.t_grid[k]);
        r.mean.push_back(st.mean);
        r.stderr_.push_back(st.stderr_());
    }
    for (std::size_t k = 1; k < r.t.size(); ++k) {
        const double dev = std::abs(r.mean[k] - r.mean[0]);
        if (r.stderr_[k] > 0.0) r.flatness = std::max(r.flatness, dev / r.stderr_[k]);
        else if (dev > 0.0) r.flatness = kInf;
    }
    const double se = r.stderr_.back();
    const double drop = r.mean.front() - r.mean.back();
    r.terminal_drop_z = se > 0.0 ? drop / se : (drop == 0.0 ? 0.0 : std::copysign(kInf, drop));
    return r;
}

/// Mean of N_T - int_0^T lambda dt with its standard error.
inline Interval compensator_check(const PathBundle& b) {
    RunningStats st;
    for (std::size_t p = 0; p < b.n_paths; ++p) st.add(double(b.N_T[p]) - b.int_lambda[p]);
    const double se = st.stderr_();
    return {st.mean, st.mean - 3.0 * se, st.mean + 3.0 * se, se};
}

struct AdmissibilityStats {
    double mean_integral = 0.0, max_integral = 0.0;
    double mean_terminal_utility_weight = 0.0;  // E[exp(-gamma X_T - P_T)]
    bool finite = true;
};

inline AdmissibilityStats admissibility_stats(const PathBundle& b) {
    AdmissibilityStats a;
    RunningStats si, sw;
    for (std::size_t p = 0; p < b.n_paths; ++p) {
        si.add(b.admissibility[p]);
        a.max_integral = std::max(a.max_integral, b.admissibility[p]);
        sw.add(std::exp(-b.gamma * b.X_T[p] - b.P_T[p]));
    }
    a.mean_integral = si.mean;
    a.mean_terminal_utility_weight = sw.mean;
    a.finite = std::isfinite(si.mean) && std::isfinite(sw.mean) && std::isfinite(a.max_integral);
    return a;
}

/// Columnar dump: t,path_id,Y,S,X,P,theta,pi (empty cells for unrecorded fields).
inline void write_path_csv(std::ostream& os, const PathBundle& b, std::size_t max_paths = SIZE_MAX) {
    os << "t,path_id,Y,S,X,P,theta,pi\n";
    auto cell = [&](const std::vector<double>& f, std::size_t p, std::size_t k) {
        os << ',';
        if (!f.empty()) os << b.at(f, p, k);
    };
    const std::size_t np = std::min(max_paths, b.n_paths);
    for (std::size_t p = 0; p < np; ++p)
        for (std::size_t k = 0; k < b.nodes(); ++k) {
            os << b.t_grid[k] << ',' << p;
            cell(b.Y, p, k);
            cell(b.S, p, k);
            cell(b.X, p, k);
            cell(b.P, p, k);
            cell(b.theta, p, k);
            cell(b.pi, p, k);
            os << '\n';
        }
}

// ---------------------------------------------------------------------------
// Conditional certainty equivalents (zero-volatility forward vs static)
// ---------------------------------------------------------------------------

struct CCEPoint {
    double t = 0.0;
    Interval forward;     // C_t
    Interval static_;     // C~_t
    Interval cond_mean;   // E[X_T | F_t]
    Interval risk_aversion;  // R_t = E[X_T | F_t] - C_t
    // U_0^{-1}(E[U_t(C_t)]): equals C_0 up to noise (time consistency)
    Interval time_consistency;
    std::size_t outer_paths = 0, branches = 0;
};

struct CCEReport {
    std::vector<CCEPoint> points;
    std::string policy_label;
};

namespace detail {

// -(1/gamma) ln(mean), mapped through an interval on the mean; the map is decreasing.
inline Interval inverse_utility(const Interval& m, double shift, double gamma) {
    auto f = [&](double v) { return v > 0.0 ? -(std::log(v) + shift) / gamma : kInf; };
    Interval out;
    out.estimate = f(m.estimate);
    out.lo = f(m.hi);
    out.hi = f(m.lo);
    out.stderr_ = m.estimate > 0.0 ? m.stderr_ / (gamma * m.estimate) : kInf;
    return out;
}

inline Interval mean_interval(const std::vector<double>& v, std::size_t batches) {
    if (v.size() >= 2 * batches) return batch_means(v, batches);
    RunningStats st;
    for (double x : v) st.add(x);
    const double half = t_quantile(0.95, st.n > 1 ? st.n - 1 : 1) * st.stderr_();
    return {st.mean, st.mean - half, st.mean + half, st.stderr_()};
}

}  // namespace detail

/// CCE series at the requested times under `policy`, with the zero-volatility
/// penalizer. t = 0 is plain Monte Carlo over cfg.n_paths paths; t > 0 nests
/// cfg.branch_count sub-paths under each of cfg.n_paths outer paths.
template <PremiumModel P>
CCEReport cce_report(const CombinedMarket& m, const P& prem, const StrategyPolicy& policy, const SimConfig& cfg,
                     const std::vector<double>& t_nodes) {
    cfg.check();
    detail::validate_for_simulation(m, prem, cfg);
    const PenalizerSpec zero_vol{};
    const std::size_t n = cfg.steps();
    const double h = cfg.T / double(n);
    const double gam = m.gamma, shift = -gam * m.x0;

    std::vector<std::size_t> node_step;
    for (double t : t_nodes) {
        if (!(t >= 0.0 && t <= cfg.T + 1e-12)) throw RangeError("CCE time outside [0, T]");
        node_step.push_back(std::min<std::size_t>(n, std::size_t(std::llround(t / h))));
    }

    CCEReport rep;
    rep.policy_label = policy.label;
    detail::PathEngine<P> eng(m, prem, policy, zero_vol, cfg.thinning_margin);
    auto no_claim = [](double, double) {};

    // Runs a path from state s to T; returns the terminal state.
    auto run_to_end = [&](detail::PathState s, std::size_t k0, std::mt19937_64& rng) {
        std::normal_distribution<double> nd;
        for (std::size_t k = k0; k < n; ++k) {
            const auto ctl = eng.controls(s);
            eng.step(s, double(k + 1) * h, ctl, rng, nd, no_claim);
        }
        return s;
    };

    for (std::size_t j = 0; j < t_nodes.size(); ++j) {
        const std::size_t kj = node_step[j];
        CCEPoint pt;
        pt.t = double(kj) * h;
        std::vector<double> ef, es, xt, cf, cs, ra, tc;
        if (kj == 0) {
            pt.outer_paths = cfg.n_paths;
            pt.branches = 1;
            for (std::size_t path = 0; path < cfg.n_paths; ++path) {
                auto rng = path_rng(cfg.seed, path);
                detail::PathState s0;
                s0.y = m.factor.y0;
                s0.logs = std::log(m.stock.s0);
                s0.x = m.x0;
                const auto s = run_to_end(s0, 0, rng);
                ef.push_back(std::exp(-gam * s.x - s.p - shift));
                es.push_back(std::exp(-gam * s.x - shift));
                xt.push_back(s.x);
            }
            pt.forward = detail::inverse_utility(detail::mean_interval(ef, cfg.batches), shift, gam);
            pt.static_ = detail::inverse_utility(detail::mean_interval(es, cfg.batches), shift, gam);
            pt.cond_mean = detail::mean_interval(xt, cfg.batches);
            pt.time_consistency = pt.forward;
            pt.risk_aversion = {pt.cond_mean.estimate - pt.forward.estimate,
                                pt.cond_mean.lo - pt.forward.hi, pt.cond_mean.hi - pt.forward.lo,
                                std::hypot(pt.cond_mean.stderr_, pt.forward.stderr_)};
            rep.points.push_back(pt);
            continue;
        }

        pt.outer_paths = cfg.n_paths;
        pt.branches = kj == n ? 1 : cfg.branch_count;
        for (std::size_t path = 0; path < cfg.n_paths; ++path) {
            auto rng = path_rng(cfg.seed, path);
            std::normal_distribution<double> nd;
            detail::PathState s;
            s.y = m.factor.y0;
            s.logs = std::log(m.stock.s0);
            s.x = m.x0;
            for (std::size_t k = 0; k < kj; ++k) {
                const auto ctl = eng.controls(s);
                eng.step(s, double(k + 1) * h, ctl, rng, nd, no_claim);
            }
            double c_f, c_s, mean_x;
            if (kj == n) {
                c_f = c_s = mean_x = s.x;
            } else {
                // Conditional expectations over branches, exponents shifted by the node state.
                const double sh = -gam * s.x;
                RunningStats bf, bs, bx;
                for (std::size_t br = 0; br < cfg.branch_count; ++br) {
                    auto brng = branch_rng(cfg.seed, path, j, br);
                    const auto e = run_to_end(s, kj, brng);
                    bf.add(std::exp(-gam * e.x - (e.p - s.p) - sh));
                    bs.add(std::exp(-gam * e.x - sh));
                    bx.add(e.x);
                }
                c_f = -(std::log(bf.mean) + sh) / gam;
                c_s = -(std::log(bs.mean) + sh) / gam;
                mean_x = bx.mean;
            }
            cf.push_back(c_f);
            cs.push_back(c_s);
            xt.push_back(mean_x);
            ra.push_back(mean_x - c_f);
            tc.push_back(std::exp(-gam * c_f - s.p - shift));
        }
        pt.forward = detail::mean_interval(cf, cfg.batches);
        pt.static_ = detail::mean_interval(cs, cfg.batches);
        pt.cond_mean = detail::mean_interval(xt, cfg.batches);
        pt.risk_aversion = detail::mean_interval(ra, cfg.batches);
        pt.time_consistency = detail::inverse_utility(detail::mean_interval(tc, cfg.batches), shift, gam);
        rep.points.push_back(pt);
    }
    return rep;
}

template <PremiumModel P>
Interval cce_forward(const CombinedMarket& m, const P& prem, const StrategyPolicy& policy, const SimConfig& cfg,
                     double t) {
    return cce_report(m, prem, policy, cfg, {t}).points.front().forward;
}

template <PremiumModel P>
Interval cce_static(const CombinedMarket& m, const P& prem, const StrategyPolicy& policy, const SimConfig& cfg,
                    double t) {
    return cce_report(m, prem, policy, cfg, {t}).points.front().static_;
}

/// R_t = E[X_T | F_t] - C_t per node of a CCE report.
inline std::vector<Interval> risk_aversion_process(const CCEReport& r) {
    std::vector<Interval> out;
    for (const auto& p : r.points) out.push_back(p.risk_aversion);
    return out;
}

// ---------------------------------------------------------------------------
// Sufficient conditions for the ordering of C_t and C~_t
// ---------------------------------------------------------------------------

struct ConditionResult {
    bool verifiable = true;
    bool holds = false;
    double worst_margin = kInf;  // min over the grid of (rhs slack); >= 0 iff holds
    double worst_t = 0.0, worst_y = 0.0;
    std::string note;
};

struct OrderingReport {
    // Sharpe^2 >= -2 gamma a + 2 min{b(1), lambda (E e^{gamma Z} - 1)}, as printed
    ConditionResult cond_i_printed;
    // same with gamma b(1), the version the proof uses
    ConditionResult cond_i_proof;
    // g <= 0 everywhere: the exact pointwise statement behind cond_i
    ConditionResult g_nonpositive;
    // a < K/gamma and Sharpe^2 <= 2(-gamma a + K), K = inf f(t, y, theta_bar)
    ConditionResult cond_ii;
    ConditionResult g_positive;
    double K = kInf;

    // +1: forward CCE dominates, -1: static dominates, 0: undecided
    int implied_order() const {
        if (cond_ii.holds || g_positive.holds) return 1;
        if (cond_i_proof.holds || g_nonpositive.holds) return -1;
        return 0;
    }
};

template <PremiumModel P>
OrderingReport cce_ordering_conditions(const CombinedMarket& m, const P& prem, const EvalGrid& grid) {
    OrderingReport rep;
    auto track = [](ConditionResult& r, double margin, double t, double y) {
        if (margin < r.worst_margin) {
            r.worst_margin = margin;
            r.worst_t = t;
            r.worst_y = y;
        }
    };
    const double gam = m.gamma;
    const bool jump_finite = gam < m.claims.mgf_bound();
    if (!jump_finite) {
        rep.cond_i_printed.verifiable = rep.cond_i_proof.verifiable = false;
        rep.cond_i_printed.note = rep.cond_i_proof.note = "E[exp(gamma Z)] diverges";
    }

    grid.for_each([&](double t, double y) {
        const LocalCoeffs c = local_coeffs(m, prem, t, y);
        const double sr2 = (c.mu / c.sigma) * (c.mu / c.sigma);
        const double g = g_zero_vol(m, c);
        rep.K = std::min(rep.K, c.phi);
        track(rep.g_nonpositive, -g, t, y);
        track(rep.g_positive, g, t, y);
        if (jump_finite) {
            const double jump = c.lambda * (exp_moment(m.claims.dist, gam) - 1.0);
            const double b1 = prem.reinsurance(m, t, y, 1.0);
            track(rep.cond_i_printed, sr2 - (-2 * gam * c.a + 2 * std::min(b1, jump)), t, y);
            track(rep.cond_i_proof, sr2 - (-2 * gam * c.a + 2 * std::min(gam * b1, jump)), t, y);
        }
    });
    // g_positive needs strict positivity
    rep.g_positive.holds = rep.g_positive.worst_margin > 0.0;
    rep.g_nonpositive.holds = rep.g_nonpositive.worst_margin >= 0.0;
    if (jump_finite) {
        rep.cond_i_printed.holds = rep.cond_i_printed.worst_margin >= 0.0;
        rep.cond_i_proof.holds = rep.cond_i_proof.worst_margin >= 0.0;
    }

    double premium_slack = kInf, sharpe_slack = kInf;
    grid.for_each([&](double t, double y) {
        const double a = prem.insurance(m, t, y);
        const double sr = m.sharpe(t, y);
        premium_slack = std::min(premium_slack, rep.K / gam - a);
        sharpe_slack = std::min(sharpe_slack, 2 * (-gam * a + rep.K) - sr * sr);
        track(rep.cond_ii, std::min(rep.K / gam - a, 2 * (-gam * a + rep.K) - sr * sr), t, y);
    });
    rep.cond_ii.holds = premium_slack > 0.0 && sharpe_slack >= 0.0;
    return rep;
}

}  // namespace fwdre
