#pragma once

// INI configuration: two built-in presets (exponential and quadratic
// intensity settings), overridden key by key from a file.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "backward.hpp"
#include "sim.hpp"

namespace fwdre {

struct BackwardSettings {
    double T = 1.0;
    double dt = 1e-4;  // ansatz RK4 step
    BackwardConvention convention = BackwardConvention::verified;
    std::size_t fk_paths = 20000;
    double fk_dt = 1e-3;
};

struct SweepSettings {
    double y_min = -0.3, y_max = 0.3;
    std::size_t ny = 61;
};

struct ExperimentConfig {
    std::string preset = "section6";
    CombinedMarket market;
    PremiumPrinciple premium;
    PenalizerSpec penalizer;
    BackwardSettings backward;
    SimConfig sim;
    SweepSettings sweep;
    bool emit_svg = false;
};

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

// Vasicek factor, affine drift, Scott volatility, exponential intensity,
// Gamma(1, claim_scale) claims, rp_na premia with loadings 0.3 / 0.5.
inline ExperimentConfig preset_section6(double claim_scale = 2.0) {
    ExperimentConfig c;
    c.preset = "section6";
    auto& m = c.market;
    m.factor = {Affine{0.2, -1.0}, Constant{0.1}, -0.2};
    m.stock = {Affine{0.08, 0.2}, Scott{0.27, 0.01, 0.0}, 1.0};
    // lambda0 = k exp(-y0) with k = 1
    m.claims = {Exponential{std::exp(0.2), 1.0}, ClaimSizeDistribution::gamma(1.0, claim_scale)};
    m.corr = build_correlation(0.0, 0.0, 0.0);
    m.gamma = 0.5;
    m.x0 = 0.0;
    m.r0 = 1.0;
    c.premium = {PremiumKind::rp_na, 0.3, 0.5};
    return c;
}

// Expected-value premia (0.4 / 0.7), constant volatility, quadratic
// intensity lambda0 (1 + y + y^2/2), exponential claims with mean 1.
inline ExperimentConfig preset_section6_1(double lambda0 = 1.0) {
    ExperimentConfig c;
    c.preset = "section6_1";
    auto& m = c.market;
    m.factor = {Affine{0.2, -1.0}, Constant{0.1}, -0.2};
    m.stock = {Affine{0.08, 0.2}, Scott{0.27, 0.01, 0.0}, 1.0};
    m.claims = {Quadratic{lambda0, lambda0, 0.5 * lambda0}, ClaimSizeDistribution::gamma(1.0, 1.0)};
    m.corr = build_correlation(0.0, 0.0, 0.0);
    m.gamma = 0.5;
    m.x0 = 0.0;
    m.r0 = 1.0;
    c.premium = {PremiumKind::expected_value, 0.4, 0.7};
    c.backward.dt = 1e-4;
    return c;
}

inline ExperimentConfig preset_by_name(const std::string& name) {
    if (name == "section6") return preset_section6();
    if (name == "section6_1") return preset_section6_1();
    throw ConfigError("unknown preset '" + name + "' (expected section6 or section6_1)");
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string s) {
    auto sp = [](unsigned char ch) { return std::isspace(ch) != 0; };
    while (!s.empty() && sp(s.back())) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && sp(s[i])) ++i;
    return s.substr(i);
}

inline double parse_number(const std::string& raw, const std::string& where) {
    const std::string s = trim(raw);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a number, got '" + s + "'");
    }
    if (used != s.size()) throw ConfigError(where + ": trailing characters in '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(trim(cur));
    return out;
}

}  // namespace detail

/// "0.1", "constant(0.1)", "affine(c0, c1)", "quadratic(c0, c1, c2)",
/// "exponential(scale, rate)", "scott(cbar, eps1, eps2)", "tabulated(y:v; y:v; ...)".
inline Coefficient parse_coefficient(const std::string& text, const std::string& where = "coefficient") {
    const std::string s = detail::trim(text);
    const auto open = s.find('(');
    if (open == std::string::npos) return Constant{detail::parse_number(s, where)};
    if (s.back() != ')') throw ConfigError(where + ": missing ')' in '" + s + "'");
    const std::string name = detail::trim(s.substr(0, open));
    const std::string body = s.substr(open + 1, s.size() - open - 2);

    if (name == "tabulated") {
        Tabulated tab;
        for (const auto& pair : detail::split(body, ';')) {
            const auto kv = detail::split(pair, ':');
            if (kv.size() != 2) throw ConfigError(where + ": tabulated knots are written y:v");
            tab.y.push_back(detail::parse_number(kv[0], where));
            tab.v.push_back(detail::parse_number(kv[1], where));
        }
        try {
            return Coefficient(std::move(tab));
        } catch (const DomainError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }

    std::vector<double> a;
    for (const auto& part : detail::split(body, ',')) a.push_back(detail::parse_number(part, where));
    auto need = [&](std::size_t n) {
        if (a.size() != n) throw ConfigError(where + ": " + name + " takes " + std::to_string(n) + " arguments");
    };
    if (name == "constant") return need(1), Constant{a[0]};
    if (name == "affine") return need(2), Affine{a[0], a[1]};
    if (name == "quadratic") return need(3), Quadratic{a[0], a[1], a[2]};
    if (name == "exponential") return need(2), Exponential{a[0], a[1]};
    if (name == "scott") return need(3), Scott{a[0], a[1], a[2]};
    throw ConfigError(where + ": unknown coefficient form '" + name + "'");
}

namespace detail {

using boost::property_tree::ptree;

class IniReader {
public:
    explicit IniReader(const ptree& t) : tree_(t) {}

    template <class F>
    void with(const std::string& key, F&& f) {
        if (auto v = tree_.get_optional<std::string>(ptree::path_type(key, '.'))) {
            used_.insert(key);
            f(trim(*v), key);
        }
    }
    void number(const std::string& key, double& out) {
        with(key, [&](const std::string& v, const std::string& k) { out = parse_number(v, k); });
    }
    void count(const std::string& key, std::size_t& out) {
        with(key, [&](const std::string& v, const std::string& k) {
            const double d = parse_number(v, k);
            if (d < 0 || d != std::floor(d)) throw ConfigError(k + ": expected a non-negative integer");
            out = std::size_t(d);
        });
    }
    void seed(const std::string& key, std::uint64_t& out) {
        with(key, [&](const std::string& v, const std::string& k) {
            try {
                std::size_t used = 0;
                out = std::stoull(v, &used);
                if (used != v.size()) throw ConfigError(k + ": bad seed");
            } catch (const std::logic_error&) {
                throw ConfigError(k + ": bad seed '" + v + "'");
            }
        });
    }
    void flag(const std::string& key, bool& out) {
        with(key, [&](const std::string& v, const std::string& k) {
            if (v == "true" || v == "1" || v == "yes") out = true;
            else if (v == "false" || v == "0" || v == "no") out = false;
            else throw ConfigError(k + ": expected true/false");
        });
    }
    void coefficient(const std::string& key, Coefficient& out) {
        with(key, [&](const std::string& v, const std::string& k) { out = parse_coefficient(v, k); });
    }

    void reject_unknown() const {
        for (const auto& [section, body] : tree_) {
            for (const auto& [key, value] : body) {
                const std::string full = section + "." + key;
                if (!used_.count(full)) throw ConfigError("unknown key '" + full + "'");
            }
            if (body.empty() && !body.data().empty())
                throw ConfigError("key '" + section + "' outside any section");
        }
    }

private:
    const ptree& tree_;
    std::set<std::string> used_;
};

}  // namespace detail

/// Parses INI text. [model] preset selects the defaults every other key overrides.
inline ExperimentConfig parse_config(const std::string& text) {
    boost::property_tree::ptree tree;
    std::istringstream is(text);
    try {
        boost::property_tree::ini_parser::read_ini(is, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("ini syntax: ") + e.what());
    }
    detail::IniReader r(tree);

    std::string preset = "section6";
    r.with("model.preset", [&](const std::string& v, const std::string&) { preset = v; });
    ExperimentConfig c = preset_by_name(preset);
    auto& m = c.market;

    r.coefficient("factor.alpha", m.factor.alpha);
    r.coefficient("factor.beta", m.factor.beta);
    r.number("factor.y0", m.factor.y0);

    r.coefficient("stock.mu", m.stock.mu);
    r.coefficient("stock.sigma", m.stock.sigma);
    r.number("stock.s0", m.stock.s0);
    if (!(m.stock.s0 > 0.0)) throw ConfigError("stock.s0 must be positive");

    r.coefficient("claims.lambda", m.claims.lambda);
    {
        const GammaClaims* g = m.claims.dist.as_gamma();
        double shape = g ? g->shape : 1.0, scale = g ? g->scale : 1.0;
        r.number("claims.shape", shape);
        r.number("claims.scale", scale);
        try {
            m.claims.dist = ClaimSizeDistribution::gamma(shape, scale);
        } catch (const DomainError& e) {
            throw ConfigError(std::string("claims: ") + e.what());
        }
    }

    {
        double rho = m.corr.rho, rhoS = m.corr.rhoS, rhoY = m.corr.rhoY;
        r.number("correlation.rho", rho);
        r.number("correlation.rhoS", rhoS);
        r.number("correlation.rhoY", rhoY);
        try {
            m.corr = build_correlation(rho, rhoS, rhoY);
        } catch (const Error& e) {
            throw ConfigError(std::string("correlation: ") + e.what());
        }
    }

    r.number("risk.gamma", m.gamma);
    r.number("risk.x0", m.x0);
    r.number("risk.r0", m.r0);
    if (!(m.gamma > 0.0)) throw ConfigError("risk.gamma must be positive");
    if (!(m.r0 > 0.0)) throw ConfigError("risk.r0 must be positive");

    r.with("premium.kind", [&](const std::string& v, const std::string&) { c.premium.kind = premium_kind_from_string(v); });
    r.number("premium.deltaI", c.premium.deltaI);
    r.number("premium.deltaR", c.premium.deltaR);
    if (c.premium.deltaI < 0.0 || c.premium.deltaR < 0.0) throw ConfigError("premium loadings must be >= 0");

    r.with("penalizer.kind", [&](const std::string& v, const std::string&) { c.penalizer.kind = h_kind_from_string(v); });
    r.number("penalizer.kbar", c.penalizer.kbar);

    r.number("backward.T", c.backward.T);
    r.number("backward.dt", c.backward.dt);
    r.with("backward.convention",
           [&](const std::string& v, const std::string&) { c.backward.convention = backward_convention_from_string(v); });
    r.count("backward.fk_paths", c.backward.fk_paths);
    r.number("backward.fk_dt", c.backward.fk_dt);

    r.number("sim.dt", c.sim.dt);
    r.number("sim.T", c.sim.T);
    r.count("sim.paths", c.sim.n_paths);
    r.seed("sim.seed", c.sim.seed);
    r.number("sim.thinning_margin", c.sim.thinning_margin);
    r.count("sim.branch_count", c.sim.branch_count);
    r.count("sim.batches", c.sim.batches);
    r.count("sim.record_every", c.sim.record_every);

    r.number("sweep.y_min", c.sweep.y_min);
    r.number("sweep.y_max", c.sweep.y_max);
    r.count("sweep.ny", c.sweep.ny);

    r.flag("output.svg", c.emit_svg);

    r.reject_unknown();
    c.sim.check();
    if (!(c.backward.T > 0.0) || !(c.backward.dt > 0.0) || !(c.backward.fk_dt > 0.0))
        throw ConfigError("backward T, dt and fk_dt must be positive");
    if (c.sweep.ny < 2 || !(c.sweep.y_max > c.sweep.y_min)) throw ConfigError("sweep needs ny >= 2 and y_max > y_min");
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Resolved configuration as INI (round-trips through parse_config). The seed is
/// written separately so the hash below does not depend on it.
inline std::string to_ini(const ExperimentConfig& c, bool with_seed = true) {
    std::ostringstream os;
    os << std::setprecision(17);
    const auto& m = c.market;
    const GammaClaims* g = m.claims.dist.as_gamma();
    os << "[model]\npreset = " << c.preset << "\n\n";
    os << "[factor]\nalpha = " << m.factor.alpha.describe() << "\nbeta = " << m.factor.beta.describe()
       << "\ny0 = " << m.factor.y0 << "\n\n";
    os << "[stock]\nmu = " << m.stock.mu.describe() << "\nsigma = " << m.stock.sigma.describe()
       << "\ns0 = " << m.stock.s0 << "\n\n";
    os << "[claims]\nlambda = " << m.claims.lambda.describe() << "\n";
    if (g) os << "shape = " << g->shape << "\nscale = " << g->scale << "\n";
    os << "\n[correlation]\nrho = " << m.corr.rho << "\nrhoS = " << m.corr.rhoS << "\nrhoY = " << m.corr.rhoY << "\n\n";
    os << "[risk]\ngamma = " << m.gamma << "\nx0 = " << m.x0 << "\nr0 = " << m.r0 << "\n\n";
    os << "[premium]\nkind = " << to_string(c.premium.kind) << "\ndeltaI = " << c.premium.deltaI
       << "\ndeltaR = " << c.premium.deltaR << "\n\n";
    os << "[penalizer]\nkind = " << to_string(c.penalizer.kind) << "\nkbar = " << c.penalizer.kbar << "\n\n";
    os << "[backward]\nT = " << c.backward.T << "\ndt = " << c.backward.dt
       << "\nconvention = " << to_string(c.backward.convention) << "\nfk_paths = " << c.backward.fk_paths
       << "\nfk_dt = " << c.backward.fk_dt << "\n\n";
    os << "[sim]\ndt = " << c.sim.dt << "\nT = " << c.sim.T << "\npaths = " << c.sim.n_paths << "\n";
    if (with_seed) os << "seed = " << c.sim.seed << "\n";
    os << "thinning_margin = " << c.sim.thinning_margin << "\nbranch_count = " << c.sim.branch_count
       << "\nbatches = " << c.sim.batches << "\nrecord_every = " << c.sim.record_every << "\n\n";
    os << "[sweep]\ny_min = " << c.sweep.y_min << "\ny_max = " << c.sweep.y_max << "\nny = " << c.sweep.ny << "\n\n";
    os << "[output]\nsvg = " << (c.emit_svg ? "true" : "false") << "\n";
    return os.str();
}

// FNV-1a over the seed-free canonical form.
inline std::string config_hash(const ExperimentConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : to_ini(c, false)) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

}  // namespace fwdre
