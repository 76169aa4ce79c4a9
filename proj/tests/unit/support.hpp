#pragma once

#include <cstdint>
#include <random>

#include <fwdre/config.hpp>

namespace fwdre::testing {

// Hand-rolled generator for property tests; fixed seeds keep failures reproducible.
class Draw {
public:
    explicit Draw(std::uint64_t seed) : rng_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline ExperimentConfig section6(double scale = 2.0) { return preset_section6(scale); }
inline ExperimentConfig section6_1() { return preset_section6_1(); }
inline CombinedMarket section6_1_market() { return preset_section6_1().market; }

// Bisection on a monotone bracket; independent of the library's Newton.
template <class F>
double bisect(F&& f, double lo, double hi, int iters = 200) {
    double flo = f(lo);
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace fwdre::testing
