#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "errors.hpp"

namespace fwdre {

// Welford accumulator; add() order fixes the result bit for bit.
struct RunningStats {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / double(n);
        m2 += d * (v - mean);
    }
    double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
    double stderr_() const { return n > 0 ? std::sqrt(variance() / double(n)) : 0.0; }
};

struct Interval {
    double estimate = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double stderr_ = 0.0;
};

inline double t_quantile(double level, std::size_t dof) {
    if (dof == 0) return 0.0;
    const boost::math::students_t dist{static_cast<double>(dof)};
    return boost::math::quantile(dist, 0.5 + 0.5 * level);
}

// Batch-means CI of the mean of `samples` with `batches` contiguous batches.
inline Interval batch_means(const std::vector<double>& samples, std::size_t batches = 20, double level = 0.95) {
    const std::size_t n = samples.size();
    if (batches < 2 || n < batches) throw RangeError("batch means need at least two samples per batch count");
    const std::size_t per = n / batches;
    RunningStats bs;
    for (std::size_t k = 0; k < batches; ++k) {
        double s = 0.0;
        for (std::size_t i = k * per; i < (k + 1) * per; ++i) s += samples[i];
        bs.add(s / double(per));
    }
    Interval ci;
    ci.estimate = bs.mean;
    ci.stderr_ = bs.stderr_();
    const double half = t_quantile(level, batches - 1) * ci.stderr_;
    ci.lo = ci.estimate - half;
    ci.hi = ci.estimate + half;
    return ci;
}

}  // namespace fwdre
