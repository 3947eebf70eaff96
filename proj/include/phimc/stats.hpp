#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "phimc/errors.hpp"

namespace phimc::stats {

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw NumericError("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double stddev(std::span<const double> xs) {
    const double m = mean(xs);
    if (xs.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double central_moment(std::span<const double> xs, int k) {
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += std::pow(x - m, k);
    return s / static_cast<double>(xs.size());
}

inline double skewness(std::span<const double> xs) {
    const double m2 = central_moment(xs, 2);
    return m2 > 0.0 ? central_moment(xs, 3) / std::pow(m2, 1.5) : 0.0;
}

inline double excess_kurtosis(std::span<const double> xs) {
    const double m2 = central_moment(xs, 2);
    return m2 > 0.0 ? central_moment(xs, 4) / (m2 * m2) - 3.0 : 0.0;
}

/// Pearson correlation; 0 when either side is constant.
inline double correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.empty()) throw NumericError("correlation needs equal non-empty samples");
    const double mx = mean(xs), my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::size_t> counts;

    double bin_width() const { return counts.empty() ? 0.0 : (hi - lo) / static_cast<double>(counts.size()); }
    double bin_center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
};

/// Fixed-bin histogram on [lo, hi]; values outside are clamped into the edge bins.
inline Histogram histogram(std::span<const double> xs, double lo, double hi, std::size_t bins) {
    if (bins == 0 || !(hi > lo)) throw NumericError("histogram needs bins > 0 and hi > lo");
    Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
    for (double x : xs) {
        auto i = static_cast<long long>(std::floor((x - lo) / (hi - lo) * static_cast<double>(bins)));
        i = std::clamp<long long>(i, 0, static_cast<long long>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(i)];
    }
    return h;
}

/// Symmetric histogram around zero wide enough for every value.
inline Histogram symmetric_histogram(std::span<const double> xs, std::size_t bins) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::abs(x));
    if (m == 0.0) m = 1e-12;
    return histogram(xs, -m, m, bins);
}

}  // namespace phimc::stats
