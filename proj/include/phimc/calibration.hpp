#pragma once

// Fitting device constants from sweep data.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "phimc/csv.hpp"
#include "phimc/dense.hpp"
#include "phimc/errors.hpp"

namespace phimc {

struct SweepRecord {
    double stimulus = 0.0;  ///< pJ or ns
    double response = 0.0;  ///< transmittance delta (absolute) or relative change
};

/// Relative change (T - T_min) / T_min from an absolute delta. T_min must be given explicitly.
inline double to_relative_delta(double absolute_delta, double t_min) {
    if (!(t_min > 0.0)) throw ConfigError("T_min must be > 0");
    return absolute_delta / t_min;
}

inline double to_absolute_delta(double relative_delta, double t_min) {
    if (!(t_min > 0.0)) throw ConfigError("T_min must be > 0");
    return relative_delta * t_min;
}

struct LinearResponseFit {
    double e_threshold = 0.0;
    double e_linear_max = 0.0;
    double t_prog_max = 0.0;
    double slope = 0.0;     ///< per pJ
    double residual = 0.0;  ///< RMS over all points of the clamped-affine model
    std::size_t linear_points = 0;
    std::size_t tail_points = 0;  ///< saturated points excluded from the line
};

namespace detail {

inline std::vector<SweepRecord> sorted_checked(std::vector<SweepRecord> recs, std::size_t min_points) {
    if (recs.size() < min_points) throw NumericError("fit needs at least " + std::to_string(min_points) + " records");
    for (const auto& r : recs)
        if (!std::isfinite(r.stimulus) || !std::isfinite(r.response)) throw NumericError("fit records must be finite");
    std::stable_sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) { return a.stimulus < b.stimulus; });
    if (recs.front().stimulus == recs.back().stimulus) throw NumericError("degenerate sweep: all stimuli equal");
    return recs;
}

/// Prefix sums for O(1) least-squares lines over index ranges.
struct Sums {
    std::vector<double> n, x, y, xx, xy, yy;

    explicit Sums(const std::vector<SweepRecord>& r) : n(r.size() + 1), x(n), y(n), xx(n), xy(n), yy(n) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double a = r[i].stimulus, b = r[i].response;
            n[i + 1] = n[i] + 1;
            x[i + 1] = x[i] + a;
            y[i + 1] = y[i] + b;
            xx[i + 1] = xx[i] + a * a;
            xy[i + 1] = xy[i] + a * b;
            yy[i + 1] = yy[i] + b * b;
        }
    }

    struct Line {
        double slope = 0.0, intercept = 0.0, sse = 0.0;
        bool ok = false;
    };

    Line line(std::size_t lo, std::size_t hi) const {
        const double k = n[hi] - n[lo], sx = x[hi] - x[lo], sy = y[hi] - y[lo];
        const double sxx = (xx[hi] - xx[lo]) - sx * sx / k;
        const double sxy = (xy[hi] - xy[lo]) - sx * sy / k;
        const double syy = (yy[hi] - yy[lo]) - sy * sy / k;
        Line l;
        if (k < 2 || !(sxx > 0.0)) return l;
        l.slope = sxy / sxx;
        l.intercept = (sy - l.slope * sx) / k;
        l.sse = std::max(0.0, syy - l.slope * sxy);
        l.ok = true;
        return l;
    }

    double sse_about_zero(std::size_t lo, std::size_t hi) const { return yy[hi] - yy[lo]; }

    double sse_about_mean(std::size_t lo, std::size_t hi) const {
        const double k = n[hi] - n[lo];
        if (k == 0) return 0.0;
        const double sy = y[hi] - y[lo];
        return std::max(0.0, (yy[hi] - yy[lo]) - sy * sy / k);
    }
};

}  // namespace detail

/// Fits zero below threshold, a line above it and a flat saturated tail.
/// Every split of the sorted sweep into (floor, line, tail) is scored by total
/// squared error; a candidate tail is accepted only if its own slope is below
/// 20% of the line slope and has at least two points.
inline LinearResponseFit fit_linear_response(std::vector<SweepRecord> records) {
    const auto r = detail::sorted_checked(std::move(records), 3);
    const std::size_t n = r.size();
    const detail::Sums sums(r);
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    detail::Sums::Line bl;
    for (std::size_t i = 0; i + 2 <= n; ++i) {
        for (std::size_t j = i + 2; j <= n; ++j) {
            const auto l = sums.line(i, j);
            if (!l.ok || !(l.slope > 0.0)) continue;
            if (n - j == 1) continue;  // one point cannot show a flat tail
            if (n - j >= 2) {
                const auto tail = sums.line(j, n);
                if (tail.ok && std::abs(tail.slope) >= 0.2 * l.slope) continue;
            }
            const double sse = sums.sse_about_zero(0, i) + l.sse + sums.sse_about_mean(j, n);
            if (sse < best * (1.0 - 1e-12) - 1e-300) {
                best = sse;
                bi = i;
                bj = j;
                bl = l;
            }
        }
    }
    if (!bl.ok) throw NumericError("no rising linear region found in sweep");

    LinearResponseFit fit;
    fit.slope = bl.slope;
    fit.e_threshold = -bl.intercept / bl.slope;
    fit.linear_points = bj - bi;
    fit.tail_points = n - bj;
    if (fit.tail_points > 0) {
        fit.t_prog_max = (sums.y[n] - sums.y[bj]) / static_cast<double>(fit.tail_points);
        fit.e_linear_max = (fit.t_prog_max - bl.intercept) / bl.slope;
    } else {
        fit.e_linear_max = r.back().stimulus;
        fit.t_prog_max = bl.slope * fit.e_linear_max + bl.intercept;
    }
    double sse = 0.0;
    for (const auto& p : r) {
        const double model = std::clamp(bl.slope * p.stimulus + bl.intercept, 0.0, fit.t_prog_max);
        sse += (p.response - model) * (p.response - model);
    }
    fit.residual = std::sqrt(sse / static_cast<double>(n));
    return fit;
}

struct WidthSaturationFit {
    double tau = 0.0;               ///< ns
    double amplitude = 0.0;         ///< response at infinite width
    double saturation_width = 0.0;  ///< ns, where the curve reaches 99%
    double residual = 0.0;          ///< RMS
    double relative_residual = 0.0; ///< RMS / max |response|
    bool non_monotone = false;      ///< responses fall by more than the noise allows
    bool degenerate = false;        ///< tau pinned at a search bound or no positive amplitude
    bool large_residual = false;

    bool ok() const { return !degenerate && !large_residual; }
};

/// Least-squares fit of amplitude * (1 - exp(-w / tau)).
inline WidthSaturationFit fit_width_saturation(std::vector<SweepRecord> records) {
    const auto r = detail::sorted_checked(std::move(records), 3);
    for (const auto& p : r)
        if (!(p.stimulus > 0.0)) throw NumericError("widths must be > 0");

    // amplitude is linear: for fixed tau it has a closed form
    auto evaluate = [&r](double tau, double& amp) {
        double fy = 0.0, ff = 0.0;
        for (const auto& p : r) {
            const double f = 1.0 - std::exp(-p.stimulus / tau);
            fy += f * p.response;
            ff += f * f;
        }
        amp = ff > 0.0 ? fy / ff : 0.0;
        double sse = 0.0;
        for (const auto& p : r) {
            const double e = p.response - amp * (1.0 - std::exp(-p.stimulus / tau));
            sse += e * e;
        }
        return sse;
    };

    const double lo = std::log(r.front().stimulus / 20.0), hi = std::log(r.back().stimulus * 20.0);
    constexpr int grid = 400;
    int best_k = 0;
    double best = std::numeric_limits<double>::infinity(), amp = 0.0;
    for (int k = 0; k <= grid; ++k) {
        const double sse = evaluate(std::exp(lo + (hi - lo) * k / grid), amp);
        if (sse < best) {
            best = sse;
            best_k = k;
        }
    }
    // golden-section refinement in log(tau) around the best grid point
    double a = lo + (hi - lo) * std::max(best_k - 1, 0) / grid;
    double b = lo + (hi - lo) * std::min(best_k + 1, grid) / grid;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = evaluate(std::exp(c), amp), fd = evaluate(std::exp(d), amp);
    for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = evaluate(std::exp(c), amp);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = evaluate(std::exp(d), amp);
        }
    }

    WidthSaturationFit fit;
    fit.tau = std::exp((a + b) / 2.0);
    const double sse = evaluate(fit.tau, fit.amplitude);
    fit.saturation_width = fit.tau * std::log(100.0);
    fit.residual = std::sqrt(sse / static_cast<double>(r.size()));
    double ymax = 0.0;
    for (const auto& p : r) ymax = std::max(ymax, std::abs(p.response));
    fit.relative_residual = ymax > 0.0 ? fit.residual / ymax : std::numeric_limits<double>::infinity();
    fit.degenerate = best_k == 0 || best_k == grid || !(fit.amplitude > 0.0);
    fit.large_residual = fit.degenerate || fit.relative_residual > 0.05;
    for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i].response < r[i - 1].response - 3.0 * fit.residual - 1e-12) fit.non_monotone = true;
    return fit;
}

/// Two-column CSV (stimulus, response); a non-numeric first row is treated as a header.
inline std::vector<SweepRecord> parse_sweep_csv(const std::string& text) {
    const auto rows = csv::parse(text);
    std::vector<SweepRecord> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != 2) throw ConfigError("sweep csv: expected 2 columns on row " + std::to_string(i + 1));
        try {
            out.push_back({io::parse_number(rows[i][0], "sweep csv"), io::parse_number(rows[i][1], "sweep csv")});
        } catch (const ConfigError&) {
            if (i != 0) throw;
        }
    }
    return out;
}

}  // namespace phimc
