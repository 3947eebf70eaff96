#pragma once

// Krylov solvers whose only access to A is a matrix-vector oracle, and the
// mixed-precision refinement loop that pairs an analog oracle with exact
// residuals.
//
// Every residual in a SolveReport is recomputed from A, b and the current
// iterate in double precision; recursively updated residuals steer the
// iteration but are never reported.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "phimc/dense.hpp"
#include "phimc/photonic_array.hpp"

namespace phimc {

struct LinearSystem {
    Matrix a;
    Vector b;
    std::optional<Vector> solution;

    void validate() const {
        if (a.empty() || a.rows() != a.cols()) throw NumericError("system matrix must be square and non-empty");
        if (b.size() != a.rows()) throw NumericError("right-hand side length does not match matrix");
        if (!a.all_finite() || !all_finite(b)) throw NumericError("system has non-finite entries");
    }

    /// ||b - A x|| / ||b||, or ||b - A x|| when b = 0.
    double relative_residual(const Vector& x) const {
        const double r = norm2(subtract(b, multiply(a, x)));
        const double nb = norm2(b);
        return nb > 0.0 ? r / nb : r;
    }
};

/// A-application used by a solver plus the cumulative device energy it has spent.
struct MatvecOracle {
    std::function<Vector(const Vector&)> apply;
    std::function<double()> energy = [] { return 0.0; };
};

inline MatvecOracle exact_oracle(const Matrix& a) {
    return {[&a](const Vector& x) { return multiply(a, x); }};
}

/// Analog products through a programmed encoding. Holds references: the
/// encoding and stream must outlive the oracle.
inline MatvecOracle analog_oracle(SignedMatrixEncoding& enc, const NoiseModel& noise, Rng& rng) {
    return {[&enc, noise, &rng](const Vector& x) { return matvec(enc, x, noise, rng); },
            [&enc] { return enc.read_energy(); }};
}

enum class SolveMode { Exact, Analog, Mixed };
enum class InnerMethod { CG, GMRES };
enum class SolveStatus { Converged, MaxIterations, Breakdown, Stagnated, Diverged };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::Breakdown: return "breakdown";
        case SolveStatus::Stagnated: return "stagnated";
        case SolveStatus::Diverged: return "diverged";
    }
    return "?";
}

inline const char* to_string(SolveMode m) {
    switch (m) {
        case SolveMode::Exact: return "exact";
        case SolveMode::Analog: return "analog";
        case SolveMode::Mixed: return "mixed";
    }
    return "?";
}

struct SolverConfig {
    double tolerance = 1e-10;  ///< relative residual
    int max_iterations = 100;  ///< Krylov iterations, or outer iterations for mixed
    int inner_iterations = 5;  ///< mixed only
    int restart = 30;          ///< GMRES
    SolveMode mode = SolveMode::Exact;
    InnerMethod inner = InnerMethod::CG;

    void validate() const {
        if (!(tolerance > 0.0)) throw ConfigError("solver tolerance must be > 0");
        if (max_iterations < 1 || inner_iterations < 1 || restart < 1)
            throw ConfigError("solver iteration caps must be >= 1");
    }
};

struct SolveReport {
    Vector x;
    std::vector<double> residuals;          ///< exact relative residual, entry 0 = initial guess
    std::vector<std::size_t> matvec_trace;  ///< oracle calls so far, per residual entry
    std::vector<double> energy_trace;       ///< device pJ so far, per residual entry
    std::size_t matvec_count = 0;
    double device_energy = 0.0;  ///< pJ
    int iterations = 0;
    SolveStatus status = SolveStatus::MaxIterations;
    std::string message;

    bool converged() const { return status == SolveStatus::Converged; }
    double final_residual() const { return residuals.back(); }
};

namespace detail {

/// Counts oracle calls and appends exact residuals to a report.
class Tracker {
public:
    Tracker(const LinearSystem& sys, const MatvecOracle& oracle, SolveReport& rep)
        : sys_(sys), oracle_(oracle), rep_(rep), energy0_(oracle.energy()) {}

    Vector apply(const Vector& v) {
        ++rep_.matvec_count;
        return oracle_.apply(v);
    }

    double record(const Vector& x) {
        const double r = sys_.relative_residual(x);
        rep_.residuals.push_back(r);
        rep_.matvec_trace.push_back(rep_.matvec_count);
        rep_.device_energy = oracle_.energy() - energy0_;
        rep_.energy_trace.push_back(rep_.device_energy);
        return r;
    }

private:
    const LinearSystem& sys_;
    const MatvecOracle& oracle_;
    SolveReport& rep_;
    double energy0_;
};

/// Fixed number of CG steps on A z = rhs from z = 0; stops early on breakdown.
inline Vector cg_steps(const std::function<Vector(const Vector&)>& apply, const Vector& rhs, int steps) {
    Vector z(rhs.size(), 0.0), r = rhs, p = rhs;
    double rs = dot(r, r);
    for (int k = 0; k < steps && rs > 0.0; ++k) {
        const Vector ap = apply(p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) break;
        const double alpha = rs / pap;
        axpy(alpha, p, z);
        axpy(-alpha, ap, r);
        const double rs_new = dot(r, r);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + (rs_new / rs) * p[i];
        rs = rs_new;
    }
    return z;
}

struct Givens {
    double c = 1.0, s = 0.0;
};

/// One restart cycle of GMRES(m) from x0 with Arnoldi by modified Gram-Schmidt.
/// Calls `on_iterate` with each intermediate solution; stops when it returns true.
inline Vector gmres_cycle(const std::function<Vector(const Vector&)>& apply, const Vector& x0, const Vector& r0, int m,
                          const std::function<bool(const Vector&)>& on_iterate, bool& happy) {
    const std::size_t n = x0.size();
    happy = false;
    const double beta = norm2(r0);
    if (beta == 0.0) return x0;
    std::vector<Vector> v{Vector(n)};
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r0[i] / beta;
    std::vector<std::vector<double>> h;  // h[j] is column j, length j + 2
    std::vector<Givens> rot;
    std::vector<double> g{beta};
    Vector x = x0;
    for (int j = 0; j < m; ++j) {
        Vector w = apply(v[static_cast<std::size_t>(j)]);
        std::vector<double> col(static_cast<std::size_t>(j) + 2, 0.0);
        for (int i = 0; i <= j; ++i) {
            col[static_cast<std::size_t>(i)] = dot(w, v[static_cast<std::size_t>(i)]);
            axpy(-col[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(i)], w);
        }
        const double hnext = norm2(w);
        col[static_cast<std::size_t>(j) + 1] = hnext;
        for (int i = 0; i < j; ++i) {
            const auto [c, s] = rot[static_cast<std::size_t>(i)];
            const double a = col[static_cast<std::size_t>(i)], b = col[static_cast<std::size_t>(i) + 1];
            col[static_cast<std::size_t>(i)] = c * a + s * b;
            col[static_cast<std::size_t>(i) + 1] = -s * a + c * b;
        }
        const double a = col[static_cast<std::size_t>(j)], b = col[static_cast<std::size_t>(j) + 1];
        const double d = std::hypot(a, b);
        const Givens gr = d > 0.0 ? Givens{a / d, b / d} : Givens{};
        rot.push_back(gr);
        col[static_cast<std::size_t>(j)] = d;
        col[static_cast<std::size_t>(j) + 1] = 0.0;
        g.push_back(-gr.s * g[static_cast<std::size_t>(j)]);
        g[static_cast<std::size_t>(j)] *= gr.c;
        h.push_back(std::move(col));

        // back substitution for the (j+1)-dimensional least-squares solution
        const std::size_t k = static_cast<std::size_t>(j) + 1;
        std::vector<double> y(k, 0.0);
        for (std::size_t ii = k; ii-- > 0;) {
            double s = g[ii];
            for (std::size_t jj = ii + 1; jj < k; ++jj) s -= h[jj][ii] * y[jj];
            y[ii] = h[ii][ii] != 0.0 ? s / h[ii][ii] : 0.0;
        }
        x = x0;
        for (std::size_t ii = 0; ii < k; ++ii) axpy(y[ii], v[ii], x);

        happy = hnext <= 1e-14 * beta;
        if (on_iterate(x) || happy) return x;
        Vector next(n);
        for (std::size_t i = 0; i < n; ++i) next[i] = w[i] / hnext;
        v.push_back(std::move(next));
    }
    return x;
}

}  // namespace detail

/// Conjugate Gradient from x = 0. Requires an SPD system.
inline SolveReport cg(const LinearSystem& sys, const MatvecOracle& oracle, const SolverConfig& cfg) {
    sys.validate();
    cfg.validate();
    if (!is_spd(sys.a)) throw NumericError("CG needs a symmetric positive definite matrix");
    SolveReport rep;
    detail::Tracker track(sys, oracle, rep);
    Vector x(sys.b.size(), 0.0);
    if (track.record(x) < cfg.tolerance || norm2(sys.b) == 0.0) {
        rep.x = x;
        rep.status = SolveStatus::Converged;
        return rep;
    }
    Vector r = sys.b, p = r;
    double rs = dot(r, r);
    for (int k = 1; k <= cfg.max_iterations; ++k) {
        const Vector ap = track.apply(p);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            rep.status = SolveStatus::Breakdown;
            rep.message = "non-positive curvature p.Ap = " + csv::number(pap);
            break;
        }
        const double alpha = rs / pap;
        axpy(alpha, p, x);
        axpy(-alpha, ap, r);
        rep.iterations = k;
        if (track.record(x) < cfg.tolerance) {
            rep.status = SolveStatus::Converged;
            break;
        }
        const double rs_new = dot(r, r);
        if (rs_new == 0.0) {
            rep.status = SolveStatus::Stagnated;
            rep.message = "recursive residual vanished before the true residual met tolerance";
            break;
        }
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + (rs_new / rs) * p[i];
        rs = rs_new;
    }
    rep.x = x;
    return rep;
}

/// Restarted GMRES(restart) from x = 0.
inline SolveReport gmres(const LinearSystem& sys, const MatvecOracle& oracle, const SolverConfig& cfg) {
    sys.validate();
    cfg.validate();
    SolveReport rep;
    detail::Tracker track(sys, oracle, rep);
    Vector x(sys.b.size(), 0.0);
    double res = track.record(x);
    if (res < cfg.tolerance || norm2(sys.b) == 0.0) {
        rep.x = x;
        rep.status = SolveStatus::Converged;
        return rep;
    }
    auto apply = [&track](const Vector& v) { return track.apply(v); };
    bool first = true;
    while (rep.iterations < cfg.max_iterations) {
        const Vector r0 = first ? sys.b : subtract(sys.b, track.apply(x));
        first = false;
        const double before = res;
        const int budget = std::min(cfg.restart, cfg.max_iterations - rep.iterations);
        bool done = false, happy = false;
        x = detail::gmres_cycle(apply, x, r0, budget,
                                [&](const Vector& xi) {
                                    ++rep.iterations;
                                    res = track.record(xi);
                                    done = res < cfg.tolerance;
                                    return done;
                                },
                                happy);
        if (done || (happy && res < cfg.tolerance)) {
            rep.status = SolveStatus::Converged;
            break;
        }
        if (happy || res >= before * (1.0 - 1e-3)) {
            rep.status = SolveStatus::Stagnated;
            rep.message = "restart cycle made no progress";
            break;
        }
    }
    rep.x = x;
    return rep;
}

/// Iterative refinement: exact residual r = b - A x, correction from a few
/// inner Krylov steps on the analog oracle, x += z.
inline SolveReport mixed_precision_solve(const LinearSystem& sys, const MatvecOracle& analog, const SolverConfig& cfg) {
    sys.validate();
    cfg.validate();
    if (cfg.inner == InnerMethod::CG && !is_spd(sys.a))
        throw NumericError("CG inner solver needs a symmetric positive definite matrix");
    SolveReport rep;
    detail::Tracker track(sys, analog, rep);
    Vector x(sys.b.size(), 0.0);
    double res = track.record(x);
    if (norm2(sys.b) == 0.0 || res < cfg.tolerance) {
        rep.x = x;
        rep.status = SolveStatus::Converged;
        return rep;
    }
    auto apply = [&track](const Vector& v) { return track.apply(v); };
    int growth = 0;
    for (int k = 1; k <= cfg.max_iterations; ++k) {
        const Vector r = subtract(sys.b, multiply(sys.a, x));
        Vector z;
        if (cfg.inner == InnerMethod::CG) {
            z = detail::cg_steps(apply, r, cfg.inner_iterations);
        } else {
            bool happy = false;
            z = detail::gmres_cycle(apply, Vector(r.size(), 0.0), r, cfg.inner_iterations,
                                    [](const Vector&) { return false; }, happy);
        }
        axpy(1.0, z, x);
        rep.iterations = k;
        const double next = track.record(x);
        growth = next > res ? growth + 1 : 0;
        res = next;
        if (res < cfg.tolerance) {
            rep.status = SolveStatus::Converged;
            break;
        }
        if (growth >= 3) {
            rep.status = SolveStatus::Diverged;
            rep.message = "residual grew over 3 consecutive outer iterations";
            break;
        }
    }
    rep.x = x;
    return rep;
}

/// Runs `cfg.mode` with the matching oracle: exact uses A directly, analog
/// runs the Krylov method on the device, mixed wraps it in refinement.
inline SolveReport solve(const LinearSystem& sys, SignedMatrixEncoding* enc, const NoiseModel& noise, Rng& rng,
                         const SolverConfig& cfg) {
    if (cfg.mode != SolveMode::Exact && enc == nullptr) throw ConfigError("analog and mixed modes need an encoding");
    const MatvecOracle oracle = cfg.mode == SolveMode::Exact ? exact_oracle(sys.a) : analog_oracle(*enc, noise, rng);
    if (cfg.mode == SolveMode::Mixed) return mixed_precision_solve(sys, oracle, cfg);
    return cfg.inner == InnerMethod::CG ? cg(sys, oracle, cfg) : gmres(sys, oracle, cfg);
}

inline std::string report_csv(const SolveReport& rep) {
    csv::Writer w({"iteration", "residual", "matvec_count", "energy_pJ"});
    for (std::size_t i = 0; i < rep.residuals.size(); ++i)
        w.row({std::to_string(i), csv::number(rep.residuals[i], 17), std::to_string(rep.matvec_trace[i]),
               csv::number(rep.energy_trace[i])});
    return w.str();
}

inline std::string report_summary(const SolveReport& rep, const std::string& label) {
    std::string s = label + ": " + to_string(rep.status) + " after " + std::to_string(rep.iterations) +
                    " iterations, relative residual " + csv::number(rep.final_residual(), 6) + ", " +
                    std::to_string(rep.matvec_count) + " matvecs, " + csv::number(rep.device_energy, 8) +
                    " pJ read energy";
    if (!rep.message.empty()) s += " (" + rep.message + ")";
    return s + "\n";
}

}  // namespace phimc
