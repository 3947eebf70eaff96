#pragma once

// Figure-style experiments shared by the command-line tool and the test
// suites. Each experiment is a pure function of its config: it returns the
// files it would write (name -> contents) plus the headline numbers.

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "phimc/calibration.hpp"
#include "phimc/drift.hpp"
#include "phimc/photonic_array.hpp"
#include "phimc/profile.hpp"
#include "phimc/solver.hpp"
#include "phimc/svg.hpp"

namespace phimc::experiments {

using Files = std::map<std::string, std::string>;

inline NoiseModel active_noise(const DeviceProfile& p, bool noise_on) {
    return noise_on ? p.noise : NoiseModel::none();
}

// ---------------------------------------------------------------------------
// Width sweep

struct SweepWidthConfig {
    double min_width = 5.0;   ///< ns
    double max_width = 100.0; ///< ns
    double step = 1.0;        ///< ns
};

struct SweepWidthResult {
    std::vector<double> widths;
    std::vector<double> delta;     ///< absolute programmed delta at e_linear_max
    std::vector<double> fraction;  ///< width response, 1 = saturated
    double ratio_at_reference = 0.0;  ///< curve(25 ns) / curve(saturated)
    Files files;
};

/// Programmed delta against pulse width at the top of the energy range.
inline SweepWidthResult sweep_width(const DeviceProfile& p, const SweepWidthConfig& cfg = {}) {
    p.validate();
    if (!(cfg.min_width > 0.0 && cfg.max_width >= cfg.min_width && cfg.step > 0.0))
        throw ConfigError("sweep-width: need 0 < min <= max and step > 0");
    const auto& cal = p.cell;
    SweepWidthResult out;
    csv::Writer w({"width_ns", "delta_t", "fraction_of_max", "relative_delta_pct", "switching_energy_pJ"});
    const double power = cal.erase_peak_power;
    const auto steps = static_cast<long>(std::floor((cfg.max_width - cfg.min_width) / cfg.step + 1e-9));
    for (long k = 0; k <= steps; ++k) {
        const double width = cfg.min_width + static_cast<double>(k) * cfg.step;
        const double d = target_level(cal, cal.e_linear_max, width);
        const double f = width_factor(cal, width);
        out.widths.push_back(width);
        out.delta.push_back(d);
        out.fraction.push_back(f);
        w.row({csv::number(width), csv::number(d), csv::number(f), csv::number(100.0 * to_relative_delta(d, cal.t_baseline)),
               csv::number(absorbed_energy(CellState{}, cal, power * width))});
    }
    out.ratio_at_reference = width_factor(cal, 25.0) / width_factor(cal, std::max(cal.width_saturation, cfg.max_width));

    svg::Plot plot{"Programmed level vs pulse width", "pulse width (ns)", "fraction of saturated level"};
    svg::Series s{"width response", {}};
    for (std::size_t i = 0; i < out.widths.size(); ++i) s.points.emplace_back(out.widths[i], out.fraction[i]);
    plot.series.push_back(std::move(s));
    plot.vertical_markers = {{25.0, "25 ns: " + csv::number(width_factor(cal, 25.0), 4)},
                             {cal.width_saturation, "saturation " + csv::number(cal.width_saturation, 4) + " ns"}};
    out.files["sweep_width.csv"] = w.str();
    out.files["sweep_width.svg"] = svg::render(plot);
    return out;
}

// ---------------------------------------------------------------------------
// Multilevel conditioning

struct ConditionLevelsConfig {
    int levels = 13;
    int repeats = 3;
    int sequences = 20;
    int per_sequence = 10;
    int conditioning = 10;  ///< Write/Erase cycles per level used to find its centroid
    std::uint64_t seed = 0;
    bool noise = true;
};

struct ConditionLevelsResult {
    std::vector<double> energies;   ///< pJ per level
    std::vector<double> centroids;  ///< programmed delta per level
    std::vector<int> level_of_transition;
    std::vector<double> errors;     ///< (achieved - programmed) / t_prog_max
    double error_mean = 0.0;
    double error_sd = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    double min_separation_ratio = 0.0;  ///< min adjacent centroid gap / (write_sd * t_prog_max)
    Files files;
};

inline ConditionLevelsResult condition_levels(const DeviceProfile& p, const ConditionLevelsConfig& cfg) {
    p.validate();
    if (cfg.levels < 2 || cfg.repeats < 1 || cfg.sequences < 1 || cfg.per_sequence < 1 || cfg.conditioning < 1 ||
        cfg.per_sequence > cfg.levels)
        throw ConfigError("condition-levels: bad level/sequence counts");
    const auto& cal = p.cell;
    const NoiseModel noise = active_noise(p, cfg.noise);
    const auto erase = make_erase_pulse(cal);
    Rng rng(cfg.seed);
    ConditionLevelsResult out;

    CellState cell;
    auto program = [&](double energy) {
        cell = erase_single_shot(cell, cal, erase);
        cell = write(cell, cal, energy, cal.width_reference, noise, rng).state;
        return cell.t_prog;
    };

    csv::Writer lv({"level", "energy_pJ", "absorbed_pJ", "centroid_delta"});
    for (int k = 0; k < cfg.levels; ++k) {
        const double e = cal.e_threshold + (cal.e_linear_max - cal.e_threshold) * k / (cfg.levels - 1);
        double sum = 0.0;
        for (int c = 0; c < cfg.conditioning; ++c) sum += program(e);
        out.energies.push_back(e);
        out.centroids.push_back(sum / cfg.conditioning);
        lv.row({std::to_string(k), csv::number(e), csv::number(absorbed_energy(CellState{}, cal, e)),
                csv::number(out.centroids.back())});
    }

    csv::Writer tr({"transition", "repeat", "sequence", "level", "programmed_delta", "achieved_delta", "error_fraction"});
    std::vector<int> order(static_cast<std::size_t>(cfg.levels));
    std::vector<std::pair<double, double>> trace;
    int t = 0;
    for (int r = 0; r < cfg.repeats; ++r)
        for (int s = 0; s < cfg.sequences; ++s) {
            std::iota(order.begin(), order.end(), 0);
            for (int i = 0; i < cfg.per_sequence; ++i) {
                const auto j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.levels - i)));
                std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
                const int k = order[static_cast<std::size_t>(i)];
                const double achieved = program(out.energies[static_cast<std::size_t>(k)]);
                const double programmed = out.centroids[static_cast<std::size_t>(k)];
                const double err = (achieved - programmed) / cal.t_prog_max;
                out.level_of_transition.push_back(k);
                out.errors.push_back(err);
                trace.emplace_back(t, cal.t_baseline + achieved);
                tr.row({std::to_string(t), std::to_string(r), std::to_string(s), std::to_string(k), csv::number(programmed),
                        csv::number(achieved), csv::number(err)});
                ++t;
            }
        }

    out.error_mean = stats::mean(out.errors);
    out.error_sd = stats::stddev(out.errors);
    out.skewness = stats::skewness(out.errors);
    out.excess_kurtosis = stats::excess_kurtosis(out.errors);
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < out.centroids.size(); ++k) gap = std::min(gap, out.centroids[k] - out.centroids[k - 1]);
    const double sd_abs = p.noise.write_sd * cal.t_prog_max;
    out.min_separation_ratio = sd_abs > 0.0 ? gap / sd_abs : std::numeric_limits<double>::infinity();

    csv::Writer sm({"metric", "value"});
    sm.row({"transitions", std::to_string(out.errors.size())});
    sm.row({"error_mean", csv::number(out.error_mean)});
    sm.row({"error_sd", csv::number(out.error_sd)});
    sm.row({"skewness", csv::number(out.skewness)});
    sm.row({"excess_kurtosis", csv::number(out.excess_kurtosis)});
    sm.row({"min_separation_ratio", csv::number(out.min_separation_ratio)});

    svg::Plot plot{"Random-order level transitions", "transition", "transmittance"};
    plot.series.push_back({"achieved", trace, "#1f77b4", true});
    out.files["condition_levels.csv"] = tr.str();
    out.files["condition_levels_centroids.csv"] = lv.str();
    out.files["condition_levels_summary.csv"] = sm.str();
    out.files["condition_levels.svg"] = svg::render(plot);
    out.files["condition_levels_hist.svg"] =
        svg::render_histogram(stats::symmetric_histogram(out.errors, 31), "Level error", "error (fraction of range)");
    return out;
}

// ---------------------------------------------------------------------------
// Drift with the probe ON, OFF/ON at hold power, and OFF/ON at reduced power

struct DriftConfig {
    std::uint64_t seed = 0;
    bool noise = true;
    double hold_hours = 8.5;     ///< probe kept on
    double off_hours_b = 1.5;    ///< OFF period at hold power
    double off_hours_c = 2.0;    ///< OFF period at reduced power
    double sample_seconds = 60.0;
};

struct DriftResult {
    double panel_a_max_shift = 0.0;   ///< relative, over the ON hold
    double panel_b_shift = 0.0;       ///< relative, after OFF/ON at hold power
    double panel_b_correction_sd = 0.0;  ///< |corrected - target| in write-SD units
    double panel_c_shift = 0.0;       ///< relative, after OFF/ON at safe power
    Files files;
};

inline DriftResult drift(const DeviceProfile& p, const DriftConfig& cfg) {
    p.validate();
    const auto& cal = p.cell;
    const NoiseModel noise = active_noise(p, cfg.noise);
    Rng rng(cfg.seed);
    DriftResult out;
    csv::Writer w({"panel", "time_s", "transmittance", "relative_shift", "event"});
    std::map<std::string, std::vector<std::pair<double, double>>> traces;

    auto energy_at = [&](double a) { return cal.e_threshold + a * (cal.e_linear_max - cal.e_threshold); };
    auto log = [&](const std::string& panel, double time, const CellState& c, double ref, const std::string& ev) {
        const double tr = transmittance(c, cal);
        w.row({panel, csv::number(time), csv::number(tr), csv::number(tr / ref - 1.0), ev});
        traces[panel].emplace_back(time, tr);
    };

    // Upward transitions by Write, downward by an erase train, as in a
    // multilevel conditioning run; ends on an intermediate level.
    auto conditioning = [&](const std::string& panel, CellState& c, double& time) {
        const double path[] = {0.3, 0.8, 0.5, 1.0, 0.2, 0.6};
        const auto train = make_erase_train(cal.erase_peak_power, 5, 1.0, 50.0);
        for (double a : path) {
            const double target = target_level(cal, energy_at(a), cal.width_reference);
            if (target >= c.t_prog) {
                c = write(c, cal, energy_at(a), cal.width_reference, noise, rng).state;
                log(panel, time, c, 1.0, "write");
            } else {
                c = erase_train(c, cal, train, target, noise, rng);
                log(panel, time, c, 1.0, "erase_train");
            }
            time += 300.0;
        }
        // hold the last level as a Write so it can be corrected later
        c = write(c, cal, energy_at(0.6), cal.width_reference, noise, rng).state;
        log(panel, time, c, 1.0, "write");
        time += 300.0;
    };

    {  // a: probe kept on at hold power
        CellState c;
        c.probe_power = p.drift.probe_hold_power;
        double time = 0.0;
        conditioning("a", c, time);
        const double ref = transmittance(c, cal);
        const double end = time + cfg.hold_hours * 3600.0;
        for (; time <= end; time += cfg.sample_seconds) {
            c = probe_cycle(c, cal, p.drift, p.drift.probe_hold_power, 0.0);
            out.panel_a_max_shift = std::max(out.panel_a_max_shift, std::abs(transmittance(c, cal) / ref - 1.0));
            log("a", time, c, ref, "probe_on");
        }
    }
    auto off_on = [&](const std::string& panel, double power, double hours, bool correct) {
        CellState c;
        c.probe_power = power;
        double time = 0.0;
        conditioning(panel, c, time);
        const double ref = transmittance(c, cal);
        log(panel, time, c, ref, "probe_off");
        time += hours * 3600.0;
        c = probe_cycle(c, cal, p.drift, power, hours * 3600.0);
        const double shift = transmittance(c, cal) / ref - 1.0;
        log(panel, time, c, ref, "probe_on");
        if (correct) {
            time += 200.0;
            c = correct_drift(c, cal, noise, rng);
            log(panel, time, c, ref, "correct");
            const double target = target_level(cal, *c.last_write_energy, *c.last_write_width);
            const double sd = p.noise.write_sd * cal.t_prog_max;
            out.panel_b_correction_sd = sd > 0.0 ? std::abs(c.t_prog - target) / sd : 0.0;
        }
        for (int k = 1; k <= 10; ++k) {
            time += cfg.sample_seconds;
            c = probe_cycle(c, cal, p.drift, power, 0.0);
            log(panel, time, c, ref, "probe_on");
        }
        return shift;
    };
    out.panel_b_shift = off_on("b", p.drift.probe_hold_power, cfg.off_hours_b, true);
    out.panel_c_shift = off_on("c", p.drift.probe_safe_power, cfg.off_hours_c, false);

    csv::Writer sm({"metric", "value"});
    sm.row({"panel_a_max_shift", csv::number(out.panel_a_max_shift)});
    sm.row({"panel_b_shift", csv::number(out.panel_b_shift)});
    sm.row({"panel_b_correction_sd", csv::number(out.panel_b_correction_sd)});
    sm.row({"panel_c_shift", csv::number(out.panel_c_shift)});

    svg::Plot plot{"Transmission drift", "time (s)", "transmittance"};
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c"};
    int ci = 0;
    for (auto& [panel, pts] : traces) plot.series.push_back({"panel " + panel, pts, colors[ci++ % 3], false});
    out.files["drift.csv"] = w.str();
    out.files["drift_summary.csv"] = sm.str();
    out.files["drift.svg"] = svg::render(plot);
    return out;
}

// ---------------------------------------------------------------------------
// Scalar multiplication grid

struct MultiplyGridConfig {
    int n_a = 13;
    int n_b = 33;
    std::uint64_t seed = 0;
    bool noise = true;
    std::optional<double> pump_sd;  ///< overrides the profile when set
    MultiplyOptions options;
};

struct MultiplyGridResult {
    std::vector<MultiplicationRecord> records;
    ErrorStats stats;
    double corr_abs_error_a = 0.0;
    double corr_abs_error_b = 0.0;
    Files files;
};

inline MultiplyGridResult multiply_grid(const DeviceProfile& p, const MultiplyGridConfig& cfg) {
    p.validate();
    NoiseModel noise = active_noise(p, cfg.noise);
    if (cfg.noise && cfg.pump_sd) noise.pump_fluctuation_sd = *cfg.pump_sd;
    noise.validate();
    Rng rng(cfg.seed);
    CellState cell;
    MultiplyGridResult out;
    out.records = run_grid(cell, p.cell, OperandMapping::from(p.cell, p.e_in_max), cfg.n_a, cfg.n_b, noise, rng,
                           cfg.options);
    out.stats = error_stats(out.records, 31);
    std::vector<double> abs_err, as, bs;
    for (const auto& r : out.records) {
        abs_err.push_back(std::abs(r.error));
        as.push_back(r.a);
        bs.push_back(r.b);
    }
    out.corr_abs_error_a = stats::correlation(as, abs_err);
    out.corr_abs_error_b = stats::correlation(bs, abs_err);

    csv::Writer sm({"metric", "value"});
    sm.row({"records", std::to_string(out.records.size())});
    sm.row({"error_mean", csv::number(out.stats.mean)});
    sm.row({"error_sd", csv::number(out.stats.sd)});
    sm.row({"corr_abs_error_a", csv::number(out.corr_abs_error_a)});
    sm.row({"corr_abs_error_b", csv::number(out.corr_abs_error_b)});

    svg::Plot plot{"Measured vs exact product", "exact c = a x b", "measured c"};
    svg::Series s{"", {}, "#1f77b4", true};
    for (const auto& r : out.records) s.points.emplace_back(r.c_exact, r.c_measured);
    plot.series.push_back(std::move(s));
    plot.series.push_back({"ideal", {{0.0, 0.0}, {1.0, 1.0}}, "#999999", false});
    out.files["multiply_grid.csv"] = records_csv(out.records);
    out.files["multiply_grid_summary.csv"] = sm.str();
    out.files["multiply_grid.svg"] = svg::render(plot);
    out.files["multiply_grid_hist.svg"] = svg::render_histogram(out.stats.histogram, "Multiplication error", "c_exact - c_measured");
    return out;
}

// ---------------------------------------------------------------------------
// Linear solves

/// Q diag(eigs) Q^T with Q from Gram-Schmidt on a Gaussian matrix and
/// eigenvalues spread uniformly over [1, condition].
inline Matrix random_spd(std::size_t n, Rng& rng, double condition = 10.0) {
    std::vector<Vector> q;
    while (q.size() < n) {
        Vector v(n);
        for (auto& x : v) x = rng.normal();
        for (const auto& u : q) axpy(-dot(u, v), u, v);
        const double nv = norm2(v);
        if (nv < 1e-8) continue;
        for (auto& x : v) x /= nv;
        q.push_back(std::move(v));
    }
    Vector eig(n);
    for (std::size_t k = 0; k < n; ++k)
        eig[k] = n == 1 ? 1.0 : 1.0 + (condition - 1.0) * static_cast<double>(k) / static_cast<double>(n - 1);
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k) s += q[k][i] * eig[k] * q[k][j];
            a(i, j) = a(j, i) = s;
        }
    return a;
}

/// Diagonally dominant nonsymmetric matrix: n on the diagonal plus Gaussian noise.
inline Matrix random_nonsymmetric(std::size_t n, Rng& rng) {
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = rng.normal() + (i == j ? static_cast<double>(n) : 0.0);
    return a;
}

/// Seeded SPD system with a known Gaussian solution.
inline LinearSystem make_spd_system(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    LinearSystem sys;
    sys.a = random_spd(n, rng);
    Vector x(n);
    for (auto& v : x) v = rng.normal();
    sys.b = multiply(sys.a, x);
    sys.solution = x;
    return sys;
}

struct SolveConfig {
    std::optional<std::string> matrix_path;
    std::optional<std::string> rhs_path;
    std::size_t generate_n = 8;
    std::uint64_t seed = 0;
    bool noise = true;
    InnerMethod method = InnerMethod::CG;
    double tolerance = 1e-9;
    int max_iterations = 50;  ///< exact and analog Krylov iterations
    int max_outer = 50;
    int inner = 5;
    int restart = 30;
    bool vector_in_cells = false;  ///< write x into cells and send A as pulses
};

struct SolveResult {
    LinearSystem system;
    SolveReport exact;
    SolveReport analog;
    SolveReport mixed;
    Files files;
};

/// Same system in three modes. The matrix is programmed once and reused by
/// the analog and mixed runs.
inline SolveResult solve_system(const DeviceProfile& p, const SolveConfig& cfg) {
    p.validate();
    SolveResult out;
    if (cfg.matrix_path) {
        out.system.a = io::load_matrix(*cfg.matrix_path);
        if (cfg.rhs_path) {
            out.system.b = io::load_vector(*cfg.rhs_path);
        } else {
            Rng rng(derive_seed(cfg.seed, 0));
            Vector x(out.system.a.cols());
            for (auto& v : x) v = rng.normal();
            out.system.b = multiply(out.system.a, x);
            out.system.solution = x;
        }
    } else {
        if (cfg.generate_n == 0) throw ConfigError("solve: generated size must be >= 1");
        out.system = make_spd_system(cfg.generate_n, derive_seed(cfg.seed, 0));
    }
    out.system.validate();
    if (cfg.method == InnerMethod::CG && !is_spd(out.system.a))
        throw NumericError("CG mode needs a symmetric positive definite matrix");

    const NoiseModel noise = active_noise(p, cfg.noise);
    const OperandMapping mapping = OperandMapping::from(p.cell, p.e_in_max);
    Rng program_rng(derive_seed(cfg.seed, 1));
    auto enc = program_matrix(out.system.a, p.cell, mapping, noise, program_rng);

    SolverConfig sc;
    sc.tolerance = cfg.tolerance;
    sc.max_iterations = cfg.max_iterations;
    sc.inner_iterations = cfg.inner;
    sc.restart = cfg.restart;
    sc.inner = cfg.method;

    Rng exact_rng(derive_seed(cfg.seed, 2)), analog_rng(derive_seed(cfg.seed, 3)), mixed_rng(derive_seed(cfg.seed, 4));
    sc.mode = SolveMode::Exact;
    out.exact = solve(out.system, nullptr, noise, exact_rng, sc);
    if (cfg.vector_in_cells) {
        // every product reprograms the vector cells; reads and writes land in the ledger
        EnergyLedger analog_ledger, mixed_ledger;
        auto oracle = [&](Rng& rng, EnergyLedger& ledger) {
            return MatvecOracle{[&, a = &out.system.a](const Vector& x) {
                                    return matvec_vector_stored(*a, x, p.cell, mapping, noise, rng, &ledger);
                                },
                                [&ledger] { return ledger.delivered(EventKind::Read); }};
        };
        sc.mode = SolveMode::Analog;
        const auto analog = oracle(analog_rng, analog_ledger);
        out.analog = sc.inner == InnerMethod::CG ? cg(out.system, analog, sc) : gmres(out.system, analog, sc);
        sc.mode = SolveMode::Mixed;
        sc.max_iterations = cfg.max_outer;
        out.mixed = mixed_precision_solve(out.system, oracle(mixed_rng, mixed_ledger), sc);
    } else {
        sc.mode = SolveMode::Analog;
        out.analog = solve(out.system, &enc, noise, analog_rng, sc);
        sc.mode = SolveMode::Mixed;
        sc.max_iterations = cfg.max_outer;
        out.mixed = solve(out.system, &enc, noise, mixed_rng, sc);
    }

    out.files["solve_exact.csv"] = report_csv(out.exact);
    out.files["solve_analog.csv"] = report_csv(out.analog);
    out.files["solve_mixed.csv"] = report_csv(out.mixed);
    out.files["solve_summary.txt"] = "system: " + std::to_string(out.system.a.rows()) + "x" +
                                     std::to_string(out.system.a.cols()) + ", method " +
                                     (cfg.method == InnerMethod::CG ? "cg" : "gmres") +
                                     (cfg.vector_in_cells ? ", vector in cells" : ", matrix in cells") + "\n" +
                                     report_summary(out.exact, "exact") + report_summary(out.analog, "analog") +
                                     report_summary(out.mixed, "mixed");
    svg::Plot plot{"Relative residual", "iteration", "log10 relative residual"};
    plot.log_y = true;
    auto series = [](const SolveReport& r, const std::string& label, const std::string& color) {
        svg::Series s{label, {}, color, false};
        for (std::size_t i = 0; i < r.residuals.size(); ++i) s.points.emplace_back(static_cast<double>(i), r.residuals[i]);
        return s;
    };
    plot.series = {series(out.exact, "exact", "#2ca02c"), series(out.analog, "analog", "#d62728"),
                   series(out.mixed, "mixed", "#1f77b4")};
    out.files["solve_residuals.svg"] = svg::render(plot);
    return out;
}

}  // namespace phimc::experiments
