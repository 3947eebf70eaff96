#pragma once

// Scalar multiplication inside one cell: the multiplicand sets the
// transmittance through a Write, the multiplier is the energy of a
// sub-threshold read, and the product is recovered from the output energy
// after subtracting the baseline offset T_0 x E_in.

#include <cmath>
#include <vector>

#include "phimc/device_cell.hpp"
#include "phimc/pulse_protocol.hpp"
#include "phimc/stats.hpp"

namespace phimc {

struct OperandMapping {
    double e_write_min = 180.0;  ///< pJ, a = 0
    double e_write_max = 354.0;  ///< pJ, a = 1
    double e_in_max = 112.8;     ///< pJ, b = 1
    double write_width = 25.0;   ///< ns

    static OperandMapping from(const CellCalibration& cal, double e_in_max = 112.8) {
        return {cal.e_threshold, cal.e_linear_max, e_in_max, cal.width_reference};
    }

    void validate(const CellCalibration& cal) const {
        if (!(e_in_max > 0.0 && e_in_max < cal.e_threshold))
            throw ConfigError("e_in_max must lie in (0, e_threshold) so reads never switch");
        if (!(e_write_min >= cal.e_threshold && e_write_min < e_write_max))
            throw ConfigError("write range must start at or above threshold");
    }
};

inline double encode_multiplicand(const OperandMapping& m, double a) {
    if (!(a >= 0.0 && a <= 1.0)) throw ProtocolError("multiplicand must lie in [0, 1]");
    return m.e_write_min + a * (m.e_write_max - m.e_write_min);
}

inline double encode_multiplier(const OperandMapping& m, double b) {
    if (!(b >= 0.0 && b <= 1.0)) throw ProtocolError("multiplier must lie in [0, 1]");
    return b * m.e_in_max;
}

/// Offset-corrected, normalised product. Deliberately not clamped to [0, 1].
inline double decode_product(const CellCalibration& cal, const OperandMapping& m, double output_energy,
                             double offset_energy) {
    return (output_energy - offset_energy) / (cal.t_prog_max * m.e_in_max);
}

struct MultiplicationRecord {
    double a = 0.0;
    double b = 0.0;
    double e_write = 0.0;            ///< pJ
    double e_in = 0.0;               ///< pJ
    double raw_output_energy = 0.0;  ///< pJ
    double offset_energy = 0.0;      ///< pJ
    double c_measured = 0.0;
    double c_exact = 0.0;
    double error = 0.0;              ///< c_exact - c_measured
};

struct MultiplyOptions {
    bool measured_offset = false;  ///< read the baseline before writing instead of using T_0
    bool auto_erase = false;       ///< erase after multiply() returns
    bool write_per_op = false;     ///< run_grid: one Write per multiplication
};

namespace detail {

inline double offset_for(CellState& cell, const CellCalibration& cal, double e_in, const NoiseModel& noise, Rng& rng,
                         const MultiplyOptions& opt, EnergyLedger* ledger) {
    if (!opt.measured_offset) return cal.t_baseline * e_in;
    if (ledger && e_in > 0.0) ledger->record(EventKind::Read, e_in, absorbed_energy(cell, cal, e_in));
    return read(cell, cal, e_in, noise, rng);
}

inline void do_write(CellState& cell, const CellCalibration& cal, const OperandMapping& m, double e_write,
                     const NoiseModel& noise, Rng& rng, EnergyLedger* ledger) {
    auto res = write(cell, cal, e_write, m.write_width, noise, rng);
    if (ledger) ledger->record(EventKind::Write, e_write, res.absorbed_energy);
    cell = res.state;
}

inline void do_erase(CellState& cell, const CellCalibration& cal, EnergyLedger* ledger) {
    const auto pulse = make_erase_pulse(cal);
    if (ledger) ledger->record(EventKind::Erase, pulse.energy(), absorbed_energy(cell, cal, pulse.energy()));
    cell = erase_single_shot(cell, cal, pulse);
}

inline MultiplicationRecord do_read(CellState& cell, const CellCalibration& cal, const OperandMapping& m, double a,
                                    double b, double offset, const NoiseModel& noise, Rng& rng,
                                    EnergyLedger* ledger) {
    MultiplicationRecord r;
    r.a = a;
    r.b = b;
    r.e_write = encode_multiplicand(m, a);
    r.e_in = encode_multiplier(m, b);
    if (ledger && r.e_in > 0.0) ledger->record(EventKind::Read, r.e_in, absorbed_energy(cell, cal, r.e_in));
    r.raw_output_energy = read(cell, cal, r.e_in, noise, rng);
    r.offset_energy = offset;
    r.c_measured = decode_product(cal, m, r.raw_output_energy, r.offset_energy);
    r.c_exact = a * b;
    r.error = r.c_exact - r.c_measured;
    return r;
}

inline std::vector<double> grid_points(int n) {
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = n == 1 ? 1.0 : static_cast<double>(i) / (n - 1);
    return xs;
}

}  // namespace detail

/// Write(encode(a)) then Read(encode(b)) on an erased cell. The cell is left
/// programmed unless `opt.auto_erase` is set.
inline MultiplicationRecord multiply(CellState& cell, const CellCalibration& cal, const OperandMapping& m, double a,
                                     double b, const NoiseModel& noise, Rng& rng, const MultiplyOptions& opt = {},
                                     EnergyLedger* ledger = nullptr) {
    m.validate(cal);
    if (!cell.at_baseline()) throw ProtocolError("multiply needs an erased cell (stale multiplicand)");
    const double e_write = encode_multiplicand(m, a);
    const double e_in = encode_multiplier(m, b);
    const double offset = detail::offset_for(cell, cal, e_in, noise, rng, opt, ledger);
    detail::do_write(cell, cal, m, e_write, noise, rng, ledger);
    auto rec = detail::do_read(cell, cal, m, a, b, offset, noise, rng, ledger);
    if (opt.auto_erase) detail::do_erase(cell, cal, ledger);
    return rec;
}

/// n_a x n_b equally spaced operands. Default order: one Write per a, then
/// every b read against it, then Erase.
inline std::vector<MultiplicationRecord> run_grid(CellState& cell, const CellCalibration& cal,
                                                  const OperandMapping& m, int n_a, int n_b, const NoiseModel& noise,
                                                  Rng& rng, const MultiplyOptions& opt = {},
                                                  EnergyLedger* ledger = nullptr) {
    if (n_a < 1 || n_b < 1) throw ConfigError("grid sizes must be >= 1");
    m.validate(cal);
    if (!cell.at_baseline()) detail::do_erase(cell, cal, ledger);
    const auto as = detail::grid_points(n_a);
    const auto bs = detail::grid_points(n_b);
    std::vector<MultiplicationRecord> out;
    out.reserve(as.size() * bs.size());
    for (double a : as) {
        if (opt.write_per_op) {
            for (double b : bs) {
                MultiplyOptions single = opt;
                single.auto_erase = true;
                out.push_back(multiply(cell, cal, m, a, b, noise, rng, single, ledger));
            }
            continue;
        }
        std::vector<double> offsets;
        offsets.reserve(bs.size());
        for (double b : bs) offsets.push_back(detail::offset_for(cell, cal, encode_multiplier(m, b), noise, rng, opt, ledger));
        detail::do_write(cell, cal, m, encode_multiplicand(m, a), noise, rng, ledger);
        for (std::size_t j = 0; j < bs.size(); ++j)
            out.push_back(detail::do_read(cell, cal, m, a, bs[j], offsets[j], noise, rng, ledger));
        detail::do_erase(cell, cal, ledger);
    }
    return out;
}

struct ErrorStats {
    double mean = 0.0;
    double sd = 0.0;
    stats::Histogram histogram;
};

inline ErrorStats error_stats(const std::vector<MultiplicationRecord>& records, std::size_t bins = 25) {
    if (records.empty()) throw NumericError("error_stats needs at least one record");
    std::vector<double> errs;
    errs.reserve(records.size());
    for (const auto& r : records) errs.push_back(r.error);
    return {stats::mean(errs), stats::stddev(errs), stats::symmetric_histogram(errs, bins)};
}

inline std::string records_csv(const std::vector<MultiplicationRecord>& records) {
    csv::Writer w({"a", "b", "e_write_pJ", "e_in_pJ", "e_out_pJ", "c_measured", "c_exact", "error"});
    for (const auto& r : records)
        w.row({csv::number(r.a), csv::number(r.b), csv::number(r.e_write), csv::number(r.e_in),
               csv::number(r.raw_output_energy), csv::number(r.c_measured), csv::number(r.c_exact),
               csv::number(r.error)});
    return w.str();
}

}  // namespace phimc
