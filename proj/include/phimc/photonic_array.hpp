#pragma once

// Analog matrix-vector multiplication on a grid of cells.
//
// A real matrix is stored as two non-negative arrays, A = scale * (A+ - A-),
// each entry written as a multiplicand in [0, 1]. The input vector is split
// the same way and sent as read-pulse energies, giving four non-negative
// passes whose decoded products are summed per row.

#include <cstdint>
#include <vector>

#include "phimc/dense.hpp"
#include "phimc/scalar_mult.hpp"

namespace phimc {

class CellArray {
public:
    CellArray(std::size_t rows, std::size_t cols, const CellCalibration& cal, const OperandMapping& mapping)
        : rows_(rows), cols_(cols), cells_(rows * cols), cal_(cal), mapping_(mapping) {
        cal_.validate();
        mapping_.validate(cal_);
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const CellCalibration& calibration() const { return cal_; }
    const OperandMapping& mapping() const { return mapping_; }
    const EnergyLedger& ledger() const { return ledger_; }

    const CellState& cell(std::size_t i, std::size_t j) const { return cells_.at(i * cols_ + j); }

    /// Erase then Write the multiplicand `a` into cell (i, j).
    void program(std::size_t i, std::size_t j, double a, const NoiseModel& noise, Rng& rng) {
        CellState& c = cells_.at(i * cols_ + j);
        if (!c.at_baseline()) detail::do_erase(c, cal_, &ledger_);
        detail::do_write(c, cal_, mapping_, encode_multiplicand(mapping_, a), noise, rng, &ledger_);
    }

    /// Decoded product of cell (i, j) with multiplier `b`. A zero multiplier sends no pulse.
    double multiply(std::size_t i, std::size_t j, double b, const NoiseModel& noise, Rng& rng) {
        const double e_in = encode_multiplier(mapping_, b);
        if (e_in == 0.0) return 0.0;
        const CellState& c = cells_.at(i * cols_ + j);
        ledger_.record(EventKind::Read, e_in, absorbed_energy(c, cal_, e_in));
        const double out = read(c, cal_, e_in, noise, rng);
        return decode_product(cal_, mapping_, out, cal_.t_baseline * e_in);
    }

    /// Level stored in cell (i, j) as a multiplicand in [0, 1].
    double stored_value(std::size_t i, std::size_t j) const {
        return cell(i, j).t_prog / cal_.t_prog_max;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<CellState> cells_;
    CellCalibration cal_;
    OperandMapping mapping_;
    EnergyLedger ledger_;
};

struct SignedMatrixEncoding {
    CellArray positive;
    CellArray negative;
    double scale = 1.0;
    Matrix target;  ///< the matrix the cells were asked to hold

    std::size_t rows() const { return target.rows(); }
    std::size_t cols() const { return target.cols(); }

    /// Matrix as currently held by the cells.
    Matrix decode() const {
        Matrix m(rows(), cols());
        for (std::size_t i = 0; i < rows(); ++i)
            for (std::size_t j = 0; j < cols(); ++j)
                m(i, j) = scale * (positive.stored_value(i, j) - negative.stored_value(i, j));
        return m;
    }

    /// Delivered energy of every read pulse sent so far, pJ.
    double read_energy() const {
        return positive.ledger().delivered(EventKind::Read) + negative.ledger().delivered(EventKind::Read);
    }

    std::size_t read_count() const {
        return positive.ledger().count(EventKind::Read) + negative.ledger().count(EventKind::Read);
    }
};

namespace detail {

inline void program_row(SignedMatrixEncoding& enc, std::size_t i, const NoiseModel& noise, Rng& rng) {
    for (std::size_t j = 0; j < enc.cols(); ++j) {
        const double v = enc.target(i, j) / enc.scale;
        enc.positive.program(i, j, v > 0.0 ? v : 0.0, noise, rng);
        enc.negative.program(i, j, v < 0.0 ? -v : 0.0, noise, rng);
    }
}

}  // namespace detail

/// Writes A into a pair of arrays. Programming happens once; every later
/// matvec reuses the non-volatile state.
inline SignedMatrixEncoding program_matrix(CellArray positive, CellArray negative, const Matrix& a,
                                           const NoiseModel& noise, Rng& rng) {
    if (a.empty()) throw ConfigError("cannot program an empty matrix");
    if (!a.all_finite()) throw ConfigError("matrix has non-finite entries");
    if (a.rows() > positive.rows() || a.cols() > positive.cols() || a.rows() > negative.rows() ||
        a.cols() > negative.cols())
        throw ConfigError("matrix dimensions exceed array capacity");
    const double m = a.max_abs();
    SignedMatrixEncoding enc{std::move(positive), std::move(negative), m > 0.0 ? m : 1.0, a};
    for (std::size_t i = 0; i < a.rows(); ++i) detail::program_row(enc, i, noise, rng);
    return enc;
}

inline SignedMatrixEncoding program_matrix(const Matrix& a, const CellCalibration& cal, const OperandMapping& mapping,
                                           const NoiseModel& noise, Rng& rng) {
    return program_matrix(CellArray(a.rows(), a.cols(), cal, mapping), CellArray(a.rows(), a.cols(), cal, mapping), a,
                          noise, rng);
}

/// Erases and rewrites one row. Values must fit the existing scale.
inline void reprogram_row(SignedMatrixEncoding& enc, std::size_t row, const Vector& values, const NoiseModel& noise,
                          Rng& rng) {
    if (row >= enc.rows()) throw ProtocolError("row index out of range");
    if (values.size() != enc.cols()) throw ProtocolError("row length does not match matrix");
    if (!all_finite(values)) throw ProtocolError("row has non-finite values");
    if (max_abs(values) > enc.scale) throw ProtocolError("row exceeds the encoding scale; reprogram the whole matrix");
    for (std::size_t j = 0; j < enc.cols(); ++j) enc.target(row, j) = values[j];
    detail::program_row(enc, row, noise, rng);
}

/// y = A x through four non-negative device passes.
inline Vector matvec(SignedMatrixEncoding& enc, const Vector& x, const NoiseModel& noise, Rng& rng) {
    if (x.size() != enc.cols()) throw NumericError("matvec dimension mismatch");
    if (!all_finite(x)) throw NumericError("matvec input has non-finite entries");
    Vector y(enc.rows(), 0.0);
    const double sx = max_abs(x);
    if (sx == 0.0) return y;
    Vector xp(x.size()), xn(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double v = x[j] / sx;
        xp[j] = v > 0.0 ? v : 0.0;
        xn[j] = v < 0.0 ? -v : 0.0;
    }
    auto pass = [&](CellArray& cells, const Vector& v) {
        Vector out(enc.rows(), 0.0);
        for (std::size_t i = 0; i < enc.rows(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < enc.cols(); ++j) acc += cells.multiply(i, j, v[j], noise, rng);
            out[i] = acc;
        }
        return out;
    };
    const Vector pp = pass(enc.positive, xp);
    const Vector nn = pass(enc.negative, xn);
    const Vector pn = pass(enc.positive, xn);
    const Vector np = pass(enc.negative, xp);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = enc.scale * sx * ((pp[i] + nn[i]) - (pn[i] + np[i]));
    return y;
}

/// Alternative mapping: the vector is written into a row of cells and the
/// matrix rows are sent as pulse energies. The vector has to be reprogrammed
/// for every product, so each call pays the Write/Erase cost.
inline Vector matvec_vector_stored(const Matrix& a, const Vector& x, const CellCalibration& cal,
                                   const OperandMapping& mapping, const NoiseModel& noise, Rng& rng,
                                   EnergyLedger* ledger = nullptr) {
    if (x.size() != a.cols()) throw NumericError("matvec dimension mismatch");
    if (!all_finite(x) || !a.all_finite()) throw NumericError("matvec input has non-finite entries");
    Vector y(a.rows(), 0.0);
    const double sx = max_abs(x);
    const double sa = a.max_abs();
    if (sx == 0.0 || sa == 0.0) return y;
    CellArray pos(1, x.size(), cal, mapping), neg(1, x.size(), cal, mapping);
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double v = x[j] / sx;
        pos.program(0, j, v > 0.0 ? v : 0.0, noise, rng);
        neg.program(0, j, v < 0.0 ? -v : 0.0, noise, rng);
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            const double v = a(i, j) / sa;
            const double ap = v > 0.0 ? v : 0.0, an = v < 0.0 ? -v : 0.0;
            acc += pos.multiply(0, j, ap, noise, rng) + neg.multiply(0, j, an, noise, rng) -
                   pos.multiply(0, j, an, noise, rng) - neg.multiply(0, j, ap, noise, rng);
        }
        y[i] = sa * sx * acc;
    }
    if (ledger) {
        for (const auto* arr : {&pos, &neg})
            for (const auto& e : arr->ledger().entries()) ledger->record(e.kind, e.delivered, e.absorbed);
    }
    return y;
}

}  // namespace phimc
