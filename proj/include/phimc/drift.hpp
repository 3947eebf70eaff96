#pragma once

#include <algorithm>

#include "phimc/device_cell.hpp"

namespace phimc {

/// The probe is switched OFF for `off_duration` seconds and back ON at
/// `probe_power` mW. With off_duration == 0 the probe never left and no drift
/// accumulates, however long it has been on.
inline CellState probe_cycle(const CellState& state, const CellCalibration& cal, const DriftModel& model,
                             double probe_power, double off_duration) {
    if (!(off_duration >= 0.0)) throw ProtocolError("probe off duration must be >= 0");
    if (!(probe_power >= 0.0)) throw ProtocolError("probe power must be >= 0");
    CellState out = state;
    out.probe_power = probe_power;
    out.probe_on = true;
    if (off_duration == 0.0) return out;
    const double shift = model.relative_shift(probe_power);
    if (shift == 0.0) return out;
    const double level = cal.t_baseline + state.t_prog;
    // keep the physical transmittance inside (0, 1)
    const double hi = 1.0 - level - 1e-12;
    const double lo = -level + 1e-12;
    out.drift_offset = std::clamp(model.direction * shift * level, lo, hi);
    return out;
}

/// Relative transmission change caused by drift, e.g. 0.09 for a 9% shift.
inline double relative_drift(const CellState& state, const CellCalibration& cal) {
    return state.drift_offset / (cal.t_baseline + state.t_prog);
}

/// Re-issues the Write that set the current level.
inline CellState correct_drift(const CellState& state, const CellCalibration& cal, const NoiseModel& noise, Rng& rng) {
    if (!state.last_write_energy)
        throw ProtocolError("no recorded write energy; cannot correct drift");
    const double width = state.last_write_width.value_or(cal.width_reference);
    return write(state, cal, *state.last_write_energy, width, noise, rng).state;
}

}  // namespace phimc
