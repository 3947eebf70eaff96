#pragma once

// Behavioural model of one GST cell on a waveguide.
//
// Transmittance T = t_baseline + t_prog + drift_offset, where t_prog is the
// programmed delta above the fully crystalline baseline. Energies in pJ,
// powers in mW, widths in ns.

#include <algorithm>
#include <cmath>
#include <optional>

#include "phimc/errors.hpp"
#include "phimc/pulse.hpp"
#include "phimc/random.hpp"
#include "phimc/stochastic.hpp"

namespace phimc {

struct CellGeometry {
    double length_gst = 2.0;       ///< um
    double width_waveguide = 1.3;  ///< um
    double height_etch = 165.0;    ///< nm

    void validate() const {
        if (!(length_gst > 0.0 && width_waveguide > 0.0 && height_etch > 0.0))
            throw ConfigError("geometry dimensions must be > 0");
    }
};

struct CellCalibration {
    double e_threshold = 180.0;    ///< pJ, lowest energy that changes state
    double e_linear_max = 354.0;   ///< pJ, top of the linear Write range
    double t_prog_max = 0.143;     ///< programmed delta reached at e_linear_max
    double t_baseline = 0.37;      ///< crystalline transmittance T_0
    double width_reference = 25.0; ///< ns, width the linear map is calibrated at
    double width_tau = 25.0 / std::log(4.0);  ///< ns
    double width_saturation = 45.0;  ///< ns, widths at or beyond are fully saturated
    double settle_time = 200.0;    ///< ns, includes the pulse itself
    double erase_peak_power = 14.1;  ///< mW
    double erase_step_fraction = 0.4;
    double erase_step1_width = 25.0;   ///< ns
    double erase_step2_width = 100.0;  ///< ns

    void validate() const {
        if (!(t_baseline > 0.0 && t_baseline < 1.0))
            throw ConfigError("t_baseline must lie in (0, 1)");
        if (!(t_prog_max > 0.0) || !(t_baseline + t_prog_max < 1.0))
            throw ConfigError("t_prog_max must be > 0 with t_baseline + t_prog_max < 1");
        if (!(e_threshold >= 0.0 && e_threshold < e_linear_max))
            throw ConfigError("e_threshold must be below e_linear_max");
        if (!(erase_step_fraction > 0.0 && erase_step_fraction < 1.0))
            throw ConfigError("erase_step_fraction must lie in (0, 1)");
        if (!(width_reference > 0.0 && width_tau > 0.0 && width_saturation > 0.0))
            throw ConfigError("width constants must be > 0");
        if (!(settle_time >= 0.0)) throw ConfigError("settle_time must be >= 0");
        if (!(erase_peak_power > 0.0 && erase_step1_width > 0.0 && erase_step2_width > 0.0))
            throw ConfigError("erase pulse parameters must be > 0");
    }
};

struct CellState {
    double t_prog = 0.0;
    double drift_offset = 0.0;
    double probe_power = 0.1;  ///< mW
    bool probe_on = true;
    std::optional<double> last_write_energy;  ///< pJ
    std::optional<double> last_write_width;   ///< ns

    bool at_baseline() const { return t_prog == 0.0 && drift_offset == 0.0; }

    friend bool operator==(const CellState&, const CellState&) = default;
};

/// Physical transmittance of the cell as seen by a probe or read pulse.
inline double transmittance(const CellState& state, const CellCalibration& cal) {
    return cal.t_baseline + state.t_prog + state.drift_offset;
}

/// Saturating width response 1 - exp(-w/tau); widths at or beyond
/// `width_saturation` are treated as fully saturated (factor 1).
inline double width_factor(const CellCalibration& cal, double width) {
    if (width >= cal.width_saturation) return 1.0;
    return 1.0 - std::exp(-width / cal.width_tau);
}

/// Programmed delta that a noiseless pulse of `energy` and `width` targets.
/// Linear in energy between threshold and e_linear_max, scaled by the width
/// response relative to the reference width. Not clamped to t_prog_max;
/// write() applies the clamp.
inline double target_level(const CellCalibration& cal, double energy, double width) {
    if (!(energy >= 0.0)) throw ProtocolError("energy must be >= 0");
    if (!(width > 0.0)) throw ProtocolError("width must be > 0");
    const double x = std::clamp((energy - cal.e_threshold) / (cal.e_linear_max - cal.e_threshold), 0.0, 1.0);
    return cal.t_prog_max * (width_factor(cal, width) / width_factor(cal, cal.width_reference)) * x;
}

/// Energy absorbed by the GST, treating all non-transmitted light as absorbed.
inline double absorbed_energy(const CellState& state, const CellCalibration& cal, double energy) {
    if (!(energy >= 0.0)) throw ProtocolError("energy must be >= 0");
    return energy * (1.0 - (cal.t_baseline + state.t_prog));
}

struct WriteResult {
    CellState state;
    double transmitted_energy = 0.0;  ///< pJ, reported only
    double absorbed_energy = 0.0;     ///< pJ
};

/// Single-shot Write. `energy` is the nominal pulse energy; pump jitter is
/// applied before the level map, programming noise after it.
inline WriteResult write(const CellState& state, const CellCalibration& cal, double energy, double width,
                         const NoiseModel& noise, Rng& rng) {
    if (!(energy >= cal.e_threshold))
        throw ProtocolError("write energy below threshold; dispatch as a read");
    const double delivered = fluctuate_pump(noise, energy, rng);
    const double target = target_level(cal, std::max(delivered, 0.0), width);
    WriteResult out;
    out.transmitted_energy = energy * (cal.t_baseline + state.t_prog);
    out.absorbed_energy = absorbed_energy(state, cal, energy);
    out.state = state;
    out.state.t_prog = std::clamp(target + sample_write_noise(noise, cal.t_prog_max, rng), 0.0, cal.t_prog_max);
    out.state.drift_offset = 0.0;
    out.state.last_write_energy = energy;
    out.state.last_write_width = width;
    return out;
}

/// Sub-threshold read: output energy = energy x T plus detector noise.
inline double read(const CellState& state, const CellCalibration& cal, double energy, const NoiseModel& noise,
                   Rng& rng) {
    if (!(energy >= 0.0)) throw ProtocolError("read energy must be >= 0");
    if (!(energy < cal.e_threshold))
        throw ProtocolError("read energy at or above threshold would switch the cell");
    return energy * transmittance(state, cal) + sample_detector_noise(noise, rng);
}

/// True when `pulse` has the calibrated double-step shape.
inline bool matches_erase_shape(const CellCalibration& cal, const DoubleStepPulse& pulse) {
    constexpr double tol = 1e-9;
    return std::abs(pulse.step1.power - cal.erase_peak_power) <= tol &&
           std::abs(pulse.step1.width - cal.erase_step1_width) <= tol &&
           std::abs(pulse.step2.power - cal.erase_step_fraction * pulse.step1.power) <= tol &&
           std::abs(pulse.step2.width - cal.erase_step2_width) <= tol && pulse.step1.width < pulse.step2.width;
}

/// Single-shot Erase back to the crystalline baseline. Exact, noise-free.
inline CellState erase_single_shot(const CellState& state, const CellCalibration& cal, const DoubleStepPulse& pulse) {
    if (!matches_erase_shape(cal, pulse)) throw ProtocolError("erase pulse does not match calibrated double-step shape");
    CellState out = state;
    out.t_prog = 0.0;
    out.drift_offset = 0.0;
    out.last_write_energy.reset();
    out.last_write_width.reset();
    return out;
}

/// Legacy train Erase: recrystallizes downward to `target`.
inline CellState erase_train(const CellState& state, const CellCalibration& cal, const PulseTrain& train,
                             double target, const NoiseModel& noise, Rng& rng) {
    if (train.pulses.empty() || !train.strictly_decreasing())
        throw ProtocolError("erase train powers must be strictly decreasing");
    if (!(target >= 0.0)) throw ProtocolError("erase target must be >= 0");
    if (target > state.t_prog) throw ProtocolError("erase train cannot raise the level");
    CellState out = state;
    out.t_prog = std::clamp(target + sample_write_noise(noise, cal.t_prog_max, rng), 0.0, cal.t_prog_max);
    out.drift_offset = 0.0;
    // The new level is not tied to any Write energy, so it cannot be re-written.
    out.last_write_energy.reset();
    out.last_write_width.reset();
    return out;
}

}  // namespace phimc
