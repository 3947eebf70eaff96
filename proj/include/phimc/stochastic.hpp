#pragma once

// Noise and drift parameters plus the primitive samplers. Every sampler takes
// the random stream explicitly; a zero SD returns 0 without consuming it.

#include "phimc/errors.hpp"
#include "phimc/random.hpp"

namespace phimc {

struct NoiseModel {
    double write_sd = 0.0035;          ///< fraction of the full programmed range
    double detector_sd = 0.0;          ///< pJ, additive on every read
    double pump_fluctuation_sd = 0.0;  ///< relative, multiplicative on Write energy

    static NoiseModel none() { return {0.0, 0.0, 0.0}; }

    bool is_zero() const { return write_sd == 0.0 && detector_sd == 0.0 && pump_fluctuation_sd == 0.0; }

    void validate() const {
        if (!(write_sd >= 0.0) || !(detector_sd >= 0.0) || !(pump_fluctuation_sd >= 0.0))
            throw ConfigError("noise standard deviations must be >= 0");
    }
};

/// Probe-dependent relaxation. Drift is a step applied when the probe comes
/// back on after an OFF period, scaled by how hot the probe held the cell.
struct DriftModel {
    double probe_hold_power = 0.1;      ///< mW, full relaxation at or above this
    double probe_safe_power = 0.05;     ///< mW, no relaxation at or below this
    double relaxation_magnitude = 0.09; ///< relative transmission shift
    double direction = 1.0;             ///< +1 raises transmittance, -1 lowers it

    void validate() const {
        if (!(probe_safe_power < probe_hold_power))
            throw ConfigError("drift: probe_safe_power must be below probe_hold_power");
        if (!(relaxation_magnitude >= 0.0 && relaxation_magnitude < 1.0))
            throw ConfigError("drift: relaxation_magnitude must lie in [0, 1)");
        if (direction != 1.0 && direction != -1.0)
            throw ConfigError("drift: direction must be +1 or -1");
    }

    /// Relative shift produced by an OFF/ON cycle at `probe_power` mW.
    double relative_shift(double probe_power) const {
        if (probe_power <= probe_safe_power) return 0.0;
        if (probe_power >= probe_hold_power) return relaxation_magnitude;
        return relaxation_magnitude * (probe_power - probe_safe_power) /
               (probe_hold_power - probe_safe_power);
    }
};

/// Gaussian perturbation of a programmed level, SD = write_sd * t_prog_max.
inline double sample_write_noise(const NoiseModel& model, double t_prog_max, Rng& rng) {
    if (model.write_sd == 0.0) return 0.0;
    return rng.normal(0.0, model.write_sd * t_prog_max);
}

inline double sample_detector_noise(const NoiseModel& model, Rng& rng) {
    if (model.detector_sd == 0.0) return 0.0;
    return rng.normal(0.0, model.detector_sd);
}

/// Pulse energy after electro-optical conversion jitter.
inline double fluctuate_pump(const NoiseModel& model, double energy, Rng& rng) {
    if (model.pump_fluctuation_sd == 0.0) return energy;
    return energy * (1.0 + rng.normal(0.0, model.pump_fluctuation_sd));
}

}  // namespace phimc
