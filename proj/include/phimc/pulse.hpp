#pragma once

#include <vector>

#include "phimc/errors.hpp"

namespace phimc {

/// A square optical pulse. Units: mW x ns = pJ.
struct PulseSpec {
    double power = 0.0;  ///< mW
    double width = 0.0;  ///< ns

    double energy() const { return power * width; }

    void validate() const {
        if (!(power >= 0.0)) throw ProtocolError("pulse power must be >= 0");
        if (!(width > 0.0)) throw ProtocolError("pulse width must be > 0");
    }
};

/// Single-shot Erase: a melt step at peak power followed by a longer,
/// lower-power step that lets the cell recrystallize.
struct DoubleStepPulse {
    PulseSpec step1;
    PulseSpec step2;

    double energy() const { return step1.energy() + step2.energy(); }
    double duration() const { return step1.width + step2.width; }
};

/// Legacy Erase: strictly decreasing powers.
struct PulseTrain {
    std::vector<PulseSpec> pulses;

    double energy() const {
        double sum = 0.0;
        for (const auto& p : pulses) sum += p.energy();
        return sum;
    }

    bool strictly_decreasing() const {
        for (std::size_t i = 1; i < pulses.size(); ++i)
            if (!(pulses[i].power < pulses[i - 1].power)) return false;
        return true;
    }
};

}  // namespace phimc
