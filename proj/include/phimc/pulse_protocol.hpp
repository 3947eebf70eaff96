#pragma once

// Pulse construction, Write/Erase/Read scheduling and energy bookkeeping.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "phimc/csv.hpp"
#include "phimc/device_cell.hpp"
#include "phimc/pulse.hpp"

namespace phimc {

inline PulseSpec make_write_pulse(const CellCalibration& cal, double energy) {
    if (!(energy >= cal.e_threshold)) throw ProtocolError("write pulse energy below threshold");
    return {energy / cal.width_reference, cal.width_reference};
}

inline PulseSpec make_read_pulse(const CellCalibration& cal, double energy) {
    if (!(energy >= 0.0 && energy < cal.e_threshold)) throw ProtocolError("read pulse energy must lie in [0, threshold)");
    return {energy / cal.width_reference, cal.width_reference};
}

inline DoubleStepPulse make_erase_pulse(const CellCalibration& cal) {
    return {{cal.erase_peak_power, cal.erase_step1_width},
            {cal.erase_step_fraction * cal.erase_peak_power, cal.erase_step2_width}};
}

inline PulseTrain make_erase_train(double start_power, int count, double decrement, double width) {
    if (count < 1) throw ProtocolError("erase train needs at least one pulse");
    if (!(width > 0.0)) throw ProtocolError("erase train width must be > 0");
    if (count > 1 && !(decrement > 0.0)) throw ProtocolError("erase train decrement must be > 0");
    const double last = start_power - (count - 1) * decrement;
    if (!(last > 0.0)) throw ProtocolError("erase train final power must be > 0");
    PulseTrain train;
    train.pulses.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) train.pulses.push_back({start_power - i * decrement, width});
    return train;
}

enum class EventKind { Write, Erase, Read };

inline const char* to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Write: return "write";
        case EventKind::Erase: return "erase";
        case EventKind::Read: return "read";
    }
    return "?";
}

inline bool changes_state(EventKind kind) { return kind != EventKind::Read; }

/// A pulse to be placed on the timeline. For an Erase, `power` is the peak
/// (step-1) power and `width` the total duration.
struct PulseEvent {
    EventKind kind = EventKind::Read;
    double power = 0.0;
    std::int64_t width_ns = 0;
    double energy = 0.0;

    static PulseEvent write(const PulseSpec& p) { return {EventKind::Write, p.power, whole_ns(p.width), p.energy()}; }
    static PulseEvent read(const PulseSpec& p) { return {EventKind::Read, p.power, whole_ns(p.width), p.energy()}; }
    static PulseEvent erase(const DoubleStepPulse& p) {
        return {EventKind::Erase, p.step1.power, whole_ns(p.duration()), p.energy()};
    }

    static std::int64_t whole_ns(double width) {
        const double r = std::round(width);
        if (!(width > 0.0) || std::abs(width - r) > 1e-9)
            throw ProtocolError("scheduled pulse widths must be whole nanoseconds");
        return static_cast<std::int64_t>(r);
    }
};

struct ScheduledEvent {
    std::int64_t start_ns = 0;
    PulseEvent event;

    std::int64_t end_ns() const { return start_ns + event.width_ns; }
};

struct Schedule {
    std::vector<ScheduledEvent> events;
    std::int64_t settle_ns = 0;
    std::int64_t period_ns = 0;  ///< time until the cycle can start again

    /// Repetition rate in MHz.
    double rate_mhz() const { return period_ns > 0 ? 1e3 / static_cast<double>(period_ns) : 0.0; }
};

/// How long an event blocks the device from its start: a state-changing
/// pulse needs `settle_ns` (pulse included) before the level is stable.
inline std::int64_t occupancy_ns(const PulseEvent& e, std::int64_t settle_ns) {
    return changes_state(e.kind) ? std::max(e.width_ns, settle_ns) : e.width_ns;
}

/// Places every event at its earliest feasible start, in order.
inline Schedule schedule_cycle(const std::vector<PulseEvent>& events, std::int64_t settle_ns) {
    if (events.empty()) throw ProtocolError("cannot schedule an empty event list");
    if (settle_ns < 0) throw ProtocolError("settle time must be >= 0");
    Schedule s;
    s.settle_ns = settle_ns;
    std::int64_t busy_until = 0;
    for (const auto& e : events) {
        if (e.width_ns <= 0) throw ProtocolError("scheduled pulse width must be > 0");
        s.events.push_back({busy_until, e});
        busy_until += occupancy_ns(e, settle_ns);
    }
    s.period_ns = busy_until;
    return s;
}

inline Schedule schedule_cycle(const std::vector<PulseEvent>& events, const CellCalibration& cal) {
    return schedule_cycle(events, PulseEvent::whole_ns(std::max(cal.settle_time, 1.0)));
}

/// Checks non-overlap and settle separation.
inline bool schedule_is_valid(const Schedule& s) {
    for (std::size_t i = 1; i < s.events.size(); ++i) {
        const auto& prev = s.events[i - 1];
        const auto& cur = s.events[i];
        if (cur.start_ns < prev.end_ns()) return false;
        if (cur.start_ns < prev.start_ns + occupancy_ns(prev.event, s.settle_ns)) return false;
    }
    return s.events.empty() || s.period_ns >= s.events.back().start_ns + occupancy_ns(s.events.back().event, s.settle_ns);
}

inline std::string schedule_csv(const Schedule& s) {
    csv::Writer w({"start_ns", "kind", "power_mW", "width_ns", "energy_pJ"});
    for (const auto& e : s.events)
        w.row({std::to_string(e.start_ns), to_string(e.event.kind), csv::number(e.event.power),
               std::to_string(e.event.width_ns), csv::number(e.event.energy)});
    return w.str();
}

struct LedgerEntry {
    EventKind kind = EventKind::Read;
    double delivered = 0.0;  ///< pJ
    double absorbed = 0.0;   ///< pJ
};

/// Running record of pulse energies sent into the device.
class EnergyLedger {
public:
    void record(EventKind kind, double delivered, double absorbed) {
        entries_.push_back({kind, delivered, absorbed});
        delivered_total_ += delivered;
        absorbed_total_ += absorbed;
    }

    const std::vector<LedgerEntry>& entries() const { return entries_; }
    double delivered_total() const { return delivered_total_; }
    double absorbed_total() const { return absorbed_total_; }

    std::size_t count(EventKind kind) const {
        return static_cast<std::size_t>(
            std::count_if(entries_.begin(), entries_.end(), [kind](const LedgerEntry& e) { return e.kind == kind; }));
    }

    double delivered(EventKind kind) const {
        double sum = 0.0;
        for (const auto& e : entries_)
            if (e.kind == kind) sum += e.delivered;
        return sum;
    }

    /// Totals equal an in-order re-summation of the entries.
    bool consistent() const {
        double d = 0.0, a = 0.0;
        for (const auto& e : entries_) {
            d += e.delivered;
            a += e.absorbed;
        }
        return d == delivered_total_ && a == absorbed_total_;
    }

private:
    std::vector<LedgerEntry> entries_;
    double delivered_total_ = 0.0;
    double absorbed_total_ = 0.0;
};

}  // namespace phimc
