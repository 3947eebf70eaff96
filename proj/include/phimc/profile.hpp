#pragma once

// Device profiles: calibration, geometry, operand range, noise and drift in
// one flat key-value text file.
//
//   photonic-imc-cal v1
//   name = fig4
//   cell.e_threshold_pJ = 180
//   ...
//
// Blank lines and lines starting with '#' are ignored. Every key is required
// and unknown keys are rejected. Numbers are written in shortest round-trip
// form, so save(load(save(p))) is byte-identical to save(p).

#include <charconv>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "phimc/csv.hpp"
#include "phimc/device_cell.hpp"
#include "phimc/stochastic.hpp"

namespace phimc {

inline constexpr std::string_view kProfileHeader = "photonic-imc-cal v1";

struct DeviceProfile {
    std::string name = "fig4";
    CellGeometry geometry;
    CellCalibration cell;
    double e_in_max = 112.8;  ///< pJ, read energy that encodes b = 1
    NoiseModel noise;
    DriftModel drift;

    void validate() const {
        geometry.validate();
        cell.validate();
        noise.validate();
        drift.validate();
        if (!(e_in_max > 0.0 && e_in_max < cell.e_threshold))
            throw ConfigError("e_in_max must lie in (0, e_threshold)");
    }

    friend bool operator==(const DeviceProfile& a, const DeviceProfile& b) {
        auto fields = [](const DeviceProfile& p) {
            const auto& c = p.cell;
            return std::vector<double>{p.geometry.length_gst, p.geometry.width_waveguide, p.geometry.height_etch,
                                       c.e_threshold, c.e_linear_max, c.t_prog_max, c.t_baseline, c.width_reference,
                                       c.width_tau, c.width_saturation, c.settle_time, c.erase_peak_power,
                                       c.erase_step_fraction, c.erase_step1_width, c.erase_step2_width, p.e_in_max,
                                       p.noise.write_sd, p.noise.detector_sd, p.noise.pump_fluctuation_sd,
                                       p.drift.probe_hold_power, p.drift.probe_safe_power,
                                       p.drift.relaxation_magnitude, p.drift.direction};
        };
        return a.name == b.name && fields(a) == fields(b);
    }
};

/// 2 um cell, 25 ns single-shot Write between 180 and 354 pJ.
inline DeviceProfile fig4_profile() {
    DeviceProfile p;
    p.name = "fig4";
    p.noise.detector_sd = 0.02;
    return p;
}

/// 2 um cell written with 50 ns pulses between 350 and 600 pJ.
inline DeviceProfile fig3a_profile() {
    DeviceProfile p = fig4_profile();
    p.name = "fig3a";
    p.cell.e_threshold = 350.0;
    p.cell.e_linear_max = 600.0;
    p.cell.width_reference = 50.0;
    return p;
}

inline DeviceProfile builtin_profile(std::string_view name) {
    if (name == "fig4") return fig4_profile();
    if (name == "fig3a") return fig3a_profile();
    throw ConfigError("unknown built-in profile '" + std::string(name) + "'");
}

namespace detail {

template <class Fn>
void for_each_profile_field(DeviceProfile& p, Fn&& fn) {
    fn("geometry.length_gst_um", p.geometry.length_gst);
    fn("geometry.width_waveguide_um", p.geometry.width_waveguide);
    fn("geometry.height_etch_nm", p.geometry.height_etch);
    fn("cell.e_threshold_pJ", p.cell.e_threshold);
    fn("cell.e_linear_max_pJ", p.cell.e_linear_max);
    fn("cell.t_prog_max", p.cell.t_prog_max);
    fn("cell.t_baseline", p.cell.t_baseline);
    fn("cell.width_reference_ns", p.cell.width_reference);
    fn("cell.width_tau_ns", p.cell.width_tau);
    fn("cell.width_saturation_ns", p.cell.width_saturation);
    fn("cell.settle_time_ns", p.cell.settle_time);
    fn("cell.erase_peak_power_mW", p.cell.erase_peak_power);
    fn("cell.erase_step_fraction", p.cell.erase_step_fraction);
    fn("cell.erase_step1_width_ns", p.cell.erase_step1_width);
    fn("cell.erase_step2_width_ns", p.cell.erase_step2_width);
    fn("scalar.e_in_max_pJ", p.e_in_max);
    fn("noise.write_sd", p.noise.write_sd);
    fn("noise.detector_sd_pJ", p.noise.detector_sd);
    fn("noise.pump_fluctuation_sd", p.noise.pump_fluctuation_sd);
    fn("drift.probe_hold_power_mW", p.drift.probe_hold_power);
    fn("drift.probe_safe_power_mW", p.drift.probe_safe_power);
    fn("drift.relaxation_magnitude", p.drift.relaxation_magnitude);
    fn("drift.direction", p.drift.direction);
}

inline std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

inline std::string format_profile(const DeviceProfile& profile) {
    DeviceProfile p = profile;
    std::string out(kProfileHeader);
    out += "\nname = " + p.name + "\n";
    detail::for_each_profile_field(p, [&](std::string_view key, double& v) {
        out += std::string(key) + " = " + detail::shortest(v) + "\n";
    });
    return out;
}

inline DeviceProfile parse_profile(std::string_view text) {
    std::vector<std::string_view> lines;
    for (std::size_t pos = 0; pos <= text.size();) {
        const std::size_t nl = std::min(text.find('\n', pos), text.size());
        lines.push_back(detail::trim(text.substr(pos, nl - pos)));
        pos = nl + 1;
    }
    std::size_t i = 0;
    while (i < lines.size() && (lines[i].empty() || lines[i].front() == '#')) ++i;
    if (i == lines.size() || lines[i] != kProfileHeader)
        throw ConfigError("profile: missing or unsupported header (expected '" + std::string(kProfileHeader) + "')");

    std::map<std::string, std::string, std::less<>> values;
    for (++i; i < lines.size(); ++i) {
        const auto line = lines[i];
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("profile: line without '=': " + std::string(line));
        const auto key = std::string(detail::trim(line.substr(0, eq)));
        if (!values.emplace(key, std::string(detail::trim(line.substr(eq + 1)))).second)
            throw ConfigError("profile: duplicate key '" + key + "'");
    }

    DeviceProfile p;
    auto take = [&](std::string_view key) {
        auto it = values.find(key);
        if (it == values.end()) throw ConfigError("profile: missing key '" + std::string(key) + "'");
        std::string v = it->second;
        values.erase(it);
        return v;
    };
    p.name = take("name");
    detail::for_each_profile_field(p, [&](std::string_view key, double& v) {
        const std::string raw = take(key);
        const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
        if (res.ec != std::errc() || res.ptr != raw.data() + raw.size() || !std::isfinite(v))
            throw ConfigError("profile: non-numeric value for '" + std::string(key) + "': '" + raw + "'");
    });
    if (!values.empty()) throw ConfigError("profile: unknown key '" + values.begin()->first + "'");
    p.validate();
    return p;
}

inline DeviceProfile load_profile(const std::string& path) { return parse_profile(csv::read_file(path)); }

inline void save_profile(const std::string& path, const DeviceProfile& p) {
    p.validate();
    csv::write_file(path, format_profile(p));
}

/// A built-in profile name ("fig4", "fig3a") or a profile file path.
inline DeviceProfile resolve_profile(const std::string& name_or_path) {
    if (name_or_path == "fig4" || name_or_path == "fig3a") return builtin_profile(name_or_path);
    return load_profile(name_or_path);
}

}  // namespace phimc
