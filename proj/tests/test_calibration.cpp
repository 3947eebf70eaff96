#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "phimc/phimc.hpp"

using namespace phimc;
using Catch::Approx;

namespace {

std::vector<SweepRecord> energy_sweep(const CellCalibration& cal, double lo, double hi, double step) {
    std::vector<SweepRecord> out;
    for (double e = lo; e <= hi + 1e-9; e += step) out.push_back({e, target_level(cal, e, cal.width_reference)});
    return out;
}

std::vector<SweepRecord> exponential_sweep(double tau, double amplitude, double lo, double hi, double step) {
    std::vector<SweepRecord> out;
    for (double w = lo; w <= hi + 1e-9; w += step) out.push_back({w, amplitude * (1.0 - std::exp(-w / tau))});
    return out;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("phimc_test_" + name);
}

std::string replace_line(std::string text, const std::string& prefix, const std::string& with) {
    const auto pos = text.find(prefix);
    REQUIRE(pos != std::string::npos);
    const auto end = text.find('\n', pos);
    return text.replace(pos, end - pos + 1, with);
}

}  // namespace

TEST_CASE("relative and absolute transmission changes", "[calibration]") {
    CHECK(to_relative_delta(0.0555, 0.37) == Approx(0.15));
    CHECK(to_absolute_delta(0.15, 0.37) == Approx(0.0555));
    CHECK(to_absolute_delta(to_relative_delta(0.1, 0.4), 0.4) == Approx(0.1));
    CHECK_THROWS_AS(to_relative_delta(0.1, 0.0), ConfigError);
}

TEST_CASE("linear response fit recovers exact data", "[calibration]") {
    const auto cal = fig4_profile().cell;
    const auto fit = fit_linear_response(energy_sweep(cal, 100.0, 500.0, 5.0));
    CHECK(fit.e_threshold == Approx(180.0).margin(180e-9));
    CHECK(fit.e_linear_max == Approx(354.0).margin(354e-9));
    CHECK(fit.t_prog_max == Approx(0.143).margin(0.143e-9));
    CHECK(fit.residual < 1e-12);
    CHECK(fit.tail_points > 0);
}

TEST_CASE("linear response fit tolerates response noise", "[calibration][stochastic]") {
    const auto cal = fig4_profile().cell;
    Rng rng(7);
    auto recs = energy_sweep(cal, 100.0, 500.0, 5.0);
    for (auto& r : recs) r.response += rng.normal(0.0, 0.0035 * cal.t_prog_max);
    const auto fit = fit_linear_response(recs);
    CHECK(fit.e_threshold == Approx(180.0).epsilon(0.02));
    CHECK(fit.e_linear_max == Approx(354.0).epsilon(0.02));
    CHECK(fit.t_prog_max == Approx(0.143).epsilon(0.02));
    CHECK(fit.residual == Approx(0.0035 * cal.t_prog_max).epsilon(0.3));
}

TEST_CASE("linear response fit rejects underdetermined input", "[calibration]") {
    CHECK_THROWS_AS(fit_linear_response({{200, 0.01}, {300, 0.09}}), NumericError);
    CHECK_THROWS_AS(fit_linear_response({{200, 0.01}, {200, 0.02}, {200, 0.03}}), NumericError);
    CHECK_THROWS_AS(fit_linear_response({{100, 0.1}, {200, 0.05}, {300, 0.0}}), NumericError);
}

TEST_CASE("linear response fit without a tail", "[calibration]") {
    const auto cal = fig4_profile().cell;
    const auto fit = fit_linear_response(energy_sweep(cal, 200.0, 340.0, 10.0));
    CHECK(fit.tail_points == 0);
    CHECK(fit.e_threshold == Approx(180.0).epsilon(1e-9));
    CHECK(fit.slope == Approx(0.143 / 174.0).epsilon(1e-9));
}

TEST_CASE("fit and generate round trip over random calibrations", "[calibration][property]") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        CellCalibration cal = fig4_profile().cell;
        cal.e_threshold = 150.0 + 100.0 * rng.uniform();
        cal.e_linear_max = cal.e_threshold + 100.0 + 150.0 * rng.uniform();
        cal.t_prog_max = 0.05 + 0.25 * rng.uniform();
        cal.t_baseline = 0.3;
        const double step = 2.0 + 6.0 * rng.uniform();
        const auto fit = fit_linear_response(energy_sweep(cal, 50.0, cal.e_linear_max + 150.0, step));
        INFO("trial " << trial);
        CHECK(fit.e_threshold == Approx(cal.e_threshold).epsilon(1e-9));
        CHECK(fit.e_linear_max == Approx(cal.e_linear_max).epsilon(1e-9));
        CHECK(fit.t_prog_max == Approx(cal.t_prog_max).epsilon(1e-9));
    }
}

TEST_CASE("width saturation fit", "[calibration]") {
    const double tau = 25.0 / std::log(4.0);
    const auto fit = fit_width_saturation(exponential_sweep(tau, 1.0, 2.0, 100.0, 2.0));
    CHECK(fit.tau == Approx(18.03).epsilon(0.01));
    CHECK(fit.tau == Approx(tau).epsilon(1e-6));
    CHECK(fit.amplitude == Approx(1.0).epsilon(1e-6));
    CHECK(fit.saturation_width == Approx(tau * std::log(100.0)).epsilon(1e-6));
    CHECK(fit.ok());
    CHECK_FALSE(fit.non_monotone);

    Rng rng(5);
    auto noisy = exponential_sweep(tau, 0.143, 2.0, 100.0, 2.0);
    for (auto& r : noisy) r.response += rng.normal(0.0, 0.0035 * 0.143);
    const auto nf = fit_width_saturation(noisy);
    CHECK(nf.tau == Approx(tau).epsilon(0.02));
    CHECK(nf.ok());
}

TEST_CASE("width saturation anchor from device sweeps", "[calibration]") {
    // responses from the cell model below the saturation width, where the
    // curve follows the two anchors
    const auto cal = fig4_profile().cell;
    std::vector<SweepRecord> recs;
    for (double w = 2.5; w < cal.width_saturation; w += 2.5)
        recs.push_back({w, width_factor(cal, w)});
    const auto fit = fit_width_saturation(recs);
    const double at25 = 1.0 - std::exp(-25.0 / fit.tau);
    CHECK(at25 == Approx(0.75).margin(0.02));
}

TEST_CASE("width saturation fit flags bad data", "[calibration]") {
    std::vector<SweepRecord> flat;
    for (double w = 5.0; w <= 60.0; w += 5.0) flat.push_back({w, 0.1});
    const auto f = fit_width_saturation(flat);
    CHECK_FALSE(f.ok());
    CHECK(f.large_residual);

    auto zigzag = exponential_sweep(18.0, 1.0, 5.0, 60.0, 5.0);
    zigzag[6].response = 0.1;
    const auto z = fit_width_saturation(zigzag);
    CHECK(z.non_monotone);

    CHECK_THROWS_AS(fit_width_saturation({{10, 0.5}, {20, 0.7}}), NumericError);
    CHECK_THROWS_AS(fit_width_saturation({{0, 0.0}, {10, 0.5}, {20, 0.7}}), NumericError);
}

TEST_CASE("sweep CSV input", "[calibration]") {
    const auto recs = parse_sweep_csv("energy_pJ,response\r\n200,0.01\r\n300,0.09\r\n");
    REQUIRE(recs.size() == 2);
    CHECK(recs[1].stimulus == 300.0);
    CHECK(recs[1].response == 0.09);
    CHECK_THROWS_AS(parse_sweep_csv("200,0.01\nx,0.09\n"), ConfigError);
    CHECK_THROWS_AS(parse_sweep_csv("200,0.01,5\n"), ConfigError);
}

TEST_CASE("profile save/load round trip", "[calibration][profile]") {
    for (const auto& profile : {fig4_profile(), fig3a_profile()}) {
        const auto path = temp_file(profile.name + ".cal");
        save_profile(path.string(), profile);
        const auto loaded = load_profile(path.string());
        CHECK(loaded == profile);
        const auto first = csv::read_file(path.string());
        save_profile(path.string(), loaded);
        CHECK(csv::read_file(path.string()) == first);
        CHECK(resolve_profile(path.string()) == profile);
        std::filesystem::remove(path);
    }
    // awkward values survive the text form exactly
    DeviceProfile p = fig4_profile();
    p.cell.width_tau = 25.0 / std::log(4.0);
    p.noise.write_sd = 0.1 + 0.2;
    p.name = "custom";
    CHECK(parse_profile(format_profile(p)) == p);
    CHECK(resolve_profile("fig4") == fig4_profile());
}

TEST_CASE("profile loading errors", "[calibration][profile]") {
    const std::string good = format_profile(fig4_profile());
    CHECK(good.starts_with("photonic-imc-cal v1\n"));

    std::string tampered = good;
    tampered.replace(tampered.find("v1"), 2, "v2");
    CHECK_THROWS_AS(parse_profile(tampered), ConfigError);

    try {
        (void)parse_profile(replace_line(good, "cell.t_baseline", ""));
        FAIL("missing key accepted");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("cell.t_baseline") != std::string::npos);
    }

    CHECK_THROWS_WITH(parse_profile(replace_line(good, "cell.t_prog_max", "cell.t_prog_max = abc\n")),
                      Catch::Matchers::ContainsSubstring("non-numeric"));
    CHECK_THROWS_WITH(parse_profile(good + "cell.t_prog_max = 0.1\n"), Catch::Matchers::ContainsSubstring("duplicate"));
    CHECK_THROWS_WITH(parse_profile(good + "cell.colour = 1\n"), Catch::Matchers::ContainsSubstring("unknown"));
    CHECK_THROWS_AS(parse_profile(replace_line(good, "cell.t_baseline", "cell.t_baseline = 0.95\n")), ConfigError);
    CHECK_THROWS_AS(load_profile("/nonexistent/profile.cal"), ConfigError);
    CHECK_THROWS_AS(builtin_profile("fig9"), ConfigError);
}
