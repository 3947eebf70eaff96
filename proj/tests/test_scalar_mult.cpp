#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "phimc/phimc.hpp"

using namespace phimc;
using Catch::Approx;

namespace {
const DeviceProfile kProfile = fig4_profile();
const CellCalibration& kCal = kProfile.cell;
const OperandMapping kMap = OperandMapping::from(kCal, kProfile.e_in_max);

NoiseModel write_only(double sd = 0.0035) {
    NoiseModel n = NoiseModel::none();
    n.write_sd = sd;
    return n;
}
}  // namespace

TEST_CASE("operand encodings", "[scalar_mult]") {
    CHECK(encode_multiplicand(kMap, 1.0) == 354.0);
    CHECK(encode_multiplicand(kMap, 0.0) == 180.0);
    CHECK(encode_multiplicand(kMap, 0.5) == 267.0);
    CHECK(encode_multiplier(kMap, 1.0) == 112.8);
    CHECK(encode_multiplier(kMap, 0.4) == Approx(45.12));
    CHECK(encode_multiplier(kMap, 0.0) == 0.0);
    CHECK_THROWS_AS(encode_multiplicand(kMap, 1.01), ProtocolError);
    CHECK_THROWS_AS(encode_multiplier(kMap, -0.1), ProtocolError);

    OperandMapping bad = kMap;
    bad.e_in_max = 200.0;
    CHECK_THROWS_AS(bad.validate(kCal), ConfigError);
}

TEST_CASE("multiply examples", "[scalar_mult]") {
    Rng rng(1);
    const auto none = NoiseModel::none();

    CellState cell;
    auto r = multiply(cell, kCal, kMap, 1.0, 1.0, none, rng);
    CHECK(r.c_measured == Approx(1.0).epsilon(1e-12));
    CHECK(cell.t_prog == Approx(0.143));  // left programmed

    CHECK_THROWS_AS(multiply(cell, kCal, kMap, 0.5, 0.5, none, rng), ProtocolError);

    cell = CellState{};
    r = multiply(cell, kCal, kMap, 1.0, 0.4, none, rng, {.auto_erase = true});
    CHECK(r.c_measured == Approx(0.4).epsilon(1e-12));
    CHECK(cell.at_baseline());

    r = multiply(cell, kCal, kMap, 0.0, 1.0, none, rng, {.auto_erase = true});
    CHECK(r.c_measured == Approx(0.0).margin(1e-15));
    CHECK(r.raw_output_energy == Approx(0.37 * 112.8).epsilon(1e-15));
}

TEST_CASE("noiseless products are exact on a 50x50 grid", "[scalar_mult][property]") {
    Rng rng(2);
    const auto none = NoiseModel::none();
    for (int i = 0; i < 50; ++i) {
        for (int j = 0; j < 50; ++j) {
            const double a = i / 49.0, b = j / 49.0;
            CellState cell;
            const auto r = multiply(cell, kCal, kMap, a, b, none, rng);
            CHECK(r.c_measured == Approx(a * b).margin(1e-12));
            CellState swapped;
            CHECK(multiply(swapped, kCal, kMap, b, a, none, rng).c_measured == Approx(r.c_measured).margin(1e-12));
        }
    }
}

TEST_CASE("a = 0 reads the pure offset", "[scalar_mult][property]") {
    Rng rng(3);
    for (int j = 0; j <= 100; ++j) {
        const double b = j / 100.0;
        CellState cell;
        const auto r = multiply(cell, kCal, kMap, 0.0, b, NoiseModel::none(), rng);
        CHECK(r.raw_output_energy == kCal.t_baseline * encode_multiplier(kMap, b));
    }
}

TEST_CASE("measured-offset mode agrees in the noiseless model", "[scalar_mult]") {
    Rng rng(4);
    CellState cell;
    const auto r = multiply(cell, kCal, kMap, 0.7, 0.3, NoiseModel::none(), rng, {.measured_offset = true});
    CHECK(r.offset_energy == Approx(0.37 * 0.3 * 112.8).epsilon(1e-14));
    CHECK(r.c_measured == Approx(0.21).margin(1e-12));
}

TEST_CASE("write-noise error grows in proportion to b", "[scalar_mult][stochastic]") {
    // Oracle: error = -b * (level noise) / t_prog_max, so SD(error) = b * write_sd.
    const auto noise = write_only();
    for (double b : {0.25, 0.5, 1.0}) {
        Rng rng(derive_seed(5, static_cast<std::uint64_t>(b * 100)));
        std::vector<double> errs;
        for (int k = 0; k < 20000; ++k) {
            CellState cell;
            errs.push_back(multiply(cell, kCal, kMap, 0.5, b, noise, rng).error);
        }
        INFO("b = " << b);
        CHECK(stats::stddev(errs) == Approx(b * 0.0035).epsilon(0.03));
        CHECK(stats::mean(errs) == Approx(0.0).margin(4.0 * b * 0.0035 / std::sqrt(20000.0)));
    }
}

TEST_CASE("grid layout and record contents", "[scalar_mult]") {
    Rng rng(6);
    CellState cell;
    EnergyLedger ledger;
    const auto recs = run_grid(cell, kCal, kMap, 13, 33, NoiseModel::none(), rng, {}, &ledger);
    REQUIRE(recs.size() == 429);
    for (const auto& r : recs) {
        CHECK(r.error == Approx(0.0).margin(1e-12));
        CHECK(r.c_measured == Approx((r.raw_output_energy - r.offset_energy) / (kCal.t_prog_max * kMap.e_in_max)));
    }
    CHECK(recs.front().a == 0.0);
    CHECK(recs.back().a == 1.0);
    CHECK(recs[1].b == Approx(1.0 / 32.0));
    CHECK(ledger.count(EventKind::Write) == 13);
    CHECK(ledger.count(EventKind::Erase) == 13);
    CHECK(ledger.count(EventKind::Read) == 13 * 32);  // b = 0 sends no light
    CHECK(ledger.consistent());
    CHECK(cell.at_baseline());

    CellState single;
    const auto one = run_grid(single, kCal, kMap, 1, 1, NoiseModel::none(), rng);
    REQUIRE(one.size() == 1);
    CHECK(one[0].c_measured == Approx(1.0));

    CHECK_THROWS_AS(run_grid(single, kCal, kMap, 0, 3, NoiseModel::none(), rng), ConfigError);
}

TEST_CASE("write-per-op grid issues one Write per product", "[scalar_mult]") {
    Rng rng(7);
    CellState cell;
    EnergyLedger ledger;
    const auto recs = run_grid(cell, kCal, kMap, 3, 4, NoiseModel::none(), rng, {.write_per_op = true}, &ledger);
    CHECK(recs.size() == 12);
    CHECK(ledger.count(EventKind::Write) == 12);
    CHECK(ledger.count(EventKind::Erase) == 12);
}

TEST_CASE("noisy grid error statistics", "[scalar_mult][stochastic]") {
    // Pool many seeded grids; with write noise only, |error| tracks b.
    const auto noise = write_only();
    std::vector<double> abs_err, as, bs;
    double mean_sum = 0.0;
    const int grids = 40;
    for (int g = 0; g < grids; ++g) {
        Rng rng(derive_seed(8, static_cast<std::uint64_t>(g)));
        CellState cell;
        const auto recs = run_grid(cell, kCal, kMap, 13, 33, noise, rng);
        const auto st = error_stats(recs);
        CHECK(std::abs(st.mean) <= 0.01);
        mean_sum += st.mean;
        for (const auto& r : recs) {
            abs_err.push_back(std::abs(r.error));
            as.push_back(r.a);
            bs.push_back(r.b);
        }
    }
    CHECK(std::abs(mean_sum / grids) <= 0.01);
    CHECK(stats::correlation(abs_err, bs) > 0.2);

    // Pump jitter makes the level error depend on the Write energy, hence on a.
    NoiseModel pumped = noise;
    pumped.pump_fluctuation_sd = 0.003;
    abs_err.clear();
    as.clear();
    for (int g = 0; g < grids; ++g) {
        Rng rng(derive_seed(9, static_cast<std::uint64_t>(g)));
        CellState cell;
        for (const auto& r : run_grid(cell, kCal, kMap, 13, 33, pumped, rng)) {
            abs_err.push_back(std::abs(r.error));
            as.push_back(r.a);
        }
    }
    CHECK(stats::correlation(abs_err, as) > 0.0);
}

TEST_CASE("error_stats", "[scalar_mult]") {
    std::vector<MultiplicationRecord> zero(10);
    const auto z = error_stats(zero);
    CHECK(z.mean == 0.0);
    CHECK(z.sd == 0.0);
    CHECK_THROWS_AS(error_stats({}), NumericError);

    Rng rng(10);
    std::vector<MultiplicationRecord> synthetic(5000);
    for (auto& r : synthetic) r.error = rng.normal(0.002, 0.004);
    const auto s = error_stats(synthetic);
    const double se_mean = 0.004 / std::sqrt(5000.0);
    const double se_sd = 0.004 / std::sqrt(2.0 * 4999.0);
    CHECK(std::abs(s.mean - 0.002) <= 3.0 * se_mean);
    CHECK(std::abs(s.sd - 0.004) <= 3.0 * se_sd);
    std::size_t total = 0;
    for (auto c : s.histogram.counts) total += c;
    CHECK(total == 5000);
    CHECK(s.histogram.counts.size() == 25);
}

TEST_CASE("records CSV", "[scalar_mult]") {
    Rng rng(11);
    CellState cell;
    const auto recs = run_grid(cell, kCal, kMap, 2, 2, NoiseModel::none(), rng);
    const auto rows = csv::parse(records_csv(recs));
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == std::vector<std::string>{"a", "b", "e_write_pJ", "e_in_pJ", "e_out_pJ", "c_measured", "c_exact",
                                              "error"});
    CHECK(rows[4][0] == "1");
    CHECK(rows[4][2] == "354");
    CHECK(rows[4][3] == "112.8");
}
