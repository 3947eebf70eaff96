// photonic-imc: reproduces the device experiments and runs solve demos.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "phimc/phimc.hpp"

namespace fs = std::filesystem;
using namespace phimc;

namespace {

struct Common {
    std::string profile = "fig4";
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::string noise = "on";
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--profile", c.profile, "profile file, or built-in 'fig4' / 'fig3a'")->capture_default_str();
    cmd->add_option("--seed", c.seed, "64-bit seed (required for stochastic experiments)");
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--noise", c.noise, "device noise")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
}

std::uint64_t require_seed(const Common& c) {
    if (!c.seed) throw ConfigError("--seed is required for this experiment");
    return *c.seed;
}

void write_files(const Common& c, const experiments::Files& files) {
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + c.out + "': " + ec.message());
    for (const auto& [name, content] : files) csv::write_file((fs::path(c.out) / name).string(), content);
}

void print_summary(const experiments::Files& files, const std::string& name) {
    if (auto it = files.find(name); it != files.end()) std::cout << it->second;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-change photonic memory simulator and in-memory computing experiments"};
    app.require_subcommand(1);

    Common common;

    auto* sweep = app.add_subcommand("sweep-width", "programmed level vs Write pulse width");
    add_common(sweep, common);
    experiments::SweepWidthConfig sweep_cfg;
    sweep->add_option("--min", sweep_cfg.min_width, "shortest width, ns")->capture_default_str();
    sweep->add_option("--max", sweep_cfg.max_width, "longest width, ns")->capture_default_str();
    sweep->add_option("--step", sweep_cfg.step, "width step, ns")->capture_default_str();

    auto* levels = app.add_subcommand("condition-levels", "random-order multilevel programming and level error");
    add_common(levels, common);
    experiments::ConditionLevelsConfig levels_cfg;
    levels->add_option("--levels", levels_cfg.levels)->capture_default_str();
    levels->add_option("--repeats", levels_cfg.repeats)->capture_default_str();
    levels->add_option("--sequences", levels_cfg.sequences)->capture_default_str();
    levels->add_option("--per-sequence", levels_cfg.per_sequence, "distinct levels visited per sequence")
        ->capture_default_str();
    levels->add_option("--conditioning", levels_cfg.conditioning, "cycles per level to find its centroid")
        ->capture_default_str();

    auto* drift = app.add_subcommand("drift", "probe ON hold, OFF/ON at hold power, OFF/ON at reduced power");
    add_common(drift, common);
    experiments::DriftConfig drift_cfg;
    drift->add_option("--hold-hours", drift_cfg.hold_hours)->capture_default_str();
    drift->add_option("--off-hours", drift_cfg.off_hours_b, "OFF period at hold power")->capture_default_str();
    drift->add_option("--off-hours-safe", drift_cfg.off_hours_c, "OFF period at reduced power")->capture_default_str();

    auto* grid = app.add_subcommand("multiply-grid", "grid of scalar multiplications a x b");
    add_common(grid, common);
    experiments::MultiplyGridConfig grid_cfg;
    double pump_sd = 0.003;
    grid->add_option("--n-a", grid_cfg.n_a, "multiplicand values")->capture_default_str();
    grid->add_option("--n-b", grid_cfg.n_b, "multiplier values")->capture_default_str();
    grid->add_option("--pump-sd", pump_sd, "relative Write energy jitter when noise is on")->capture_default_str();
    grid->add_flag("--write-per-op", grid_cfg.options.write_per_op, "one Write per multiplication");
    grid->add_flag("--measured-offset", grid_cfg.options.measured_offset, "read the baseline offset instead of using T_0");

    auto* solve = app.add_subcommand("solve", "solve Ax = b in exact, analog and mixed-precision modes");
    add_common(solve, common);
    experiments::SolveConfig solve_cfg;
    std::string matrix, rhs, method = "cg";
    solve->add_option("--matrix", matrix, "matrix file (CSV or 'rows cols' dense text)");
    solve->add_option("--rhs", rhs, "right-hand side file; default b = A x for a seeded random x");
    solve->add_option("--generate", solve_cfg.generate_n, "size of a seeded SPD system when no matrix is given")
        ->capture_default_str();
    solve->add_option("--method", method, "Krylov method")->check(CLI::IsMember({"cg", "gmres"}))->capture_default_str();
    solve->add_option("--tol", solve_cfg.tolerance, "relative residual tolerance")->capture_default_str();
    solve->add_option("--max-iter", solve_cfg.max_iterations, "exact/analog Krylov iterations")->capture_default_str();
    solve->add_option("--max-outer", solve_cfg.max_outer, "mixed-precision outer iterations")->capture_default_str();
    solve->add_option("--inner", solve_cfg.inner, "inner analog Krylov iterations")->capture_default_str();
    solve->add_option("--restart", solve_cfg.restart, "GMRES restart length")->capture_default_str();
    solve->add_flag("--vector-in-cells", solve_cfg.vector_in_cells,
                    "store the vector in cells and send matrix rows as pulses (reprograms per product)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        const DeviceProfile profile = resolve_profile(common.profile);
        const bool noise = common.noise == "on";
        experiments::Files files;
        std::string summary;
        if (*sweep) {
            auto r = experiments::sweep_width(profile, sweep_cfg);
            std::cout << "curve(25 ns) / curve(saturated) = " << csv::number(r.ratio_at_reference, 8) << "\n";
            files = std::move(r.files);
        } else if (*levels) {
            levels_cfg.seed = require_seed(common);
            levels_cfg.noise = noise;
            files = experiments::condition_levels(profile, levels_cfg).files;
            summary = "condition_levels_summary.csv";
        } else if (*drift) {
            drift_cfg.seed = require_seed(common);
            drift_cfg.noise = noise;
            files = experiments::drift(profile, drift_cfg).files;
            summary = "drift_summary.csv";
        } else if (*grid) {
            grid_cfg.seed = require_seed(common);
            grid_cfg.noise = noise;
            grid_cfg.pump_sd = pump_sd;
            files = experiments::multiply_grid(profile, grid_cfg).files;
            summary = "multiply_grid_summary.csv";
        } else if (*solve) {
            solve_cfg.seed = require_seed(common);
            solve_cfg.noise = noise;
            if (!matrix.empty()) solve_cfg.matrix_path = matrix;
            if (!rhs.empty()) solve_cfg.rhs_path = rhs;
            solve_cfg.method = method == "cg" ? InnerMethod::CG : InnerMethod::GMRES;
            files = experiments::solve_system(profile, solve_cfg).files;
            summary = "solve_summary.txt";
        }
        write_files(common, files);
        if (!summary.empty()) print_summary(files, summary);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ProtocolError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
