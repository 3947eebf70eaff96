#include <catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "phimc/phimc.hpp"

using namespace phimc;
using Catch::Approx;

namespace {
const DeviceProfile kProfile = fig4_profile();
const CellCalibration& kCal = kProfile.cell;
const OperandMapping kMap = OperandMapping::from(kCal, kProfile.e_in_max);

Eigen::MatrixXd to_eigen(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}
Eigen::VectorXd to_eigen(const Vector& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

Matrix from_eigen(const Eigen::MatrixXd& e) {
    Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    for (Eigen::Index i = 0; i < e.rows(); ++i)
        for (Eigen::Index j = 0; j < e.cols(); ++j) m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = e(i, j);
    return m;
}

Eigen::MatrixXd random_eigen(int n, Rng& rng) {
    Eigen::MatrixXd b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = 2.0 * rng.uniform() - 1.0;
    return b;
}

// SPD test matrix B B^T / n + I, built in the test from its own samples.
LinearSystem spd_system(int n, std::uint64_t seed) {
    Rng rng(seed);
    const Eigen::MatrixXd b = random_eigen(n, rng);
    Eigen::MatrixXd a = b * b.transpose() / n + Eigen::MatrixXd::Identity(n, n);
    a = 0.5 * (a + a.transpose());
    Vector rhs(static_cast<std::size_t>(n));
    for (auto& v : rhs) v = 2.0 * rng.uniform() - 1.0;
    return {from_eigen(a), rhs, std::nullopt};
}

LinearSystem nonsymmetric_system(int n, std::uint64_t seed) {
    Rng rng(seed);
    const Eigen::MatrixXd a = random_eigen(n, rng) * 0.3 + 2.0 * Eigen::MatrixXd::Identity(n, n);
    Vector rhs(static_cast<std::size_t>(n));
    for (auto& v : rhs) v = 2.0 * rng.uniform() - 1.0;
    return {from_eigen(a), rhs, std::nullopt};
}

// Textbook CG on Eigen types; returns the relative residual of each iterate.
std::vector<double> reference_cg(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int iters) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size()), r = b, p = b;
    std::vector<double> out{1.0};
    for (int k = 0; k < iters; ++k) {
        const Eigen::VectorXd ap = a * p;
        const double alpha = r.squaredNorm() / p.dot(ap);
        x += alpha * p;
        const Eigen::VectorXd r_new = r - alpha * ap;
        p = r_new + (r_new.squaredNorm() / r.squaredNorm()) * p;
        r = r_new;
        out.push_back((b - a * x).norm() / b.norm());
    }
    return out;
}

// Minimum residual over the Krylov space K_k(A, b), via an orthonormal basis
// from Householder QR and a dense least-squares solve.
double krylov_min_residual(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, int k) {
    Eigen::MatrixXd basis(b.size(), k);
    basis.col(0) = b.normalized();
    for (int j = 1; j < k; ++j) {
        Eigen::VectorXd w = a * basis.col(j - 1);
        for (int pass = 0; pass < 2; ++pass)
            for (int i = 0; i < j; ++i) w -= basis.col(i).dot(w) * basis.col(i);
        basis.col(j) = w.normalized();
    }
    const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(basis).householderQ() * Eigen::MatrixXd::Identity(b.size(), k);
    const Eigen::MatrixXd aq = a * q;
    const Eigen::VectorXd y = aq.colPivHouseholderQr().solve(b);
    return (b - aq * y).norm() / b.norm();
}


SignedMatrixEncoding encode(const LinearSystem& sys, const NoiseModel& noise, std::uint64_t seed) {
    Rng rng(seed);
    return program_matrix(sys.a, kCal, kMap, noise, rng);
}

NoiseModel write_only() {
    NoiseModel n = NoiseModel::none();
    n.write_sd = 0.0035;
    return n;
}
}  // namespace

TEST_CASE("CG on the identity", "[solver]") {
    LinearSystem sys{Matrix::identity(4), {1.0, -2.0, 3.0, 0.5}, std::nullopt};
    SolverConfig cfg;
    const auto rep = cg(sys, exact_oracle(sys.a), cfg);
    CHECK(rep.converged());
    CHECK(rep.iterations == 1);
    CHECK(rep.x == sys.b);
    CHECK(rep.matvec_count == 1);
}

TEST_CASE("CG on seeded SPD systems matches dense solves and reference iterates", "[solver]") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto sys = spd_system(8, seed);
        SolverConfig cfg;
        cfg.max_iterations = 8;
        const auto rep = cg(sys, exact_oracle(sys.a), cfg);
        INFO("seed " << seed);
        CHECK(rep.converged());
        CHECK(rep.iterations <= 8);
        CHECK(rep.final_residual() < 1e-10);
        const Eigen::VectorXd direct = to_eigen(sys.a).ldlt().solve(to_eigen(sys.b));
        CHECK((to_eigen(rep.x) - direct).norm() <= 1e-9 * direct.norm());

        const auto ref = reference_cg(to_eigen(sys.a), to_eigen(sys.b), rep.iterations);
        REQUIRE(ref.size() == rep.residuals.size());
        for (std::size_t k = 0; k < ref.size(); ++k) CHECK(std::abs(ref[k] - rep.residuals[k]) <= 1e-10);
    }
}

TEST_CASE("CG rejects non-SPD matrices and reports breakdown", "[solver]") {
    LinearSystem bad{Matrix::from_rows({{1, 2}, {0, 1}}), {1, 1}, std::nullopt};
    CHECK_THROWS_AS(cg(bad, exact_oracle(bad.a), SolverConfig{}), NumericError);
    LinearSystem indefinite{Matrix::from_rows({{1, 2}, {2, 1}}), {1, 1}, std::nullopt};
    CHECK_THROWS_AS(cg(indefinite, exact_oracle(indefinite.a), SolverConfig{}), NumericError);

    // an oracle that flips curvature on an SPD system
    const auto sys = spd_system(4, 3);
    MatvecOracle flipped{[&sys](const Vector& v) {
        auto y = multiply(sys.a, v);
        for (auto& e : y) e = -e;
        return y;
    }};
    const auto rep = cg(sys, flipped, SolverConfig{});
    CHECK(rep.status == SolveStatus::Breakdown);
    CHECK_FALSE(rep.message.empty());
    CHECK(rep.residuals.size() == 1);
}

TEST_CASE("GMRES on the identity and on nonsymmetric systems", "[solver]") {
    LinearSystem id{Matrix::identity(4), {1.0, 2.0, 3.0, 4.0}, std::nullopt};
    SolverConfig cfg;
    cfg.inner = InnerMethod::GMRES;
    const auto one = gmres(id, exact_oracle(id.a), cfg);
    CHECK(one.converged());
    CHECK(one.iterations == 1);
    for (std::size_t i = 0; i < 4; ++i) CHECK(one.x[i] == Approx(id.b[i]));

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto sys = nonsymmetric_system(8, seed);
        cfg.max_iterations = 8;
        const auto rep = gmres(sys, exact_oracle(sys.a), cfg);
        INFO("seed " << seed);
        CHECK(rep.converged());
        CHECK(rep.iterations <= 8);
        CHECK(rep.final_residual() < 1e-10);
        const Eigen::VectorXd direct = to_eigen(sys.a).partialPivLu().solve(to_eigen(sys.b));
        CHECK((to_eigen(rep.x) - direct).norm() <= 1e-9 * direct.norm());
        // every iterate minimizes the residual over its Krylov space
        for (int k = 1; k <= std::min(rep.iterations, 6); ++k)
            CHECK(rep.residuals[static_cast<std::size_t>(k)] ==
                  Approx(krylov_min_residual(to_eigen(sys.a), to_eigen(sys.b), k)).epsilon(1e-6).margin(1e-12));
    }
}

TEST_CASE("restarted GMRES still converges", "[solver]") {
    const auto sys = nonsymmetric_system(12, 77);
    SolverConfig cfg;
    cfg.inner = InnerMethod::GMRES;
    cfg.restart = 4;
    cfg.max_iterations = 200;
    const auto rep = gmres(sys, exact_oracle(sys.a), cfg);
    CHECK(rep.converged());
    CHECK(sys.relative_residual(rep.x) < 1e-10);
}

TEST_CASE("analog-only solves hit a noise floor", "[solver][stochastic]") {
    const auto noise = write_only();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto sys = spd_system(8, seed);
        auto enc = encode(sys, noise, derive_seed(seed, 1));
        Rng rng(derive_seed(seed, 2));
        SolverConfig cfg;
        cfg.max_iterations = 50;
        const auto analog = cg(sys, analog_oracle(enc, noise, rng), cfg);
        INFO("seed " << seed);
        CHECK_FALSE(analog.converged());
        CHECK(analog.final_residual() >= 1e-3);

        cfg.inner = InnerMethod::GMRES;
        const auto g = gmres(sys, analog_oracle(enc, noise, rng), cfg);
        CHECK_FALSE(g.converged());
        CHECK(g.final_residual() >= 1e-3);
    }
}

TEST_CASE("mixed precision converges below the analog floor", "[solver][stochastic]") {
    const auto noise = write_only();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto sys = spd_system(8, seed);
        auto enc = encode(sys, noise, derive_seed(seed, 1));
        Rng rng(derive_seed(seed, 2));
        SolverConfig cfg;
        cfg.tolerance = 1e-9;
        cfg.max_iterations = 50;
        cfg.mode = SolveMode::Mixed;
        const auto mixed = solve(sys, &enc, noise, rng, cfg);
        INFO("seed " << seed);
        CHECK(mixed.converged());
        CHECK(mixed.final_residual() < 1e-9);
        CHECK(mixed.iterations <= 50);

        cfg.mode = SolveMode::Analog;
        cfg.tolerance = 1e-10;
        const auto analog = solve(sys, &enc, noise, rng, cfg);
        CHECK(mixed.final_residual() < 1e-2 * analog.final_residual());

        cfg.mode = SolveMode::Mixed;
        cfg.inner = InnerMethod::GMRES;
        cfg.tolerance = 1e-9;
        const auto mg = solve(sys, &enc, noise, rng, cfg);
        CHECK(mg.converged());
    }
}

TEST_CASE("noiseless mixed precision lands on the CG solution", "[solver]") {
    const auto none = NoiseModel::none();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto sys = spd_system(8, seed);
        auto enc = encode(sys, none, seed);
        Rng rng(seed);
        SolverConfig cfg;
        cfg.mode = SolveMode::Mixed;
        cfg.inner_iterations = 8;
        const auto mixed = solve(sys, &enc, none, rng, cfg);
        const auto plain = cg(sys, exact_oracle(sys.a), SolverConfig{});
        CHECK(mixed.converged());
        CHECK(mixed.iterations <= 2);
        const double nx = norm2(plain.x);
        CHECK(norm2(subtract(mixed.x, plain.x)) <= 1e-10 * nx);
        // the first outer step is a full inner CG pass, so it repeats plain CG
        const auto analog = cg(sys, analog_oracle(enc, none, rng), SolverConfig{});
        for (std::size_t k = 0; k < std::min(analog.residuals.size(), plain.residuals.size()); ++k)
            CHECK(std::abs(analog.residuals[k] - plain.residuals[k]) <= 1e-10);
    }
}

TEST_CASE("zero right-hand side", "[solver]") {
    auto sys = spd_system(4, 9);
    sys.b.assign(4, 0.0);
    auto enc = encode(sys, write_only(), 1);
    Rng rng(2);
    SolverConfig cfg;
    cfg.mode = SolveMode::Mixed;
    const auto rep = solve(sys, &enc, write_only(), rng, cfg);
    CHECK(rep.converged());
    CHECK(rep.iterations == 0);
    CHECK(rep.x == Vector(4, 0.0));
    CHECK(rep.matvec_count == 0);
    CHECK(rep.residuals == std::vector<double>{0.0});
}

TEST_CASE("divergence is detected and reported", "[solver]") {
    const auto sys = spd_system(6, 4);
    // an oracle that under-reports A by 10x makes every correction overshoot
    MatvecOracle weak{[&sys](const Vector& v) {
        auto y = multiply(sys.a, v);
        for (auto& e : y) e *= 0.1;
        return y;
    }};
    SolverConfig cfg;
    cfg.mode = SolveMode::Mixed;
    const auto rep = mixed_precision_solve(sys, weak, cfg);
    CHECK(rep.status == SolveStatus::Diverged);
    CHECK(rep.iterations == 3);
    CHECK_FALSE(rep.message.empty());
}

TEST_CASE("reported residuals are honest", "[solver][property]") {
    const auto noise = write_only();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto sys = spd_system(8, seed);
        auto enc = encode(sys, noise, seed);
        Rng rng(seed);
        for (auto mode : {SolveMode::Exact, SolveMode::Analog, SolveMode::Mixed}) {
            SolverConfig cfg;
            cfg.mode = mode;
            cfg.max_iterations = 30;
            const auto rep = solve(sys, &enc, noise, rng, cfg);
            REQUIRE_FALSE(rep.residuals.empty());
            const Eigen::VectorXd r = to_eigen(sys.b) - to_eigen(sys.a) * to_eigen(rep.x);
            CHECK(std::abs(rep.final_residual() - r.norm() / to_eigen(sys.b).norm()) <= 1e-12);
            CHECK(rep.matvec_trace.size() == rep.residuals.size());
            CHECK(rep.energy_trace.size() == rep.residuals.size());
        }
    }
}

TEST_CASE("device energy equals the read pulses spent", "[solver]") {
    const auto noise = write_only();
    const auto sys = spd_system(8, 5);
    auto enc = encode(sys, noise, 5);
    REQUIRE(enc.read_count() == 0);
    Rng rng(6);
    SolverConfig cfg;
    cfg.mode = SolveMode::Mixed;
    cfg.tolerance = 1e-9;
    const auto rep = solve(sys, &enc, noise, rng, cfg);
    double sum = 0.0;
    for (const auto* arr : {&enc.positive, &enc.negative})
        for (const auto& e : arr->ledger().entries())
            if (e.kind == EventKind::Read) sum += e.delivered;
    CHECK(rep.device_energy == enc.read_energy());
    CHECK(rep.device_energy == Approx(sum).epsilon(1e-14));
    CHECK(rep.device_energy > 0.0);
    for (std::size_t k = 1; k < rep.energy_trace.size(); ++k) CHECK(rep.energy_trace[k] >= rep.energy_trace[k - 1]);

    const auto exact = cg(sys, exact_oracle(sys.a), SolverConfig{});
    CHECK(exact.device_energy == 0.0);
}

TEST_CASE("solver configuration and system validation", "[solver]") {
    SolverConfig cfg;
    cfg.tolerance = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SolverConfig{};
    cfg.restart = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    LinearSystem ragged{Matrix(2, 3), {1, 2}, std::nullopt};
    CHECK_THROWS_AS(ragged.validate(), NumericError);
    LinearSystem mismatch{Matrix::identity(2), {1, 2, 3}, std::nullopt};
    CHECK_THROWS_AS(mismatch.validate(), NumericError);
    Rng rng(1);
    SolverConfig analog;
    analog.mode = SolveMode::Analog;
    LinearSystem ok{Matrix::identity(2), {1, 2}, std::nullopt};
    CHECK_THROWS_AS(solve(ok, nullptr, NoiseModel::none(), rng, analog), ConfigError);
}

TEST_CASE("report CSV and summary", "[solver]") {
    LinearSystem sys{Matrix::identity(3), {1, 2, 3}, std::nullopt};
    const auto rep = cg(sys, exact_oracle(sys.a), SolverConfig{});
    const auto rows = csv::parse(report_csv(rep));
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"iteration", "residual", "matvec_count", "energy_pJ"});
    CHECK(rows[1][1] == "1");
    CHECK(rows[2][2] == "1");
    CHECK(report_summary(rep, "exact").starts_with("exact: converged after 1 iterations"));
}
