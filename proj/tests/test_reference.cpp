#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "sapinn/network.hpp"
#include "sapinn/reference.hpp"

using namespace sapinn;

namespace {

const ReferenceGrid& ac_grid() {
    static const ReferenceGrid g = make_reference(make_problem(Pde::AllenCahn));
    return g;
}

const ReferenceGrid& burgers_grid() {
    static const ReferenceGrid g = make_reference(make_problem(Pde::Burgers));
    return g;
}

// Crank-Nicolson diffusion with Adams-Bashforth advection on a uniform
// Dirichlet grid, solved by the Thomas algorithm. Independent of the
// quadrature oracle in every ingredient.
double burgers_fd_value(const Problem& p, double x_query, double t_end, int nx, int nt) {
    const double h = (p.x_hi - p.x_lo) / (nx - 1);
    const double dt = t_end / nt;
    const double nu = p.burgers_nu;
    const double r = nu * dt / (2.0 * h * h);
    const int m = nx - 2;

    Eigen::VectorXd u(nx);
    for (int i = 0; i < nx; ++i) u(i) = initial_condition(p, p.x_lo + h * i);

    auto advect = [&](const Eigen::VectorXd& v, Eigen::VectorXd& a) {
        for (int i = 1; i + 1 < nx; ++i) a(i - 1) = -v(i) * (v(i + 1) - v(i - 1)) / (2.0 * h);
    };

    // Constant tridiagonal (1 + 2r) with -r off-diagonals: precompute the
    // forward-elimination multipliers once.
    Eigen::VectorXd cp(m);
    cp(0) = -r / (1.0 + 2.0 * r);
    for (int i = 1; i < m; ++i) cp(i) = -r / (1.0 + 2.0 * r + r * cp(i - 1));

    Eigen::VectorXd a_prev(m), a_cur(m), rhs(m), dp(m);
    advect(u, a_prev);
    for (int step = 0; step < nt; ++step) {
        advect(u, a_cur);
        for (int i = 1; i + 1 < nx; ++i) {
            const double diff = u(i + 1) - 2.0 * u(i) + u(i - 1);
            rhs(i - 1) = u(i) + r * diff + dt * (1.5 * a_cur(i - 1) - 0.5 * a_prev(i - 1));
        }
        dp(0) = rhs(0) / (1.0 + 2.0 * r);
        for (int i = 1; i < m; ++i)
            dp(i) = (rhs(i) + r * dp(i - 1)) / (1.0 + 2.0 * r + r * cp(i - 1));
        u(m) = dp(m - 1);
        for (int i = m - 2; i >= 0; --i) u(i + 1) = dp(i) - cp(i) * u(i + 2);
        u(0) = u(nx - 1) = 0.0;
        std::swap(a_prev, a_cur);
    }

    const int iq = static_cast<int>(std::lround((x_query - p.x_lo) / h));
    REQUIRE(std::abs(p.x_lo + h * iq - x_query) < 1e-12);
    return u(iq);
}

}  // namespace

TEST_CASE("relative l2 on simple vectors") {
    Eigen::VectorXd a(3), b(3);
    a << 1.0, -2.0, 3.0;
    b = a;
    CHECK(relative_l2(a, b) == 0.0);
    CHECK(relative_l2(Eigen::VectorXd::Zero(3), b) == 1.0);
    CHECK(relative_l2(-a, b) == 2.0);

    CHECK_THROWS_AS((void)relative_l2(a, Eigen::VectorXd::Zero(3)), std::invalid_argument);
    CHECK_THROWS_AS((void)relative_l2(a, Eigen::VectorXd::Ones(4)), std::invalid_argument);
    CHECK_THROWS_AS((void)relative_l2(Eigen::VectorXd(), Eigen::VectorXd()),
                    std::invalid_argument);
}

TEST_CASE("relative l2 is invariant under common scaling") {
    Rng rng(31);
    Eigen::VectorXd u(40), v(40);
    for (int i = 0; i < 40; ++i) {
        u(i) = rng.uniform(-1.0, 1.0);
        v(i) = rng.uniform(-1.0, 1.0);
    }
    CHECK(relative_l2(4.0 * u, 4.0 * v) == relative_l2(u, v));
    CHECK(relative_l2(3.0 * u, 3.0 * v) ==
          doctest::Approx(relative_l2(u, v)).epsilon(1e-13));
}

TEST_CASE("helmholtz grid holds the analytic solution") {
    auto p = make_problem(Pde::Helmholtz);
    auto g = helmholtz_reference(p, 101, 81);
    CHECK(g.xs.size() == 101);
    CHECK(g.ys.size() == 81);
    CHECK(g.xs(0) == p.x_lo);
    CHECK(g.xs(100) == p.x_hi);
    CHECK(g.ys(0) == p.y_lo);
    CHECK(g.ys(80) == p.y_hi);
    for (int i = 1; i < 101; ++i) CHECK(g.xs(i) > g.xs(i - 1));
    for (int j = 1; j < 81; ++j) CHECK(g.ys(j) > g.ys(j - 1));

    constexpr double pi = std::numbers::pi;
    Rng rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const int i = static_cast<int>(rng.below(101));
        const int j = static_cast<int>(rng.below(81));
        const double want = std::sin(pi * g.xs(i)) * std::sin(4.0 * pi * g.ys(j));
        CHECK(g.u(i, j) == doctest::Approx(want).epsilon(1e-14));
    }
    CHECK_THROWS_AS((void)helmholtz_reference(make_problem(Pde::Burgers), 5, 5),
                    std::invalid_argument);
}

TEST_CASE("cole-hopf limits and symmetry") {
    auto p = make_problem(Pde::Burgers);
    CHECK(burgers_cole_hopf(p, 0.3, 0.0, 2001) == initial_condition(p, 0.3));

    double dev = 0.0;
    for (int i = 0; i <= 64; ++i) {
        const double x = -1.0 + 2.0 * i / 64.0;
        dev = std::max(dev, std::abs(burgers_cole_hopf(p, x, 1e-8, 2001) -
                                     initial_condition(p, x)));
    }
    CHECK(dev < 1e-6);

    for (double t : {0.1, 0.5, 1.0}) {
        CHECK(std::abs(burgers_cole_hopf(p, 0.0, t, 2001)) < 1e-14);
        for (double x : {0.15, 0.4, 0.85})
            CHECK(burgers_cole_hopf(p, -x, t, 2001) ==
                  doctest::Approx(-burgers_cole_hopf(p, x, t, 2001)).epsilon(1e-12));
    }

    CHECK_THROWS_AS((void)burgers_cole_hopf(p, 0.1, -0.1, 2001), std::invalid_argument);
    CHECK_THROWS_AS((void)burgers_cole_hopf(p, 0.1, 0.1, 2), std::invalid_argument);
    CHECK_THROWS_AS((void)burgers_cole_hopf(make_problem(Pde::AllenCahn), 0.1, 0.1, 2001),
                    std::invalid_argument);
}

TEST_CASE("cole-hopf values are quadrature-converged below 1e-8") {
    auto p = make_problem(Pde::Burgers);
    const double pts[][2] = {{0.25, 0.75}, {0.05, 1.0}, {0.1, 0.4}, {0.02, 0.6}, {-0.7, 0.2}};
    for (auto& q : pts) {
        const double coarse = burgers_cole_hopf(p, q[0], q[1], 12001);
        const double fine = burgers_cole_hopf(p, q[0], q[1], 24001);
        CHECK(std::abs(coarse - fine) < 1e-8);
    }
}

TEST_CASE("cole-hopf agrees with an independent finite-difference solve") {
    auto p = make_problem(Pde::Burgers);
    const double ch = burgers_cole_hopf(p, 0.25, 0.75, 12001);
    CHECK(std::abs(ch) > 0.1);
    const double fd = burgers_fd_value(p, 0.25, 0.75, 8193, 8192);
    CAPTURE(ch);
    CAPTURE(fd);
    CHECK(std::abs(ch - fd) < 1e-5);
}

TEST_CASE("allen-cahn reference mesh and initial slice") {
    const auto& g = ac_grid();
    auto p = make_problem(Pde::AllenCahn);
    CHECK(g.xs.size() == 512);
    CHECK(g.ys.size() == 201);
    CHECK(g.u.rows() == 512);
    CHECK(g.u.cols() == 201);
    CHECK(g.xs(0) == -1.0);
    CHECK(g.xs(511) < 1.0);
    CHECK(g.xs(256) == 0.0);
    CHECK(g.ys(0) == 0.0);
    CHECK(g.ys(200) == 1.0);

    for (int i = 0; i < 512; ++i) CHECK(g.u(i, 0) == initial_condition(p, g.xs(i)));
    CHECK(all_finite(g.u));
}

TEST_CASE("allen-cahn solution stays even in x") {
    // The initial profile is even and the equation preserves parity, so the
    // periodic wrap value U(-1, t) = U(1, t) comes for free from symmetry.
    const auto& g = ac_grid();
    double dev = 0.0;
    for (int j = 0; j <= 200; ++j)
        for (int i = 1; i < 512; ++i)
            dev = std::max(dev, std::abs(g.u(i, j) - g.u(512 - i, j)));
    CHECK(dev < 1e-9);
}

TEST_CASE("allen-cahn midpoint value is pinned") {
    const auto& g = ac_grid();
    CHECK(g.u(256, 200) == doctest::Approx(0.029579720752).epsilon(1e-5));
    CHECK(g.u(0, 200) == doctest::Approx(-0.999998883737).epsilon(1e-6));
}

TEST_CASE("allen-cahn grid passes a finite-difference residual audit") {
    const auto& g = ac_grid();
    auto p = make_problem(Pde::AllenCahn);
    const int n = 512;
    const double hx = g.xs(1) - g.xs(0);
    const double ht = g.ys(1) - g.ys(0);
    const double eps = p.ac_diffusion;

    // Second-order centered residual checked against a bound assembled from
    // divided-difference estimates of the truncation terms:
    //   time:      (ht^2/6) u_ttt   ~ |centered third difference| / (6 ht)
    //   diffusion: eps (hx^2/12) u_xxxx ~ eps |fourth difference| / (12 hx^2)
    // Divided differences undershoot the true derivatives inside the early
    // boundary layer near x = -1 (measured worst ratio 2.76 at t = 0.015),
    // so the bound carries a safety factor of 4.
    for (int j = 2; j <= 198; ++j)
        for (int i = 0; i < n; ++i) {
            const auto at = [&](int ii, int jj) { return g.u(((ii % n) + n) % n, jj); };
            const double u = at(i, j);
            const double ut = (at(i, j + 1) - at(i, j - 1)) / (2.0 * ht);
            const double uxx = (at(i + 1, j) - 2.0 * u + at(i - 1, j)) / (hx * hx);
            const double resid = ut - eps * uxx + 5.0 * u * u * u - 5.0 * u;

            const double d4x = std::abs(at(i + 2, j) - 4.0 * at(i + 1, j) + 6.0 * u -
                                        4.0 * at(i - 1, j) + at(i - 2, j));
            const double d3t = std::abs(at(i, j + 2) - 2.0 * at(i, j + 1) + 2.0 * at(i, j - 1) -
                                        at(i, j - 2)) /
                               2.0;
            const double bound = eps * d4x / (12.0 * hx * hx) + d3t / (6.0 * ht);
            REQUIRE(std::abs(resid) <= 4.0 * (bound + 1e-3));
        }
}

TEST_CASE("burgers reference mesh and initial row") {
    const auto& g = burgers_grid();
    auto p = make_problem(Pde::Burgers);
    CHECK(g.xs.size() == 256);
    CHECK(g.ys.size() == 100);
    CHECK(g.xs(0) == -1.0);
    CHECK(g.xs(255) == 1.0);
    CHECK(g.ys(0) == 0.0);
    CHECK(g.ys(99) == 1.0);
    for (int i = 0; i < 256; ++i) CHECK(g.u(i, 0) == initial_condition(p, g.xs(i)));
}

TEST_CASE("burgers grid passes a finite-difference residual audit") {
    const auto& g = burgers_grid();
    auto p = make_problem(Pde::Burgers);
    const double hx = g.xs(1) - g.xs(0);
    const double ht = g.ys(1) - g.ys(0);
    const double nu = p.burgers_nu;

    for (int j = 2; j <= 97; ++j)
        for (int i = 2; i <= 253; ++i) {
            const double u = g.u(i, j);
            const double ut = (g.u(i, j + 1) - g.u(i, j - 1)) / (2.0 * ht);
            const double ux = (g.u(i + 1, j) - g.u(i - 1, j)) / (2.0 * hx);
            const double uxx = (g.u(i + 1, j) - 2.0 * u + g.u(i - 1, j)) / (hx * hx);
            const double resid = ut + u * ux - nu * uxx;

            const double d4x = std::abs(g.u(i + 2, j) - 4.0 * g.u(i + 1, j) + 6.0 * u -
                                        4.0 * g.u(i - 1, j) + g.u(i - 2, j));
            const double d3x = std::abs(g.u(i + 2, j) - 2.0 * g.u(i + 1, j) +
                                        2.0 * g.u(i - 1, j) - g.u(i - 2, j)) /
                               2.0;
            const double d3t = std::abs(g.u(i, j + 2) - 2.0 * g.u(i, j + 1) +
                                        2.0 * g.u(i, j - 1) - g.u(i, j - 2)) /
                               2.0;
            const double bound = d3t / (6.0 * ht) + std::abs(u) * d3x / (6.0 * hx) +
                                 nu * d4x / (12.0 * hx * hx);
            REQUIRE(std::abs(resid) <= 2.0 * bound + 2e-3);
        }
}

TEST_CASE("helmholtz grid passes a finite-difference residual audit") {
    auto p = make_problem(Pde::Helmholtz);
    const auto g = helmholtz_reference(p, 1001, 1001);
    const double h = g.xs(1) - g.xs(0);
    constexpr double pi = std::numbers::pi;
    // (h^2/12)(|u_xxxx| + |u_yyyy|) <= (h^2/12)(pi^4 + (4 pi)^4)
    const double bound = 1.5 * h * h / 12.0 * (std::pow(pi, 4) + std::pow(4.0 * pi, 4));
    double worst = 0.0;
    for (int j = 1; j < 1000; ++j)
        for (int i = 1; i < 1000; ++i) {
            const double lap = (g.u(i + 1, j) + g.u(i - 1, j) + g.u(i, j + 1) + g.u(i, j - 1) -
                                4.0 * g.u(i, j)) /
                               (h * h);
            const double resid = lap + p.helm_k * p.helm_k * g.u(i, j) -
                                 forcing_q(p, g.xs(i), g.ys(j));
            worst = std::max(worst, std::abs(resid));
        }
    CHECK(worst < bound);
}

TEST_CASE("solver argument validation") {
    auto ac = make_problem(Pde::AllenCahn);
    CHECK_THROWS_AS((void)allen_cahn_reference(make_problem(Pde::Burgers), 512, 1e-5, 201),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)allen_cahn_reference(ac, 511, 1e-5, 201), std::invalid_argument);
    CHECK_THROWS_AS((void)allen_cahn_reference(ac, 512, -1e-5, 201), std::invalid_argument);
    CHECK_THROWS_AS((void)allen_cahn_reference(ac, 512, 1e-5, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)allen_cahn_reference(ac, 512, 1e-5, 202), std::invalid_argument);
}

TEST_CASE("grid files round-trip bitwise in both formats") {
    auto p = make_problem(Pde::Helmholtz);
    auto g = helmholtz_reference(p, 21, 17);
    const auto dir = std::filesystem::temp_directory_path();

    for (bool binary : {false, true}) {
        const auto path = dir / (binary ? "sapinn_grid_rt.bin" : "sapinn_grid_rt.txt");
        save_grid(path.string(), g, binary);
        auto back = load_grid(path.string());
        CHECK(back.problem == g.problem);
        CHECK(back.provenance == g.provenance);
        CHECK(back.solver_meta == g.solver_meta);
        CHECK(back.xs == g.xs);
        CHECK(back.ys == g.ys);
        CHECK((back.u.array() == g.u.array()).all());
        std::filesystem::remove(path);
    }
}

TEST_CASE("malformed grid files are rejected") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto bad = dir / "sapinn_grid_bad";

    CHECK_THROWS_AS((void)load_grid((dir / "sapinn_grid_missing").string()),
                    std::runtime_error);

    std::ofstream(bad.string()) << "not a grid\n";
    CHECK_THROWS_AS((void)load_grid(bad.string()), std::runtime_error);

    std::ofstream(bad.string()) << "sapinn-grid v1 text\nproblem x\nprovenance y\n"
                                << "solver_meta z\nnx abc\nny 2\n";
    CHECK_THROWS_AS((void)load_grid(bad.string()), std::runtime_error);

    std::ofstream(bad.string()) << "sapinn-grid v1 text\nproblem x\nprovenance y\n"
                                << "solver_meta z\nnx 2\nny 1\nxs\n0.0\n";
    CHECK_THROWS_AS((void)load_grid(bad.string()), std::runtime_error);

    auto g = helmholtz_reference(make_problem(Pde::Helmholtz), 5, 5);
    save_grid(bad.string(), g, true);
    std::filesystem::resize_file(bad, std::filesystem::file_size(bad) - 24);
    CHECK_THROWS_AS((void)load_grid(bad.string()), std::runtime_error);
    std::filesystem::remove(bad);
}

TEST_CASE("grid predictions walk nodes column-major") {
    auto p = make_problem(Pde::Helmholtz);
    auto g = helmholtz_reference(p, 7, 5);
    Rng rng(19);
    auto net = glorot_init(std::array{2, 8, 1}, rng);

    const auto pred = grid_predictions(net, g);
    REQUIRE(pred.size() == 35);
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 7; ++i) {
            const double direct = forward(net, std::array{g.xs(i), g.ys(j)});
            CHECK(pred(j * 7 + i) == doctest::Approx(direct).epsilon(1e-12));
        }

    const Eigen::Map<const Eigen::VectorXd> ref(g.u.data(), g.u.size());
    CHECK(grid_relative_l2(net, g) == relative_l2(pred, ref));
}

TEST_CASE("metric is insensitive to doubling the evaluation mesh") {
    Rng rng(42);
    auto net = glorot_init(std::array{2, 16, 16, 1}, rng);

    auto hp = make_problem(Pde::Helmholtz);
    const double h1 = grid_relative_l2(net, helmholtz_reference(hp, 1001, 1001));
    const double h2 = grid_relative_l2(net, helmholtz_reference(hp, 2001, 2001));
    CHECK(std::abs(h1 - h2) < 0.01 * h1);

    auto bp = make_problem(Pde::Burgers);
    const double b1 = grid_relative_l2(net, burgers_reference(bp, 256, 100, 2001));
    const double b2 = grid_relative_l2(net, burgers_reference(bp, 511, 199, 2001));
    CHECK(std::abs(b1 - b2) < 0.01 * b1);

    auto ap = make_problem(Pde::AllenCahn);
    auto fine = allen_cahn_reference(ap, 1024, 1e-5, 401);
    ReferenceGrid half;
    half.xs.resize(512);
    half.ys.resize(201);
    half.u.resize(512, 201);
    for (int j = 0; j < 201; ++j) half.ys(j) = fine.ys(2 * j);
    for (int i = 0; i < 512; ++i) {
        half.xs(i) = fine.xs(2 * i);
        for (int j = 0; j < 201; ++j) half.u(i, j) = fine.u(2 * i, 2 * j);
    }
    const double a1 = grid_relative_l2(net, half);
    const double a2 = grid_relative_l2(net, fine);
    CHECK(std::abs(a1 - a2) < 0.01 * a1);
}

TEST_CASE("pinned benchmark meshes come out of make_reference") {
    const auto& a = ac_grid();
    CHECK(a.problem == "allen-cahn");
    CHECK(a.u.rows() == 512);
    CHECK(a.u.cols() == 201);

    const auto& b = burgers_grid();
    CHECK(b.problem == "burgers");
    CHECK(b.u.rows() == 256);
    CHECK(b.u.cols() == 100);

    auto h = make_reference(make_problem(Pde::Helmholtz));
    CHECK(h.problem == "helmholtz");
    CHECK(h.provenance == "analytic");
    CHECK(h.u.rows() == 1001);
    CHECK(h.u.cols() == 1001);
}
