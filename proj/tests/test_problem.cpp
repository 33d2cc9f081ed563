#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "sapinn/problem.hpp"

using namespace sapinn;
using Eigen::MatrixXd;
constexpr double kPi = std::numbers::pi;

namespace {

// u(x, t) = x: one linear layer, weights (1, 0), zero bias.
NetworkParams identity_in_x() {
    NetworkParams p;
    p.sizes = {2, 1};
    MatrixXd W(1, 2);
    W << 1.0, 0.0;
    p.W.push_back(W);
    p.b.push_back(MatrixXd::Zero(1, 1));
    return p;
}

NetworkParams zero_net() {
    NetworkParams p;
    p.sizes = {2, 1};
    p.W.push_back(MatrixXd::Zero(1, 2));
    p.b.push_back(MatrixXd::Zero(1, 1));
    return p;
}

}  // namespace

TEST_CASE("problem factory pins the benchmark domains") {
    auto ac = make_problem(Pde::AllenCahn);
    CHECK(ac.periodic_x);
    CHECK(ac.has_initial);
    CHECK(ac.y_lo == 0.0);

    auto h = make_problem(Pde::Helmholtz);
    CHECK(!h.has_initial);
    CHECK(h.y_lo == -1.0);
    CHECK(h.helm_a2 == 4.0);
}

TEST_CASE("initial conditions and the forcing term") {
    auto ac = make_problem(Pde::AllenCahn);
    CHECK(initial_condition(ac, 0.5) == doctest::Approx(0.25 * std::cos(kPi / 2)).epsilon(1e-15));

    auto bu = make_problem(Pde::Burgers);
    CHECK(initial_condition(bu, 0.5) == doctest::Approx(-1.0).epsilon(1e-15));

    auto h = make_problem(Pde::Helmholtz);
    CHECK_THROWS_AS((void)initial_condition(h, 0.0), std::logic_error);

    // At (0.5, 0.125) both sine factors are one.
    CHECK(forcing_q(h, 0.5, 0.125) ==
          doctest::Approx(1.0 - 17.0 * kPi * kPi).epsilon(1e-14));
}

TEST_CASE("surrogate u = x gives the hand-computed Allen-Cahn residual") {
    auto pb = make_problem(Pde::AllenCahn);
    auto net = identity_in_x();

    // u_t = 0, u_xx = 0, so r = 5 x^3 - 5 x = -1.875 at x = 0.5.
    ad::Tape t;
    auto vp = make_var_params(t, net);
    CHECK(t.value(scalar_residual(t, vp, pb, 0.5, 0.3)) == doctest::Approx(-1.875).epsilon(1e-14));

    batch::Tape bt;
    auto bp = make_batch_params(bt, net);
    MatrixXd xs(2, 1), ts(2, 1);
    xs << 0.5, -0.25;
    ts << 0.3, 0.9;
    int r = batch_residual(bt, bp, pb, bt.constant(xs), bt.constant(ts));
    CHECK(bt.value(r)(0, 0) == doctest::Approx(-1.875).epsilon(1e-14));
    CHECK(bt.value(r)(1, 0) ==
          doctest::Approx(5.0 * std::pow(-0.25, 3) - 5.0 * -0.25).epsilon(1e-13));
}

TEST_CASE("zero network exposes the Helmholtz forcing sign") {
    auto pb = make_problem(Pde::Helmholtz);
    auto net = zero_net();
    ad::Tape t;
    auto vp = make_var_params(t, net);
    CHECK(t.value(scalar_residual(t, vp, pb, 0.5, 0.125)) ==
          doctest::Approx(17.0 * kPi * kPi - 1.0).epsilon(1e-14));
}

TEST_CASE("the exact Helmholtz solution annihilates the residual") {
    auto pb = make_problem(Pde::Helmholtz);
    auto exact = [&](std::span<const ad::Var> in) {
        return sin(in[0] * (pb.helm_a1 * kPi)) * sin(in[1] * (pb.helm_a2 * kPi));
    };
    Rng rng(123);
    for (int i = 0; i < 25; ++i) {
        const double x = rng.uniform(-1.0, 1.0), y = rng.uniform(-1.0, 1.0);
        ad::Tape t;
        CHECK(std::abs(t.value(scalar_residual_of(t, pb, exact, x, y))) < 1e-10);
    }
}

TEST_CASE("batch and scalar residuals agree on random networks") {
    Rng rng(321);
    const int sizes[] = {2, 8, 8, 1};
    for (Pde kind : {Pde::AllenCahn, Pde::Burgers, Pde::Helmholtz}) {
        auto pb = make_problem(kind);
        auto net = glorot_init(sizes, rng);

        const int n = 7;
        MatrixXd xs(n, 1), ys(n, 1);
        for (int i = 0; i < n; ++i) {
            xs(i, 0) = rng.uniform(pb.x_lo, pb.x_hi);
            ys(i, 0) = rng.uniform(pb.y_lo, pb.y_hi);
        }

        batch::Tape bt;
        auto bp = make_batch_params(bt, net);
        int r = batch_residual(bt, bp, pb, bt.constant(xs), bt.constant(ys));

        for (int i = 0; i < n; ++i) {
            ad::Tape t;
            auto vp = make_var_params(t, net);
            const double want = t.value(scalar_residual(t, vp, pb, xs(i, 0), ys(i, 0)));
            CHECK(std::abs(bt.value(r)(i, 0) - want) < 1e-11 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST_CASE("Dirichlet boundary terms subtract the data") {
    auto pb = make_problem(Pde::Burgers);
    auto net = identity_in_x();
    ad::Tape t;
    auto vp = make_var_params(t, net);
    auto terms = scalar_boundary_terms(t, vp, pb, 1.0, 0.5);
    REQUIRE(terms.size() == 1);
    CHECK(t.value(terms[0]) == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS((void)scalar_boundary_terms(t, vp, pb, 0.5, 0.5), std::invalid_argument);

    auto ph = make_problem(Pde::Helmholtz);
    auto th = scalar_boundary_terms(t, vp, ph, 0.25, -1.0);
    REQUIRE(th.size() == 1);
    CHECK(t.value(th[0]) ==
          doctest::Approx(0.25 - helmholtz_exact(ph, 0.25, -1.0)).epsilon(1e-14));
}

TEST_CASE("periodic boundary terms pair value and slope gaps") {
    auto pb = make_problem(Pde::AllenCahn);
    auto net = identity_in_x();
    ad::Tape t;
    auto vp = make_var_params(t, net);
    auto terms = scalar_boundary_terms(t, vp, pb, 1.0, 0.7);
    REQUIRE(terms.size() == 2);
    CHECK(t.value(terms[0]) == doctest::Approx(2.0).epsilon(1e-15));  // u(1) - u(-1) for u = x
    CHECK(t.value(terms[1]) == doctest::Approx(0.0).epsilon(1e-15));  // slope is constant
}

TEST_CASE("initial terms compare against the initial profile") {
    auto pb = make_problem(Pde::AllenCahn);
    auto net = identity_in_x();
    ad::Tape t;
    auto vp = make_var_params(t, net);
    const double want = 0.3 - 0.09 * std::cos(0.3 * kPi);
    CHECK(t.value(scalar_initial_term(t, vp, pb, 0.3)) == doctest::Approx(want).epsilon(1e-14));

    auto ph = make_problem(Pde::Helmholtz);
    CHECK_THROWS_AS((void)scalar_initial_term(t, vp, ph, 0.0), std::logic_error);
}
