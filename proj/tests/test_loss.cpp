#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>

#include "sapinn/loss.hpp"

using namespace sapinn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

NetworkParams constant_net(double value) {
    NetworkParams p;
    p.sizes = {2, 1};
    p.W.push_back(MatrixXd::Zero(1, 2));
    p.b.push_back(MatrixXd::Constant(1, 1, value));
    return p;
}

NetworkParams identity_in_x() {
    NetworkParams p;
    p.sizes = {2, 1};
    MatrixXd W(1, 2);
    W << 1.0, 0.0;
    p.W.push_back(W);
    p.b.push_back(MatrixXd::Zero(1, 1));
    return p;
}

Mask ones_mask(int n_r, int n_b, int n_i) {
    MaskConfig cfg;
    Rng rng(0);
    return init_mask(cfg, n_r, n_b, n_i, rng);
}

}  // namespace

TEST_CASE("a single weighted point reproduces (lambda e)^2") {
    // u = 3 everywhere, Dirichlet data 0, lambda_b = 2: (2 * 3)^2 = 36.
    auto pb = make_problem(Pde::Burgers);
    auto net = constant_net(3.0);
    SampleSet pts;
    pts.interior_x.resize(0, 1);
    pts.interior_y.resize(0, 1);
    pts.boundary_x = MatrixXd::Constant(1, 1, 1.0);
    pts.boundary_y = MatrixXd::Constant(1, 1, 0.5);
    pts.initial_x.resize(0, 1);

    Mask m = ones_mask(0, 1, 0);
    m.b(0) = 2.0;
    LossInput in;
    in.problem = &pb;
    in.points = &pts;
    auto res = weighted_loss(net, m, in, true);
    CHECK(res.l_b == 36.0);
    CHECK(res.total == 36.0);
    // d/dlambda (lambda e)^2 = 2 lambda e^2 = 36.
    CHECK(res.b_mask_grad(0) == 36.0);
}

TEST_CASE("scaling the mask scales group losses quadratically") {
    auto pb = make_problem(Pde::Burgers);
    Rng rng(1);
    const int sizes[] = {2, 6, 1};
    auto net = glorot_init(sizes, rng);
    SamplerConfig scfg;
    scfg.n_interior = 30;
    scfg.n_boundary = 8;
    scfg.n_initial = 8;
    auto pts = sample_points(pb, scfg, rng);

    Mask m1 = ones_mask(30, 8, 8);
    Mask m2 = m1;
    m2.r *= 2.0;
    m2.b *= 2.0;
    m2.i *= 2.0;

    LossInput in;
    in.problem = &pb;
    in.points = &pts;
    auto a = weighted_loss(net, m1, in, false);
    auto b = weighted_loss(net, m2, in, false);
    CHECK(b.l_r == doctest::Approx(4.0 * a.l_r).epsilon(1e-13));
    CHECK(b.l_b == doctest::Approx(4.0 * a.l_b).epsilon(1e-13));
    CHECK(b.l_0 == doctest::Approx(4.0 * a.l_0).epsilon(1e-13));
}

TEST_CASE("unit mask reduces every group to a plain mean square") {
    auto pb = make_problem(Pde::Burgers);
    Rng rng(2);
    const int sizes[] = {2, 7, 7, 1};
    auto net = glorot_init(sizes, rng);
    SamplerConfig scfg;
    scfg.n_interior = 25;
    scfg.n_boundary = 6;
    scfg.n_initial = 9;
    auto pts = sample_points(pb, scfg, rng);
    Mask m = ones_mask(25, 6, 9);

    LossInput in;
    in.problem = &pb;
    in.points = &pts;
    auto res = weighted_loss(net, m, in, false);

    double mse_r = 0.0;
    for (int i = 0; i < 25; ++i) {
        ad::Tape t;
        auto vp = make_var_params(t, net);
        const double r =
            t.value(scalar_residual(t, vp, pb, pts.interior_x(i, 0), pts.interior_y(i, 0)));
        mse_r += r * r / 25.0;
    }
    CHECK(res.l_r == doctest::Approx(mse_r).epsilon(1e-11));

    double mse_0 = 0.0;
    for (int i = 0; i < 9; ++i) {
        const double x = pts.initial_x(i, 0);
        const double in2[] = {x, 0.0};
        const double e = forward(net, in2) - initial_condition(pb, x);
        mse_0 += e * e / 9.0;
    }
    CHECK(res.l_0 == doctest::Approx(mse_0).epsilon(1e-12));
}

TEST_CASE("periodic boundary loss adds the value and slope gaps") {
    auto pb = make_problem(Pde::AllenCahn);
    auto net = identity_in_x();  // u = x: gap 2, slope gap 0
    SampleSet pts;
    pts.interior_x.resize(0, 1);
    pts.interior_y.resize(0, 1);
    pts.boundary_x = MatrixXd::Constant(4, 1, 1.0);
    pts.boundary_y = (MatrixXd(4, 1) << 0.1, 0.4, 0.6, 0.9).finished();
    pts.initial_x.resize(0, 1);
    Mask m = ones_mask(0, 4, 0);

    LossInput in;
    in.problem = &pb;
    in.points = &pts;
    auto res = weighted_loss(net, m, in, true);
    CHECK(res.l_b == doctest::Approx(4.0).epsilon(1e-13));  // (1/4) * 4 * (2^2 + 0)
    // d/dlambda: (2/N_b) lambda (du^2 + dux^2) = (2/4) * 1 * 4 = 2 per point.
    for (int i = 0; i < 4; ++i) CHECK(res.b_mask_grad(i) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("mask gradients match the closed form and stay nonnegative") {
    auto pb = make_problem(Pde::AllenCahn);
    Rng rng(3);
    const int sizes[] = {2, 6, 6, 1};
    auto net = glorot_init(sizes, rng);
    SamplerConfig scfg;
    scfg.n_interior = 20;
    scfg.n_boundary = 5;
    scfg.n_initial = 7;
    auto pts = sample_points(pb, scfg, rng);

    MaskConfig mcfg;
    mcfg.residual = {0.0, 1.0, true};
    mcfg.initial = {0.0, 100.0, true};
    auto m = init_mask(mcfg, 20, 5, 7, rng);

    LossInput in;
    in.problem = &pb;
    in.points = &pts;
    auto res = weighted_loss(net, m, in, true);

    VectorXd err(20);
    for (int i = 0; i < 20; ++i) {
        ad::Tape t;
        auto vp = make_var_params(t, net);
        err(i) = t.value(scalar_residual(t, vp, pb, pts.interior_x(i, 0), pts.interior_y(i, 0)));
    }
    VectorXd want = mask_gradient(m.r, err, 20);
    for (int i = 0; i < 20; ++i)
        CHECK(res.r_mask_grad(i) == doctest::Approx(want(i)).epsilon(1e-10));
    CHECK((res.r_mask_grad.array() >= 0.0).all());
    CHECK((res.i_mask_grad.array() >= 0.0).all());
}

TEST_CASE("parameter gradients match finite differences in every mode") {
    Rng rng(4);
    const int sizes[] = {2, 5, 1};
    for (Pde kind : {Pde::AllenCahn, Pde::Burgers, Pde::Helmholtz}) {
        auto pb = make_problem(kind);
        auto net = glorot_init(sizes, rng);
        SamplerConfig scfg;
        scfg.n_interior = 12;
        scfg.n_boundary = 6;
        scfg.n_initial = pb.has_initial ? 6 : 0;
        auto pts = sample_points(pb, scfg, rng);

        MaskConfig mcfg;
        mcfg.residual = {0.0, 1.0, true};
        auto m = init_mask(mcfg, 12, 6, scfg.n_initial, rng);

        for (TrainMode mode : {TrainMode::Sa, TrainMode::Baseline, TrainMode::Nonadaptive}) {
            LossInput in;
            in.problem = &pb;
            in.points = &pts;
            in.mode = mode;
            in.c_weight = 3.0;
            auto res = weighted_loss(net, m, in, true);

            VectorXd theta = flatten(net);
            const double h = 1e-6;
            for (int k = 0; k < theta.size(); ++k) {
                auto bumped = net;
                VectorXd tb = theta;
                tb(k) += h;
                unflatten(tb, bumped);
                const double up = weighted_loss(bumped, m, in, false).total;
                tb(k) -= 2.0 * h;
                unflatten(tb, bumped);
                const double dn = weighted_loss(bumped, m, in, false).total;
                const double fd = (up - dn) / (2.0 * h);
                CHECK(std::abs(res.w_grad(k) - fd) / std::max(std::abs(fd), 1e-6) < 1e-5);
            }
        }
    }
}

TEST_CASE("nonadaptive mode scales the data-fit groups by c") {
    auto pb = make_problem(Pde::Burgers);
    Rng rng(5);
    const int sizes[] = {2, 6, 1};
    auto net = glorot_init(sizes, rng);
    SamplerConfig scfg;
    scfg.n_interior = 15;
    scfg.n_boundary = 6;
    scfg.n_initial = 6;
    auto pts = sample_points(pb, scfg, rng);
    Mask m = ones_mask(15, 6, 6);

    LossInput base;
    base.problem = &pb;
    base.points = &pts;
    base.mode = TrainMode::Baseline;
    auto rb = weighted_loss(net, m, base, false);

    LossInput na = base;
    na.mode = TrainMode::Nonadaptive;
    na.c_weight = 7.0;
    auto rn = weighted_loss(net, m, na, false);

    CHECK(rn.l_r == rb.l_r);
    CHECK(rn.l_b == doctest::Approx(7.0 * rb.l_b).epsilon(1e-14));
    CHECK(rn.l_0 == doctest::Approx(7.0 * rb.l_0).epsilon(1e-14));
}

TEST_CASE("baseline ignores mask values entirely") {
    auto pb = make_problem(Pde::Burgers);
    Rng rng(6);
    const int sizes[] = {2, 5, 1};
    auto net = glorot_init(sizes, rng);
    SamplerConfig scfg;
    scfg.n_interior = 10;
    scfg.n_boundary = 4;
    scfg.n_initial = 4;
    auto pts = sample_points(pb, scfg, rng);

    Mask wild = ones_mask(10, 4, 4);
    wild.r.setConstant(50.0);
    Mask unit = ones_mask(10, 4, 4);

    LossInput in;
    in.problem = &pb;
    in.points = &pts;
    in.mode = TrainMode::Baseline;
    CHECK(weighted_loss(net, wild, in, false).total == weighted_loss(net, unit, in, false).total);
}

TEST_CASE("anchor data adds an unweighted term") {
    auto pb = make_problem(Pde::Burgers);
    auto net = constant_net(2.0);
    SampleSet pts;
    pts.interior_x.resize(0, 1);
    pts.interior_y.resize(0, 1);
    pts.boundary_x.resize(0, 1);
    pts.boundary_y.resize(0, 1);
    pts.initial_x.resize(0, 1);
    Mask m = ones_mask(0, 0, 0);

    LossInput in;
    in.problem = &pb;
    in.points = &pts;
    in.anchor_x = MatrixXd::Constant(4, 1, 0.25);
    in.anchor_y = MatrixXd::Constant(4, 1, 0.5);
    in.anchor_u = MatrixXd::Constant(4, 1, 3.0);  // error is -1 everywhere
    auto res = weighted_loss(net, m, in, true);
    CHECK(res.l_s == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(res.total == res.l_s);
}

TEST_CASE("structural and numeric failures are distinguished") {
    auto pb = make_problem(Pde::Burgers);
    auto net = constant_net(1.0);
    SamplerConfig scfg;
    scfg.n_interior = 5;
    Rng rng(7);
    auto pts = sample_points(pb, scfg, rng);

    Mask wrong = ones_mask(4, 0, 0);
    LossInput in;
    in.problem = &pb;
    in.points = &pts;
    CHECK_THROWS_AS((void)weighted_loss(net, wrong, in, false), std::logic_error);

    Mask right = ones_mask(5, 0, 0);
    auto bad = net;
    bad.b[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS((void)weighted_loss(bad, right, in, false), std::runtime_error);
}

TEST_CASE("evaluation is bit-reproducible") {
    auto pb = make_problem(Pde::AllenCahn);
    Rng rng(8);
    const int sizes[] = {2, 8, 8, 1};
    auto net = glorot_init(sizes, rng);
    SamplerConfig scfg;
    scfg.n_interior = 40;
    scfg.n_boundary = 6;
    scfg.n_initial = 6;
    auto pts = sample_points(pb, scfg, rng);
    MaskConfig mcfg;
    mcfg.residual = {0.0, 1.0, true};
    auto m = init_mask(mcfg, 40, 6, 6, rng);

    LossInput in;
    in.problem = &pb;
    in.points = &pts;
    auto a = weighted_loss(net, m, in, true);
    auto b = weighted_loss(net, m, in, true);
    CHECK(a.total == b.total);
    CHECK(a.w_grad == b.w_grad);
    CHECK(a.r_mask_grad == b.r_mask_grad);
}
