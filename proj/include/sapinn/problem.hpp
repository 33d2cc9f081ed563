#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sapinn/network.hpp"

namespace sapinn {

// The three benchmark equations. Axis one is x; axis two is t for the
// time-dependent problems and y for Helmholtz.
enum class Pde { AllenCahn, Burgers, Helmholtz };

struct Problem {
    Pde kind = Pde::Burgers;
    double x_lo = -1.0, x_hi = 1.0;
    double y_lo = 0.0, y_hi = 1.0;
    double ac_diffusion = 1e-4;
    double burgers_nu = 0.01 / std::numbers::pi;
    double helm_k = 1.0;
    double helm_a1 = 1.0;
    double helm_a2 = 4.0;
    bool periodic_x = false;
    bool has_initial = true;
};

inline const char* pde_name(Pde kind) {
    switch (kind) {
        case Pde::AllenCahn: return "allen-cahn";
        case Pde::Burgers: return "burgers";
        case Pde::Helmholtz: return "helmholtz";
    }
    throw std::logic_error("problem: unknown equation tag");
}

inline Pde pde_from_name(std::string_view name) {
    if (name == "allen-cahn") return Pde::AllenCahn;
    if (name == "burgers") return Pde::Burgers;
    if (name == "helmholtz") return Pde::Helmholtz;
    throw std::invalid_argument("problem: unknown equation name '" + std::string(name) + "'");
}

inline Problem make_problem(Pde kind) {
    Problem p;
    p.kind = kind;
    switch (kind) {
        case Pde::AllenCahn:
            p.periodic_x = true;
            break;
        case Pde::Burgers:
            break;
        case Pde::Helmholtz:
            p.y_lo = -1.0;
            p.y_hi = 1.0;
            p.has_initial = false;
            break;
    }
    return p;
}

inline double initial_condition(const Problem& p, double x) {
    switch (p.kind) {
        case Pde::AllenCahn:
            return x * x * std::cos(std::numbers::pi * x);
        case Pde::Burgers:
            return -std::sin(std::numbers::pi * x);
        case Pde::Helmholtz:
            throw std::logic_error("problem: Helmholtz has no initial condition");
    }
    return 0.0;
}

inline double helmholtz_exact(const Problem& p, double x, double y) {
    return std::sin(p.helm_a1 * std::numbers::pi * x) * std::sin(p.helm_a2 * std::numbers::pi * y);
}

// Source term making helmholtz_exact solve u_xx + u_yy + k^2 u = q.
inline double forcing_q(const Problem& p, double x, double y) {
    const double a1p = p.helm_a1 * std::numbers::pi;
    const double a2p = p.helm_a2 * std::numbers::pi;
    return (-(a1p * a1p) - a2p * a2p + p.helm_k * p.helm_k) * helmholtz_exact(p, x, y);
}

// Dirichlet data on the spatial boundary.
inline double boundary_value(const Problem& p, double x, double y) {
    switch (p.kind) {
        case Pde::Burgers:
            return 0.0;
        case Pde::Helmholtz:
            return helmholtz_exact(p, x, y);
        case Pde::AllenCahn:
            throw std::logic_error("problem: periodic boundary carries no Dirichlet data");
    }
    return 0.0;
}

inline bool on_boundary(const Problem& p, double x, double y) {
    const double ex = 1e-12;
    const bool x_edge = std::abs(x - p.x_lo) < ex || std::abs(x - p.x_hi) < ex;
    if (p.kind == Pde::Helmholtz)
        return x_edge || std::abs(y - p.y_lo) < ex || std::abs(y - p.y_hi) < ex;
    return x_edge;
}

// Residual formulas, templated so the scalar tape and the batch tape share
// one definition. V needs +, -, * (including double *).
template <class V>
V allen_cahn_residual_expr(V u, V u_t, V u_xx, double diffusion) {
    return ((u_t - diffusion * u_xx) + 5.0 * (u * u * u)) - 5.0 * u;
}

template <class V>
V burgers_residual_expr(V u, V u_t, V u_x, V u_xx, double nu) {
    return (u_t + u * u_x) - nu * u_xx;
}

template <class V>
V helmholtz_residual_expr(V u, V u_xx, V u_yy, double k, V q) {
    return ((u_xx + u_yy) + (k * k) * u) - q;
}

// Residual of an arbitrary twice-differentiable scalar-tape function at one
// point. The exact-solution audit and the network path both come through here.
template <class F>
ad::Var scalar_residual_of(ad::Tape& t, const Problem& p, F&& u_fn, double x, double y) {
    std::vector<ad::Var> in = {t.leaf(x), t.leaf(y)};
    ad::Var u = u_fn(std::span<const ad::Var>(in));
    const int dx[] = {0};
    const int dy[] = {1};
    const int dxx[] = {0, 0};
    const int dyy[] = {1, 1};
    switch (p.kind) {
        case Pde::AllenCahn: {
            ad::Var u_t = ad::derivative_at(t, u_fn, in, dy);
            ad::Var u_xx = ad::derivative_at(t, u_fn, in, dxx);
            return allen_cahn_residual_expr(u, u_t, u_xx, p.ac_diffusion);
        }
        case Pde::Burgers: {
            ad::Var u_t = ad::derivative_at(t, u_fn, in, dy);
            ad::Var u_x = ad::derivative_at(t, u_fn, in, dx);
            ad::Var u_xx = ad::derivative_at(t, u_fn, in, dxx);
            return burgers_residual_expr(u, u_t, u_x, u_xx, p.burgers_nu);
        }
        case Pde::Helmholtz: {
            ad::Var u_xx = ad::derivative_at(t, u_fn, in, dxx);
            ad::Var u_yy = ad::derivative_at(t, u_fn, in, dyy);
            return helmholtz_residual_expr(u, u_xx, u_yy, p.helm_k, t.constant(forcing_q(p, x, y)));
        }
    }
    throw std::logic_error("problem: unknown equation");
}

inline ad::Var scalar_residual(ad::Tape& t, const VarParams& vp, const Problem& p, double x,
                               double y) {
    return scalar_residual_of(
        t, p, [&](std::span<const ad::Var> in) { return forward(vp, in); }, x, y);
}

// Residual over a batch of interior points; xc and yc are n-by-1 nodes.
inline int batch_residual(batch::Tape& bt, const BatchParams& bp, const Problem& p, int xc,
                          int yc) {
    const int u = batch_forward(bt, bp, bt.concat2(xc, yc));
    const int wrt_both[] = {xc, yc};
    auto d = bt.backward_rows(u, wrt_both);
    const int wrt_x[] = {xc};
    using batch::BVar;
    const BVar bu{&bt, u};
    switch (p.kind) {
        case Pde::AllenCahn: {
            const BVar u_t{&bt, d[1]};
            const BVar u_xx{&bt, bt.backward_rows(d[0], wrt_x)[0]};
            return allen_cahn_residual_expr(bu, u_t, u_xx, p.ac_diffusion).idx;
        }
        case Pde::Burgers: {
            const BVar u_t{&bt, d[1]};
            const BVar u_x{&bt, d[0]};
            const BVar u_xx{&bt, bt.backward_rows(d[0], wrt_x)[0]};
            return burgers_residual_expr(bu, u_t, u_x, u_xx, p.burgers_nu).idx;
        }
        case Pde::Helmholtz: {
            const int wrt_y[] = {yc};
            const BVar u_xx{&bt, bt.backward_rows(d[0], wrt_x)[0]};
            const BVar u_yy{&bt, bt.backward_rows(d[1], wrt_y)[0]};
            const Eigen::MatrixXd& xs = bt.value(xc);
            const Eigen::MatrixXd& ys = bt.value(yc);
            Eigen::MatrixXd q(xs.rows(), 1);
            for (Eigen::Index i = 0; i < xs.rows(); ++i)
                q(i, 0) = forcing_q(p, xs(i, 0), ys(i, 0));
            return helmholtz_residual_expr(bu, u_xx, u_yy, p.helm_k, BVar{&bt, bt.constant(q)})
                .idx;
        }
    }
    throw std::logic_error("problem: unknown equation");
}

// Mismatch terms whose weighted squares form the boundary loss. Dirichlet
// points give one term, u - g. A periodic point gives two terms sharing one
// mask entry: the value gap and the x-derivative gap across the boundary.
inline std::vector<ad::Var> scalar_boundary_terms(ad::Tape& t, const VarParams& vp,
                                                  const Problem& p, double x, double y) {
    if (!on_boundary(p, x, y))
        throw std::invalid_argument("problem: boundary term requested off the boundary");
    auto u_fn = [&](std::span<const ad::Var> in) { return forward(vp, in); };
    if (p.periodic_x) {
        std::vector<ad::Var> hi = {t.leaf(p.x_hi), t.leaf(y)};
        std::vector<ad::Var> lo = {t.leaf(p.x_lo), t.leaf(y)};
        const int dx[] = {0};
        ad::Var du = u_fn(hi) - u_fn(lo);
        ad::Var dux = ad::derivative_at(t, u_fn, hi, dx) - ad::derivative_at(t, u_fn, lo, dx);
        return {du, dux};
    }
    std::vector<ad::Var> in = {t.leaf(x), t.leaf(y)};
    return {u_fn(in) - t.constant(boundary_value(p, x, y))};
}

inline ad::Var scalar_initial_term(ad::Tape& t, const VarParams& vp, const Problem& p, double x) {
    if (!p.has_initial) throw std::logic_error("problem: equation has no initial condition");
    std::vector<ad::Var> in = {t.leaf(x), t.leaf(p.y_lo)};
    return forward(vp, in) - t.constant(initial_condition(p, x));
}

}  // namespace sapinn
