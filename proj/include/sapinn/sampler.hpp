#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "sapinn/common.hpp"
#include "sapinn/problem.hpp"

namespace sapinn {

// Training point sets. For a periodic problem the boundary rows hold time
// samples; each one later becomes the x = hi / x = lo pair. Initial rows sit
// at y = y_lo implicitly.
struct SampleSet {
    MatrixXd interior_x, interior_y;
    MatrixXd boundary_x, boundary_y;
    MatrixXd initial_x;
};

struct SamplerConfig {
    int n_interior = 0;
    int n_boundary = 0;
    int n_initial = 0;
    bool mesh_interior = false;  // subsample a regular grid instead of LHS
    int mesh_nx = 0, mesh_ny = 0;
};

namespace detail {

// Latin hypercube column: each of the n strata holds exactly one point.
inline MatrixXd lhs_axis(Rng& rng, int n, double lo, double hi) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    MatrixXd col(n, 1);
    for (int j = 0; j < n; ++j) col(j, 0) = lo + (perm[j] + rng.uniform()) / n * (hi - lo);
    return col;
}

}  // namespace detail

inline SampleSet sample_points(const Problem& p, const SamplerConfig& cfg, Rng& rng) {
    if (cfg.n_interior < 0 || cfg.n_boundary < 0 || cfg.n_initial < 0)
        throw std::invalid_argument("sampler: negative point count");
    if (!p.has_initial && cfg.n_initial > 0)
        throw std::invalid_argument("sampler: initial points requested for an equation without an initial condition");
    if (cfg.mesh_interior && (cfg.mesh_nx < 3 || cfg.mesh_ny < 3))
        throw std::invalid_argument("sampler: mesh subsampling needs at least a 3x3 grid");

    SampleSet s;

    if (cfg.mesh_interior) {
        const long mx = cfg.mesh_nx - 2, my = cfg.mesh_ny - 2;
        const long m = mx * my;
        if (cfg.n_interior > m)
            throw std::invalid_argument("sampler: more interior points than interior mesh nodes");
        std::vector<long> idx(m);
        std::iota(idx.begin(), idx.end(), 0L);
        for (int i = 0; i < cfg.n_interior; ++i)
            std::swap(idx[i], idx[i + static_cast<long>(rng.below(static_cast<std::uint64_t>(m - i)))]);
        s.interior_x.resize(cfg.n_interior, 1);
        s.interior_y.resize(cfg.n_interior, 1);
        const double hx = (p.x_hi - p.x_lo) / (cfg.mesh_nx - 1);
        const double hy = (p.y_hi - p.y_lo) / (cfg.mesh_ny - 1);
        for (int i = 0; i < cfg.n_interior; ++i) {
            const long ix = 1 + idx[i] % mx;
            const long iy = 1 + idx[i] / mx;
            s.interior_x(i, 0) = p.x_lo + ix * hx;
            s.interior_y(i, 0) = p.y_lo + iy * hy;
        }
    } else if (cfg.n_interior > 0) {
        s.interior_x = detail::lhs_axis(rng, cfg.n_interior, p.x_lo, p.x_hi);
        s.interior_y = detail::lhs_axis(rng, cfg.n_interior, p.y_lo, p.y_hi);
    } else {
        s.interior_x.resize(0, 1);
        s.interior_y.resize(0, 1);
    }

    s.boundary_x.resize(cfg.n_boundary, 1);
    s.boundary_y.resize(cfg.n_boundary, 1);
    for (int i = 0; i < cfg.n_boundary; ++i) {
        if (p.periodic_x) {
            // One time sample per mask entry; the pair is expanded downstream.
            s.boundary_x(i, 0) = p.x_hi;
            s.boundary_y(i, 0) = rng.uniform(p.y_lo, p.y_hi);
        } else if (p.kind == Pde::Helmholtz) {
            // Round-robin over the four edges, uniform along each.
            const int edge = i % 4;
            const double a = rng.uniform(p.x_lo, p.x_hi);
            switch (edge) {
                case 0: s.boundary_x(i, 0) = a; s.boundary_y(i, 0) = p.y_lo; break;
                case 1: s.boundary_x(i, 0) = a; s.boundary_y(i, 0) = p.y_hi; break;
                case 2: s.boundary_x(i, 0) = p.x_lo; s.boundary_y(i, 0) = a; break;
                default: s.boundary_x(i, 0) = p.x_hi; s.boundary_y(i, 0) = a; break;
            }
        } else {
            s.boundary_x(i, 0) = rng.below(2) == 0 ? p.x_lo : p.x_hi;
            s.boundary_y(i, 0) = rng.uniform(p.y_lo, p.y_hi);
        }
    }

    s.initial_x.resize(cfg.n_initial, 1);
    for (int i = 0; i < cfg.n_initial; ++i) s.initial_x(i, 0) = rng.uniform(p.x_lo, p.x_hi);

    return s;
}

}  // namespace sapinn
