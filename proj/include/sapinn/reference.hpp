#pragma once

#include <Eigen/Dense>
#include <string>

#include "sapinn/network.hpp"
#include "sapinn/problem.hpp"

namespace sapinn {

// Relative L2 distance ||pred - ref|| / ||ref||, fixed-order pairwise sums.
double relative_l2(const Eigen::VectorXd& pred, const Eigen::VectorXd& ref);

// Tensor-product evaluation grid: u(i, j) is the solution at (xs[i], ys[j]).
// For the periodic problem xs covers [lo, hi) without the right endpoint.
struct ReferenceGrid {
    std::string problem;
    std::string provenance;
    std::string solver_meta;
    Eigen::VectorXd xs, ys;
    MatrixXd u;
};

ReferenceGrid helmholtz_reference(const Problem& p, int nx, int ny);

// Cole-Hopf closed form integrated with a quad_n-point trapezoid rule over
// the window where the heat kernel carries mass; the largest exponent is
// factored out of both integrals before summing. The integrand is entire
// with Gaussian tails, so the rule converges at spectral rate in quad_n.
double burgers_cole_hopf(const Problem& p, double x, double t, int quad_n);
ReferenceGrid burgers_reference(const Problem& p, int nx, int nt, int quad_n);

// Fourier pseudo-spectral semi-discretization, Crank-Nicolson diffusion with
// second-order Adams-Bashforth reaction. Stores evenly spaced time slices;
// the first slice holds the initial profile exactly.
ReferenceGrid allen_cahn_reference(const Problem& p, int modes, double dt, int slices);

// Benchmark-pinned evaluation meshes: Allen-Cahn 512x201 (solved on 4096
// internal modes), Burgers 256x100 (12001-point quadrature), Helmholtz
// 1001x1001 analytic.
ReferenceGrid make_reference(const Problem& p);

// Oracle refinement gaps: the same solution recomputed at higher resolution,
// compared on shared points in the max norm. Small gaps certify the grids.
double allen_cahn_refinement_gap();
double burgers_refinement_gap();

void save_grid(const std::string& path, const ReferenceGrid& g, bool binary);
ReferenceGrid load_grid(const std::string& path);

// Network error against every grid node, chunked batch evaluation.
double grid_relative_l2(const NetworkParams& net, const ReferenceGrid& g);

// Predictions at every grid node in column-major node order.
Eigen::VectorXd grid_predictions(const NetworkParams& net, const ReferenceGrid& g);

}  // namespace sapinn
