#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "sapinn/common.hpp"
#include "sapinn/sampler.hpp"

namespace sapinn {

// Per-point attention weights, one vector per loss group. Entries start
// from a uniform draw and are driven uphill during training; a group whose
// trainable flag is off keeps its initial values (the paper's fixed
// boundary weights for Allen-Cahn are expressed this way).
struct MaskGroupInit {
    double lo = 1.0;
    double hi = 1.0;
    bool trainable = true;
};

struct MaskConfig {
    MaskGroupInit residual;
    MaskGroupInit boundary;
    MaskGroupInit initial;
};

struct Mask {
    Eigen::VectorXd r, b, i;
    bool r_train = true, b_train = true, i_train = true;
};

namespace detail {

inline Eigen::VectorXd draw_group(const MaskGroupInit& g, int n, Rng& rng) {
    if (g.lo < 0.0 || g.hi < g.lo)
        throw std::invalid_argument("mask: init range must satisfy 0 <= lo <= hi");
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(g.lo, g.hi);
    return v;
}

}  // namespace detail

inline Mask init_mask(const MaskConfig& cfg, int n_r, int n_b, int n_i, Rng& rng) {
    Mask m;
    m.r = detail::draw_group(cfg.residual, n_r, rng);
    m.b = detail::draw_group(cfg.boundary, n_b, rng);
    m.i = detail::draw_group(cfg.initial, n_i, rng);
    m.r_train = cfg.residual.trainable;
    m.b_train = cfg.boundary.trainable;
    m.i_train = cfg.initial.trainable;
    return m;
}

// Gradient of (1/n) sum (lambda_i e_i)^2 with respect to lambda:
// (2/n) lambda_i e_i^2. err holds the unweighted errors e_i.
inline Eigen::VectorXd mask_gradient(const Eigen::VectorXd& lambda, const Eigen::VectorXd& err,
                                     int group_n) {
    if (group_n <= 0) throw std::invalid_argument("mask: group size must be positive");
    if (lambda.size() != err.size())
        throw std::invalid_argument("mask: lambda and error lengths differ");
    return (2.0 / group_n) * lambda.array() * err.array().square();
}

void export_mask(const std::string& path, const Problem& problem, const SampleSet& points,
                 const Mask& mask);
Mask import_mask(const std::string& path, int n_r, int n_b, int n_i);

}  // namespace sapinn
