#pragma once

#include <Eigen/Dense>

#include "sapinn/mask.hpp"
#include "sapinn/network.hpp"
#include "sapinn/problem.hpp"
#include "sapinn/sampler.hpp"

namespace sapinn {

// Objective: L = L_s + L_r + L_b + L_0 with
//   L_r = (1/N_r) sum (lambda_r e_r)^2        e_r = PDE residual
//   L_b = (1/N_b) sum (lambda_b e_b)^2        e_b = boundary mismatch; a
//         periodic point contributes the value gap and the slope gap, both
//         under one mask entry
//   L_0 = (1/N_0) sum (lambda_0 e_0)^2        e_0 = initial mismatch
//   L_s = (1/N_s) sum e_s^2                   anchor data, never weighted
// Training descends in the network parameters and ascends in the masks.
enum class TrainMode { Sa, Baseline, Nonadaptive };

struct LossInput {
    const Problem* problem = nullptr;
    const SampleSet* points = nullptr;
    MatrixXd anchor_x{0, 1}, anchor_y{0, 1}, anchor_u{0, 1};
    TrainMode mode = TrainMode::Sa;
    double c_weight = 1.0;  // Nonadaptive multiplier on L_b and L_0
};

struct LossResult {
    double total = 0.0;
    double l_s = 0.0, l_r = 0.0, l_b = 0.0, l_0 = 0.0;
    Eigen::VectorXd w_grad;  // d total / d params, flatten order
    Eigen::VectorXd r_mask_grad, b_mask_grad, i_mask_grad;  // d total / d lambda
};

// Points are processed in fixed-size chunks in a fixed order, so results are
// reproducible and memory stays bounded at paper-scale point counts.
inline constexpr int kLossChunk = 8192;

LossResult weighted_loss(const NetworkParams& net, const Mask& mask, const LossInput& in,
                         bool want_grads);

}  // namespace sapinn
