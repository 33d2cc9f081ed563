#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sapinn/loss.hpp"

namespace sapinn {

// Adam moments for one variable block. The step counter lives with the
// caller so several blocks can share one schedule.
struct AdamConfig {
    double lr = 1e-3;
    double decay = 1.0;  // effective rate at step t is lr * decay^(t-1)
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Eigen::VectorXd m, v;
    void init(Eigen::Index n) {
        m = Eigen::VectorXd::Zero(n);
        v = Eigen::VectorXd::Zero(n);
    }
};

// x <- x - sign * lr * mhat / (sqrt(vhat) + eps); sign +1 descends, -1
// ascends. t counts from 1.
void adam_step(AdamState& st, const AdamConfig& cfg, int t, const Eigen::VectorXd& grad,
               double sign, Eigen::VectorXd& x);

// Objective oracle: fills grad and returns the value at x.
using FnGrad = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

enum class LbfgsStatus { Converged, IterLimit, LineSearchFailed };

struct LbfgsConfig {
    int history = 50;
    int max_iters = 500;
    double grad_tol = 1e-8;
    double wolfe_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int line_search_evals = 60;
};

struct LbfgsReport {
    LbfgsStatus status = LbfgsStatus::IterLimit;
    int iters = 0;
    double value = 0.0;
    double grad_norm = 0.0;
};

// Limited-memory BFGS with a strong Wolfe line search. on_iter, when set,
// sees (iteration, value) after each accepted step.
LbfgsReport lbfgs_minimize(const FnGrad& fg, Eigen::VectorXd& x, const LbfgsConfig& cfg,
                           const std::function<void(int, double)>& on_iter = {});

// How the attention weights climb: Adam on the ascent direction, or the
// plain rule lambda += lr * grad.
enum class MaskRule { Adam, Plain };

struct TrainConfig {
    std::vector<int> sizes{2, 20, 1};
    SamplerConfig sampler;
    MaskConfig mask;
    TrainMode mode = TrainMode::Sa;
    double c_weight = 1.0;
    std::uint64_t seed = 0;

    int adam_iters = 0;
    AdamConfig adam_w;
    AdamConfig adam_mask;  // the ascent rate matches the descent rate unless overridden
    MaskRule mask_rule = MaskRule::Adam;

    int lbfgs_iters = 0;
    LbfgsConfig lbfgs;

    int record_every = 100;
    MatrixXd anchor_x{0, 1}, anchor_y{0, 1}, anchor_u{0, 1};
};

struct MaskStats {
    double min = 0.0, mean = 0.0, max = 0.0;
};

MaskStats mask_stats(const Eigen::VectorXd& v);

struct TrainRecord {
    int step = 0;
    std::string phase;
    double total = 0.0, l_s = 0.0, l_r = 0.0, l_b = 0.0, l_0 = 0.0;
    MaskStats stat_r, stat_b, stat_i;
};

struct TrainResult {
    NetworkParams net;
    Mask mask;
    SampleSet points;
    std::vector<TrainRecord> history;
    LbfgsReport lbfgs;
    double final_loss = 0.0;
    double adam_seconds = 0.0, lbfgs_seconds = 0.0;
};

// Two-phase run: Adam descends in the network parameters while the masks
// ascend, then L-BFGS polishes the parameters with the masks frozen.
// Network, mask, and sampler randomness come from independent streams of
// the one seed.
TrainResult train(const Problem& p, const TrainConfig& cfg);

}  // namespace sapinn
