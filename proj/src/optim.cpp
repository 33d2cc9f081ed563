#include "sapinn/optim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sapinn {

void adam_step(AdamState& st, const AdamConfig& cfg, int t, const Eigen::VectorXd& grad,
               double sign, Eigen::VectorXd& x) {
    if (t < 1) throw std::invalid_argument("adam: step count starts at one");
    if (st.m.size() != grad.size() || x.size() != grad.size())
        throw std::logic_error("adam: state, gradient, and variable sizes differ");
    st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * grad;
    st.v = cfg.beta2 * st.v.array() + (1.0 - cfg.beta2) * grad.array().square();
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    const double rate = cfg.lr * std::pow(cfg.decay, t - 1);
    x.array() -= sign * rate * (st.m.array() / bc1) / ((st.v.array() / bc2).sqrt() + cfg.eps);
}

MaskStats mask_stats(const Eigen::VectorXd& v) {
    if (v.size() == 0) return {};
    return {v.minCoeff(), v.mean(), v.maxCoeff()};
}

namespace {

struct Probe {
    double a = 0.0;  // step length
    double f = 0.0;  // value there
    double d = 0.0;  // slope there, g . dir
};

// Minimizer of the cubic through two (step, value, slope) records; NaN when
// the data does not pin one down.
double cubic_min(const Probe& lo, const Probe& hi) {
    const double span = hi.a - lo.a;
    const double t1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
    const double disc = t1 * t1 - lo.d * hi.d;
    if (!(disc >= 0.0) || span == 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double t2 = std::copysign(std::sqrt(disc), span);
    const double denom = hi.d - lo.d + 2.0 * t2;
    if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return hi.a - span * (hi.d + t2 - t1) / denom;
}

struct SearchOut {
    bool ok = false;
    double a = 0.0;
    double f = 0.0;
    Eigen::VectorXd g;
};

// Strong Wolfe search along dir from x, where f0 and d0 describe the start.
// Bracketing doubles the trial step, zoom narrows with safeguarded cubic
// interpolation.
SearchOut wolfe_search(const FnGrad& fg, const Eigen::VectorXd& x, const Eigen::VectorXd& dir,
                       double f0, double d0, double a_init, const LbfgsConfig& cfg) {
    SearchOut out;
    Eigen::VectorXd xt(x.size()), gt(x.size());
    int evals = 0;
    auto probe = [&](double a) {
        xt = x + a * dir;
        const double f = fg(xt, gt);
        ++evals;
        return Probe{a, f, gt.dot(dir)};
    };
    auto armijo = [&](const Probe& e) { return e.f <= f0 + cfg.wolfe_c1 * e.a * d0; };
    auto curvature = [&](const Probe& e) { return std::abs(e.d) <= -cfg.wolfe_c2 * d0; };
    auto accept = [&](const Probe& e) {
        out.ok = true;
        out.a = e.a;
        out.f = e.f;
        out.g = gt;
    };

    auto zoom = [&](Probe lo, Probe hi) {
        while (evals < cfg.line_search_evals) {
            const double left = std::min(lo.a, hi.a), right = std::max(lo.a, hi.a);
            const double pad = 0.1 * (right - left);
            double a = cubic_min(lo, hi);
            if (!std::isfinite(a) || a < left + pad || a > right - pad)
                a = 0.5 * (left + right);
            const Probe e = probe(a);
            if (!armijo(e) || e.f >= lo.f) {
                hi = e;
            } else {
                if (curvature(e)) return accept(e);
                if (e.d * (hi.a - lo.a) >= 0.0) hi = lo;
                lo = e;
            }
            if (right - left <= 1e-14 * std::max(1.0, std::abs(right))) break;
        }
        // The interval collapsed or the budget ran out; settle for the best
        // sufficient-decrease point if one exists.
        if (lo.a > 0.0 && armijo(lo)) accept(probe(lo.a));
    };

    Probe prev{0.0, f0, d0};
    double a = a_init;
    bool first = true;
    while (evals < cfg.line_search_evals) {
        const Probe e = probe(a);
        if (!armijo(e) || (!first && e.f >= prev.f)) {
            zoom(prev, e);
            return out;
        }
        if (curvature(e)) {
            accept(e);
            return out;
        }
        if (e.d >= 0.0) {
            zoom(e, prev);
            return out;
        }
        prev = e;
        a *= 2.0;
        first = false;
        if (a > 1e12) break;
    }
    return out;
}

}  // namespace

LbfgsReport lbfgs_minimize(const FnGrad& fg, Eigen::VectorXd& x, const LbfgsConfig& cfg,
                           const std::function<void(int, double)>& on_iter) {
    if (cfg.history < 1) throw std::invalid_argument("lbfgs: history must be positive");
    if (cfg.max_iters < 0) throw std::invalid_argument("lbfgs: negative iteration limit");
    if (!(0.0 < cfg.wolfe_c1 && cfg.wolfe_c1 < cfg.wolfe_c2 && cfg.wolfe_c2 < 1.0))
        throw std::invalid_argument("lbfgs: need 0 < c1 < c2 < 1");
    if (x.size() == 0) throw std::invalid_argument("lbfgs: empty variable vector");

    Eigen::VectorXd g(x.size());
    double f = fg(x, g);
    LbfgsReport rep;
    rep.value = f;
    rep.grad_norm = g.norm();
    if (rep.grad_norm <= cfg.grad_tol) {
        rep.status = LbfgsStatus::Converged;
        return rep;
    }

    std::vector<Eigen::VectorXd> S, Y;
    std::vector<double> rho;
    std::vector<double> alpha(cfg.history);
    Eigen::VectorXd d(x.size());

    for (int it = 1; it <= cfg.max_iters; ++it) {
        d = g;
        const int k = static_cast<int>(S.size());
        for (int i = k - 1; i >= 0; --i) {
            alpha[i] = rho[i] * S[i].dot(d);
            d -= alpha[i] * Y[i];
        }
        if (k > 0) d *= S.back().dot(Y.back()) / Y.back().dot(Y.back());
        for (int i = 0; i < k; ++i) d += (alpha[i] - rho[i] * Y[i].dot(d)) * S[i];
        d = -d;

        double dd = g.dot(d);
        if (!(dd < 0.0)) {
            S.clear();
            Y.clear();
            rho.clear();
            d = -g;
            dd = -g.squaredNorm();
        }

        const double a_init = S.empty() ? std::min(1.0, 1.0 / rep.grad_norm) : 1.0;
        SearchOut ls = wolfe_search(fg, x, d, f, dd, a_init, cfg);
        if (!ls.ok && !S.empty()) {
            S.clear();
            Y.clear();
            rho.clear();
            d = -g;
            dd = -g.squaredNorm();
            ls = wolfe_search(fg, x, d, f, dd, std::min(1.0, 1.0 / rep.grad_norm), cfg);
        }
        if (!ls.ok) {
            rep.status = LbfgsStatus::LineSearchFailed;
            return rep;
        }

        Eigen::VectorXd s = ls.a * d;
        Eigen::VectorXd y = ls.g - g;
        x += s;
        f = ls.f;
        g = ls.g;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            if (static_cast<int>(S.size()) == cfg.history) {
                S.erase(S.begin());
                Y.erase(Y.begin());
                rho.erase(rho.begin());
            }
            S.push_back(std::move(s));
            Y.push_back(std::move(y));
            rho.push_back(1.0 / sy);
        }

        rep.iters = it;
        rep.value = f;
        rep.grad_norm = g.norm();
        if (on_iter) on_iter(it, f);
        if (rep.grad_norm <= cfg.grad_tol) {
            rep.status = LbfgsStatus::Converged;
            return rep;
        }
    }
    rep.status = LbfgsStatus::IterLimit;
    return rep;
}

TrainResult train(const Problem& p, const TrainConfig& cfg) {
    if (cfg.adam_iters < 0 || cfg.lbfgs_iters < 0)
        throw std::invalid_argument("train: negative iteration count");
    if (cfg.record_every < 1) throw std::invalid_argument("train: record cadence must be positive");

    Rng net_rng(cfg.seed, "network");
    Rng mask_rng(cfg.seed, "mask");
    Rng sampler_rng(cfg.seed, "sampler");

    TrainResult out;
    out.net = glorot_init(cfg.sizes, net_rng);
    out.points = sample_points(p, cfg.sampler, sampler_rng);
    const int n_r = static_cast<int>(out.points.interior_x.rows());
    const int n_b = static_cast<int>(out.points.boundary_x.rows());
    const int n_i = static_cast<int>(out.points.initial_x.rows());
    out.mask = init_mask(cfg.mask, n_r, n_b, n_i, mask_rng);

    LossInput in;
    in.problem = &p;
    in.points = &out.points;
    in.anchor_x = cfg.anchor_x;
    in.anchor_y = cfg.anchor_y;
    in.anchor_u = cfg.anchor_u;
    in.mode = cfg.mode;
    in.c_weight = cfg.c_weight;

    Eigen::VectorXd w = flatten(out.net);
    AdamState ws, rs, bs, is;
    ws.init(w.size());
    rs.init(n_r);
    bs.init(n_b);
    is.init(n_i);

    const bool adapt = cfg.mode == TrainMode::Sa;
    auto climb = [&](AdamState& st, int t, const Eigen::VectorXd& grad, Eigen::VectorXd& lam) {
        if (cfg.mask_rule == MaskRule::Adam)
            adam_step(st, cfg.adam_mask, t, grad, -1.0, lam);
        else
            lam += cfg.adam_mask.lr * grad;
    };

    using Clock = std::chrono::steady_clock;
    const auto elapsed = [](Clock::time_point from) {
        return std::chrono::duration<double>(Clock::now() - from).count();
    };

    const auto adam_start = Clock::now();
    for (int t = 1; t <= cfg.adam_iters; ++t) {
        const LossResult res = weighted_loss(out.net, out.mask, in, true);
        const bool log = t == 1 || t % cfg.record_every == 0 || t == cfg.adam_iters;
        if (log)
            out.history.push_back({t, "adam", res.total, res.l_s, res.l_r, res.l_b, res.l_0,
                                   mask_stats(out.mask.r), mask_stats(out.mask.b),
                                   mask_stats(out.mask.i)});
        adam_step(ws, cfg.adam_w, t, res.w_grad, 1.0, w);
        unflatten(w, out.net);
        if (adapt) {
            if (out.mask.r_train && n_r > 0) climb(rs, t, res.r_mask_grad, out.mask.r);
            if (out.mask.b_train && n_b > 0) climb(bs, t, res.b_mask_grad, out.mask.b);
            if (out.mask.i_train && n_i > 0) climb(is, t, res.i_mask_grad, out.mask.i);
        }
    }
    out.adam_seconds = elapsed(adam_start);

    const auto lbfgs_start = Clock::now();
    if (cfg.lbfgs_iters > 0) {
        LossResult last;
        const FnGrad fg = [&](const Eigen::VectorXd& xv, Eigen::VectorXd& grad) {
            unflatten(xv, out.net);
            last = weighted_loss(out.net, out.mask, in, true);
            grad = last.w_grad;
            return last.total;
        };
        LbfgsConfig lc = cfg.lbfgs;
        lc.max_iters = cfg.lbfgs_iters;
        const MaskStats sr = mask_stats(out.mask.r);
        const MaskStats sb = mask_stats(out.mask.b);
        const MaskStats si = mask_stats(out.mask.i);
        const auto record = [&](int it, double fv) {
            if (it == 1 || it % cfg.record_every == 0 || it == cfg.lbfgs_iters)
                out.history.push_back({cfg.adam_iters + it, "lbfgs", fv, last.l_s, last.l_r,
                                       last.l_b, last.l_0, sr, sb, si});
        };
        out.lbfgs = lbfgs_minimize(fg, w, lc, record);
        unflatten(w, out.net);
    }
    out.lbfgs_seconds = elapsed(lbfgs_start);

    out.final_loss = weighted_loss(out.net, out.mask, in, false).total;
    return out;
}

}  // namespace sapinn
