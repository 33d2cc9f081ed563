#include "sapinn/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace sapinn {

namespace {

using batch::Tape;

void ensure_finite(const MatrixXd& col, const MatrixXd& xs, const MatrixXd& ys,
                   const char* what) {
    for (Eigen::Index i = 0; i < col.rows(); ++i)
        if (!std::isfinite(col(i, 0)))
            throw std::runtime_error(std::string("loss: non-finite ") + what + " at point (" +
                                     format_double(xs(i, 0)) + ", " + format_double(ys(i, 0)) +
                                     ")");
}

struct ChunkGrads {
    bool want = false;
    Eigen::VectorXd* w_grad = nullptr;
    Eigen::VectorXd* mask_grad = nullptr;
    Eigen::Index mask_offset = 0;
};

// Shared tail of every group chunk: weight, square, reduce, scale, and the
// optional backward pass.
double finish_chunk(Tape& bt, const BatchParams& bp, int term, int lam_node, double inv_n,
                    double extra_scale, const ChunkGrads& g) {
    int root = bt.scale(bt.sum_all(bt.square(bt.mul(lam_node, term))), inv_n);
    if (extra_scale != 1.0) root = bt.scale(root, extra_scale);
    const double value = bt.value(root)(0, 0);
    if (g.want) {
        bt.backward(root);
        *g.w_grad += batch_param_gradient(bt, bp);
        const MatrixXd& lg = bt.adjoint(lam_node);
        g.mask_grad->segment(g.mask_offset, lg.rows()) += lg.col(0);
    }
    return value;
}

}  // namespace

LossResult weighted_loss(const NetworkParams& net, const Mask& mask, const LossInput& in,
                         bool want_grads) {
    if (in.problem == nullptr || in.points == nullptr)
        throw std::logic_error("loss: problem and points must be set");
    const Problem& pb = *in.problem;
    const SampleSet& pts = *in.points;

    const Eigen::Index n_r = pts.interior_x.rows();
    const Eigen::Index n_b = pts.boundary_x.rows();
    const Eigen::Index n_i = pts.initial_x.rows();
    const Eigen::Index n_s = in.anchor_x.rows();
    if (mask.r.size() != n_r || mask.b.size() != n_b || mask.i.size() != n_i)
        throw std::logic_error("loss: mask sizes do not match the point set");
    if (in.anchor_y.rows() != n_s || in.anchor_u.rows() != n_s)
        throw std::logic_error("loss: anchor columns differ in length");

    const bool plain = in.mode != TrainMode::Sa;  // lambda fixed at one
    const double c = in.mode == TrainMode::Nonadaptive ? in.c_weight : 1.0;

    LossResult out;
    if (want_grads) {
        out.w_grad = Eigen::VectorXd::Zero(param_count(net.sizes));
        out.r_mask_grad = Eigen::VectorXd::Zero(n_r);
        out.b_mask_grad = Eigen::VectorXd::Zero(n_b);
        out.i_mask_grad = Eigen::VectorXd::Zero(n_i);
    }

    Tape bt;
    auto lam_leaf = [&](const Eigen::VectorXd& src, Eigen::Index off, Eigen::Index len) {
        MatrixXd l(len, 1);
        if (plain)
            l.setOnes();
        else
            l.col(0) = src.segment(off, len);
        return bt.leaf(std::move(l));
    };
    auto grads_for = [&](Eigen::VectorXd& mg, Eigen::Index off) {
        ChunkGrads g;
        g.want = want_grads;
        g.w_grad = &out.w_grad;
        g.mask_grad = &mg;
        g.mask_offset = off;
        return g;
    };

    // Interior residual.
    for (Eigen::Index off = 0; off < n_r; off += kLossChunk) {
        const Eigen::Index len = std::min<Eigen::Index>(kLossChunk, n_r - off);
        bt.clear();
        auto bp = make_batch_params(bt, net);
        const MatrixXd xs = pts.interior_x.middleRows(off, len);
        const MatrixXd ys = pts.interior_y.middleRows(off, len);
        const int r = batch_residual(bt, bp, pb, bt.constant(xs), bt.constant(ys));
        ensure_finite(bt.value(r), xs, ys, "residual");
        out.l_r += finish_chunk(bt, bp, r, lam_leaf(mask.r, off, len), 1.0 / n_r, 1.0,
                                grads_for(out.r_mask_grad, off));
    }

    // Boundary.
    for (Eigen::Index off = 0; off < n_b; off += kLossChunk) {
        const Eigen::Index len = std::min<Eigen::Index>(kLossChunk, n_b - off);
        bt.clear();
        auto bp = make_batch_params(bt, net);
        if (pb.periodic_x) {
            // Stack the x = hi copies over the x = lo copies; split_sub then
            // forms the cross-boundary gaps in one shot.
            MatrixXd xs(2 * len, 1), ts(2 * len, 1);
            xs.topRows(len).setConstant(pb.x_hi);
            xs.bottomRows(len).setConstant(pb.x_lo);
            ts.topRows(len) = pts.boundary_y.middleRows(off, len);
            ts.bottomRows(len) = ts.topRows(len);
            const int xc = bt.constant(xs);
            const int u = batch_forward(bt, bp, bt.concat2(xc, bt.constant(ts)));
            const int wrt[] = {xc};
            const int ux = bt.backward_rows(u, wrt)[0];
            const int du = bt.split_sub(u);
            const int dux = bt.split_sub(ux);
            ensure_finite(bt.value(du), xs, ts, "boundary gap");
            const int lam = lam_leaf(mask.b, off, len);
            const int s1 = bt.sum_all(bt.square(bt.mul(lam, du)));
            const int s2 = bt.sum_all(bt.square(bt.mul(lam, dux)));
            int root = bt.scale(bt.add(s1, s2), 1.0 / n_b);
            if (c != 1.0) root = bt.scale(root, c);
            out.l_b += bt.value(root)(0, 0);
            if (want_grads) {
                bt.backward(root);
                out.w_grad += batch_param_gradient(bt, bp);
                out.b_mask_grad.segment(off, len) += bt.adjoint(lam).col(0);
            }
        } else {
            const MatrixXd xs = pts.boundary_x.middleRows(off, len);
            const MatrixXd ys = pts.boundary_y.middleRows(off, len);
            MatrixXd g(len, 1);
            for (Eigen::Index i = 0; i < len; ++i)
                g(i, 0) = boundary_value(pb, xs(i, 0), ys(i, 0));
            const int u = batch_forward(bt, bp, bt.concat2(bt.constant(xs), bt.constant(ys)));
            const int e = bt.sub(u, bt.constant(g));
            ensure_finite(bt.value(e), xs, ys, "boundary mismatch");
            out.l_b += finish_chunk(bt, bp, e, lam_leaf(mask.b, off, len), 1.0 / n_b, c,
                                    grads_for(out.b_mask_grad, off));
        }
    }

    // Initial profile.
    for (Eigen::Index off = 0; off < n_i; off += kLossChunk) {
        const Eigen::Index len = std::min<Eigen::Index>(kLossChunk, n_i - off);
        bt.clear();
        auto bp = make_batch_params(bt, net);
        const MatrixXd xs = pts.initial_x.middleRows(off, len);
        const MatrixXd ys = MatrixXd::Constant(len, 1, pb.y_lo);
        MatrixXd h(len, 1);
        for (Eigen::Index i = 0; i < len; ++i) h(i, 0) = initial_condition(pb, xs(i, 0));
        const int u = batch_forward(bt, bp, bt.concat2(bt.constant(xs), bt.constant(ys)));
        const int e = bt.sub(u, bt.constant(h));
        ensure_finite(bt.value(e), xs, ys, "initial mismatch");
        out.l_0 += finish_chunk(bt, bp, e, lam_leaf(mask.i, off, len), 1.0 / n_i, c,
                                grads_for(out.i_mask_grad, off));
    }

    // Anchors: plain mean squared error, no mask.
    for (Eigen::Index off = 0; off < n_s; off += kLossChunk) {
        const Eigen::Index len = std::min<Eigen::Index>(kLossChunk, n_s - off);
        bt.clear();
        auto bp = make_batch_params(bt, net);
        const MatrixXd xs = in.anchor_x.middleRows(off, len);
        const MatrixXd ys = in.anchor_y.middleRows(off, len);
        const int u = batch_forward(bt, bp, bt.concat2(bt.constant(xs), bt.constant(ys)));
        const int e = bt.sub(u, bt.constant(in.anchor_u.middleRows(off, len)));
        ensure_finite(bt.value(e), xs, ys, "anchor mismatch");
        const int root = bt.scale(bt.sum_all(bt.square(e)), 1.0 / n_s);
        out.l_s += bt.value(root)(0, 0);
        if (want_grads) {
            bt.backward(root);
            out.w_grad += batch_param_gradient(bt, bp);
        }
    }

    out.total = ((out.l_s + out.l_r) + out.l_b) + out.l_0;
    if (!std::isfinite(out.total)) throw std::runtime_error("loss: non-finite total");
    return out;
}

}  // namespace sapinn
