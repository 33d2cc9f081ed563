#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sapinn/autodiff.hpp"
#include "sapinn/batch.hpp"
#include "sapinn/common.hpp"

namespace sapinn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Fully connected tanh network; the last layer stays linear. Weights are
// out-by-in, biases are 1-by-out rows so they drop straight into batch::Linear.
struct NetworkParams {
    std::vector<int> sizes;
    std::vector<MatrixXd> W;
    std::vector<MatrixXd> b;

    int layer_count() const { return static_cast<int>(W.size()); }
};

inline long param_count(std::span<const int> sizes) {
    long n = 0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
        n += static_cast<long>(sizes[l + 1]) * sizes[l] + sizes[l + 1];
    return n;
}

inline void validate_sizes(std::span<const int> sizes) {
    if (sizes.size() < 2) throw std::invalid_argument("network: need at least input and output sizes");
    for (int s : sizes)
        if (s <= 0) throw std::invalid_argument("network: layer sizes must be positive");
}

// Uniform Glorot weights, zero biases.
inline NetworkParams glorot_init(std::span<const int> sizes, Rng& rng) {
    validate_sizes(sizes);
    NetworkParams p;
    p.sizes.assign(sizes.begin(), sizes.end());
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int in = sizes[l], out = sizes[l + 1];
        const double g = std::sqrt(6.0 / (in + out));
        MatrixXd W(out, in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < in; ++c) W(r, c) = rng.uniform(-g, g);
        p.W.push_back(std::move(W));
        p.b.push_back(MatrixXd::Zero(1, out));
    }
    return p;
}

// Order: per layer, W row-major, then b. Both directions share it.
inline VectorXd flatten(const NetworkParams& p) {
    VectorXd v(param_count(p.sizes));
    long k = 0;
    for (int l = 0; l < p.layer_count(); ++l) {
        const MatrixXd& W = p.W[l];
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) v(k++) = W(r, c);
        for (Eigen::Index c = 0; c < p.b[l].cols(); ++c) v(k++) = p.b[l](0, c);
    }
    return v;
}

inline void unflatten(const VectorXd& v, NetworkParams& p) {
    if (v.size() != param_count(p.sizes))
        throw std::invalid_argument("network: flat vector length does not match architecture");
    long k = 0;
    for (int l = 0; l < p.layer_count(); ++l) {
        MatrixXd& W = p.W[l];
        for (Eigen::Index r = 0; r < W.rows(); ++r)
            for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = v(k++);
        for (Eigen::Index c = 0; c < p.b[l].cols(); ++c) p.b[l](0, c) = v(k++);
    }
}

// Scalar forward shared by the double and tape-variable paths. The summation
// order (bias, then weights by input index) is part of the contract: both
// instantiations walk it identically, so their values agree bit for bit.
template <class T, class WAt, class BAt>
T mlp_forward_generic(std::span<const int> sizes, WAt wat, BAt bat, std::vector<T> act) {
    const int layers = static_cast<int>(sizes.size()) - 1;
    for (int l = 0; l < layers; ++l) {
        const int in_n = sizes[l], out_n = sizes[l + 1];
        std::vector<T> nxt;
        nxt.reserve(out_n);
        for (int r = 0; r < out_n; ++r) {
            T s = bat(l, r);
            for (int c = 0; c < in_n; ++c) s = s + wat(l, r, c) * act[c];
            nxt.push_back(l + 1 < layers ? tanh(s) : s);
        }
        act = std::move(nxt);
    }
    return act[0];
}

inline double forward(const NetworkParams& p, std::span<const double> in) {
    if (static_cast<int>(in.size()) != p.sizes.front())
        throw std::invalid_argument("network: input size mismatch");
    using std::tanh;
    return mlp_forward_generic<double>(
        p.sizes, [&](int l, int r, int c) { return p.W[l](r, c); },
        [&](int l, int r) { return p.b[l](0, r); }, std::vector<double>(in.begin(), in.end()));
}

// Network parameters mirrored onto a scalar tape, one variable per entry.
struct VarParams {
    std::vector<int> sizes;
    std::vector<std::vector<ad::Var>> W;  // row-major per layer
    std::vector<std::vector<ad::Var>> b;
};

inline VarParams make_var_params(ad::Tape& t, const NetworkParams& p) {
    VarParams vp;
    vp.sizes = p.sizes;
    for (int l = 0; l < p.layer_count(); ++l) {
        std::vector<ad::Var> w, b;
        for (Eigen::Index r = 0; r < p.W[l].rows(); ++r)
            for (Eigen::Index c = 0; c < p.W[l].cols(); ++c) w.push_back(t.leaf(p.W[l](r, c)));
        for (Eigen::Index c = 0; c < p.b[l].cols(); ++c) b.push_back(t.leaf(p.b[l](0, c)));
        vp.W.push_back(std::move(w));
        vp.b.push_back(std::move(b));
    }
    return vp;
}

inline ad::Var forward(const VarParams& vp, std::span<const ad::Var> in) {
    if (static_cast<int>(in.size()) != vp.sizes.front())
        throw std::invalid_argument("network: input size mismatch");
    return mlp_forward_generic<ad::Var>(
        vp.sizes,
        [&](int l, int r, int c) { return vp.W[l][static_cast<std::size_t>(r) * vp.sizes[l] + c]; },
        [&](int l, int r) { return vp.b[l][r]; }, std::vector<ad::Var>(in.begin(), in.end()));
}

// Network parameters as batch-tape leaves, shared across every forward built
// from them so gradients accumulate through one set of handles.
struct BatchParams {
    std::vector<int> sizes;
    std::vector<int> w_nodes;
    std::vector<int> b_nodes;
};

inline BatchParams make_batch_params(batch::Tape& bt, const NetworkParams& p) {
    BatchParams bp;
    bp.sizes = p.sizes;
    for (int l = 0; l < p.layer_count(); ++l) {
        bp.w_nodes.push_back(bt.leaf(p.W[l]));
        bp.b_nodes.push_back(bt.leaf(p.b[l]));
    }
    return bp;
}

inline int batch_forward(batch::Tape& bt, const BatchParams& bp, int input) {
    const int layers = static_cast<int>(bp.sizes.size()) - 1;
    int a = input;
    for (int l = 0; l < layers; ++l) {
        a = bt.linear(a, bp.w_nodes[l], bp.b_nodes[l]);
        if (l + 1 < layers) a = bt.tanh(a);
    }
    return a;
}

// Gradient of a scalar root with respect to the parameters, in flatten order.
inline VectorXd batch_param_gradient(const batch::Tape& bt, const BatchParams& bp) {
    VectorXd g(param_count(bp.sizes));
    long k = 0;
    for (std::size_t l = 0; l < bp.w_nodes.size(); ++l) {
        const MatrixXd& gw = bt.adjoint(bp.w_nodes[l]);
        for (Eigen::Index r = 0; r < gw.rows(); ++r)
            for (Eigen::Index c = 0; c < gw.cols(); ++c) g(k++) = gw(r, c);
        const MatrixXd& gb = bt.adjoint(bp.b_nodes[l]);
        for (Eigen::Index c = 0; c < gb.cols(); ++c) g(k++) = gb(0, c);
    }
    return g;
}

void save_network(const std::string& path, const NetworkParams& p);
NetworkParams load_network(const std::string& path);

}  // namespace sapinn
