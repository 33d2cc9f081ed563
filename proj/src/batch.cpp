#include "sapinn/batch.hpp"

#include <span>
#include <stdexcept>

#include "sapinn/common.hpp"

namespace sapinn::batch {

namespace {

std::uint64_t shape_key(Eigen::Index r, Eigen::Index c) {
    return (static_cast<std::uint64_t>(r) << 32) ^ static_cast<std::uint64_t>(c);
}

}  // namespace

int Tape::push(Op op, MatrixXd val, int a, int b, int c, int j, double s) {
    Node n;
    n.val = std::move(val);
    n.a = a;
    n.b = b;
    n.c = c;
    n.j = j;
    n.s = s;
    n.op = op;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check(int i) const {
    if (i < 0 || static_cast<std::size_t>(i) >= nodes_.size())
        throw std::logic_error("batch: node handle out of range");
}

MatrixXd Tape::acquire(Eigen::Index rows, Eigen::Index cols) {
    auto it = pool_.find(shape_key(rows, cols));
    if (it != pool_.end() && !it->second.empty()) {
        MatrixXd m = std::move(it->second.back());
        it->second.pop_back();
        return m;
    }
    return MatrixXd(rows, cols);
}

void Tape::release(MatrixXd&& m) {
    if (m.size() > 0) pool_[shape_key(m.rows(), m.cols())].push_back(std::move(m));
}

MatrixXd& Tape::adj_ref(int i) {
    Node& n = nodes_[i];
    if (!n.has_adj) {
        n.adj = acquire(n.val.rows(), n.val.cols());
        n.adj.setZero();
        n.has_adj = true;
        touched_.push_back(i);
    }
    return n.adj;
}

const MatrixXd& Tape::adjoint(int i) const {
    check(i);
    const Node& n = nodes_[i];
    if (n.has_adj) return n.adj;
    zero_.setZero(n.val.rows(), n.val.cols());
    return zero_;
}

int Tape::concat2(int x, int t) {
    check(x);
    check(t);
    const MatrixXd& X = nodes_[x].val;
    const MatrixXd& T = nodes_[t].val;
    if (X.cols() != 1 || T.cols() != 1 || X.rows() != T.rows())
        throw std::logic_error("batch: concat2 expects two equal-length columns");
    MatrixXd out = acquire(X.rows(), 2);
    out.col(0) = X.col(0);
    out.col(1) = T.col(0);
    return push(Op::Concat2, std::move(out), x, t, -1);
}

int Tape::col(int a, int j) {
    check(a);
    const MatrixXd& A = nodes_[a].val;
    if (j < 0 || j >= A.cols()) throw std::logic_error("batch: column index out of range");
    MatrixXd out = acquire(A.rows(), 1);
    out.col(0) = A.col(j);
    return push(Op::Col, std::move(out), a, -1, -1, j);
}

int Tape::pad_col(int v, int j, int width) {
    check(v);
    const MatrixXd& V = nodes_[v].val;
    if (V.cols() != 1 || j < 0 || j >= width) throw std::logic_error("batch: pad_col misuse");
    MatrixXd out = acquire(V.rows(), width);
    out.setZero();
    out.col(j) = V.col(0);
    return push(Op::PadCol, std::move(out), v, -1, -1, j);
}

int Tape::linear(int a, int w, int b) {
    check(a);
    check(w);
    check(b);
    const MatrixXd& A = nodes_[a].val;
    const MatrixXd& W = nodes_[w].val;
    const MatrixXd& B = nodes_[b].val;
    if (A.cols() != W.cols() || B.rows() != 1 || B.cols() != W.rows())
        throw std::logic_error("batch: linear shape mismatch");
    MatrixXd out = acquire(A.rows(), W.rows());
    out.noalias() = A * W.transpose();
    out.rowwise() += B.row(0);
    return push(Op::Linear, std::move(out), a, w, b);
}

int Tape::matmul(int a, int b) {
    check(a);
    check(b);
    const MatrixXd& A = nodes_[a].val;
    const MatrixXd& B = nodes_[b].val;
    if (A.cols() != B.rows()) throw std::logic_error("batch: matmul shape mismatch");
    MatrixXd out = acquire(A.rows(), B.cols());
    out.noalias() = A * B;
    return push(Op::MatMul, std::move(out), a, b, -1);
}

int Tape::matmul_t1(int x, int a) {
    check(x);
    check(a);
    const MatrixXd& X = nodes_[x].val;
    const MatrixXd& A = nodes_[a].val;
    if (X.rows() != A.rows()) throw std::logic_error("batch: matmul_t1 shape mismatch");
    MatrixXd out = acquire(X.cols(), A.cols());
    out.noalias() = X.transpose() * A;
    return push(Op::MatMulT1, std::move(out), x, a, -1);
}

int Tape::matmul_t2(int a, int w) {
    check(a);
    check(w);
    const MatrixXd& A = nodes_[a].val;
    const MatrixXd& W = nodes_[w].val;
    if (A.cols() != W.cols()) throw std::logic_error("batch: matmul_t2 shape mismatch");
    MatrixXd out = acquire(A.rows(), W.rows());
    out.noalias() = A * W.transpose();
    return push(Op::MatMulT2, std::move(out), a, w, -1);
}

int Tape::tanh(int a) {
    check(a);
    MatrixXd out = acquire(nodes_[a].val.rows(), nodes_[a].val.cols());
    out.array() = nodes_[a].val.array().tanh();
    return push(Op::Tanh, std::move(out), a, -1, -1);
}

int Tape::neg(int a) {
    check(a);
    MatrixXd out = acquire(nodes_[a].val.rows(), nodes_[a].val.cols());
    out = -nodes_[a].val;
    return push(Op::Neg, std::move(out), a, -1, -1);
}

int Tape::add(int a, int b) {
    check(a);
    check(b);
    const MatrixXd& A = nodes_[a].val;
    const MatrixXd& B = nodes_[b].val;
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::logic_error("batch: add shape mismatch");
    MatrixXd out = acquire(A.rows(), A.cols());
    out = A + B;
    return push(Op::Add, std::move(out), a, b, -1);
}

int Tape::sub(int a, int b) {
    check(a);
    check(b);
    const MatrixXd& A = nodes_[a].val;
    const MatrixXd& B = nodes_[b].val;
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::logic_error("batch: sub shape mismatch");
    MatrixXd out = acquire(A.rows(), A.cols());
    out = A - B;
    return push(Op::Sub, std::move(out), a, b, -1);
}

int Tape::mul(int a, int b) {
    check(a);
    check(b);
    const MatrixXd& A = nodes_[a].val;
    const MatrixXd& B = nodes_[b].val;
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::logic_error("batch: mul shape mismatch");
    MatrixXd out = acquire(A.rows(), A.cols());
    out.array() = A.array() * B.array();
    return push(Op::Mul, std::move(out), a, b, -1);
}

int Tape::square(int a) {
    check(a);
    MatrixXd out = acquire(nodes_[a].val.rows(), nodes_[a].val.cols());
    out.array() = nodes_[a].val.array().square();
    return push(Op::Square, std::move(out), a, -1, -1);
}

int Tape::scale(int a, double s) {
    check(a);
    MatrixXd out = acquire(nodes_[a].val.rows(), nodes_[a].val.cols());
    out = s * nodes_[a].val;
    return push(Op::Scale, std::move(out), a, -1, -1, 0, s);
}

int Tape::sum_all(int a) {
    check(a);
    const MatrixXd& A = nodes_[a].val;
    MatrixXd out = acquire(1, 1);
    out(0, 0) = pairwise_sum(std::span<const double>(A.data(), static_cast<std::size_t>(A.size())));
    return push(Op::SumAll, std::move(out), a, -1, -1);
}

int Tape::col_sums(int a) {
    check(a);
    const MatrixXd& A = nodes_[a].val;
    MatrixXd out = acquire(1, A.cols());
    for (Eigen::Index c = 0; c < A.cols(); ++c)
        out(0, c) = pairwise_sum(
            std::span<const double>(A.col(c).data(), static_cast<std::size_t>(A.rows())));
    return push(Op::ColSums, std::move(out), a, -1, -1);
}

int Tape::split_sub(int a) {
    check(a);
    const MatrixXd& A = nodes_[a].val;
    if (A.rows() % 2 != 0) throw std::logic_error("batch: split_sub needs an even row count");
    const Eigen::Index h = A.rows() / 2;
    MatrixXd out = acquire(h, A.cols());
    out = A.topRows(h) - A.bottomRows(h);
    return push(Op::SplitSub, std::move(out), a, -1, -1);
}

void Tape::backward(int root) {
    check(root);
    if (nodes_[root].val.rows() != 1 || nodes_[root].val.cols() != 1)
        throw std::logic_error("batch: backward root must be 1x1");
    for (int i : touched_) {
        Node& n = nodes_[i];
        if (n.has_adj) {
            release(std::move(n.adj));
            n.has_adj = false;
        }
    }
    touched_.clear();

    adj_ref(root)(0, 0) = 1.0;
    for (int i = root; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.has_adj) continue;
        const MatrixXd& G = n.adj;
        auto diff = [&](int p) { return nodes_[p].op != Op::ConstLeaf; };
        switch (n.op) {
            case Op::Leaf:
            case Op::ConstLeaf:
                continue;  // keep leaf adjoints for the caller
            case Op::Concat2:
                if (diff(n.a)) adj_ref(n.a).noalias() += G.col(0);
                if (diff(n.b)) adj_ref(n.b).noalias() += G.col(1);
                break;
            case Op::Col:
                if (diff(n.a)) adj_ref(n.a).col(n.j) += G.col(0);
                break;
            case Op::PadCol:
                if (diff(n.a)) adj_ref(n.a).noalias() += G.col(n.j);
                break;
            case Op::Linear:
                if (diff(n.a)) adj_ref(n.a).noalias() += G * nodes_[n.b].val;
                if (diff(n.b)) adj_ref(n.b).noalias() += G.transpose() * nodes_[n.a].val;
                if (diff(n.c)) adj_ref(n.c).noalias() += G.colwise().sum();
                break;
            case Op::MatMul:
                if (diff(n.a)) adj_ref(n.a).noalias() += G * nodes_[n.b].val.transpose();
                if (diff(n.b)) adj_ref(n.b).noalias() += nodes_[n.a].val.transpose() * G;
                break;
            case Op::MatMulT1:
                if (diff(n.a)) adj_ref(n.a).noalias() += nodes_[n.b].val * G.transpose();
                if (diff(n.b)) adj_ref(n.b).noalias() += nodes_[n.a].val * G;
                break;
            case Op::MatMulT2:
                if (diff(n.a)) adj_ref(n.a).noalias() += G * nodes_[n.b].val;
                if (diff(n.b)) adj_ref(n.b).noalias() += G.transpose() * nodes_[n.a].val;
                break;
            case Op::Tanh:
                if (diff(n.a))
                    adj_ref(n.a).array() += G.array() * (1.0 - n.val.array().square());
                break;
            case Op::DTanh:
                if (diff(n.a))
                    adj_ref(n.a).array() += G.array() * (-2.0 * nodes_[n.a].val.array());
                break;
            case Op::Neg:
                if (diff(n.a)) adj_ref(n.a) -= G;
                break;
            case Op::Add:
                if (diff(n.a)) adj_ref(n.a) += G;
                if (diff(n.b)) adj_ref(n.b) += G;
                break;
            case Op::Sub:
                if (diff(n.a)) adj_ref(n.a) += G;
                if (diff(n.b)) adj_ref(n.b) -= G;
                break;
            case Op::Mul:
                if (diff(n.a)) adj_ref(n.a).array() += G.array() * nodes_[n.b].val.array();
                if (diff(n.b)) adj_ref(n.b).array() += G.array() * nodes_[n.a].val.array();
                break;
            case Op::Square:
                if (diff(n.a)) adj_ref(n.a).array() += G.array() * (2.0 * nodes_[n.a].val.array());
                break;
            case Op::Scale:
                if (diff(n.a)) adj_ref(n.a) += n.s * G;
                break;
            case Op::SumAll:
                if (diff(n.a)) adj_ref(n.a).array() += G(0, 0);
                break;
            case Op::ColSums:
                if (diff(n.a)) adj_ref(n.a).rowwise() += G.row(0);
                break;
            case Op::SplitSub: {
                const Eigen::Index h = nodes_[n.a].val.rows() / 2;
                if (diff(n.a)) {
                    MatrixXd& pa = adj_ref(n.a);
                    pa.topRows(h) += G;
                    pa.bottomRows(h) -= G;
                }
                break;
            }
        }
        if (n.op != Op::Leaf && n.op != Op::ConstLeaf) {
            release(std::move(n.adj));
            n.has_adj = false;
        }
    }
}

std::vector<int> Tape::backward_rows(int root, std::span<const int> wrt) {
    check(root);
    if (nodes_[root].val.cols() != 1)
        throw std::logic_error("batch: recorded root must be a single column");
    const int n = root + 1;

    std::vector<char> reaches(static_cast<std::size_t>(n), 0);
    for (int w : wrt) {
        check(w);
        if (w >= n) throw std::logic_error("batch: wrt recorded after root");
        reaches[w] = 1;
    }
    for (int i = 0; i < n; ++i) {
        const Node& nd = nodes_[i];
        if ((nd.a >= 0 && reaches[nd.a]) || (nd.b >= 0 && reaches[nd.b]) ||
            (nd.c >= 0 && reaches[nd.c]))
            reaches[i] = 1;
    }

    std::vector<int> adjc(static_cast<std::size_t>(n), -1);
    auto accum = [&](int target, int contrib) {
        adjc[target] = adjc[target] < 0 ? contrib : add(adjc[target], contrib);
    };

    adjc[root] = constant(MatrixXd::Ones(nodes_[root].val.rows(), 1));
    for (int i = root; i >= 0; --i) {
        if (!reaches[i] || adjc[i] < 0) continue;
        // POD snapshot: recording below reallocates nodes_.
        const Op op = nodes_[i].op;
        const int a = nodes_[i].a, b = nodes_[i].b, c = nodes_[i].c;
        const int jj = nodes_[i].j;
        const double ss = nodes_[i].s;
        const int g = adjc[i];
        switch (op) {
            case Op::Leaf:
            case Op::ConstLeaf:
                break;
            case Op::Concat2:
                if (reaches[a]) accum(a, col(g, 0));
                if (reaches[b]) accum(b, col(g, 1));
                break;
            case Op::Col:
                if (reaches[a]) accum(a, pad_col(g, jj, static_cast<int>(nodes_[a].val.cols())));
                break;
            case Op::PadCol:
                if (reaches[a]) accum(a, col(g, jj));
                break;
            case Op::Linear:
                if (reaches[a]) accum(a, matmul(g, b));
                if (reaches[b]) accum(b, matmul_t1(g, a));
                if (reaches[c]) accum(c, col_sums(g));
                break;
            case Op::MatMul:
                if (reaches[a]) accum(a, matmul_t2(g, b));
                if (reaches[b]) accum(b, matmul_t1(a, g));
                break;
            case Op::MatMulT1:
                if (reaches[a]) accum(a, matmul_t2(b, g));
                if (reaches[b]) accum(b, matmul(a, g));
                break;
            case Op::MatMulT2:
                if (reaches[a]) accum(a, matmul(g, b));
                if (reaches[b]) accum(b, matmul_t1(g, a));
                break;
            case Op::Tanh: {
                if (reaches[a]) {
                    auto it = dtanh_cache_.find(i);
                    int dt;
                    if (it != dtanh_cache_.end()) {
                        dt = it->second;
                    } else {
                        MatrixXd v = acquire(nodes_[i].val.rows(), nodes_[i].val.cols());
                        v.array() = 1.0 - nodes_[i].val.array().square();
                        dt = push(Op::DTanh, std::move(v), i, -1, -1);
                        dtanh_cache_.emplace(i, dt);
                    }
                    accum(a, mul(g, dt));
                }
                break;
            }
            case Op::DTanh:
                if (reaches[a]) accum(a, scale(mul(g, a), -2.0));
                break;
            case Op::Neg:
                if (reaches[a]) accum(a, neg(g));
                break;
            case Op::Add:
                if (reaches[a]) accum(a, g);
                if (reaches[b]) accum(b, g);
                break;
            case Op::Sub:
                if (reaches[a]) accum(a, g);
                if (reaches[b]) accum(b, neg(g));
                break;
            case Op::Mul:
                if (reaches[a]) accum(a, mul(g, b));
                if (reaches[b]) accum(b, mul(g, a));
                break;
            case Op::Square:
                if (reaches[a]) accum(a, scale(mul(g, a), 2.0));
                break;
            case Op::Scale:
                if (reaches[a]) accum(a, scale(g, ss));
                break;
            case Op::SumAll:
            case Op::ColSums:
            case Op::SplitSub:
                throw std::logic_error("batch: op mixes rows, recorded sweep cannot cross it");
        }
    }

    std::vector<int> out;
    out.reserve(wrt.size());
    for (int w : wrt)
        out.push_back(adjc[w] >= 0
                          ? adjc[w]
                          : constant(MatrixXd::Zero(nodes_[w].val.rows(), nodes_[w].val.cols())));
    return out;
}

void Tape::clear() {
    for (Node& n : nodes_) {
        release(std::move(n.val));
        if (n.has_adj) release(std::move(n.adj));
    }
    nodes_.clear();
    touched_.clear();
    dtanh_cache_.clear();
}

}  // namespace sapinn::batch
