#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace sapinn::batch {

using Eigen::MatrixXd;

// Matrix-granularity tape. Rows index sample points, so a forward pass over a
// whole batch is a handful of GEMMs instead of a sea of scalar nodes. The
// differentiation contract mirrors the scalar tape: eager values, a numeric
// reverse sweep from a scalar root, and a recorded reverse sweep that emits
// new tape nodes so input derivatives stay differentiable.
enum class Op : std::uint8_t {
    Leaf,      // differentiable input (parameters, masks)
    ConstLeaf, // data; never receives adjoints
    Concat2,   // [x t] from two n-by-1 columns
    Col,       // column j of a matrix
    PadCol,    // n-by-1 placed into column j of an n-by-width zero matrix
    Linear,    // A * W^T + row-broadcast b, the dense layer primitive
    MatMul,    // A * B
    MatMulT1,  // X^T * A
    MatMulT2,  // A * W^T
    Tanh,
    DTanh,     // 1 - tanh^2, from an existing Tanh node's values
    Neg,
    Add,
    Sub,
    Mul,       // elementwise
    Square,    // elementwise
    Scale,     // constant multiple
    SumAll,    // pairwise sum of every entry, 1-by-1
    ColSums,   // 1-by-c row of pairwise column sums
    SplitSub,  // top half minus bottom half of the rows
};

class Tape {
public:
    int leaf(MatrixXd m) { return push(Op::Leaf, std::move(m), -1, -1, -1); }
    int constant(MatrixXd m) { return push(Op::ConstLeaf, std::move(m), -1, -1, -1); }

    int concat2(int x, int t);
    int col(int a, int j);
    int pad_col(int v, int j, int width);
    int linear(int a, int w, int b);
    int matmul(int a, int b);
    int matmul_t1(int x, int a);
    int matmul_t2(int a, int w);
    int tanh(int a);
    int neg(int a);
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);
    int square(int a);
    int scale(int a, double s);
    int sum_all(int a);
    int col_sums(int a);
    int split_sub(int a);

    const MatrixXd& value(int i) const { return nodes_[i].val; }
    std::size_t size() const { return nodes_.size(); }

    // Numeric reverse sweep from a 1-by-1 root. Non-leaf adjoint buffers are
    // recycled as the frontier passes them, so peak memory tracks the live
    // frontier rather than the whole tape.
    void backward(int root);

    // Adjoint after backward(); zeros if the sweep never reached the node.
    const MatrixXd& adjoint(int i) const;

    // Recorded reverse sweep seeded with ones. Valid when every op between
    // root and wrt treats rows independently; then row i of the result is
    // d(root[i]) / d(wrt[i]), the batched analogue of a scalar derivative.
    // Returns one node handle per wrt entry.
    std::vector<int> backward_rows(int root, std::span<const int> wrt);

    // Drops all nodes, recycling their storage into the buffer pool.
    void clear();

private:
    struct Node {
        MatrixXd val;
        MatrixXd adj;
        int a = -1, b = -1, c = -1;
        int j = 0;
        double s = 0.0;
        Op op = Op::Leaf;
        bool has_adj = false;
    };

    int push(Op op, MatrixXd val, int a, int b, int c, int j = 0, double s = 0.0);
    void check(int i) const;
    MatrixXd acquire(Eigen::Index rows, Eigen::Index cols);
    void release(MatrixXd&& m);
    MatrixXd& adj_ref(int i);

    std::vector<Node> nodes_;
    std::vector<int> touched_;
    std::unordered_map<int, int> dtanh_cache_;
    std::unordered_map<std::uint64_t, std::vector<MatrixXd>> pool_;
    mutable MatrixXd zero_;
};

// Expression-style handle so templated formulas can run on either tape.
struct BVar {
    Tape* tape = nullptr;
    int idx = -1;
};

inline BVar operator+(BVar a, BVar b) { return {a.tape, a.tape->add(a.idx, b.idx)}; }
inline BVar operator-(BVar a, BVar b) { return {a.tape, a.tape->sub(a.idx, b.idx)}; }
inline BVar operator*(BVar a, BVar b) { return {a.tape, a.tape->mul(a.idx, b.idx)}; }
inline BVar operator*(double s, BVar a) { return {a.tape, a.tape->scale(a.idx, s)}; }
inline BVar operator-(BVar a) { return {a.tape, a.tape->neg(a.idx)}; }

}  // namespace sapinn::batch
