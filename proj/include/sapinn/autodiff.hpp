#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace sapinn::ad {

// Elementary operation set. Residual polynomials (u^3 and friends) compose
// from Mul; everything a benchmark PDE needs reduces to these nine plus leaves.
enum class Op : std::uint8_t { Leaf, Const, Add, Sub, Mul, Div, Pow, Tanh, Sin, Cos, Neg };

class Tape;

// Handle to one tape node: a value plus its place in the recorded graph.
struct Var {
    Tape* tape = nullptr;
    std::int32_t idx = -1;
    bool valid() const { return tape != nullptr && idx >= 0; }
};

class Tape {
public:
    struct Node {
        double value = 0.0;
        double adjoint = 0.0;
        std::int32_t parent[2] = {-1, -1};
        double partial[2] = {0.0, 0.0};  // local partials, cached at record time
        double aux = 0.0;                // pow exponent
        Op op = Op::Leaf;
        std::uint8_t n_parents = 0;
        std::int32_t generation = 0;
    };

    Var leaf(double v) {
        nodes_.push_back(Node{v, 0.0, {-1, -1}, {0.0, 0.0}, 0.0, Op::Leaf, 0, gen_floor_});
        return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
    }

    Var constant(double v) {
        nodes_.push_back(Node{v, 0.0, {-1, -1}, {0.0, 0.0}, 0.0, Op::Const, 0, gen_floor_});
        return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
    }

    // Generic recording entry. Args must live on this tape; their parents
    // necessarily precede the new node, so insertion order stays topological.
    Var record(Op op, std::span<const Var> args, double aux = 0.0) {
        for (const Var& a : args)
            if (a.tape != this) throw std::logic_error("autodiff: argument from a different tape");
        Node n;
        n.op = op;
        n.aux = aux;
        n.n_parents = static_cast<std::uint8_t>(args.size());
        std::int32_t g = gen_floor_;
        for (std::size_t i = 0; i < args.size(); ++i) {
            n.parent[i] = args[i].idx;
            g = std::max(g, nodes_[args[i].idx].generation);
        }
        n.generation = g;
        const double a = args.size() > 0 ? nodes_[args[0].idx].value : 0.0;
        const double b = args.size() > 1 ? nodes_[args[1].idx].value : 0.0;
        switch (op) {
            case Op::Add: n.value = a + b; n.partial[0] = 1.0; n.partial[1] = 1.0; break;
            case Op::Sub: n.value = a - b; n.partial[0] = 1.0; n.partial[1] = -1.0; break;
            case Op::Mul: n.value = a * b; n.partial[0] = b; n.partial[1] = a; break;
            case Op::Div: n.value = a / b; n.partial[0] = 1.0 / b; n.partial[1] = -n.value / b; break;
            case Op::Pow: n.value = std::pow(a, aux); n.partial[0] = aux * std::pow(a, aux - 1.0); break;
            case Op::Tanh: n.value = std::tanh(a); n.partial[0] = 1.0 - n.value * n.value; break;
            case Op::Sin: n.value = std::sin(a); n.partial[0] = std::cos(a); break;
            case Op::Cos: n.value = std::cos(a); n.partial[0] = -std::sin(a); break;
            case Op::Neg: n.value = -a; n.partial[0] = -1.0; break;
            default: throw std::logic_error("autodiff: record() expects an elementary operation");
        }
        nodes_.push_back(n);
        return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
    }

    double value(Var v) const { return nodes_[v.idx].value; }
    double adjoint(Var v) const { return nodes_[v.idx].adjoint; }
    std::int32_t generation(Var v) const { return nodes_[v.idx].generation; }
    std::size_t size() const { return nodes_.size(); }
    const Node& node(std::int32_t i) const { return nodes_[i]; }

    // Clears contents, keeps capacity; the training inner loop reuses tapes.
    void clear() {
        nodes_.clear();
        gen_floor_ = 0;
        one_ = Var{};
    }

    // Numeric reverse sweep: adjoints of all nodes at or below root become
    // d(root)/d(node). Visits strict reverse insertion order exactly once.
    void backward(Var root) {
        if (root.tape != this) throw std::logic_error("autodiff: root from a different tape");
        for (auto& n : nodes_) n.adjoint = 0.0;
        nodes_[root.idx].adjoint = 1.0;
        for (std::int32_t i = root.idx; i >= 0; --i) {
            const Node& n = nodes_[i];
            if (n.adjoint == 0.0) continue;
            for (int p = 0; p < n.n_parents; ++p)
                nodes_[n.parent[p]].adjoint += n.adjoint * n.partial[p];
        }
    }

    std::vector<double> gradient(Var root, std::span<const Var> wrt) {
        backward(root);
        std::vector<double> g;
        g.reserve(wrt.size());
        for (const Var& v : wrt) g.push_back(nodes_[v.idx].adjoint);
        return g;
    }

    // Reverse sweep recorded as new nodes one generation deeper, so the
    // resulting derivatives stay differentiable. Only paths that can reach a
    // node in `wrt` are materialized.
    std::vector<Var> backward_recorded(Var root, std::span<const Var> wrt);

    Var one() {
        if (one_.tape != this) one_ = constant(1.0);
        return one_;
    }

private:
    friend class GenerationGuard;
    std::vector<Node> nodes_;
    std::int32_t gen_floor_ = 0;
    Var one_{};
};

class GenerationGuard {
public:
    GenerationGuard(Tape& t, std::int32_t floor) : t_(t), saved_(t.gen_floor_) {
        t_.gen_floor_ = std::max(t_.gen_floor_, floor);
    }
    ~GenerationGuard() { t_.gen_floor_ = saved_; }

private:
    Tape& t_;
    std::int32_t saved_;
};

inline Var operator+(Var a, Var b) { const Var args[] = {a, b}; return a.tape->record(Op::Add, args); }
inline Var operator-(Var a, Var b) { const Var args[] = {a, b}; return a.tape->record(Op::Sub, args); }
inline Var operator*(Var a, Var b) { const Var args[] = {a, b}; return a.tape->record(Op::Mul, args); }
inline Var operator/(Var a, Var b) { const Var args[] = {a, b}; return a.tape->record(Op::Div, args); }
inline Var operator-(Var a) { const Var args[] = {a}; return a.tape->record(Op::Neg, args); }

inline Var operator+(Var a, double c) { return a + a.tape->constant(c); }
inline Var operator+(double c, Var a) { return a.tape->constant(c) + a; }
inline Var operator-(Var a, double c) { return a - a.tape->constant(c); }
inline Var operator-(double c, Var a) { return a.tape->constant(c) - a; }
inline Var operator*(Var a, double c) { return a * a.tape->constant(c); }
inline Var operator*(double c, Var a) { return a.tape->constant(c) * a; }
inline Var operator/(Var a, double c) { return a / a.tape->constant(c); }
inline Var operator/(double c, Var a) { return a.tape->constant(c) / a; }

inline Var tanh(Var a) { const Var args[] = {a}; return a.tape->record(Op::Tanh, args); }
inline Var sin(Var a) { const Var args[] = {a}; return a.tape->record(Op::Sin, args); }
inline Var cos(Var a) { const Var args[] = {a}; return a.tape->record(Op::Cos, args); }
inline Var pow(Var a, double e) { const Var args[] = {a}; return a.tape->record(Op::Pow, args, e); }

inline std::vector<Var> Tape::backward_recorded(Var root, std::span<const Var> wrt) {
    if (root.tape != this) throw std::logic_error("autodiff: root from a different tape");
    const std::int32_t n = root.idx + 1;

    // reaches[i]: node i can reach some wrt target going forward, i.e. the
    // adjoint of i matters. Parents precede children, so one forward DP pass.
    std::vector<char> reaches(nodes_.size(), 0);
    for (const Var& w : wrt) {
        if (w.tape != this) throw std::logic_error("autodiff: wrt from a different tape");
        reaches[w.idx] = 1;
    }
    for (std::int32_t i = 0; i < n; ++i) {
        const Node& nd = nodes_[i];
        for (int p = 0; p < nd.n_parents; ++p)
            if (reaches[nd.parent[p]]) { reaches[i] = 1; break; }
    }

    GenerationGuard guard(*this, nodes_[root.idx].generation + 1);

    std::vector<Var> adj(static_cast<std::size_t>(n));
    auto accumulate = [&](std::int32_t target, Var contrib) {
        adj[target] = adj[target].valid() ? adj[target] + contrib : contrib;
    };

    adj[root.idx] = one();
    for (std::int32_t i = root.idx; i >= 0; --i) {
        if (!reaches[i] || !adj[i].valid()) continue;
        // Copy, not reference: recording below may reallocate nodes_.
        const Node nd = nodes_[i];
        const Var a = adj[i];
        const Var self{this, i};
        const Var p0{this, nd.parent[0]};
        const Var p1{this, nd.parent[1]};
        switch (nd.op) {
            case Op::Add:
                if (reaches[nd.parent[0]]) accumulate(nd.parent[0], a);
                if (reaches[nd.parent[1]]) accumulate(nd.parent[1], a);
                break;
            case Op::Sub:
                if (reaches[nd.parent[0]]) accumulate(nd.parent[0], a);
                if (reaches[nd.parent[1]]) accumulate(nd.parent[1], -a);
                break;
            case Op::Mul:
                if (reaches[nd.parent[0]]) accumulate(nd.parent[0], a * p1);
                if (reaches[nd.parent[1]]) accumulate(nd.parent[1], a * p0);
                break;
            case Op::Div:
                // a * (1/b), not a/b: keeps the recorded sweep bit-identical
                // to the numeric sweep, which multiplies by the cached 1/b.
                if (reaches[nd.parent[0]]) accumulate(nd.parent[0], a * (one() / p1));
                if (reaches[nd.parent[1]]) accumulate(nd.parent[1], -(a * (self / p1)));
                break;
            case Op::Pow:
                if (reaches[nd.parent[0]])
                    accumulate(nd.parent[0], a * (pow(p0, nd.aux - 1.0) * nd.aux));
                break;
            case Op::Tanh:
                if (reaches[nd.parent[0]]) accumulate(nd.parent[0], a * (1.0 - self * self));
                break;
            case Op::Sin:
                if (reaches[nd.parent[0]]) accumulate(nd.parent[0], a * cos(p0));
                break;
            case Op::Cos:
                if (reaches[nd.parent[0]]) accumulate(nd.parent[0], -(a * sin(p0)));
                break;
            case Op::Neg:
                if (reaches[nd.parent[0]]) accumulate(nd.parent[0], -a);
                break;
            default: break;  // leaves and constants
        }
    }

    std::vector<Var> out;
    out.reserve(wrt.size());
    for (const Var& w : wrt) out.push_back(adj[w.idx].valid() ? adj[w.idx] : constant(0.0));
    return out;
}

// d^(order.size()) f / d inputs[order[0]] d inputs[order[1]] ... as a tape
// value; still differentiable with respect to anything recorded earlier.
template <class F>
Var derivative_at(Tape& tape, F&& f, std::span<const Var> inputs, std::span<const int> order) {
    for (int k : order)
        if (k < 0 || static_cast<std::size_t>(k) >= inputs.size())
            throw std::invalid_argument("autodiff: derivative index out of range");
    Var out = f(inputs);
    for (int k : order) {
        const Var wrt[] = {inputs[k]};
        out = tape.backward_recorded(out, wrt)[0];
    }
    return out;
}

template <class F>
Var derivative(Tape& tape, F&& f, std::span<const double> point, std::span<const int> order) {
    std::vector<Var> xs;
    xs.reserve(point.size());
    for (double v : point) xs.push_back(tape.leaf(v));
    return derivative_at(tape, std::forward<F>(f), xs, order);
}

}  // namespace sapinn::ad
