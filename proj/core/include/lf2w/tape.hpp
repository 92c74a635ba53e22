#pragma once

// Reverse-mode autodiff over the linalg operation set. The tape records one
// node per matrix-level operation; vectors travel as n-by-1 matrices. A tape
// is exclusively owned by one training stream.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lf2w/linalg.hpp"

namespace lf2w {

struct capability_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Slot {
    int idx = -1;
    bool valid() const { return idx >= 0; }
};

enum class OpId : std::uint8_t {
    leaf,
    add,
    sub,
    mul,          // elementwise
    scale,        // matrix * traced 1x1 scalar
    cscale,       // matrix * compile-time constant
    matmul,
    transpose,
    outer,        // u (n x 1), v (m x 1) -> u v^T
    silu,
    sigmoid,
    l2_normalize,
    rmsnorm,
    swiglu,
    unit_lower_solve,
    row_scale,    // out[i][j] = v[i] * m[i][j]
    stack_rows,   // C column vectors (n x 1) -> C x n
    vconcat,      // column vectors stacked vertically
    slice_rows,
    detach,
    sse,          // sum((a - b)^2) -> 1x1
    decay_ratio,  // alpha (C x 1) -> R (C x C), R[t][s] = prod_{r=s+1..t} alpha[r]
    cumprod,      // alpha (C x 1) -> P (C x 1), P[t] = prod_{r=0..t} alpha[r]
};

class Tape {
public:
    // -- construction of graph inputs --
    Slot leaf(const Matrix& value, bool requires_grad = true);
    Slot leaf_vec(const Vector& value, bool requires_grad = true);
    Slot constant(const Matrix& value) { return leaf(value, false); }

    // -- generic record surface --
    Slot record(OpId op, const std::vector<Slot>& inputs, double attr = 0.0,
                std::size_t a = 0, std::size_t b = 0);

    // -- named ops --
    Slot add(Slot x, Slot y) { return record(OpId::add, {x, y}); }
    Slot sub(Slot x, Slot y) { return record(OpId::sub, {x, y}); }
    Slot mul(Slot x, Slot y) { return record(OpId::mul, {x, y}); }
    Slot scale(Slot x, Slot s) { return record(OpId::scale, {x, s}); }
    Slot cscale(Slot x, double c) { return record(OpId::cscale, {x}, c); }
    Slot matmul(Slot x, Slot y) { return record(OpId::matmul, {x, y}); }
    Slot transpose(Slot x) { return record(OpId::transpose, {x}); }
    Slot outer(Slot u, Slot v) { return record(OpId::outer, {u, v}); }
    Slot silu(Slot x) { return record(OpId::silu, {x}); }
    Slot sigmoid(Slot x) { return record(OpId::sigmoid, {x}); }
    Slot l2_normalize(Slot x, double eps) { return record(OpId::l2_normalize, {x}, eps); }
    Slot rmsnorm(Slot x, Slot gain, double eps) { return record(OpId::rmsnorm, {x, gain}, eps); }
    Slot swiglu(Slot x) { return record(OpId::swiglu, {x}); }
    Slot unit_lower_solve(Slot l, Slot rhs) { return record(OpId::unit_lower_solve, {l, rhs}); }
    Slot row_scale(Slot m, Slot v) { return record(OpId::row_scale, {m, v}); }
    Slot stack_rows(const std::vector<Slot>& cols) { return record(OpId::stack_rows, cols); }
    Slot vconcat(const std::vector<Slot>& cols) { return record(OpId::vconcat, cols); }
    Slot slice_rows(Slot m, std::size_t start, std::size_t len) {
        return record(OpId::slice_rows, {m}, 0.0, start, len);
    }
    Slot detach(Slot x) { return record(OpId::detach, {x}); }
    Slot sse(Slot x, Slot y) { return record(OpId::sse, {x, y}); }
    Slot decay_ratio(Slot alpha) { return record(OpId::decay_ratio, {alpha}); }
    Slot cumprod(Slot alpha) { return record(OpId::cumprod, {alpha}); }

    // -- access --
    const Matrix& value(Slot s) const { return values_.at(s.idx); }
    double scalar(Slot s) const;
    const Matrix& adjoint(Slot s) const { return adjoints_.at(s.idx); }
    std::size_t num_nodes() const { return nodes_.size(); }

    // Populates adjoints for every ancestor of loss. loss must hold a 1x1 value.
    void backward(Slot loss);

    void reset();

private:
    struct Node {
        OpId op;
        std::vector<int> in;
        double attr = 0.0;     // eps for normalization ops
        std::size_t a = 0, b = 0;  // slice bounds
    };

    Matrix forward_value(const Node& n) const;
    void backward_node(int i);

    std::vector<Node> nodes_;
    std::vector<Matrix> values_;
    std::vector<Matrix> adjoints_;
    bool adjoints_live_ = false;
};

// Named parameter tensors plus matching gradient accumulators.
class ParamStore {
public:
    void add(const std::string& name, const Matrix& value);
    bool has(const std::string& name) const { return params_.count(name) > 0; }
    Matrix& get(const std::string& name);
    const Matrix& get(const std::string& name) const;
    Matrix& grad(const std::string& name);
    const Matrix& grad(const std::string& name) const;
    void zero_grads();
    // Fixed iteration order (lexicographic) keeps reductions deterministic.
    std::vector<std::string> names() const;
    std::size_t size() const { return params_.size(); }

    // Accumulates other's gradients into this store's. Associative merge step
    // for data-parallel streams; call in a fixed order.
    void accumulate_grads(const ParamStore& other);

private:
    std::map<std::string, Matrix> params_;
    std::map<std::string, Matrix> grads_;
};

// Central-difference gradient check. `loss` must evaluate the scalar loss for
// the current parameter values; `analytic` holds gradients already computed by
// a backward pass. Samples at most max_coords coordinates per tensor.
double grad_check(const std::function<double(const ParamStore&)>& loss,
                  ParamStore& params, double h, std::size_t max_coords,
                  std::uint64_t seed = 0);

} // namespace lf2w
