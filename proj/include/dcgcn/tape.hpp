#pragma once
// Reverse-mode differentiation over a dynamic tape. A Tape is rebuilt for every
// example or batch; ops append nodes holding their forward value and a closure
// that pushes the upstream gradient to their inputs.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dcgcn/tensor.hpp"

namespace dcgcn {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;  // same shape as value once allocated

    void zero_grad();
};

enum class OpKind : std::uint8_t {
    constant,
    parameter,
    matmul,
    matmul_nt,
    add,
    sub,
    mul,
    scale,
    add_row,
    mul_col,
    concat_cols,
    slice_cols,
    relu,
    leaky_relu,
    tanh,
    sigmoid,
    exp,
    log_softmax_rows,
    pick,
    sum_all,
    mean_rows,
    gather_rows,
    scatter_add_rows,
    segment_softmax,
};

std::string_view op_name(OpKind kind);

class Tape;

/// Handle to a tape node. Cheap to copy; valid while its tape lives.
struct Var {
    Tape* tape = nullptr;
    std::uint32_t id = 0;

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
};

using Index = std::uint32_t;

class Tape {
   public:
    enum class Mode { train, inference };
    using Backward = std::function<void(Tape&, std::uint32_t self)>;

    explicit Tape(Mode mode = Mode::train) : mode_(mode) { nodes_.reserve(1024); }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Mode mode() const { return mode_; }
    Var constant(Tensor value);
    /// Leaf bound to a parameter; repeated calls return the same node.
    Var param(Parameter& p);

    const Tensor& value(Var v) const { return nodes_[v.id].value; }
    OpKind kind(Var v) const { return nodes_[v.id].kind; }
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    /// Gradient of the last backward() root with respect to v (empty tensor
    /// when v did not receive any).
    const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
    std::size_t size() const { return nodes_.size(); }

    /// Populate gradients of every node reachable from root and accumulate
    /// into the bound parameters. Root must hold a single value.
    void backward(Var root);

    /// Test seam: halves the upstream gradient entering every node of this
    /// kind during backward, producing a wrong derivative rule.
    void inject_backward_fault(std::optional<OpKind> kind) { fault_ = kind; }

    // Used by op implementations.
    Var push(OpKind kind, Tensor value, std::initializer_list<Var> inputs, Backward backward);
    Var push(OpKind kind, Tensor value, const std::vector<Var>& inputs, Backward backward);
    bool needs_grad(std::uint32_t id) const { return nodes_[id].requires_grad; }
    const Tensor& value_of(std::uint32_t id) const { return nodes_[id].value; }
    const Tensor& grad_of(std::uint32_t id) const { return nodes_[id].grad; }
    /// Gradient buffer of a node, zero-allocated on first use.
    Tensor& grad_slot(std::uint32_t id);

   private:
    struct Node {
        OpKind kind;
        bool requires_grad;
        Tensor value;
        Tensor grad;
        Backward backward;
        Parameter* param = nullptr;
    };

    Var push_impl(OpKind kind, Tensor value, bool requires_grad, Backward backward);

    Mode mode_;
    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
    std::optional<OpKind> fault_;
};

namespace ops {

Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
/// x * W^T + bias, W stored (out x in).
Var linear(Var x, Var weight, Var bias);
Var linear(Var x, Var weight);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Broadcast-add a single row to every row of a.
Var add_row(Var a, Var row);
/// Scale each row of a (m x n) by the matching entry of w (m x 1).
Var mul_col(Var a, Var w);
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, std::size_t start, std::size_t width);
Var relu(Var a);
Var leaky_relu(Var a, double slope);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log_softmax_rows(Var a);
/// out[r] = a[r, index[r]]; rows with a negative index yield 0 and get no
/// gradient.
Var pick(Var a, const std::vector<std::int32_t>& index);
Var sum_all(Var a);
/// Column means over the row axis (1 x n).
Var mean_rows(Var a);
/// out[e] = a[index[e]]
Var gather_rows(Var a, const std::vector<Index>& index);
/// out[index[e]] += a[e], out has `rows` rows.
Var scatter_add_rows(Var a, const std::vector<Index>& index, std::size_t rows);
/// Softmax of a column of scores within each segment: entries e with equal
/// segment[e] are normalized together.
Var segment_softmax(Var scores, const std::vector<Index>& segment, std::size_t segments);

}  // namespace ops
}  // namespace dcgcn
