#include "dcgcn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dcgcn/errors.hpp"
#include "dcgcn/kernels.hpp"

namespace dcgcn {

void Parameter::zero_grad() {
    if (grad.shape() != value.shape())
        grad = Tensor(value.shape());
    else
        grad.fill(0.0);
}

std::string_view op_name(OpKind kind) {
    switch (kind) {
        case OpKind::constant: return "constant";
        case OpKind::parameter: return "parameter";
        case OpKind::matmul: return "matmul";
        case OpKind::matmul_nt: return "matmul_nt";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::mul: return "mul";
        case OpKind::scale: return "scale";
        case OpKind::add_row: return "add_row";
        case OpKind::mul_col: return "mul_col";
        case OpKind::concat_cols: return "concat_cols";
        case OpKind::slice_cols: return "slice_cols";
        case OpKind::relu: return "relu";
        case OpKind::leaky_relu: return "leaky_relu";
        case OpKind::tanh: return "tanh";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::exp: return "exp";
        case OpKind::log_softmax_rows: return "log_softmax_rows";
        case OpKind::pick: return "pick";
        case OpKind::sum_all: return "sum_all";
        case OpKind::mean_rows: return "mean_rows";
        case OpKind::gather_rows: return "gather_rows";
        case OpKind::scatter_add_rows: return "scatter_add_rows";
        case OpKind::segment_softmax: return "segment_softmax";
    }
    return "unknown";
}

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::push_impl(OpKind kind, Tensor value, bool requires_grad, Backward backward) {
    if (!value.all_finite())
        throw NumericError(std::string("non-finite value produced by ") +
                           std::string(op_name(kind)) + " with shape " +
                           shape_string(value.shape()));
    Node node{kind, requires_grad, std::move(value), Tensor{},
              requires_grad ? std::move(backward) : Backward{}, nullptr};
    nodes_.push_back(std::move(node));
    return Var{this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::push(OpKind kind, Tensor value, std::initializer_list<Var> inputs, Backward backward) {
    bool rg = false;
    for (const Var& v : inputs) rg = rg || nodes_[v.id].requires_grad;
    return push_impl(kind, std::move(value), rg && mode_ == Mode::train, std::move(backward));
}

Var Tape::push(OpKind kind, Tensor value, const std::vector<Var>& inputs, Backward backward) {
    bool rg = false;
    for (const Var& v : inputs) rg = rg || nodes_[v.id].requires_grad;
    return push_impl(kind, std::move(value), rg && mode_ == Mode::train, std::move(backward));
}

Var Tape::constant(Tensor value) {
    if (!value.all_finite()) throw NumericError("non-finite input rejected");
    return push_impl(OpKind::constant, std::move(value), false, {});
}

Var Tape::param(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
    if (!p.value.all_finite()) throw NumericError("non-finite parameter " + p.name);
    Tensor value = p.value;
    if (value.rank() == 1) {
        const std::size_t n = value.size();
        value = Tensor(Shape{1, n}, std::move(value.storage()));
    }
    Var v = push_impl(OpKind::parameter, std::move(value), mode_ == Mode::train, {});
    nodes_[v.id].param = &p;
    param_nodes_.emplace(&p, v.id);
    return v;
}

Tensor& Tape::grad_slot(std::uint32_t id) {
    Node& node = nodes_[id];
    if (node.grad.empty()) node.grad = Tensor(node.value.shape());
    return node.grad;
}

void Tape::backward(Var root) {
    if (root.tape != this) throw InputError("backward root belongs to another tape");
    if (value(root).size() != 1)
        throw ShapeError("backward requires a scalar root, got shape " +
                         shape_string(value(root).shape()));
    for (Node& n : nodes_) n.grad = Tensor{};
    grad_slot(root.id).fill(1.0);
    for (std::int64_t i = root.id; i >= 0; --i) {
        Node& node = nodes_[static_cast<std::size_t>(i)];
        if (node.grad.empty() || !node.requires_grad) continue;
        if (fault_ && node.kind == *fault_)
            for (double& g : node.grad.storage()) g *= 0.5;
        if (node.backward) node.backward(*this, static_cast<std::uint32_t>(i));
        if (node.param) {
            Parameter& p = *node.param;
            if (p.grad.shape() != p.value.shape()) p.grad = Tensor(p.value.shape());
            kernels::active().axpy(p.grad.size(), 1.0, node.grad.data(), p.grad.data());
        }
    }
}

namespace ops {
namespace {

const kernels::KernelTable& kt() { return kernels::active(); }

void require_same(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
}

Tensor zeros(std::size_t r, std::size_t c) { return Tensor::matrix(r, c); }

template <typename F, typename G>
Var unary(Var a, OpKind kind, F forward, G derivative) {
    const Tensor& x = a.value();
    Tensor out = zeros(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = forward(x[i]);
    return a.tape->push(kind, std::move(out), {a}, [a, derivative](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const Tensor& g = t.grad_of(self);
        const Tensor& x = t.value_of(a.id);
        const Tensor& y = t.value_of(self);
        Tensor& ga = t.grad_slot(a.id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * derivative(x[i], y[i]);
    });
}

}  // namespace

Var matmul(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.cols() != B.rows())
        throw ShapeError("matmul: inner dimensions differ " + shape_string(A.shape()) + " x " +
                         shape_string(B.shape()));
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Tensor out = zeros(m, n);
    kt().gemm_nn(m, n, k, A.data(), B.data(), out.data());
    return a.tape->push(OpKind::matmul, std::move(out), {a, b}, [a, b, m, n, k](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad_of(self);
        if (t.needs_grad(a.id))
            kernels::gemm_nt(m, k, n, g.data(), t.value_of(b.id).data(), t.grad_slot(a.id).data());
        if (t.needs_grad(b.id))
            kt().gemm_tn(m, n, k, t.value_of(a.id).data(), g.data(), t.grad_slot(b.id).data());
    });
}

Var matmul_nt(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.cols() != B.cols())
        throw ShapeError("matmul_nt: inner dimensions differ " + shape_string(A.shape()) +
                         " x " + shape_string(B.shape()) + "^T");
    const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
    Tensor out = zeros(m, n);
    kernels::gemm_nt(m, n, k, A.data(), B.data(), out.data());
    return a.tape->push(OpKind::matmul_nt, std::move(out), {a, b}, [a, b, m, n, k](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad_of(self);
        if (t.needs_grad(a.id))
            kt().gemm_nn(m, k, n, g.data(), t.value_of(b.id).data(), t.grad_slot(a.id).data());
        if (t.needs_grad(b.id))
            kt().gemm_tn(m, k, n, g.data(), t.value_of(a.id).data(), t.grad_slot(b.id).data());
    });
}

Var linear(Var x, Var weight, Var bias) { return add_row(matmul_nt(x, weight), bias); }
Var linear(Var x, Var weight) { return matmul_nt(x, weight); }

Var add(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require_same(A, B, "add");
    Tensor out = zeros(A.rows(), A.cols());
    kt().add(A.size(), A.data(), B.data(), out.data());
    return a.tape->push(OpKind::add, std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad_of(self);
        if (t.needs_grad(a.id)) kt().axpy(g.size(), 1.0, g.data(), t.grad_slot(a.id).data());
        if (t.needs_grad(b.id)) kt().axpy(g.size(), 1.0, g.data(), t.grad_slot(b.id).data());
    });
}

Var sub(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require_same(A, B, "sub");
    Tensor out = zeros(A.rows(), A.cols());
    for (std::size_t i = 0; i < A.size(); ++i) out[i] = A[i] - B[i];
    return a.tape->push(OpKind::sub, std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad_of(self);
        if (t.needs_grad(a.id)) kt().axpy(g.size(), 1.0, g.data(), t.grad_slot(a.id).data());
        if (t.needs_grad(b.id)) kt().axpy(g.size(), -1.0, g.data(), t.grad_slot(b.id).data());
    });
}

Var mul(Var a, Var b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    require_same(A, B, "mul");
    Tensor out = zeros(A.rows(), A.cols());
    kt().mul(A.size(), A.data(), B.data(), out.data());
    return a.tape->push(OpKind::mul, std::move(out), {a, b}, [a, b](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad_of(self);
        if (t.needs_grad(a.id))
            kt().mul_acc(g.size(), g.data(), t.value_of(b.id).data(), t.grad_slot(a.id).data());
        if (t.needs_grad(b.id))
            kt().mul_acc(g.size(), g.data(), t.value_of(a.id).data(), t.grad_slot(b.id).data());
    });
}

Var scale(Var a, double factor) {
    const Tensor& A = a.value();
    Tensor out = zeros(A.rows(), A.cols());
    kt().axpy(A.size(), factor, A.data(), out.data());
    return a.tape->push(OpKind::scale, std::move(out), {a}, [a, factor](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const Tensor& g = t.grad_of(self);
        kt().axpy(g.size(), factor, g.data(), t.grad_slot(a.id).data());
    });
}

Var add_row(Var a, Var row) {
    const Tensor& A = a.value();
    const Tensor& R = row.value();
    if (R.rows() != 1 || R.cols() != A.cols())
        throw ShapeError("add_row: row " + shape_string(R.shape()) + " does not broadcast over " +
                         shape_string(A.shape()));
    Tensor out = zeros(A.rows(), A.cols());
    const std::size_t n = A.cols();
    for (std::size_t r = 0; r < A.rows(); ++r)
        kt().add(n, A.data() + r * n, R.data(), out.data() + r * n);
    return a.tape->push(OpKind::add_row, std::move(out), {a, row}, [a, row, n](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad_of(self);
        if (t.needs_grad(a.id)) kt().axpy(g.size(), 1.0, g.data(), t.grad_slot(a.id).data());
        if (t.needs_grad(row.id)) {
            Tensor& gr = t.grad_slot(row.id);
            for (std::size_t r = 0; r < g.rows(); ++r) kt().axpy(n, 1.0, g.data() + r * n, gr.data());
        }
    });
}

Var mul_col(Var a, Var w) {
    const Tensor& A = a.value();
    const Tensor& W = w.value();
    if (W.cols() != 1 || W.rows() != A.rows())
        throw ShapeError("mul_col: weights " + shape_string(W.shape()) + " do not match rows of " +
                         shape_string(A.shape()));
    const std::size_t n = A.cols();
    Tensor out = zeros(A.rows(), n);
    for (std::size_t r = 0; r < A.rows(); ++r) kt().axpy(n, W[r], A.data() + r * n, out.data() + r * n);
    return a.tape->push(OpKind::mul_col, std::move(out), {a, w}, [a, w, n](Tape& t, std::uint32_t self) {
        const Tensor& g = t.grad_of(self);
        const std::size_t m = g.rows();
        if (t.needs_grad(a.id)) {
            const Tensor& W = t.value_of(w.id);
            Tensor& ga = t.grad_slot(a.id);
            for (std::size_t r = 0; r < m; ++r) kt().axpy(n, W[r], g.data() + r * n, ga.data() + r * n);
        }
        if (t.needs_grad(w.id)) {
            const Tensor& A = t.value_of(a.id);
            Tensor& gw = t.grad_slot(w.id);
            for (std::size_t r = 0; r < m; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < n; ++c) s += g[r * n + c] * A[r * n + c];
                gw[r] += s;
            }
        }
    });
}

Var concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const std::size_t m = parts.front().rows();
    std::size_t total = 0;
    std::vector<std::size_t> widths;
    widths.reserve(parts.size());
    for (const Var& p : parts) {
        if (p.rows() != m)
            throw ShapeError("concat_cols: row count " + std::to_string(p.rows()) +
                             " differs from " + std::to_string(m) + " (shape " +
                             shape_string(p.value().shape()) + ")");
        widths.push_back(p.cols());
        total += p.cols();
    }
    Tensor out = zeros(m, total);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const Tensor& v = parts[i].value();
        for (std::size_t r = 0; r < m; ++r)
            std::copy_n(v.data() + r * widths[i], widths[i], out.data() + r * total + offset);
        offset += widths[i];
    }
    Tape* tape = parts.front().tape;
    return tape->push(OpKind::concat_cols, std::move(out), parts,
                      [parts, widths, total, m](Tape& t, std::uint32_t self) {
                          const Tensor& g = t.grad_of(self);
                          std::size_t off = 0;
                          for (std::size_t i = 0; i < parts.size(); ++i) {
                              if (t.needs_grad(parts[i].id)) {
                                  Tensor& gp = t.grad_slot(parts[i].id);
                                  for (std::size_t r = 0; r < m; ++r)
                                      kt().axpy(widths[i], 1.0, g.data() + r * total + off,
                                                gp.data() + r * widths[i]);
                              }
                              off += widths[i];
                          }
                      });
}

Var slice_cols(Var a, std::size_t start, std::size_t width) {
    const Tensor& A = a.value();
    if (width == 0 || start + width > A.cols())
        throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                         std::to_string(start + width) + ") outside " + shape_string(A.shape()));
    const std::size_t m = A.rows(), n = A.cols();
    Tensor out = zeros(m, width);
    for (std::size_t r = 0; r < m; ++r)
        std::copy_n(A.data() + r * n + start, width, out.data() + r * width);
    return a.tape->push(OpKind::slice_cols, std::move(out), {a}, [a, start, width, m, n](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const Tensor& g = t.grad_of(self);
        Tensor& ga = t.grad_slot(a.id);
        for (std::size_t r = 0; r < m; ++r)
            kt().axpy(width, 1.0, g.data() + r * width, ga.data() + r * n + start);
    });
}

Var relu(Var a) {
    const Tensor& x = a.value();
    Tensor out = zeros(x.rows(), x.cols());
    kt().relu(x.size(), x.data(), out.data());
    return a.tape->push(OpKind::relu, std::move(out), {a}, [a](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const Tensor& g = t.grad_of(self);
        kt().relu_backward(g.size(), t.value_of(a.id).data(), g.data(), t.grad_slot(a.id).data());
    });
}

Var leaky_relu(Var a, double slope) {
    const Tensor& x = a.value();
    Tensor out = zeros(x.rows(), x.cols());
    kt().leaky_relu(x.size(), slope, x.data(), out.data());
    return a.tape->push(OpKind::leaky_relu, std::move(out), {a}, [a, slope](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const Tensor& g = t.grad_of(self);
        kt().leaky_relu_backward(g.size(), slope, t.value_of(a.id).data(), g.data(),
                                 t.grad_slot(a.id).data());
    });
}

Var tanh(Var a) {
    return unary(a, OpKind::tanh, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
    return unary(
        a, OpKind::sigmoid,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Var exp(Var a) {
    return unary(a, OpKind::exp, [](double x) { return std::exp(x); },
                 [](double, double y) { return y; });
}

Var log_softmax_rows(Var a) {
    const Tensor& x = a.value();
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out = zeros(m, n);
    for (std::size_t r = 0; r < m; ++r) {
        const double* xr = x.data() + r * n;
        const double mx = *std::max_element(xr, xr + n);
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) s += std::exp(xr[c] - mx);
        const double lse = mx + std::log(s);
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] = xr[c] - lse;
    }
    return a.tape->push(OpKind::log_softmax_rows, std::move(out), {a}, [a, m, n](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const Tensor& g = t.grad_of(self);
        const Tensor& y = t.value_of(self);
        Tensor& ga = t.grad_slot(a.id);
        for (std::size_t r = 0; r < m; ++r) {
            double gs = 0.0;
            for (std::size_t c = 0; c < n; ++c) gs += g[r * n + c];
            for (std::size_t c = 0; c < n; ++c)
                ga[r * n + c] += g[r * n + c] - std::exp(y[r * n + c]) * gs;
        }
    });
}

Var pick(Var a, const std::vector<std::int32_t>& index) {
    const Tensor& x = a.value();
    const std::size_t m = x.rows(), n = x.cols();
    if (index.size() != m)
        throw ShapeError("pick: " + std::to_string(index.size()) + " indices for " +
                         std::to_string(m) + " rows");
    Tensor out = zeros(m, 1);
    for (std::size_t r = 0; r < m; ++r) {
        if (index[r] < 0) continue;
        if (static_cast<std::size_t>(index[r]) >= n)
            throw ShapeError("pick: column " + std::to_string(index[r]) + " outside width " +
                             std::to_string(n));
        out[r] = x[r * n + static_cast<std::size_t>(index[r])];
    }
    return a.tape->push(OpKind::pick, std::move(out), {a}, [a, index, n](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const Tensor& g = t.grad_of(self);
        Tensor& ga = t.grad_slot(a.id);
        for (std::size_t r = 0; r < index.size(); ++r)
            if (index[r] >= 0) ga[r * n + static_cast<std::size_t>(index[r])] += g[r];
    });
}

Var sum_all(Var a) {
    const Tensor& x = a.value();
    double s = 0.0;
    for (double v : x.values()) s += v;
    return a.tape->push(OpKind::sum_all, Tensor::scalar(s), {a}, [a](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const double g = t.grad_of(self)[0];
        Tensor& ga = t.grad_slot(a.id);
        for (double& v : ga.storage()) v += g;
    });
}

Var mean_rows(Var a) {
    const Tensor& x = a.value();
    const std::size_t m = x.rows(), n = x.cols();
    Tensor out = zeros(1, n);
    for (std::size_t r = 0; r < m; ++r) kt().axpy(n, 1.0, x.data() + r * n, out.data());
    const double inv = 1.0 / static_cast<double>(m);
    for (double& v : out.storage()) v *= inv;
    return a.tape->push(OpKind::mean_rows, std::move(out), {a}, [a, m, n, inv](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const Tensor& g = t.grad_of(self);
        Tensor& ga = t.grad_slot(a.id);
        for (std::size_t r = 0; r < m; ++r) kt().axpy(n, inv, g.data(), ga.data() + r * n);
    });
}

Var gather_rows(Var a, const std::vector<Index>& index) {
    const Tensor& x = a.value();
    const std::size_t n = x.cols();
    if (index.empty()) throw ShapeError("gather_rows: empty index list");
    Tensor out = zeros(index.size(), n);
    for (std::size_t e = 0; e < index.size(); ++e) {
        if (index[e] >= x.rows())
            throw ShapeError("gather_rows: row " + std::to_string(index[e]) + " outside " +
                             shape_string(x.shape()));
        std::copy_n(x.data() + index[e] * n, n, out.data() + e * n);
    }
    return a.tape->push(OpKind::gather_rows, std::move(out), {a}, [a, index, n](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const Tensor& g = t.grad_of(self);
        Tensor& ga = t.grad_slot(a.id);
        for (std::size_t e = 0; e < index.size(); ++e)
            kt().axpy(n, 1.0, g.data() + e * n, ga.data() + index[e] * n);
    });
}

Var scatter_add_rows(Var a, const std::vector<Index>& index, std::size_t rows) {
    const Tensor& x = a.value();
    const std::size_t n = x.cols();
    if (index.size() != x.rows())
        throw ShapeError("scatter_add_rows: " + std::to_string(index.size()) + " targets for " +
                         shape_string(x.shape()));
    if (rows == 0) throw ShapeError("scatter_add_rows: zero output rows");
    Tensor out = zeros(rows, n);
    for (std::size_t e = 0; e < index.size(); ++e) {
        if (index[e] >= rows)
            throw ShapeError("scatter_add_rows: target " + std::to_string(index[e]) +
                             " outside " + std::to_string(rows) + " rows");
        kt().axpy(n, 1.0, x.data() + e * n, out.data() + index[e] * n);
    }
    return a.tape->push(OpKind::scatter_add_rows, std::move(out), {a}, [a, index, n](Tape& t, std::uint32_t self) {
        if (!t.needs_grad(a.id)) return;
        const Tensor& g = t.grad_of(self);
        Tensor& ga = t.grad_slot(a.id);
        for (std::size_t e = 0; e < index.size(); ++e)
            kt().axpy(n, 1.0, g.data() + index[e] * n, ga.data() + e * n);
    });
}

Var segment_softmax(Var scores, const std::vector<Index>& segment, std::size_t segments) {
    const Tensor& s = scores.value();
    if (s.cols() != 1 || s.rows() != segment.size())
        throw ShapeError("segment_softmax: scores " + shape_string(s.shape()) + " vs " +
                         std::to_string(segment.size()) + " segment ids");
    std::vector<double> mx(segments, -std::numeric_limits<double>::infinity());
    for (std::size_t e = 0; e < segment.size(); ++e) {
        if (segment[e] >= segments)
            throw ShapeError("segment_softmax: segment " + std::to_string(segment[e]) +
                             " outside " + std::to_string(segments));
        mx[segment[e]] = std::max(mx[segment[e]], s[e]);
    }
    Tensor out = zeros(segment.size(), 1);
    std::vector<double> denom(segments, 0.0);
    for (std::size_t e = 0; e < segment.size(); ++e) {
        out[e] = std::exp(s[e] - mx[segment[e]]);
        denom[segment[e]] += out[e];
    }
    for (std::size_t e = 0; e < segment.size(); ++e) out[e] /= denom[segment[e]];
    return scores.tape->push(
        OpKind::segment_softmax, std::move(out), {scores},
        [scores, segment, segments](Tape& t, std::uint32_t self) {
            if (!t.needs_grad(scores.id)) return;
            const Tensor& g = t.grad_of(self);
            const Tensor& y = t.value_of(self);
            std::vector<double> dot(segments, 0.0);
            for (std::size_t e = 0; e < segment.size(); ++e) dot[segment[e]] += g[e] * y[e];
            Tensor& gs = t.grad_slot(scores.id);
            for (std::size_t e = 0; e < segment.size(); ++e) gs[e] += y[e] * (g[e] - dot[segment[e]]);
        });
}

}  // namespace ops
}  // namespace dcgcn
