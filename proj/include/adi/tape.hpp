#pragma once

#include "adi/array.hpp"
#include "adi/params.hpp"

#include <map>
#include <string>
#include <vector>

namespace adi {

// Reverse-mode autodiff over dense arrays.
//
// Every primitive records one node on the tape in topological order (inputs
// always precede consumers). backward() walks nodes in reverse recording
// order, so gradient contributions to a fan-out node accumulate from its
// last-recorded consumer to its first; this fixed order makes repeated runs
// bit-identical.

enum class Op : uint8_t {
    Leaf,
    Add,
    Mul,
    Scale,
    MatMul,
    SiLU,
    Log,
    Softmax,
    Embed,
    RowSub,
    LayerNorm,
    Mse,
    Sum,
    Conv2d,
    Upsample2x,
    Reshape,
    Transpose2d,
};

struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

struct Node {
    Op op;
    int in0 = -1, in1 = -1, in2 = -1;
    Array val;
    // op attributes
    int64_t i0 = 0, i1 = 0, i2 = 0, i3 = 0;  // axis / H / W / kernel / stride / pad / row
    double f0 = 0.0;                          // scale factor
    std::vector<int64_t> tokens;              // embedding indices
    Array saved;                              // conv: im2col buffer; layernorm: per-row mean,invstd
    int param = -1;                           // Leaf: bound parameter slot, -1 for constants
};

struct BackwardResult {
    // Gradients keyed by exactly the trainable parameter names; zeros for
    // parameters the tape never touched (those are also listed in `missing`).
    std::map<std::string, Array> grads;
    std::vector<std::string> missing;
};

class Tape {
public:
    explicit Tape(const ParamSet* params = nullptr, bool strict = false)
        : params_(params), strict_(strict) {}

    void reset() {
        nodes_.clear();
        param_vars_.clear();
    }

    size_t size() const { return nodes_.size(); }
    void set_strict(bool s) { strict_ = s; }

    const Array& val(Var v) const { return nodes_[static_cast<size_t>(v.id)].val; }

    Var leaf(Array v);
    // Leaf bound to a named parameter; the same Var is returned for repeated
    // requests so a parameter appears on the tape at most once.
    Var param(const std::string& name);

    Var add(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double f);
    Var matmul(Var a, Var b);
    Var silu(Var a);
    Var log_op(Var a);
    Var softmax(Var a, int axis);  // 1-d (axis 0) or 2-d (axis 0/1)
    Var embed(Var table, const std::vector<int64_t>& tokens);
    Var row_sub(Var e, int64_t row, Var v);  // e with row `row` replaced by v
    Var layernorm(Var x, Var gain, Var bias);  // over last axis of 2-d x
    Var mse(Var a, Var b);
    Var sum(Var a);
    // x: {H*W, Cin} position-major; w: {Cout, k*k*Cin} with columns ordered
    // (dh, dw, ci); returns {Ho*Wo, Cout}.
    Var conv2d(Var x, Var w, int64_t H, int64_t W, int64_t k, int64_t stride, int64_t pad);
    Var upsample2x(Var x, int64_t H, int64_t W);  // {H*W, C} -> {4*H*W, C}, nearest
    Var reshape(Var a, const Shape& s);
    Var transpose2d(Var a);

    BackwardResult backward(Var loss_node) const;

private:
    Var push(Node n);
    const ParamSet* params_;
    bool strict_;
    std::vector<Node> nodes_;
    std::map<std::string, int> param_vars_;
};

// Convenience: scaled dot-product attention composed from primitives.
// q: {Nq, d}, k: {Nk, d}, v: {Nk, dv} -> {Nq, dv}
Var sdpa(Tape& t, Var q, Var k, Var v);

}  // namespace adi
