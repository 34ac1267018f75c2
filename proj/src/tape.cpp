#include "adi/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace adi {

namespace {

const char* op_name(Op op) {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::Add: return "add";
        case Op::Mul: return "mul";
        case Op::Scale: return "scale";
        case Op::MatMul: return "matmul";
        case Op::SiLU: return "silu";
        case Op::Log: return "log";
        case Op::Softmax: return "softmax";
        case Op::Embed: return "embed";
        case Op::RowSub: return "row_sub";
        case Op::LayerNorm: return "layernorm";
        case Op::Mse: return "mse";
        case Op::Sum: return "sum";
        case Op::Conv2d: return "conv2d";
        case Op::Upsample2x: return "upsample2x";
        case Op::Reshape: return "reshape";
        case Op::Transpose2d: return "transpose2d";
    }
    return "?";
}

constexpr double kLnEps = 1e-5;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// im2col for position-major features. x: {H*W, Cin} -> col: {Ho*Wo, k*k*Cin}
Array im2col(const Array& x, int64_t H, int64_t W, int64_t k, int64_t stride, int64_t pad) {
    const int64_t Cin = x.shape[1];
    const int64_t Ho = (H + 2 * pad - k) / stride + 1;
    const int64_t Wo = (W + 2 * pad - k) / stride + 1;
    Array col({Ho * Wo, k * k * Cin});
    double* out = col.data.data();
    const double* in = x.data.data();
    for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
            double* row = out + (oh * Wo + ow) * k * k * Cin;
            for (int64_t dh = 0; dh < k; ++dh) {
                const int64_t ih = oh * stride - pad + dh;
                for (int64_t dw = 0; dw < k; ++dw) {
                    const int64_t iw = ow * stride - pad + dw;
                    double* dst = row + (dh * k + dw) * Cin;
                    if (ih >= 0 && ih < H && iw >= 0 && iw < W) {
                        const double* src = in + (ih * W + iw) * Cin;
                        for (int64_t c = 0; c < Cin; ++c) dst[c] = src[c];
                    }
                    // else: zero padding (col starts zeroed)
                }
            }
        }
    }
    return col;
}

void col2im_add(const Array& dcol, int64_t H, int64_t W, int64_t k, int64_t stride, int64_t pad,
                int64_t Cin, Array& dx) {
    const int64_t Wo = (W + 2 * pad - k) / stride + 1;
    const int64_t Ho = (H + 2 * pad - k) / stride + 1;
    const double* in = dcol.data.data();
    double* out = dx.data.data();
    for (int64_t oh = 0; oh < Ho; ++oh) {
        for (int64_t ow = 0; ow < Wo; ++ow) {
            const double* row = in + (oh * Wo + ow) * k * k * Cin;
            for (int64_t dh = 0; dh < k; ++dh) {
                const int64_t ih = oh * stride - pad + dh;
                if (ih < 0 || ih >= H) continue;
                for (int64_t dw = 0; dw < k; ++dw) {
                    const int64_t iw = ow * stride - pad + dw;
                    if (iw < 0 || iw >= W) continue;
                    const double* src = row + (dh * k + dw) * Cin;
                    double* dst = out + (ih * W + iw) * Cin;
                    for (int64_t c = 0; c < Cin; ++c) dst[c] += src[c];
                }
            }
        }
    }
}

}  // namespace

Var Tape::push(Node n) {
    if (strict_ && !n.val.all_finite())
        throw std::runtime_error(std::string("tape: non-finite value produced by ") + op_name(n.op));
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Array v) {
    Node n;
    n.op = Op::Leaf;
    n.val = std::move(v);
    return push(std::move(n));
}

Var Tape::param(const std::string& name) {
    auto it = param_vars_.find(name);
    if (it != param_vars_.end()) return Var{it->second};
    if (!params_) throw std::logic_error("tape: no ParamSet bound, cannot reference " + name);
    Node n;
    n.op = Op::Leaf;
    n.val = params_->at(name);
    n.param = 0;  // marks "bound"; lookup at backward time goes through param_vars_
    Var v = push(std::move(n));
    param_vars_[name] = v.id;
    return v;
}

Var Tape::add(Var a, Var b) {
    Node n;
    n.op = Op::Add;
    n.in0 = a.id;
    n.in1 = b.id;
    n.val = broadcast_add(val(a), val(b));
    return push(std::move(n));
}

Var Tape::mul(Var a, Var b) {
    Node n;
    n.op = Op::Mul;
    n.in0 = a.id;
    n.in1 = b.id;
    n.val = broadcast_mul(val(a), val(b));
    return push(std::move(n));
}

Var Tape::scale(Var a, double f) {
    Node n;
    n.op = Op::Scale;
    n.in0 = a.id;
    n.f0 = f;
    n.val = val(a);
    for (double& x : n.val.data) x *= f;
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    Node n;
    n.op = Op::MatMul;
    n.in0 = a.id;
    n.in1 = b.id;
    n.val = adi::matmul(val(a), val(b));
    return push(std::move(n));
}

Var Tape::silu(Var a) {
    Node n;
    n.op = Op::SiLU;
    n.in0 = a.id;
    n.val = val(a);
    for (double& x : n.val.data) x = x * sigmoid(x);
    return push(std::move(n));
}

Var Tape::log_op(Var a) {
    Node n;
    n.op = Op::Log;
    n.in0 = a.id;
    n.val = val(a);
    for (double& x : n.val.data) x = std::log(x);
    return push(std::move(n));
}

Var Tape::softmax(Var a, int axis) {
    const Array& x = val(a);
    if (x.ndim() > 2) throw std::invalid_argument("softmax: expected 1-d or 2-d array, got " + shape_str(x.shape));
    Node n;
    n.op = Op::Softmax;
    n.in0 = a.id;
    n.i0 = axis;
    if (x.ndim() == 1) {
        if (axis != 0) throw std::invalid_argument("softmax: axis out of range for " + shape_str(x.shape));
        n.val = x;
        double mx = n.val.data[0];
        for (double v : n.val.data) mx = std::max(mx, v);
        double s = 0;
        for (double& v : n.val.data) {
            v = std::exp(v - mx);
            s += v;
        }
        for (double& v : n.val.data) v /= s;
    } else {
        if (axis != 0 && axis != 1) throw std::invalid_argument("softmax: axis out of range for " + shape_str(x.shape));
        n.val = Array(x.shape);
        const int64_t R = x.shape[0], C = x.shape[1];
        if (axis == 1) {
            for (int64_t r = 0; r < R; ++r) {
                double mx = x.at(r, 0);
                for (int64_t c = 1; c < C; ++c) mx = std::max(mx, x.at(r, c));
                double s = 0;
                for (int64_t c = 0; c < C; ++c) {
                    double e = std::exp(x.at(r, c) - mx);
                    n.val.at(r, c) = e;
                    s += e;
                }
                for (int64_t c = 0; c < C; ++c) n.val.at(r, c) /= s;
            }
        } else {
            for (int64_t c = 0; c < C; ++c) {
                double mx = x.at(0, c);
                for (int64_t r = 1; r < R; ++r) mx = std::max(mx, x.at(r, c));
                double s = 0;
                for (int64_t r = 0; r < R; ++r) {
                    double e = std::exp(x.at(r, c) - mx);
                    n.val.at(r, c) = e;
                    s += e;
                }
                for (int64_t r = 0; r < R; ++r) n.val.at(r, c) /= s;
            }
        }
    }
    return push(std::move(n));
}

Var Tape::embed(Var table, const std::vector<int64_t>& tokens) {
    const Array& tab = val(table);
    if (tab.ndim() != 2) throw std::invalid_argument("embed: table must be 2-d, got " + shape_str(tab.shape));
    const int64_t V = tab.shape[0], d = tab.shape[1];
    Node n;
    n.op = Op::Embed;
    n.in0 = table.id;
    n.tokens = tokens;
    n.val = Array({static_cast<int64_t>(tokens.size()), d});
    for (size_t i = 0; i < tokens.size(); ++i) {
        int64_t tok = tokens[i];
        if (tok < 0 || tok >= V)
            throw std::invalid_argument("embed: token " + std::to_string(tok) + " outside table " + shape_str(tab.shape));
        for (int64_t j = 0; j < d; ++j) n.val.data[i * static_cast<size_t>(d) + static_cast<size_t>(j)] = tab.at(tok, j);
    }
    return push(std::move(n));
}

Var Tape::row_sub(Var e, int64_t row, Var v) {
    const Array& E = val(e);
    const Array& S = val(v);
    if (E.ndim() != 2) throw std::invalid_argument("row_sub: expected 2-d input, got " + shape_str(E.shape));
    if (S.numel() != E.shape[1])
        throw std::invalid_argument("row_sub: row " + shape_str(S.shape) + " does not fit " + shape_str(E.shape));
    if (row < 0 || row >= E.shape[0]) throw std::invalid_argument("row_sub: row index out of range");
    Node n;
    n.op = Op::RowSub;
    n.in0 = e.id;
    n.in1 = v.id;
    n.i0 = row;
    n.val = E;
    for (int64_t j = 0; j < E.shape[1]; ++j) n.val.at(row, j) = S.data[static_cast<size_t>(j)];
    return push(std::move(n));
}

Var Tape::layernorm(Var x, Var gain, Var bias) {
    const Array& X = val(x);
    const Array& G = val(gain);
    const Array& B = val(bias);
    if (X.ndim() != 2) throw std::invalid_argument("layernorm: expected 2-d input, got " + shape_str(X.shape));
    const int64_t R = X.shape[0], D = X.shape[1];
    if (G.numel() != D || B.numel() != D)
        throw std::invalid_argument("layernorm: gain " + shape_str(G.shape) + " / bias " + shape_str(B.shape) +
                                    " do not match " + shape_str(X.shape));
    Node n;
    n.op = Op::LayerNorm;
    n.in0 = x.id;
    n.in1 = gain.id;
    n.in2 = bias.id;
    n.val = Array(X.shape);
    n.saved = Array({R, 2});  // per-row mean, invstd
    for (int64_t r = 0; r < R; ++r) {
        double mu = 0;
        for (int64_t j = 0; j < D; ++j) mu += X.at(r, j);
        mu /= static_cast<double>(D);
        double var = 0;
        for (int64_t j = 0; j < D; ++j) {
            double c = X.at(r, j) - mu;
            var += c * c;
        }
        var /= static_cast<double>(D);
        double inv = 1.0 / std::sqrt(var + kLnEps);
        n.saved.at(r, 0) = mu;
        n.saved.at(r, 1) = inv;
        for (int64_t j = 0; j < D; ++j)
            n.val.at(r, j) = (X.at(r, j) - mu) * inv * G.data[static_cast<size_t>(j)] + B.data[static_cast<size_t>(j)];
    }
    return push(std::move(n));
}

Var Tape::mse(Var a, Var b) {
    const Array& A = val(a);
    const Array& B = val(b);
    if (!A.same_shape(B))
        throw std::invalid_argument("mse: shapes " + shape_str(A.shape) + " and " + shape_str(B.shape) + " differ");
    Node n;
    n.op = Op::Mse;
    n.in0 = a.id;
    n.in1 = b.id;
    double s = 0;
    for (size_t i = 0; i < A.data.size(); ++i) {
        double d = A.data[i] - B.data[i];
        s += d * d;
    }
    n.val = Array::scalar(s / static_cast<double>(A.numel()));
    return push(std::move(n));
}

Var Tape::sum(Var a) {
    Node n;
    n.op = Op::Sum;
    n.in0 = a.id;
    double s = 0;
    for (double v : val(a).data) s += v;
    n.val = Array::scalar(s);
    return push(std::move(n));
}

Var Tape::conv2d(Var x, Var w, int64_t H, int64_t W, int64_t k, int64_t stride, int64_t pad) {
    const Array& X = val(x);
    const Array& Wt = val(w);
    if (X.ndim() != 2 || X.shape[0] != H * W)
        throw std::invalid_argument("conv2d: input " + shape_str(X.shape) + " is not {H*W, Cin} for H=" +
                                    std::to_string(H) + " W=" + std::to_string(W));
    const int64_t Cin = X.shape[1];
    if (Wt.ndim() != 2 || Wt.shape[1] != k * k * Cin)
        throw std::invalid_argument("conv2d: weight " + shape_str(Wt.shape) + " does not match k*k*Cin=" +
                                    std::to_string(k * k * Cin));
    Node n;
    n.op = Op::Conv2d;
    n.in0 = x.id;
    n.in1 = w.id;
    n.i0 = H;
    n.i1 = W;
    n.i2 = k;
    n.i3 = stride * 100 + pad;  // packed: stride, pad
    n.saved = im2col(X, H, W, k, stride, pad);
    n.val = matmul_nt(n.saved, Wt);
    return push(std::move(n));
}

Var Tape::upsample2x(Var x, int64_t H, int64_t W) {
    const Array& X = val(x);
    if (X.ndim() != 2 || X.shape[0] != H * W)
        throw std::invalid_argument("upsample2x: input " + shape_str(X.shape) + " is not {H*W, C}");
    const int64_t C = X.shape[1];
    Node n;
    n.op = Op::Upsample2x;
    n.in0 = x.id;
    n.i0 = H;
    n.i1 = W;
    n.val = Array({4 * H * W, C});
    for (int64_t oh = 0; oh < 2 * H; ++oh)
        for (int64_t ow = 0; ow < 2 * W; ++ow) {
            const double* src = X.data.data() + ((oh / 2) * W + (ow / 2)) * C;
            double* dst = n.val.data.data() + (oh * 2 * W + ow) * C;
            for (int64_t c = 0; c < C; ++c) dst[c] = src[c];
        }
    return push(std::move(n));
}

Var Tape::reshape(Var a, const Shape& s) {
    const Array& A = val(a);
    if (shape_numel(s) != A.numel())
        throw std::invalid_argument("reshape: cannot view " + shape_str(A.shape) + " as " + shape_str(s));
    Node n;
    n.op = Op::Reshape;
    n.in0 = a.id;
    n.val = Array(s, A.data);
    return push(std::move(n));
}

Var Tape::transpose2d(Var a) {
    const Array& A = val(a);
    if (A.ndim() != 2) throw std::invalid_argument("transpose2d: expected 2-d array, got " + shape_str(A.shape));
    Node n;
    n.op = Op::Transpose2d;
    n.in0 = a.id;
    n.val = Array({A.shape[1], A.shape[0]});
    for (int64_t r = 0; r < A.shape[0]; ++r)
        for (int64_t c = 0; c < A.shape[1]; ++c) n.val.at(c, r) = A.at(r, c);
    return push(std::move(n));
}

BackwardResult Tape::backward(Var loss_node) const {
    if (!loss_node.valid() || static_cast<size_t>(loss_node.id) >= nodes_.size())
        throw std::invalid_argument("backward: invalid loss node");
    if (nodes_[static_cast<size_t>(loss_node.id)].val.numel() != 1)
        throw std::invalid_argument("backward: loss node must be scalar, got " +
                                    shape_str(nodes_[static_cast<size_t>(loss_node.id)].val.shape));
    if (!params_) throw std::logic_error("backward: no ParamSet bound");

    std::vector<Array> grads(nodes_.size());
    std::vector<char> touched(nodes_.size(), 0);
    auto grad_of = [&](int id) -> Array& {
        if (!touched[static_cast<size_t>(id)]) {
            grads[static_cast<size_t>(id)] = Array(nodes_[static_cast<size_t>(id)].val.shape);
            touched[static_cast<size_t>(id)] = 1;
        }
        return grads[static_cast<size_t>(id)];
    };
    auto add_into = [](Array& dst, const Array& src) {
        for (size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
    };

    grad_of(loss_node.id).data[0] = 1.0;

    for (size_t i = nodes_.size(); i-- > 0;) {
        if (!touched[i]) continue;
        const Node& n = nodes_[i];
        const Array& g = grads[i];
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Add: {
                add_into(grad_of(n.in0), reduce_to_shape(g, nodes_[static_cast<size_t>(n.in0)].val.shape));
                add_into(grad_of(n.in1), reduce_to_shape(g, nodes_[static_cast<size_t>(n.in1)].val.shape));
                break;
            }
            case Op::Mul: {
                const Array& a = nodes_[static_cast<size_t>(n.in0)].val;
                const Array& b = nodes_[static_cast<size_t>(n.in1)].val;
                add_into(grad_of(n.in0), reduce_to_shape(broadcast_mul(g, b), a.shape));
                add_into(grad_of(n.in1), reduce_to_shape(broadcast_mul(g, a), b.shape));
                break;
            }
            case Op::Scale: {
                Array gs = g;
                for (double& v : gs.data) v *= n.f0;
                add_into(grad_of(n.in0), gs);
                break;
            }
            case Op::MatMul: {
                const Array& a = nodes_[static_cast<size_t>(n.in0)].val;
                const Array& b = nodes_[static_cast<size_t>(n.in1)].val;
                add_into(grad_of(n.in0), matmul_nt(g, b));
                add_into(grad_of(n.in1), matmul_tn(a, g));
                break;
            }
            case Op::SiLU: {
                const Array& x = nodes_[static_cast<size_t>(n.in0)].val;
                Array gx(x.shape);
                for (size_t j = 0; j < x.data.size(); ++j) {
                    double s = sigmoid(x.data[j]);
                    gx.data[j] = g.data[j] * s * (1.0 + x.data[j] * (1.0 - s));
                }
                add_into(grad_of(n.in0), gx);
                break;
            }
            case Op::Log: {
                const Array& x = nodes_[static_cast<size_t>(n.in0)].val;
                Array gx(x.shape);
                for (size_t j = 0; j < x.data.size(); ++j) gx.data[j] = g.data[j] / x.data[j];
                add_into(grad_of(n.in0), gx);
                break;
            }
            case Op::Softmax: {
                const Array& p = n.val;
                Array gx(p.shape);
                if (p.ndim() == 1 || n.i0 == 1) {
                    const int64_t R = p.ndim() == 1 ? 1 : p.shape[0];
                    const int64_t C = p.ndim() == 1 ? p.shape[0] : p.shape[1];
                    for (int64_t r = 0; r < R; ++r) {
                        double dot = 0;
                        for (int64_t c = 0; c < C; ++c)
                            dot += g.data[static_cast<size_t>(r * C + c)] * p.data[static_cast<size_t>(r * C + c)];
                        for (int64_t c = 0; c < C; ++c) {
                            size_t j = static_cast<size_t>(r * C + c);
                            gx.data[j] = p.data[j] * (g.data[j] - dot);
                        }
                    }
                } else {  // axis == 0 on 2-d
                    const int64_t R = p.shape[0], C = p.shape[1];
                    for (int64_t c = 0; c < C; ++c) {
                        double dot = 0;
                        for (int64_t r = 0; r < R; ++r)
                            dot += g.data[static_cast<size_t>(r * C + c)] * p.data[static_cast<size_t>(r * C + c)];
                        for (int64_t r = 0; r < R; ++r) {
                            size_t j = static_cast<size_t>(r * C + c);
                            gx.data[j] = p.data[j] * (g.data[j] - dot);
                        }
                    }
                }
                add_into(grad_of(n.in0), gx);
                break;
            }
            case Op::Embed: {
                Array& gt = grad_of(n.in0);
                const int64_t d = gt.shape[1];
                for (size_t r = 0; r < n.tokens.size(); ++r) {
                    const int64_t tok = n.tokens[r];
                    for (int64_t j = 0; j < d; ++j)
                        gt.at(tok, j) += g.data[r * static_cast<size_t>(d) + static_cast<size_t>(j)];
                }
                break;
            }
            case Op::RowSub: {
                const Array& E = nodes_[static_cast<size_t>(n.in0)].val;
                const int64_t D = E.shape[1];
                Array ge = g;
                for (int64_t j = 0; j < D; ++j) ge.at(n.i0, j) = 0.0;
                add_into(grad_of(n.in0), ge);
                Array gv({D});
                for (int64_t j = 0; j < D; ++j) gv.data[static_cast<size_t>(j)] = g.at(n.i0, j);
                add_into(grad_of(n.in1), reduce_to_shape(gv, nodes_[static_cast<size_t>(n.in1)].val.shape));
                break;
            }
            case Op::LayerNorm: {
                const Array& X = nodes_[static_cast<size_t>(n.in0)].val;
                const Array& G = nodes_[static_cast<size_t>(n.in1)].val;
                const int64_t R = X.shape[0], D = X.shape[1];
                Array gx(X.shape), gg(G.shape), gb(G.shape);
                for (int64_t r = 0; r < R; ++r) {
                    const double mu = n.saved.at(r, 0);
                    const double inv = n.saved.at(r, 1);
                    double sum_dxhat = 0, sum_dxhat_xhat = 0;
                    for (int64_t j = 0; j < D; ++j) {
                        const double xhat = (X.at(r, j) - mu) * inv;
                        const double gy = g.at(r, j);
                        const double dxhat = gy * G.data[static_cast<size_t>(j)];
                        sum_dxhat += dxhat;
                        sum_dxhat_xhat += dxhat * xhat;
                        gg.data[static_cast<size_t>(j)] += gy * xhat;
                        gb.data[static_cast<size_t>(j)] += gy;
                    }
                    for (int64_t j = 0; j < D; ++j) {
                        const double xhat = (X.at(r, j) - mu) * inv;
                        const double dxhat = g.at(r, j) * G.data[static_cast<size_t>(j)];
                        gx.at(r, j) = inv / static_cast<double>(D) *
                                      (static_cast<double>(D) * dxhat - sum_dxhat - xhat * sum_dxhat_xhat);
                    }
                }
                add_into(grad_of(n.in0), gx);
                add_into(grad_of(n.in1), gg);
                add_into(grad_of(n.in2), gb);
                break;
            }
            case Op::Mse: {
                const Array& A = nodes_[static_cast<size_t>(n.in0)].val;
                const Array& B = nodes_[static_cast<size_t>(n.in1)].val;
                const double c = 2.0 * g.data[0] / static_cast<double>(A.numel());
                Array ga(A.shape), gb(B.shape);
                for (size_t j = 0; j < A.data.size(); ++j) {
                    const double d = c * (A.data[j] - B.data[j]);
                    ga.data[j] = d;
                    gb.data[j] = -d;
                }
                add_into(grad_of(n.in0), ga);
                add_into(grad_of(n.in1), gb);
                break;
            }
            case Op::Sum: {
                Array gx(nodes_[static_cast<size_t>(n.in0)].val.shape);
                for (double& v : gx.data) v = g.data[0];
                add_into(grad_of(n.in0), gx);
                break;
            }
            case Op::Conv2d: {
                const int64_t H = n.i0, W = n.i1, k = n.i2;
                const int64_t stride = n.i3 / 100, pad = n.i3 % 100;
                const Array& Wt = nodes_[static_cast<size_t>(n.in1)].val;
                const int64_t Cin = nodes_[static_cast<size_t>(n.in0)].val.shape[1];
                add_into(grad_of(n.in1), matmul_tn(g, n.saved));
                Array dcol = adi::matmul(g, Wt);
                Array dx({H * W, Cin});
                col2im_add(dcol, H, W, k, stride, pad, Cin, dx);
                add_into(grad_of(n.in0), dx);
                break;
            }
            case Op::Upsample2x: {
                const int64_t H = n.i0, W = n.i1;
                const int64_t C = n.val.shape[1];
                Array gx({H * W, C});
                for (int64_t oh = 0; oh < 2 * H; ++oh)
                    for (int64_t ow = 0; ow < 2 * W; ++ow) {
                        const double* src = g.data.data() + (oh * 2 * W + ow) * C;
                        double* dst = gx.data.data() + ((oh / 2) * W + (ow / 2)) * C;
                        for (int64_t c = 0; c < C; ++c) dst[c] += src[c];
                    }
                add_into(grad_of(n.in0), gx);
                break;
            }
            case Op::Reshape: {
                Array gx(nodes_[static_cast<size_t>(n.in0)].val.shape, g.data);
                add_into(grad_of(n.in0), gx);
                break;
            }
            case Op::Transpose2d: {
                const Array& X = nodes_[static_cast<size_t>(n.in0)].val;
                Array gx(X.shape);
                for (int64_t r = 0; r < X.shape[0]; ++r)
                    for (int64_t c = 0; c < X.shape[1]; ++c) gx.at(r, c) = g.at(c, r);
                add_into(grad_of(n.in0), gx);
                break;
            }
        }
    }

    BackwardResult res;
    for (size_t p = 0; p < params_->size(); ++p) {
        if (!params_->trainable(p)) continue;
        const std::string& name = params_->name(p);
        auto it = param_vars_.find(name);
        if (it != param_vars_.end() && touched[static_cast<size_t>(it->second)]) {
            res.grads[name] = grads[static_cast<size_t>(it->second)];
        } else {
            res.grads[name] = Array(params_->value(p).shape);
            res.missing.push_back(name);
        }
    }
    return res;
}

Var sdpa(Tape& t, Var q, Var k, Var v) {
    const int64_t d = t.val(q).shape[1];
    Var scores = t.scale(t.matmul(q, t.transpose2d(k)), 1.0 / std::sqrt(static_cast<double>(d)));
    Var p = t.softmax(scores, 1);
    return t.matmul(p, v);
}

}  // namespace adi
