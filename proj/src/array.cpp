#include "adi/array.hpp"

#include <Eigen/Core>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace adi {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) os << ",";
        os << s[i];
    }
    os << "]";
    return os.str();
}

Array::Array(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (shape_numel(shape) != static_cast<int64_t>(data.size()))
        throw std::invalid_argument("Array: shape " + shape_str(shape) + " does not match data length " +
                                    std::to_string(data.size()));
}

Array::Array(Shape s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
}

Array Array::zeros(const Shape& s) { return Array(s); }

Array Array::full(const Shape& s, double v) {
    Array a(s);
    std::fill(a.data.begin(), a.data.end(), v);
    return a;
}

Array Array::scalar(double v) { return Array({1}, {v}); }

bool Array::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op_name) {
    size_t n = std::max(a.size(), b.size());
    Shape out(n, 1);
    for (size_t i = 0; i < n; ++i) {
        int64_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
        int64_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
        if (da != db && da != 1 && db != 1)
            throw std::invalid_argument(std::string(op_name) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                                        " are not broadcastable");
        out[n - 1 - i] = std::max(da, db);
    }
    return out;
}

namespace {

// Strides of `s` viewed as `out` (0 stride on broadcast axes).
std::vector<int64_t> bcast_strides(const Shape& s, const Shape& out) {
    std::vector<int64_t> st(out.size(), 0);
    int64_t stride = 1;
    for (size_t i = 0; i < s.size(); ++i) {
        size_t si = s.size() - 1 - i;
        size_t oi = out.size() - 1 - i;
        st[oi] = (s[si] == 1 && out[oi] != 1) ? 0 : stride;
        stride *= s[si];
    }
    return st;
}

template <class F>
Array bcast_binary(const Array& a, const Array& b, const char* name, F&& f) {
    if (a.shape == b.shape) {  // fast path
        Array out(a.shape);
        const size_t n = a.data.size();
        for (size_t i = 0; i < n; ++i) out.data[i] = f(a.data[i], b.data[i]);
        return out;
    }
    Shape os = broadcast_shape(a.shape, b.shape, name);
    Array out(os);
    auto sa = bcast_strides(a.shape, os);
    auto sb = bcast_strides(b.shape, os);
    size_t nd = os.size();
    std::vector<int64_t> idx(nd, 0);
    int64_t ia = 0, ib = 0;
    const int64_t n = out.numel();
    for (int64_t flat = 0; flat < n; ++flat) {
        out.data[static_cast<size_t>(flat)] =
            f(a.data[static_cast<size_t>(ia)], b.data[static_cast<size_t>(ib)]);
        for (size_t d = nd; d-- > 0;) {
            idx[d]++;
            ia += sa[d];
            ib += sb[d];
            if (idx[d] < os[d]) break;
            ia -= sa[d] * os[d];
            ib -= sb[d] * os[d];
            idx[d] = 0;
        }
    }
    return out;
}

}  // namespace

Array broadcast_add(const Array& a, const Array& b) {
    return bcast_binary(a, b, "add", [](double x, double y) { return x + y; });
}

Array broadcast_mul(const Array& a, const Array& b) {
    return bcast_binary(a, b, "mul", [](double x, double y) { return x * y; });
}

Array reduce_to_shape(const Array& g, const Shape& target) {
    if (g.shape == target) return g;
    Array out(target);
    auto st = bcast_strides(target, g.shape);
    size_t nd = g.shape.size();
    std::vector<int64_t> idx(nd, 0);
    int64_t it = 0;
    const int64_t n = g.numel();
    for (int64_t flat = 0; flat < n; ++flat) {
        out.data[static_cast<size_t>(it)] += g.data[static_cast<size_t>(flat)];
        for (size_t d = nd; d-- > 0;) {
            idx[d]++;
            it += st[d];
            if (idx[d] < g.shape[d]) break;
            it -= st[d] * g.shape[d];
            idx[d] = 0;
        }
    }
    return out;
}

using EMat = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using EMatMut = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

static void check2d(const Array& a, const char* who) {
    if (a.ndim() != 2) throw std::invalid_argument(std::string(who) + ": expected 2-d array, got " + shape_str(a.shape));
}

Array matmul(const Array& a, const Array& b) {
    check2d(a, "matmul");
    check2d(b, "matmul");
    if (a.shape[1] != b.shape[0])
        throw std::invalid_argument("matmul: inner dims of " + shape_str(a.shape) + " and " + shape_str(b.shape) +
                                    " do not match");
    Array out({a.shape[0], b.shape[1]});
    EMat ma(a.data.data(), a.shape[0], a.shape[1]);
    EMat mb(b.data.data(), b.shape[0], b.shape[1]);
    EMatMut mo(out.data.data(), out.shape[0], out.shape[1]);
    mo.noalias() = ma * mb;
    return out;
}

Array matmul_tn(const Array& a, const Array& b) {
    check2d(a, "matmul_tn");
    check2d(b, "matmul_tn");
    if (a.shape[0] != b.shape[0])
        throw std::invalid_argument("matmul_tn: dims of " + shape_str(a.shape) + " and " + shape_str(b.shape) +
                                    " do not match");
    Array out({a.shape[1], b.shape[1]});
    EMat ma(a.data.data(), a.shape[0], a.shape[1]);
    EMat mb(b.data.data(), b.shape[0], b.shape[1]);
    EMatMut mo(out.data.data(), out.shape[0], out.shape[1]);
    mo.noalias() = ma.transpose() * mb;
    return out;
}

Array matmul_nt(const Array& a, const Array& b) {
    check2d(a, "matmul_nt");
    check2d(b, "matmul_nt");
    if (a.shape[1] != b.shape[1])
        throw std::invalid_argument("matmul_nt: dims of " + shape_str(a.shape) + " and " + shape_str(b.shape) +
                                    " do not match");
    Array out({a.shape[0], b.shape[0]});
    EMat ma(a.data.data(), a.shape[0], a.shape[1]);
    EMat mb(b.data.data(), b.shape[0], b.shape[1]);
    EMatMut mo(out.data.data(), out.shape[0], out.shape[1]);
    mo.noalias() = ma * mb.transpose();
    return out;
}

}  // namespace adi
