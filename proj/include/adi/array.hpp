#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace adi {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major array of 64-bit floats. The substrate of all model math.
struct Array {
    Shape shape;
    std::vector<double> data;

    Array() = default;
    Array(Shape s, std::vector<double> d);
    explicit Array(Shape s);  // zero-filled

    static Array zeros(const Shape& s);
    static Array full(const Shape& s, double v);
    static Array scalar(double v);

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int64_t dim(size_t i) const { return shape[i]; }
    size_t ndim() const { return shape.size(); }

    double& operator[](int64_t i) { return data[static_cast<size_t>(i)]; }
    double operator[](int64_t i) const { return data[static_cast<size_t>(i)]; }

    // 2-d accessor, row-major
    double& at(int64_t r, int64_t c) { return data[static_cast<size_t>(r * shape[1] + c)]; }
    double at(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * shape[1] + c)]; }

    bool all_finite() const;
    bool same_shape(const Array& o) const { return shape == o.shape; }
};

// NumPy-style broadcast of two shapes; throws std::invalid_argument naming both
// shapes when they are incompatible.
Shape broadcast_shape(const Shape& a, const Shape& b, const char* op_name);

// c = a (op) b with broadcasting. Deterministic element order.
Array broadcast_add(const Array& a, const Array& b);
Array broadcast_mul(const Array& a, const Array& b);

// Sum `g` down to `target` shape (reverse of broadcasting).
Array reduce_to_shape(const Array& g, const Shape& target);

// out = a * b for 2-d arrays, via dense GEMM.
Array matmul(const Array& a, const Array& b);
// out = a^T * b and a * b^T variants used by backward rules.
Array matmul_tn(const Array& a, const Array& b);
Array matmul_nt(const Array& a, const Array& b);

}  // namespace adi
