#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace mpgen {

// Dense row-major matrix of doubles. Vectors are rows x 1.
// 64-bit floats throughout the numeric path so finite-difference checks
// stay meaningful.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(std::size_t(r) * std::size_t(c), 0.0) {}

    double& at(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return v[std::size_t(r) * cols + c];
    }
    double at(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return v[std::size_t(r) * cols + c];
    }
    double* row(int r) { return v.data() + std::size_t(r) * cols; }
    const double* row(int r) const { return v.data() + std::size_t(r) * cols; }

    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

// y[n x out] += x[n x in] * W^T, with W stored out x in.
void matmul_wt(const double* x, int n, int in, const Tensor& w, double* y);

// Accumulates dW += dy^T * x and dx += dy * W for the layout above.
// Either side can be skipped with nullptr (frozen weights, leaf inputs).
void matmul_wt_backward(const double* x, const double* dy, int n, int in,
                        const Tensor& w, Tensor* dw, double* dx);

}  // namespace mpgen
