#include "mpgen/tensor.hpp"

namespace mpgen {

void matmul_wt(const double* x, int n, int in, const Tensor& w, double* y) {
    assert(w.cols == in);
    const int out = w.rows;
    for (int i = 0; i < n; ++i) {
        const double* xi = x + std::size_t(i) * in;
        double* yi = y + std::size_t(i) * out;
        for (int o = 0; o < out; ++o) {
            const double* wo = w.row(o);
            double acc = 0.0;
            for (int k = 0; k < in; ++k) acc += xi[k] * wo[k];
            yi[o] += acc;
        }
    }
}

void matmul_wt_backward(const double* x, const double* dy, int n, int in,
                        const Tensor& w, Tensor* dw, double* dx) {
    assert(w.cols == in && (dw == nullptr || (dw->rows == w.rows && dw->cols == w.cols)));
    const int out = w.rows;
    for (int i = 0; i < n; ++i) {
        const double* xi = x + std::size_t(i) * in;
        const double* dyi = dy + std::size_t(i) * out;
        if (dw != nullptr) {
            for (int o = 0; o < out; ++o) {
                const double g = dyi[o];
                if (g == 0.0) continue;
                double* dwo = dw->row(o);
                for (int k = 0; k < in; ++k) dwo[k] += g * xi[k];
            }
        }
        if (dx != nullptr) {
            double* dxi = dx + std::size_t(i) * in;
            for (int o = 0; o < out; ++o) {
                const double g = dyi[o];
                if (g == 0.0) continue;
                const double* wo = w.row(o);
                for (int k = 0; k < in; ++k) dxi[k] += g * wo[k];
            }
        }
    }
}

}  // namespace mpgen
