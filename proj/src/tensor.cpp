#include "seqadapt/tensor.hpp"

#include <cmath>
#include <string>

namespace seqadapt {

void check_finite(std::span<const double> values, const char* what) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw NumericError(std::string(what) + ": non-finite value at index " +
                               std::to_string(i));
        }
    }
}

Tensor1 affine(const Tensor2& w, const Tensor1& x, const Tensor1& b) {
    if (w.cols() != x.length() || w.rows() != b.length()) {
        throw DimensionError("affine: shape mismatch, w is " + std::to_string(w.rows()) + "x" +
                             std::to_string(w.cols()) + ", x has length " +
                             std::to_string(x.length()) + ", b has length " +
                             std::to_string(b.length()));
    }
    Tensor1 out(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
        std::span<const double> row = w.row(r);
        double acc = b[r];
        for (std::size_t c = 0; c < row.size(); ++c) {
            acc += row[c] * x[c];
        }
        out[r] = acc;
    }
    check_finite(out.flat(), "affine");
    return out;
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor1 sigmoid(const Tensor1& x) {
    Tensor1 out(x.length());
    for (std::size_t i = 0; i < x.length(); ++i) {
        out[i] = sigmoid(x[i]);
    }
    return out;
}

} // namespace seqadapt
