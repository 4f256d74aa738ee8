#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "caud/errors.hpp"

namespace caud {

// Dense row-major double matrix. Sized for the workloads here (batches of a
// few thousand rows times widths up to a couple thousand), not a general
// linear algebra library.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double* row(std::size_t i) { return data_.data() + i * cols_; }
    const double* row(std::size_t i) const { return data_.data() + i * cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

namespace detail {

// Work is split by output row ranges. Each output element is accumulated by
// exactly one thread in a fixed serial order, so results are bit-identical
// to the single-threaded path for any thread count.
inline unsigned gemm_threads() {
    static unsigned n = [] {
        if (const char* env = std::getenv("CAUD_THREADS")) {
            long v = std::atol(env);
            if (v >= 1 && v <= 64) return static_cast<unsigned>(v);
        }
        unsigned hw = std::thread::hardware_concurrency();
        return hw == 0 ? 1u : (hw > 8 ? 8u : hw);
    }();
    return n;
}

inline constexpr std::size_t kParallelFlopThreshold = 4u << 20;

template <typename Fn>
void parallel_ranges(std::size_t n, std::size_t flops, Fn&& body) {
    unsigned nt = gemm_threads();
    if (nt <= 1 || flops < kParallelFlopThreshold || n < 2 * nt) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(nt);
    std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        std::size_t lo = t * chunk;
        std::size_t hi = lo + chunk < n ? lo + chunk : n;
        if (lo >= hi) break;
        workers.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& w : workers) w.join();
}

} // namespace detail

// C = A * B. Inner loop runs over columns of B so it vectorizes without
// reassociating the accumulation order.
inline void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols() != b.rows())
        throw UsageError("matmul: inner dimensions disagree (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + ")");
    if (c.rows() != a.rows() || c.cols() != b.cols()) c = Matrix(a.rows(), b.cols());
    const std::size_t m = a.cols(), p = b.cols();
    detail::parallel_ranges(a.rows(), a.rows() * m * p, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            double* cr = c.row(i);
            for (std::size_t j = 0; j < p; ++j) cr[j] = 0.0;
            const double* ar = a.row(i);
            for (std::size_t k = 0; k < m; ++k) {
                const double av = ar[k];
                const double* br = b.row(k);
                for (std::size_t j = 0; j < p; ++j) cr[j] += av * br[j];
            }
        }
    });
}

// C = A^T * B (or C += A^T * B when accumulating), with A (n x m) and
// B (n x p). Parallel over rows of C; every thread scans all of A/B but
// writes a disjoint row band of C.
inline void matmul_at_b(const Matrix& a, const Matrix& b, Matrix& c, bool accumulate = false) {
    if (a.rows() != b.rows())
        throw UsageError("matmul_at_b: row counts disagree");
    if (c.rows() != a.cols() || c.cols() != b.cols()) {
        if (accumulate) throw UsageError("matmul_at_b: accumulate into mismatched shape");
        c = Matrix(a.cols(), b.cols());
    }
    const std::size_t n = a.rows(), m = a.cols(), p = b.cols();
    if (!accumulate)
        for (double& v : c.data()) v = 0.0;
    detail::parallel_ranges(m, n * m * p, [&](std::size_t klo, std::size_t khi) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* ar = a.row(i);
            const double* br = b.row(i);
            for (std::size_t k = klo; k < khi; ++k) {
                const double av = ar[k];
                double* cr = c.row(k);
                for (std::size_t j = 0; j < p; ++j) cr[j] += av * br[j];
            }
        }
    });
}

inline Matrix transposed(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

} // namespace caud
