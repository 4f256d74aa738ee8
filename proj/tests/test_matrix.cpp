#include "doctest.h"

#include "caud/matrix.hpp"
#include "caud/rng.hpp"

using namespace caud;

TEST_SUITE_BEGIN("matrix");

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    Matrix m(r, c);
    for (double& v : m.data()) v = 2.0 * rng.next_double() - 1.0;
    return m;
}

Matrix naive_mul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

} // namespace

TEST_CASE("matmul matches a naive triple loop") {
    Rng rng(11);
    for (auto [n, m, p] : {std::tuple<int, int, int>{3, 4, 5}, {1, 7, 2}, {16, 16, 16}}) {
        Matrix a = random_matrix(n, m, rng);
        Matrix b = random_matrix(m, p, rng);
        Matrix c;
        matmul(a, b, c);
        Matrix expected = naive_mul(a, b);
        for (std::size_t i = 0; i < c.rows(); ++i)
            for (std::size_t j = 0; j < c.cols(); ++j)
                CHECK(c(i, j) == doctest::Approx(expected(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("matmul_at_b computes A^T B and accumulates") {
    Rng rng(12);
    Matrix a = random_matrix(6, 3, rng);
    Matrix b = random_matrix(6, 4, rng);
    Matrix c;
    matmul_at_b(a, b, c);
    Matrix expected = naive_mul(transposed(a), b);
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j)
            CHECK(c(i, j) == doctest::Approx(expected(i, j)).epsilon(1e-12));

    matmul_at_b(a, b, c, /*accumulate=*/true);
    for (std::size_t i = 0; i < c.rows(); ++i)
        for (std::size_t j = 0; j < c.cols(); ++j)
            CHECK(c(i, j) == doctest::Approx(2.0 * expected(i, j)).epsilon(1e-12));
}

TEST_CASE("parallel path is bit-identical to serial") {
    // Large enough to cross the threading threshold.
    Rng rng(13);
    Matrix a = random_matrix(600, 300, rng);
    Matrix b = random_matrix(300, 250, rng);
    Matrix big;
    matmul(a, b, big);
    // Reference: same kernel shape, forced serial.
    Matrix ref(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* cr = ref.row(i);
        for (std::size_t j = 0; j < b.cols(); ++j) cr[j] = 0.0;
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double av = a(i, k);
            const double* br = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) cr[j] += av * br[j];
        }
    }
    for (std::size_t i = 0; i < big.rows(); ++i)
        for (std::size_t j = 0; j < big.cols(); ++j)
            CHECK(big(i, j) == ref(i, j));  // exact
}

TEST_CASE("shape mismatches are rejected") {
    Matrix a(2, 3), b(4, 2), c;
    CHECK_THROWS_AS(matmul(a, b, c), UsageError);
    CHECK_THROWS_AS(matmul_at_b(a, b, c), UsageError);
}

TEST_SUITE_END();
