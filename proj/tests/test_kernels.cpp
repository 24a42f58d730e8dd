#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lifegraph/kernels.hpp"
#include "lifegraph/rng.hpp"

using namespace lifegraph;

namespace {

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-2.0, 2.0);
  return m;
}

}  // namespace

TEST_CASE("parallel kernels match the serial reference bit for bit") {
  Rng rng(7);
  // Mix of square and skinny shapes, including empty-ish edges.
  const int shapes[][3] = {{1, 1, 1}, {5, 3, 4}, {17, 29, 8}, {64, 64, 64}, {96, 7, 33}};
  for (auto [m, k, n] : shapes) {
    Matrix a = random_matrix(m, k, rng);
    Matrix b = random_matrix(k, n, rng);
    Matrix c1, c2;
    matmul(a, b, c1);
    ref::matmul(a, b, c2);
    CHECK(c1 == c2);

    Matrix at = random_matrix(k, m, rng);
    matmul_tn(at, b, c1);
    ref::matmul_tn(at, b, c2);
    CHECK(c1 == c2);

    Matrix bt = random_matrix(n, k, rng);
    matmul_nt(a, bt, c1);
    ref::matmul_nt(a, bt, c2);
    CHECK(c1 == c2);
  }
}

TEST_CASE("sparse product equals dense product on sparse inputs") {
  Rng rng(11);
  Matrix dense(40, 40);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) {
      if (rng.uniform() < 0.1) dense(i, j) = rng.uniform(-1.0, 1.0);
    }
  }
  SparseMatrix sparse = SparseMatrix::from_dense(dense);
  Matrix b = random_matrix(40, 13, rng);
  Matrix c_sparse, c_sparse_ref, c_dense;
  spmm(sparse, b, c_sparse);
  ref::spmm(sparse, b, c_sparse_ref);
  CHECK(c_sparse == c_sparse_ref);
  matmul(dense, b, c_dense);
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 13; ++j) {
      CHECK(c_sparse(i, j) == doctest::Approx(c_dense(i, j)).epsilon(1e-14));
    }
  }
}

TEST_CASE("pairwise distances agree with reference") {
  Rng rng(3);
  Matrix pts = random_matrix(31, 6, rng);
  Matrix d1, d2;
  pairwise_sq_dists(pts, d1);
  ref::pairwise_sq_dists(pts, d2);
  CHECK(d1 == d2);
  for (int i = 0; i < 31; ++i) CHECK(d1(i, i) == 0.0);
}

TEST_CASE("shape mismatches throw") {
  Matrix a(3, 4), b(5, 2), c;
  CHECK_THROWS_AS(matmul(a, b, c), DimensionError);
  CHECK_THROWS_AS(matmul_tn(a, b, c), DimensionError);
}

TEST_CASE("rng streams are deterministic and fork independently") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
  Rng f1 = a.fork(1);
  Rng f1_again = a.fork(1);
  Rng f2 = a.fork(2);
  CHECK(f1.uniform() == f1_again.uniform());
  CHECK(f1.uniform() != f2.uniform());
}

TEST_CASE("box-muller gaussian has sane moments") {
  Rng rng(123);
  double sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double g = rng.gaussian();
    sum += g;
    sum2 += g * g;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(std::fabs(sum2 / n - 1.0) < 0.02);
}

TEST_CASE("uniform_index covers the range without bias artifacts") {
  Rng rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) CHECK(c > 800);
}
