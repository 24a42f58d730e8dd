#include "lifegraph/kernels.hpp"

namespace lifegraph {

namespace {

void check_mul(const Matrix& a, const Matrix& b, int am, int an, int bm, int bn,
               const char* what) {
  if (an != bm) {
    throw DimensionError(std::string(what) + ": inner dimensions " + std::to_string(am) + "x" +
                         std::to_string(an) + " vs " + std::to_string(bm) + "x" +
                         std::to_string(bn));
  }
  (void)a;
  (void)b;
}

}  // namespace

namespace ref {

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  check_mul(a, b, a.rows(), a.cols(), b.rows(), b.cols(), "matmul");
  c = Matrix(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int l = 0; l < a.cols(); ++l) {
      double av = arow[l];
      const double* brow = b.row(l);
      for (int j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  check_mul(a, b, a.cols(), a.rows(), b.rows(), b.cols(), "matmul_tn");
  c = Matrix(a.cols(), b.cols());
  for (int l = 0; l < a.rows(); ++l) {
    const double* arow = a.row(l);
    const double* brow = b.row(l);
    for (int i = 0; i < a.cols(); ++i) {
      double av = arow[i];
      double* crow = c.row(i);
      for (int j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  check_mul(a, b, a.rows(), a.cols(), b.cols(), b.rows(), "matmul_nt");
  c = Matrix(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (int l = 0; l < a.cols(); ++l) acc += arow[l] * brow[l];
      crow[j] = acc;
    }
  }
}

void spmm(const SparseMatrix& s, const Matrix& b, Matrix& c) {
  if (s.cols != b.rows()) {
    throw DimensionError("spmm: inner dimensions " + std::to_string(s.cols) + " vs " +
                         std::to_string(b.rows()));
  }
  c = Matrix(s.rows, b.cols());
  for (int i = 0; i < s.rows; ++i) {
    double* crow = c.row(i);
    for (int p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) {
      double v = s.values[p];
      const double* brow = b.row(s.col_idx[p]);
      for (int j = 0; j < b.cols(); ++j) crow[j] += v * brow[j];
    }
  }
}

void pairwise_sq_dists(const Matrix& pts, Matrix& out) {
  int n = pts.rows();
  out = Matrix(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double* pi = pts.row(i);
      const double* pj = pts.row(j);
      double acc = 0.0;
      for (int l = 0; l < pts.cols(); ++l) {
        double d = pi[l] - pj[l];
        acc += d * d;
      }
      out(i, j) = acc;
    }
  }
}

}  // namespace ref

// Parallel versions. Row i of the output is owned by exactly one thread and
// computed with the same inner loop as the serial code.

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  check_mul(a, b, a.rows(), a.cols(), b.rows(), b.cols(), "matmul");
  c = Matrix(a.rows(), b.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int l = 0; l < a.cols(); ++l) {
      double av = arow[l];
      const double* brow = b.row(l);
      for (int j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  check_mul(a, b, a.cols(), a.rows(), b.rows(), b.cols(), "matmul_tn");
  c = Matrix(a.cols(), b.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.cols(); ++i) {
    double* crow = c.row(i);
    for (int l = 0; l < a.rows(); ++l) {
      double av = a(l, i);
      const double* brow = b.row(l);
      for (int j = 0; j < b.cols(); ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  check_mul(a, b, a.rows(), a.cols(), b.cols(), b.rows(), "matmul_nt");
  c = Matrix(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows(); ++i) {
    const double* arow = a.row(i);
    double* crow = c.row(i);
    for (int j = 0; j < b.rows(); ++j) {
      const double* brow = b.row(j);
      double acc = 0.0;
      for (int l = 0; l < a.cols(); ++l) acc += arow[l] * brow[l];
      crow[j] = acc;
    }
  }
}

void spmm(const SparseMatrix& s, const Matrix& b, Matrix& c) {
  if (s.cols != b.rows()) {
    throw DimensionError("spmm: inner dimensions " + std::to_string(s.cols) + " vs " +
                         std::to_string(b.rows()));
  }
  c = Matrix(s.rows, b.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < s.rows; ++i) {
    double* crow = c.row(i);
    for (int p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) {
      double v = s.values[p];
      const double* brow = b.row(s.col_idx[p]);
      for (int j = 0; j < b.cols(); ++j) crow[j] += v * brow[j];
    }
  }
}

void pairwise_sq_dists(const Matrix& pts, Matrix& out) {
  int n = pts.rows();
  out = Matrix(n, n);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double* pi = pts.row(i);
      const double* pj = pts.row(j);
      double acc = 0.0;
      for (int l = 0; l < pts.cols(); ++l) {
        double d = pi[l] - pj[l];
        acc += d * d;
      }
      out(i, j) = acc;
    }
  }
}

}  // namespace lifegraph
