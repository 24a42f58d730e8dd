// Dense and sparse linear-algebra kernels. Each kernel exists twice: the
// OpenMP version used everywhere, and a plain serial version in ref:: kept
// as the test oracle. The parallel versions split work by output element
// with a fixed sequential inner loop, so results are bit-identical to the
// serial ones for any thread count.
#pragma once

#include "lifegraph/mat.hpp"

namespace lifegraph {

namespace ref {
// C = A * B
void matmul(const Matrix& a, const Matrix& b, Matrix& c);
// C = A^T * B
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c);
// C = A * B^T
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
// C = S * B, S sparse
void spmm(const SparseMatrix& s, const Matrix& b, Matrix& c);
// out[i][j] = squared euclidean distance between rows i and j of pts
void pairwise_sq_dists(const Matrix& pts, Matrix& out);
}  // namespace ref

void matmul(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
void spmm(const SparseMatrix& s, const Matrix& b, Matrix& c);
void pairwise_sq_dists(const Matrix& pts, Matrix& out);

}  // namespace lifegraph
