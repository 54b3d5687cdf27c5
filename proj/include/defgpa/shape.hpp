#pragma once

#include "defgpa/geometry.hpp"

namespace defgpa {

/// Solution of min tr(X^T Q X Lambda) over X^T X = I, X^T 1 = 0: the d
/// bottom eigenvectors of Q excluding the all-one direction, in ascending
/// eigenvalue order (column 0 pairs with the smallest eigenvalue and thus
/// with the largest scale).
struct ShapeSolution {
  Matrix basis;        // X, m x d, orthonormal columns, each orthogonal to 1
  Vector eigenvalues;  // d, ascending; eigenvalues of Q for these vectors
  double bottom_gap = 0;           // (d+1)-th minus d-th bottom eigenvalue
  bool degenerate_spectrum = false;  // gap below 1e-10 * ||Q||_F
};

/// Solves the constrained eigen-problem via the shift Q' = Q + n 11^T that
/// moves the all-one eigenvector out of the bottom of the spectrum. Column
/// signs are canonicalized so each column's largest-magnitude entry is
/// positive.
ShapeSolution solve_shape(const Matrix& q_global, Index n_views, int d);

}  // namespace defgpa
