// Small dense helpers that work for both double and Taylor scalars.
#pragma once

#include "vcbc/taylor.hpp"
#include "vcbc/types.hpp"

#include <concepts>
#include <vector>

namespace vcbc {

/// Solves A X = B by Gaussian elimination with partial pivoting on the value
/// part. Throws ModelDefect when a pivot vanishes. Intended for n <= 16.
template <typename T>
Mat<T> solve(const Mat<T>& a, const Mat<T>& b);

template <typename T, typename V>
  requires std::same_as<V, Vec<T>>
Vec<T> solve(const Mat<T>& a, const V& b) {
  Mat<T> rhs = b;
  return solve<T>(a, rhs).col(0);
}

template <typename T>
Mat<T> block_diag(const Mat<T>& a, const Mat<T>& b) {
  Mat<T> r = Mat<T>::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  r.topLeftCorner(a.rows(), a.cols()) = a;
  r.bottomRightCorner(b.rows(), b.cols()) = b;
  return r;
}

MatX block_diag(const std::vector<MatX>& blocks);

/// Eigenvalues of the symmetric part of `a`, ascending.
VecX symmetric_eigenvalues(const MatX& a);
double lambda_min(const MatX& a);
double lambda_max(const MatX& a);

/// True when `a` is symmetric within `tol` (relative to its magnitude) and
/// its Cholesky factorization succeeds.
bool is_spd(const MatX& a, double tol = 1e-12);

template <typename T>
Vec<T> to_jet_vector(const VecX& v) {
  return v.cast<T>();
}

template <typename T>
VecX values(const Vec<T>& v) {
  VecX r(v.size());
  for (Index i = 0; i < v.size(); ++i) r(i) = value_of(v(i));
  return r;
}

template <typename T>
MatX values(const Mat<T>& m) {
  MatX r(m.rows(), m.cols());
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) r(i, j) = value_of(m(i, j));
  return r;
}

bool all_finite(const VecX& v);

}  // namespace vcbc
