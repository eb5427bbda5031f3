#include "vcbc/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>

namespace vcbc {

template <typename T>
Mat<T> solve(const Mat<T>& a_in, const Mat<T>& b_in) {
  require_size(a_in.rows(), a_in.cols(), "solve: square matrix");
  require_size(b_in.rows(), a_in.rows(), "solve: right-hand side rows");
  Mat<T> a = a_in;
  Mat<T> b = b_in;
  const Index n = a.rows();
  double scale = 0.0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) scale = std::max(scale, std::abs(value_of(a(i, j))));
  if (scale == 0.0 && n > 0) throw ModelDefect("solve: zero matrix");

  for (Index k = 0; k < n; ++k) {
    Index piv = k;
    double best = std::abs(value_of(a(k, k)));
    for (Index i = k + 1; i < n; ++i) {
      const double v = std::abs(value_of(a(i, k)));
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (!(best > 1e-14 * scale)) throw ModelDefect("solve: singular matrix");
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      b.row(k).swap(b.row(piv));
    }
    for (Index i = k + 1; i < n; ++i) {
      const T f = a(i, k) / a(k, k);
      if (value_of(f) == 0.0 && f == T(0.0)) continue;
      for (Index j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      for (Index j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
    }
  }
  for (Index k = n - 1; k >= 0; --k) {
    for (Index j = 0; j < b.cols(); ++j) {
      T s = b(k, j);
      for (Index i = k + 1; i < n; ++i) s -= a(k, i) * b(i, j);
      b(k, j) = s / a(k, k);
    }
  }
  return b;
}

template Mat<double> solve<double>(const Mat<double>&, const Mat<double>&);
template Mat<Jet> solve<Jet>(const Mat<Jet>&, const Mat<Jet>&);

MatX block_diag(const std::vector<MatX>& blocks) {
  Index rows = 0, cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  MatX r = MatX::Zero(rows, cols);
  Index i = 0, j = 0;
  for (const auto& b : blocks) {
    r.block(i, j, b.rows(), b.cols()) = b;
    i += b.rows();
    j += b.cols();
  }
  return r;
}

VecX symmetric_eigenvalues(const MatX& a) {
  require_size(a.rows(), a.cols(), "symmetric_eigenvalues: square matrix");
  const MatX sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<MatX> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double lambda_min(const MatX& a) { return symmetric_eigenvalues(a).minCoeff(); }
double lambda_max(const MatX& a) { return symmetric_eigenvalues(a).maxCoeff(); }

bool is_spd(const MatX& a, double tol) {
  if (a.rows() != a.cols() || a.rows() == 0) return false;
  if (!a.allFinite()) return false;
  const double mag = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > tol * mag) return false;
  Eigen::LLT<MatX> llt(0.5 * (a + a.transpose()));
  return llt.info() == Eigen::Success;
}

bool all_finite(const VecX& v) { return v.allFinite(); }

}  // namespace vcbc
