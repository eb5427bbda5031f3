// Flexible-joint robots: rigid links driven through linear springs.
#pragma once

#include "vcbc/ph_core.hpp"

#include <cmath>

namespace vcbc {

using std::cos;
using std::sin;

struct FjrParams {
  VecX link_masses;    // kg
  VecX link_inertias;  // kg m^2, about the centre of mass
  VecX link_lengths;   // m
  VecX link_com;       // m, joint to centre of mass
  VecX motor_masses;   // kg m^2 (reflected rotor inertia)
  VecX link_damping;   // diagonal, N m s/rad
  VecX motor_damping;  // diagonal, N m s/rad
  MatX stiffness;      // N m/rad
  bool gravity_enabled = false;
  double gravity = 9.81;  // m/s^2

  int n_links() const { return static_cast<int>(link_masses.size()); }
};

/// Quanser 2-DOF serial flexible-link parameters with K = diag(9, 4).
FjrParams quanser_params();

/// Throws ConfigError keyed "robot.<field>" on the first violated invariant.
void validate(const FjrParams& params);

class FjrModel : public MechModelCrtp<FjrModel> {
 public:
  explicit FjrModel(FjrParams params);

  int link_dof() const override { return n_; }
  int motor_dof() const override { return n_; }
  double potential(const VecX& q) const override;
  MatX potential_hessian(const VecX& q) const override;

  const FjrParams& params() const { return params_; }
  const MatX& stiffness() const { return params_.stiffness; }
  const MatX& stiffness_inverse() const { return k_inv_; }
  double a1() const { return a1_; }
  double a2() const { return a2_; }
  double b() const { return b_; }

  template <typename T>
  Mat<T> link_inertia(const Vec<T>& q_l) const {
    Mat<T> m(n_, n_);
    if (n_ == 1) {
      m(0, 0) = T(a1_);
    } else {
      const T c = cos(q_l(1));
      m(0, 0) = a1_ + a2_ + 2.0 * b_ * c;
      m(0, 1) = a2_ + b_ * c;
      m(1, 0) = m(0, 1);
      m(1, 1) = T(a2_);
    }
    return m;
  }

  MatX motor_inertia() const { return params_.motor_masses.asDiagonal(); }
  MatX link_damping() const { return params_.link_damping.asDiagonal(); }
  MatX motor_damping() const { return params_.motor_damping.asDiagonal(); }

  /// dP_lg/dq_l. Zero unless gravity is enabled.
  template <typename T>
  Vec<T> link_gravity_grad(const Vec<T>& q_l) const {
    Vec<T> g = Vec<T>::Zero(n_);
    if (!params_.gravity_enabled) return g;
    const double gr = params_.gravity;
    const auto& m = params_.link_masses;
    const auto& r = params_.link_com;
    if (n_ == 1) {
      g(0) = gr * m(0) * r(0) * cos(q_l(0));
    } else {
      const T c1 = cos(q_l(0));
      const T c12 = cos(q_l(0) + q_l(1));
      g(0) = gr * (m(0) * r(0) * c1 + m(1) * (params_.link_lengths(0) * c1 + r(1) * c12));
      g(1) = gr * m(1) * r(1) * c12;
    }
    return g;
  }
  MatX link_gravity_hessian(const VecX& q_l) const;
  double link_gravity_potential(const VecX& q_l) const;

  template <typename T>
  Mat<T> impl_inertia(const Vec<T>& q) const {
    Mat<T> m = Mat<T>::Zero(2 * n_, 2 * n_);
    m.topLeftCorner(n_, n_) = link_inertia<T>(q.head(n_));
    for (int i = 0; i < n_; ++i) m(n_ + i, n_ + i) = T(params_.motor_masses(i));
    return m;
  }

  template <typename T>
  std::vector<Mat<T>> impl_inertia_partials(const Vec<T>& q) const {
    std::vector<Mat<T>> d(2 * n_, Mat<T>::Zero(2 * n_, 2 * n_));
    if (n_ == 2) {
      const T s = sin(q(1));
      d[1](0, 0) = -2.0 * b_ * s;
      d[1](0, 1) = -b_ * s;
      d[1](1, 0) = -b_ * s;
    }
    return d;
  }

  template <typename T>
  Mat<T> impl_damping(const Vec<T>&, const Vec<T>&) const {
    Mat<T> d = Mat<T>::Zero(2 * n_, 2 * n_);
    for (int i = 0; i < n_; ++i) {
      d(i, i) = T(params_.link_damping(i));
      d(n_ + i, n_ + i) = T(params_.motor_damping(i));
    }
    return d;
  }

  template <typename T>
  Vec<T> impl_potential_grad(const Vec<T>& q) const {
    const Vec<T> zeta = q.tail(n_) - q.head(n_);
    const Vec<T> f = params_.stiffness.cast<T>() * zeta;
    Vec<T> g(2 * n_);
    g.head(n_) = link_gravity_grad<T>(q.head(n_)) - f;
    g.tail(n_) = f;
    return g;
  }

 private:
  FjrParams params_;
  int n_;
  double a1_ = 0.0, a2_ = 0.0, b_ = 0.0;
  MatX k_inv_;
};

FjrModel build_fjr_model(const FjrParams& params);

/// zeta = q_m - q_l.
VecX spring_deflection(const State& s);

}  // namespace vcbc
