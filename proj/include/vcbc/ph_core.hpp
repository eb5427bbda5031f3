// Port-Hamiltonian mechanical systems: H = 1/2 p'M(q)^-1 p + P(q).
#pragma once

#include "vcbc/linalg.hpp"
#include "vcbc/taylor.hpp"
#include "vcbc/types.hpp"

#include <vector>

namespace vcbc {

/// Phase-space point. The first `n_links` entries of q and p belong to the
/// links, the rest to the motors.
struct State {
  VecX q;
  VecX p;
  int n_links = 0;

  State() = default;
  State(VecX q_, VecX p_, int n_l) : q(std::move(q_)), p(std::move(p_)), n_links(n_l) {}

  Index dof() const { return q.size(); }
  Index n_motors() const { return q.size() - n_links; }

  VecX q_l() const { return q.head(n_links); }
  VecX q_m() const { return q.tail(n_motors()); }
  VecX p_l() const { return p.head(n_links); }
  VecX p_m() const { return p.tail(n_motors()); }

  /// Stacked (q, p).
  VecX stacked() const;
  static State from_stacked(const VecX& x, int n_links);

  bool finite() const { return q.allFinite() && p.allFinite(); }
};

struct StateRate {
  VecX dq;
  VecX dp;
};

class MechModel {
 public:
  virtual ~MechModel() = default;

  virtual int link_dof() const = 0;
  virtual int motor_dof() const = 0;
  int dof() const { return link_dof() + motor_dof(); }
  int input_dim() const { return motor_dof(); }

  virtual MatX inertia(const VecX& q) const = 0;
  virtual Mat<Jet> inertia(const Vec<Jet>& q) const = 0;
  /// dM/dq_k for k = 0..n-1.
  virtual std::vector<MatX> inertia_partials(const VecX& q) const = 0;
  virtual std::vector<Mat<Jet>> inertia_partials(const Vec<Jet>& q) const = 0;
  virtual MatX damping(const VecX& q, const VecX& p) const = 0;
  virtual Mat<Jet> damping(const Vec<Jet>& q, const Vec<Jet>& p) const = 0;
  virtual double potential(const VecX& q) const = 0;
  virtual VecX potential_grad(const VecX& q) const = 0;
  virtual Vec<Jet> potential_grad(const Vec<Jet>& q) const = 0;
  virtual MatX potential_hessian(const VecX& q) const = 0;

  /// B(q) = [0; I] (motors actuated).
  MatX input_map() const;
};

/// Forwards every virtual callback to `Derived::impl_*<T>` templates.
template <typename Derived>
class MechModelCrtp : public MechModel {
 public:
  MatX inertia(const VecX& q) const override { return self().template impl_inertia<double>(q); }
  Mat<Jet> inertia(const Vec<Jet>& q) const override { return self().template impl_inertia<Jet>(q); }
  std::vector<MatX> inertia_partials(const VecX& q) const override {
    return self().template impl_inertia_partials<double>(q);
  }
  std::vector<Mat<Jet>> inertia_partials(const Vec<Jet>& q) const override {
    return self().template impl_inertia_partials<Jet>(q);
  }
  MatX damping(const VecX& q, const VecX& p) const override {
    return self().template impl_damping<double>(q, p);
  }
  Mat<Jet> damping(const Vec<Jet>& q, const Vec<Jet>& p) const override {
    return self().template impl_damping<Jet>(q, p);
  }
  VecX potential_grad(const VecX& q) const override {
    return self().template impl_potential_grad<double>(q);
  }
  Vec<Jet> potential_grad(const Vec<Jet>& q) const override {
    return self().template impl_potential_grad<Jet>(q);
  }

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

/// Constant inertia, constant damping and a quadratic potential 1/2 q'Kq.
class QuadraticModel : public MechModelCrtp<QuadraticModel> {
 public:
  QuadraticModel(MatX m, MatX d, MatX k, int n_links);

  int link_dof() const override { return n_links_; }
  int motor_dof() const override { return static_cast<int>(m_.rows()) - n_links_; }
  double potential(const VecX& q) const override;
  MatX potential_hessian(const VecX&) const override { return k_; }

  template <typename T>
  Mat<T> impl_inertia(const Vec<T>&) const {
    return m_.cast<T>();
  }
  template <typename T>
  std::vector<Mat<T>> impl_inertia_partials(const Vec<T>& q) const {
    return std::vector<Mat<T>>(q.size(), Mat<T>::Zero(q.size(), q.size()));
  }
  template <typename T>
  Mat<T> impl_damping(const Vec<T>&, const Vec<T>&) const {
    return d_.cast<T>();
  }
  template <typename T>
  Vec<T> impl_potential_grad(const Vec<T>& q) const {
    return k_.cast<T>() * q;
  }

 private:
  MatX m_, d_, k_;
  int n_links_;
};

void check_state(const MechModel& model, const State& s);

/// Mdot = sum_k dM/dq_k qdot_k.
template <typename T>
Mat<T> inertia_rate(const std::vector<Mat<T>>& partials, const Vec<T>& qdot);

/// S_L[k][j] = 1/2 sum_i (dM_ki/dq_j - dM_ij/dq_k) qdot_i.
template <typename T>
Mat<T> coriolis_structure(const std::vector<Mat<T>>& partials, const Vec<T>& qdot);

MatX coriolis_structure(const MechModel& model, const VecX& q, const VecX& qdot);

/// E = S_H - 1/2 Mdot, both evaluated at qdot = M^-1 p.
template <typename T>
Mat<T> workless_matrix(const MechModel& model, const Vec<T>& q, const Vec<T>& p);

MatX workless_matrix(const MechModel& model, const State& s);

double hamiltonian(const MechModel& model, const State& s);

/// qdot = M^-1 p.
VecX velocity(const MechModel& model, const State& s);

/// Workless-force form: pdot = -dP/dq - (E + D) M^-1 p + B u.
template <typename T>
void dynamics(const MechModel& model, const Vec<T>& q, const Vec<T>& p, const Vec<T>& u,
              Vec<T>& dq, Vec<T>& dp);

StateRate dynamics(const MechModel& model, const State& s, const VecX& u);

/// Standard form: pdot = -dH/dq - D dH/dp + B u.
StateRate dynamics_standard(const MechModel& model, const State& s, const VecX& u);

struct PowerBalance {
  double supplied = 0.0;    // u'y, y = B'M^-1 p
  double dissipated = 0.0;  // qdot' D qdot
};

PowerBalance power_balance(const MechModel& model, const State& s, const VecX& u);

/// Central-difference dM/dq_k. Only meant as a test oracle.
std::vector<MatX> numeric_inertia_partials(const MechModel& model, const VecX& q, double h = 1e-6);

}  // namespace vcbc
