// Virtual mechanical system parametrized by an actual trajectory sample.
//
//   qdot_v = M(q)^-1 p_v
//   pdot_v = -dP/dq(q_v) - (E(x) + D(x)) M(q)^-1 p_v + B u_v
//
// Inertia, workless forces and damping come from the anchor x = (q, p); only
// the potential is evaluated at the virtual configuration.
#pragma once

#include "vcbc/ph_core.hpp"

namespace vcbc {

struct VirtualState {
  State x_v;
  State anchor;
};

template <typename T>
void virtual_dynamics(const MechModel& model, const Vec<T>& q_v, const Vec<T>& p_v,
                      const Vec<T>& q, const Vec<T>& p, const Vec<T>& u_v, Vec<T>& dq_v,
                      Vec<T>& dp_v);

StateRate virtual_dynamics(const MechModel& model, const VirtualState& vs, const VecX& u_v);

struct VariationalStructure {
  MatX interconnection;  // J_v, skew
  MatX dissipation;      // R_v, symmetric, not necessarily semidefinite
  MatX hessian;          // blockdiag(Hess P(q_v), M(q)^-1)
  MatX input;            // [0; B]
};

VariationalStructure variational_structure(const MechModel& model, const VirtualState& vs);

/// delta_dot = (J_v - R_v) Hess(H_v) delta + [0; B] delta_u, delta = (dq, dp).
VecX variational_dynamics(const MechModel& model, const VirtualState& vs, const VecX& delta,
                          const VecX& delta_u);

/// H_v = 1/2 p_v' M(q)^-1 p_v + P(q_v).
double virtual_hamiltonian(const MechModel& model, const VirtualState& vs);

}  // namespace vcbc
