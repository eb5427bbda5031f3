#include "vcbc/vsys.hpp"

namespace vcbc {

template <typename T>
void virtual_dynamics(const MechModel& model, const Vec<T>& q_v, const Vec<T>& p_v,
                      const Vec<T>& q, const Vec<T>& p, const Vec<T>& u_v, Vec<T>& dq_v,
                      Vec<T>& dp_v) {
  const Mat<T> m = model.inertia(q);
  const Mat<T> e = workless_matrix<T>(model, q, p);
  dq_v = solve<T>(m, p_v);
  dp_v = -model.potential_grad(q_v) - (e + model.damping(q, p)) * dq_v;
  dp_v.tail(model.motor_dof()) += u_v;
}

template void virtual_dynamics<double>(const MechModel&, const Vec<double>&, const Vec<double>&,
                                       const Vec<double>&, const Vec<double>&, const Vec<double>&,
                                       Vec<double>&, Vec<double>&);
template void virtual_dynamics<Jet>(const MechModel&, const Vec<Jet>&, const Vec<Jet>&,
                                    const Vec<Jet>&, const Vec<Jet>&, const Vec<Jet>&, Vec<Jet>&,
                                    Vec<Jet>&);

StateRate virtual_dynamics(const MechModel& model, const VirtualState& vs, const VecX& u_v) {
  check_state(model, vs.x_v);
  check_state(model, vs.anchor);
  require_size(u_v.size(), model.input_dim(), "virtual input");
  StateRate r;
  virtual_dynamics<double>(model, vs.x_v.q, vs.x_v.p, vs.anchor.q, vs.anchor.p, u_v, r.dq, r.dp);
  return r;
}

VariationalStructure variational_structure(const MechModel& model, const VirtualState& vs) {
  check_state(model, vs.x_v);
  check_state(model, vs.anchor);
  const int n = model.dof();
  const MatX m = model.inertia(vs.anchor.q);
  const MatX m_inv = solve<double>(m, MatX(MatX::Identity(n, n)));
  const VecX qdot = m_inv * vs.anchor.p;
  const auto partials = model.inertia_partials(vs.anchor.q);
  const MatX s_h = coriolis_structure<double>(partials, qdot);
  const MatX m_dot = inertia_rate<double>(partials, qdot);

  VariationalStructure v;
  v.interconnection = MatX::Zero(2 * n, 2 * n);
  v.interconnection.topRightCorner(n, n).setIdentity();
  v.interconnection.bottomLeftCorner(n, n) = -MatX::Identity(n, n);
  v.interconnection.bottomRightCorner(n, n) = -s_h;
  v.dissipation = MatX::Zero(2 * n, 2 * n);
  v.dissipation.bottomRightCorner(n, n) =
      model.damping(vs.anchor.q, vs.anchor.p) - 0.5 * m_dot;
  v.hessian = block_diag<double>(model.potential_hessian(vs.x_v.q), m_inv);
  v.input = MatX::Zero(2 * n, model.input_dim());
  v.input.bottomRows(n) = model.input_map();
  return v;
}

VecX variational_dynamics(const MechModel& model, const VirtualState& vs, const VecX& delta,
                          const VecX& delta_u) {
  require_size(delta.size(), 2 * model.dof(), "variational delta");
  require_size(delta_u.size(), model.input_dim(), "variational delta_u");
  const VariationalStructure v = variational_structure(model, vs);
  return (v.interconnection - v.dissipation) * (v.hessian * delta) + v.input * delta_u;
}

double virtual_hamiltonian(const MechModel& model, const VirtualState& vs) {
  check_state(model, vs.x_v);
  check_state(model, vs.anchor);
  const VecX v = solve<double>(model.inertia(vs.anchor.q), vs.x_v.p);
  return 0.5 * vs.x_v.p.dot(v) + model.potential(vs.x_v.q);
}

}  // namespace vcbc
