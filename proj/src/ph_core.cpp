#include "vcbc/ph_core.hpp"

namespace vcbc {

VecX State::stacked() const {
  VecX x(q.size() + p.size());
  x << q, p;
  return x;
}

State State::from_stacked(const VecX& x, int n_links) {
  const Index n = x.size() / 2;
  return State(x.head(n), x.tail(n), n_links);
}

MatX MechModel::input_map() const {
  MatX b = MatX::Zero(dof(), motor_dof());
  b.bottomRows(motor_dof()).setIdentity();
  return b;
}

QuadraticModel::QuadraticModel(MatX m, MatX d, MatX k, int n_links)
    : m_(std::move(m)), d_(std::move(d)), k_(std::move(k)), n_links_(n_links) {
  const Index n = m_.rows();
  require_size(m_.cols(), n, "QuadraticModel inertia");
  require_size(d_.rows(), n, "QuadraticModel damping");
  require_size(d_.cols(), n, "QuadraticModel damping");
  require_size(k_.rows(), n, "QuadraticModel stiffness");
  require_size(k_.cols(), n, "QuadraticModel stiffness");
  if (n_links < 0 || n_links > n) throw DimensionError("QuadraticModel: bad link count");
  if (!is_spd(m_)) throw ModelDefect("QuadraticModel: inertia not positive definite");
}

double QuadraticModel::potential(const VecX& q) const { return 0.5 * q.dot(k_ * q); }

void check_state(const MechModel& model, const State& s) {
  require_size(s.q.size(), model.dof(), "state q");
  require_size(s.p.size(), model.dof(), "state p");
  require_size(s.n_links, model.link_dof(), "state link block");
}

template <typename T>
Mat<T> inertia_rate(const std::vector<Mat<T>>& partials, const Vec<T>& qdot) {
  const Index n = qdot.size();
  require_size(static_cast<Index>(partials.size()), n, "inertia partial count");
  Mat<T> r = Mat<T>::Zero(n, n);
  for (Index k = 0; k < n; ++k) r += partials[k] * qdot(k);
  return r;
}

template <typename T>
Mat<T> coriolis_structure(const std::vector<Mat<T>>& partials, const Vec<T>& qdot) {
  const Index n = qdot.size();
  require_size(static_cast<Index>(partials.size()), n, "inertia partial count");
  Mat<T> s = Mat<T>::Zero(n, n);
  // Fill the strict upper triangle and mirror, so S + S' = 0 holds bit for bit.
  for (Index k = 0; k < n; ++k) {
    for (Index j = k + 1; j < n; ++j) {
      T acc(0.0);
      for (Index i = 0; i < n; ++i) acc += (partials[j](k, i) - partials[k](i, j)) * qdot(i);
      s(k, j) = 0.5 * acc;
      s(j, k) = -s(k, j);
    }
  }
  return s;
}

MatX coriolis_structure(const MechModel& model, const VecX& q, const VecX& qdot) {
  require_size(q.size(), model.dof(), "coriolis_structure q");
  require_size(qdot.size(), model.dof(), "coriolis_structure qdot");
  return coriolis_structure<double>(model.inertia_partials(q), qdot);
}

template <typename T>
Mat<T> workless_matrix(const MechModel& model, const Vec<T>& q, const Vec<T>& p) {
  const Vec<T> qdot = solve<T>(model.inertia(q), p);
  const auto partials = model.inertia_partials(q);
  Mat<T> e = coriolis_structure<T>(partials, qdot);
  e -= 0.5 * inertia_rate<T>(partials, qdot);
  return e;
}

MatX workless_matrix(const MechModel& model, const State& s) {
  check_state(model, s);
  return workless_matrix<double>(model, s.q, s.p);
}

double hamiltonian(const MechModel& model, const State& s) {
  check_state(model, s);
  const VecX v = solve<double>(model.inertia(s.q), s.p);
  return 0.5 * s.p.dot(v) + model.potential(s.q);
}

VecX velocity(const MechModel& model, const State& s) {
  check_state(model, s);
  return solve<double>(model.inertia(s.q), s.p);
}

template <typename T>
void dynamics(const MechModel& model, const Vec<T>& q, const Vec<T>& p, const Vec<T>& u,
              Vec<T>& dq, Vec<T>& dp) {
  const int m = model.motor_dof();
  const Vec<T> qdot = solve<T>(model.inertia(q), p);
  const auto partials = model.inertia_partials(q);
  Mat<T> e = coriolis_structure<T>(partials, qdot);
  e -= 0.5 * inertia_rate<T>(partials, qdot);
  dq = qdot;
  dp = -model.potential_grad(q) - (e + model.damping(q, p)) * qdot;
  dp.tail(m) += u;
}

StateRate dynamics(const MechModel& model, const State& s, const VecX& u) {
  check_state(model, s);
  require_size(u.size(), model.input_dim(), "input u");
  StateRate r;
  dynamics<double>(model, s.q, s.p, u, r.dq, r.dp);
  return r;
}

StateRate dynamics_standard(const MechModel& model, const State& s, const VecX& u) {
  check_state(model, s);
  require_size(u.size(), model.input_dim(), "input u");
  const int n = model.dof();
  const MatX m = model.inertia(s.q);
  const VecX qdot = solve<double>(m, s.p);
  const auto partials = model.inertia_partials(s.q);
  VecX dh_dq = model.potential_grad(s.q);
  for (int k = 0; k < n; ++k) dh_dq(k) -= 0.5 * qdot.dot(partials[k] * qdot);
  StateRate r;
  r.dq = qdot;
  r.dp = -dh_dq - model.damping(s.q, s.p) * qdot + model.input_map() * u;
  return r;
}

PowerBalance power_balance(const MechModel& model, const State& s, const VecX& u) {
  check_state(model, s);
  require_size(u.size(), model.input_dim(), "input u");
  const VecX qdot = solve<double>(model.inertia(s.q), s.p);
  PowerBalance b;
  b.supplied = u.dot(model.input_map().transpose() * qdot);
  b.dissipated = qdot.dot(model.damping(s.q, s.p) * qdot);
  return b;
}

std::vector<MatX> numeric_inertia_partials(const MechModel& model, const VecX& q, double h) {
  std::vector<MatX> r;
  for (Index k = 0; k < q.size(); ++k) {
    VecX qp = q, qm = q;
    qp(k) += h;
    qm(k) -= h;
    r.push_back((model.inertia(qp) - model.inertia(qm)) / (2.0 * h));
  }
  return r;
}

template Mat<double> inertia_rate<double>(const std::vector<Mat<double>>&, const Vec<double>&);
template Mat<Jet> inertia_rate<Jet>(const std::vector<Mat<Jet>>&, const Vec<Jet>&);
template Mat<double> coriolis_structure<double>(const std::vector<Mat<double>>&, const Vec<double>&);
template Mat<Jet> coriolis_structure<Jet>(const std::vector<Mat<Jet>>&, const Vec<Jet>&);
template Mat<double> workless_matrix<double>(const MechModel&, const Vec<double>&, const Vec<double>&);
template Mat<Jet> workless_matrix<Jet>(const MechModel&, const Vec<Jet>&, const Vec<Jet>&);
template void dynamics<double>(const MechModel&, const Vec<double>&, const Vec<double>&,
                               const Vec<double>&, Vec<double>&, Vec<double>&);
template void dynamics<Jet>(const MechModel&, const Vec<Jet>&, const Vec<Jet>&, const Vec<Jet>&,
                            Vec<Jet>&, Vec<Jet>&);

}  // namespace vcbc
