#include "vcbc/fjr_model.hpp"

#include <string>

namespace vcbc {

FjrParams quanser_params() {
  FjrParams p;
  p.link_masses = (VecX(2) << 1.510, 0.873).finished();
  p.link_inertias = (VecX(2) << 0.0392, 0.00808).finished();
  p.link_lengths = (VecX(2) << 0.343, 0.267).finished();
  p.link_com = (VecX(2) << 0.159, 0.055).finished();
  p.motor_masses = (VecX(2) << 0.23, 0.01).finished();
  p.link_damping = (VecX(2) << 0.8, 0.55).finished();
  p.motor_damping = (VecX(2) << 0.2, 90.0).finished();
  p.stiffness = (VecX(2) << 9.0, 4.0).finished().asDiagonal();
  return p;
}

namespace {

void require_positive(const VecX& v, int n, const char* field) {
  const std::string key = std::string("robot.") + field;
  if (v.size() != n)
    throw ConfigError(key, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  for (Index i = 0; i < v.size(); ++i)
    if (!(v(i) > 0.0) || !std::isfinite(v(i))) throw ConfigError(key, "entries must be positive");
}

void require_nonnegative(const VecX& v, int n, const char* field) {
  const std::string key = std::string("robot.") + field;
  if (v.size() != n)
    throw ConfigError(key, "expected " + std::to_string(n) + " entries, got " + std::to_string(v.size()));
  for (Index i = 0; i < v.size(); ++i)
    if (!(v(i) >= 0.0) || !std::isfinite(v(i))) throw ConfigError(key, "entries must be non-negative");
}

}  // namespace

void validate(const FjrParams& p) {
  const int n = p.n_links();
  if (n != 1 && n != 2) throw ConfigError("robot.link_masses", "only 1 or 2 links are supported");
  require_positive(p.link_masses, n, "link_masses");
  require_positive(p.link_inertias, n, "link_inertias");
  require_positive(p.link_lengths, n, "link_lengths");
  require_positive(p.link_com, n, "link_com");
  require_positive(p.motor_masses, n, "motor_masses");
  require_nonnegative(p.link_damping, n, "link_damping");
  require_nonnegative(p.motor_damping, n, "motor_damping");
  if (p.stiffness.rows() != n || p.stiffness.cols() != n)
    throw ConfigError("robot.stiffness", "must be " + std::to_string(n) + "x" + std::to_string(n));
  if (!is_spd(p.stiffness)) throw ConfigError("robot.stiffness", "must be symmetric positive definite");
  if (!std::isfinite(p.gravity)) throw ConfigError("robot.gravity", "must be finite");
}

FjrModel::FjrModel(FjrParams params) : params_(std::move(params)) {
  validate(params_);
  n_ = params_.n_links();
  const auto& m = params_.link_masses;
  const auto& in = params_.link_inertias;
  const auto& l = params_.link_lengths;
  const auto& r = params_.link_com;
  if (n_ == 1) {
    a1_ = m(0) * r(0) * r(0) + in(0);
  } else {
    a1_ = m(0) * r(0) * r(0) + m(1) * l(0) * l(0) + in(0);
    a2_ = m(1) * r(1) * r(1) + in(1);
    b_ = m(1) * l(0) * r(1);
    if (!(a1_ * a2_ > b_ * b_)) throw ModelDefect("link inertia not positive definite");
  }
  k_inv_ = solve<double>(params_.stiffness, MatX(MatX::Identity(n_, n_)));
}

double FjrModel::link_gravity_potential(const VecX& q_l) const {
  if (!params_.gravity_enabled) return 0.0;
  const double g = params_.gravity;
  const auto& m = params_.link_masses;
  const auto& r = params_.link_com;
  if (n_ == 1) return g * m(0) * r(0) * std::sin(q_l(0));
  return g * (m(0) * r(0) * std::sin(q_l(0)) +
              m(1) * (params_.link_lengths(0) * std::sin(q_l(0)) + r(1) * std::sin(q_l(0) + q_l(1))));
}

MatX FjrModel::link_gravity_hessian(const VecX& q_l) const {
  MatX h = MatX::Zero(n_, n_);
  if (!params_.gravity_enabled) return h;
  const double g = params_.gravity;
  const auto& m = params_.link_masses;
  const auto& r = params_.link_com;
  if (n_ == 1) {
    h(0, 0) = -g * m(0) * r(0) * std::sin(q_l(0));
    return h;
  }
  const double s1 = std::sin(q_l(0));
  const double s12 = std::sin(q_l(0) + q_l(1));
  h(0, 0) = -g * (m(0) * r(0) * s1 + m(1) * (params_.link_lengths(0) * s1 + r(1) * s12));
  h(0, 1) = -g * m(1) * r(1) * s12;
  h(1, 0) = h(0, 1);
  h(1, 1) = h(0, 1);
  return h;
}

double FjrModel::potential(const VecX& q) const {
  require_size(q.size(), 2 * n_, "potential q");
  const VecX zeta = q.tail(n_) - q.head(n_);
  return 0.5 * zeta.dot(params_.stiffness * zeta) + link_gravity_potential(q.head(n_));
}

MatX FjrModel::potential_hessian(const VecX& q) const {
  require_size(q.size(), 2 * n_, "potential_hessian q");
  const MatX& k = params_.stiffness;
  MatX h(2 * n_, 2 * n_);
  h << k, -k, -k, k;
  h.topLeftCorner(n_, n_) += link_gravity_hessian(q.head(n_));
  return h;
}

FjrModel build_fjr_model(const FjrParams& params) { return FjrModel(params); }

VecX spring_deflection(const State& s) { return s.q_m() - s.q_l(); }

}  // namespace vcbc
