#include "vcbc/controller.hpp"

#include "vcbc/vsys.hpp"

#include <cmath>

namespace vcbc::control {

namespace {

std::string key(const char* field) { return std::string("controller.") + field; }

void require_spd(const MatX& m, int n, const char* field) {
  if (m.rows() != n || m.cols() != n)
    throw ConfigError(key(field), "must be " + std::to_string(n) + "x" + std::to_string(n));
  if (!is_spd(m)) throw ConfigError(key(field), "must be symmetric positive definite");
}

template <typename T>
Vec<T> vec_derivative(const Vec<T>& v) {
  Vec<T> r(v.size());
  for (Index i = 0; i < v.size(); ++i) r(i) = v(i).derivative();
  return r;
}

// Known value, unknown higher coefficients. The placeholders must stay finite:
// dense products multiply them by exact zeros (block-diagonal inertia and
// damping), and NaN * 0 would poison coefficients that are otherwise exact.
Vec<Jet> unknown_jet(const VecX& v) { return v.cast<Jet>(); }

Vec<Jet> unknown_jet(Index n) { return Vec<Jet>::Zero(n); }

template <typename T>
struct Chain {
  Vec<T> qtil_l, sigma_l, qtil_m, sigma_m;
  Vec<T> p_lr, dp_lr, u_lv, q_md, dq_md, vbar_mr, p_mr, dp_mr, u_mv;
};

// The controller chain from the link momentum reference to u_mv. `deriv(i, s)`
// returns the time derivative of signal i (0: p_lr, 1: q_md, 2: p_mr).
template <typename T, typename Deriv>
Chain<T> run_chain(const FjrModel& model, const ControllerSpec& spec, const Vec<T>& q,
                   const Vec<T>& p, const Vec<T>& q_v, const Vec<T>& p_v, const Vec<T>& q_ld,
                   const Vec<T>& dq_ld, const Vec<T>& omega, Deriv&& deriv) {
  const int n = model.link_dof();
  const Vec<T> q_l = q.head(n);
  const Vec<T> q_lv = q_v.head(n);
  const Vec<T> q_mv = q_v.tail(n);
  const Vec<T> p_lv = p_v.head(n);
  const Vec<T> p_mv = p_v.tail(n);

  const Mat<T> m_l = model.link_inertia<T>(q_l);
  const Mat<T> m_l_inv = solve<T>(m_l, Mat<T>(Mat<T>::Identity(n, n)));
  const MatX m_m = model.motor_inertia();
  const MatX m_m_inv = m_m.diagonal().cwiseInverse().asDiagonal();
  const Mat<T> e = workless_matrix<T>(model, q, p);
  const Mat<T> e_l = e.topLeftCorner(n, n);
  const Mat<T> e_m = e.bottomRightCorner(n, n);
  const MatX& k = model.stiffness();
  const MatX& k_inv = model.stiffness_inverse();

  Vec<T> qtil(2 * n);
  Chain<T> c;
  c.qtil_l = q_lv - q_ld;
  qtil.head(n) = c.qtil_l;
  qtil.tail(n).setZero();
  const Vec<T> phi_l = phi<T>(spec, qtil).head(n);
  c.p_lr = m_l * (dq_ld - phi_l);
  c.dp_lr = deriv(0, c.p_lr);
  c.sigma_l = p_lv - c.p_lr;
  c.u_lv = c.dp_lr + model.link_gravity_grad<T>(q_lv) +
           (e_l + model.link_damping().cast<T>()) * (m_l_inv * c.p_lr) -
           spec.lambda_l.cast<T>() * c.qtil_l - spec.kd_l.cast<T>() * (m_l_inv * c.sigma_l) +
           omega.head(n);
  c.q_md = q_lv + k_inv.cast<T>() * c.u_lv;
  c.dq_md = deriv(1, c.q_md);

  c.qtil_m = q_mv - c.q_md;
  qtil.head(n).setZero();
  qtil.tail(n) = c.qtil_m;
  const Vec<T> phi_m = phi<T>(spec, qtil).tail(n);
  const MatX lm_inv_kt = solve<double>(spec.lambda_m, k.transpose());
  c.vbar_mr = -(lm_inv_kt.cast<T>() * (m_l_inv.transpose() * c.sigma_l));
  c.p_mr = m_m.cast<T>() * (c.dq_md - phi_m + c.vbar_mr);
  c.dp_mr = deriv(2, c.p_mr);
  c.sigma_m = p_mv - c.p_mr;
  const Vec<T> zeta_v = q_mv - q_lv;
  c.u_mv = c.dp_mr + k.cast<T>() * zeta_v +
           (e_m + model.motor_damping().cast<T>()) * (m_m_inv.cast<T>() * c.p_mr) -
           spec.lambda_m.cast<T>() * c.qtil_m - spec.kd_m.cast<T>() * (m_m_inv.cast<T>() * c.sigma_m) +
           omega.tail(n);
  return c;
}

struct Jets {
  Vec<Jet> q, p, q_v, p_v;
};

// Taylor expansion of the actual and virtual flows. With the inputs unknown,
// coefficients valid on return: q_l to order 3, p_l to 2, q_m to 1, p_m to 0.
// That is exactly what the chain consumes.
Jets expand(const FjrModel& model, const State& x_v, const State& x, bool diagonal,
            const Vec<Jet>& u, const Vec<Jet>& u_v) {
  Jets j{unknown_jet(x.q), unknown_jet(x.p), unknown_jet(x_v.q), unknown_jet(x_v.p)};
  Vec<Jet> dq, dp, dq_v, dp_v;
  for (int k = 0; k < Jet::kOrder; ++k) {
    dynamics<Jet>(model, j.q, j.p, u, dq, dp);
    if (!diagonal) virtual_dynamics<Jet>(model, j.q_v, j.p_v, j.q, j.p, u_v, dq_v, dp_v);
    for (Index i = 0; i < dq.size(); ++i) {
      j.q(i)[k + 1] = dq(i)[k] / (k + 1);
      j.p(i)[k + 1] = dp(i)[k] / (k + 1);
      if (!diagonal) {
        j.q_v(i)[k + 1] = dq_v(i)[k] / (k + 1);
        j.p_v(i)[k + 1] = dp_v(i)[k] / (k + 1);
      }
    }
  }
  if (diagonal) {
    j.q_v = j.q;
    j.p_v = j.p;
  }
  return j;
}

Vec<Jet> omega_jet(const OmegaFn& omega, double t, int n) {
  if (!omega) return Vec<Jet>::Zero(2 * n);
  Vec<Jet> w = omega(Jet::variable(t));
  require_size(w.size(), 2 * n, "omega");
  return w;
}

Chain<Jet> exact_chain(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                       const Jets& j, double t, const OmegaFn& omega) {
  const int n = model.link_dof();
  auto deriv = [](int, const Vec<Jet>& s) { return vec_derivative(s); };
  return run_chain<Jet>(model, spec, j.q, j.p, j.q_v, j.p_v, ref.jet(0, t), ref.jet(1, t),
                        omega_jet(omega, t, n), deriv);
}

bool same_state(const State& a, const State& b) {
  return a.n_links == b.n_links && a.q == b.q && a.p == b.p;
}

void check_inputs(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                  const State& x_v, const State& x) {
  check_state(model, x);
  check_state(model, x_v);
  require_size(spec.n_links(), model.link_dof(), "controller gains");
  require_size(ref.n_links(), model.link_dof(), "reference");
}

ControllerTerms to_terms(const Chain<Jet>& c) {
  ControllerTerms t;
  t.err.qtil_l = values(c.qtil_l);
  t.err.sigma_l = values(c.sigma_l);
  t.err.qtil_m = values(c.qtil_m);
  t.err.sigma_m = values(c.sigma_m);
  t.p_lr = values(c.p_lr);
  t.dp_lr = values(c.dp_lr);
  t.u_lv = values(c.u_lv);
  t.q_md = values(c.q_md);
  t.dq_md = values(c.dq_md);
  t.vbar_mr = values(c.vbar_mr);
  t.p_mr = values(c.p_mr);
  t.dp_mr = values(c.dp_mr);
  t.u_mv = values(c.u_mv);
  return t;
}

}  // namespace

std::string to_string(PhiKind k) {
  switch (k) {
    case PhiKind::PHI1_SATURATED: return "PHI1_SATURATED";
    case PhiKind::PHI2_LINEAR: return "PHI2_LINEAR";
    case PhiKind::PHI3_MU1: return "PHI3_MU1";
  }
  return "?";
}

std::string to_string(DerivativeMode m) {
  return m == DerivativeMode::MODEL_EXACT ? "MODEL_EXACT" : "FILTERED_NUMERIC";
}

PhiKind parse_phi_kind(const std::string& s) {
  if (s == "PHI1_SATURATED") return PhiKind::PHI1_SATURATED;
  if (s == "PHI2_LINEAR") return PhiKind::PHI2_LINEAR;
  if (s == "PHI3_MU1") return PhiKind::PHI3_MU1;
  throw ConfigError(key("phi_kind"), "unknown value '" + s + "'");
}

DerivativeMode parse_derivative_mode(const std::string& s) {
  if (s == "MODEL_EXACT") return DerivativeMode::MODEL_EXACT;
  if (s == "FILTERED_NUMERIC") return DerivativeMode::FILTERED_NUMERIC;
  throw ConfigError(key("derivative_mode"), "unknown value '" + s + "'");
}

MatX ControllerSpec::lambda() const { return block_diag<double>(lambda_l, lambda_m); }
MatX ControllerSpec::kd() const { return block_diag<double>(kd_l, kd_m); }

void ControllerSpec::validate(int n) const {
  require_spd(lambda_l, n, "lambda_l");
  require_spd(lambda_m, n, "lambda_m");
  require_spd(kd_l, n, "kd_l");
  require_spd(kd_m, n, "kd_m");
  if (derivative_mode == DerivativeMode::FILTERED_NUMERIC &&
      !(filter_tau > 0.0 && std::isfinite(filter_tau)))
    throw ConfigError(key("filter_tau"), "must be positive");
  if (phi_kind != PhiKind::PHI3_MU1) return;
  if (kappa.size() != 2 * n)
    throw ConfigError(key("kappa"), "PHI3_MU1 needs " + std::to_string(2 * n) + " entries");
  if (theta.size() != 2 * n)
    throw ConfigError(key("theta"), "PHI3_MU1 needs " + std::to_string(2 * n) + " entries");
  for (Index i = 0; i < kappa.size(); ++i)
    if (!(kappa(i) > 0.0)) throw ConfigError(key("kappa"), "entries must be positive");
  const MatX lam = lambda();
  for (Index i = 0; i < theta.size(); ++i) {
    if (!(theta(i) > 0.0)) throw ConfigError(key("theta"), "entries must be positive");
    for (Index j = 0; j < lam.cols(); ++j)
      if (i != j && lam(i, j) != 0.0)
        throw ConfigError(key("theta"), "PHI3_MU1 needs diagonal lambda_l and lambda_m");
    const double sq = theta(i) * theta(i);
    if (std::abs(sq - lam(i, i)) > 1e-9 * std::max(1.0, lam(i, i)))
      throw ConfigError(key("theta"), "theta_i^2 must equal the matching diagonal entry of lambda");
  }
}

ControllerSpec quanser_gains(PhiKind kind) {
  ControllerSpec s;
  s.lambda_l = VecX((VecX(2) << 55.0, 30.0).finished()).asDiagonal();
  s.lambda_m = VecX((VecX(2) << 70.0, 60.0).finished()).asDiagonal();
  s.kd_l = VecX((VecX(2) << 15.0, 10.0).finished()).asDiagonal();
  s.kd_m = VecX((VecX(2) << 10.0, 5.0).finished()).asDiagonal();
  s.phi_kind = kind;
  if (kind == PhiKind::PHI3_MU1) {
    s.kappa = (VecX(4) << 10.0, 8.0, 10.0, 8.0).finished();
    s.theta = s.lambda().diagonal().cwiseSqrt();
  }
  return s;
}

Reference Reference::sine(int n) {
  Reference r;
  r.amplitude = VecX::Ones(n);
  r.frequency = VecX::Ones(n);
  r.phase = VecX::Zero(n);
  r.offset = VecX::Zero(n);
  return r;
}

void Reference::validate() const {
  const Index n = amplitude.size();
  if (frequency.size() != n) throw ConfigError("reference.frequency", "size differs from amplitude");
  if (phase.size() != n) throw ConfigError("reference.phase", "size differs from amplitude");
  if (offset.size() != n) throw ConfigError("reference.offset", "size differs from amplitude");
  if (!amplitude.allFinite()) throw ConfigError("reference.amplitude", "must be finite");
  if (!frequency.allFinite()) throw ConfigError("reference.frequency", "must be finite");
  if (!phase.allFinite()) throw ConfigError("reference.phase", "must be finite");
  if (!offset.allFinite()) throw ConfigError("reference.offset", "must be finite");
}

VecX Reference::derivative(int order, double t) const {
  VecX r(amplitude.size());
  for (Index i = 0; i < r.size(); ++i) {
    const double w = frequency(i);
    r(i) = amplitude(i) * std::pow(w, order) * std::sin(w * t + phase(i) + order * M_PI / 2.0);
    if (order == 0) r(i) += offset(i);
  }
  return r;
}

Vec<Jet> Reference::jet(int order, double t) const {
  std::array<VecX, Jet::kOrder + 1> d;
  for (int k = 0; k <= Jet::kOrder; ++k) d[k] = derivative(order + k, t);
  Vec<Jet> r(amplitude.size());
  for (Index i = 0; i < r.size(); ++i) {
    std::array<double, Jet::kOrder + 1> di;
    for (int k = 0; k <= Jet::kOrder; ++k) di[k] = d[k](i);
    r(i) = Jet::from_derivatives(di);
  }
  return r;
}

template <typename T>
Vec<T> phi(const ControllerSpec& spec, const Vec<T>& qtil) {
  const int n = spec.n_links();
  require_size(qtil.size(), 2 * n, "phi argument");
  switch (spec.phi_kind) {
    case PhiKind::PHI2_LINEAR:
      return spec.lambda().cast<T>() * qtil;
    case PhiKind::PHI1_SATURATED: {
      Vec<T> th(qtil.size());
      for (Index i = 0; i < qtil.size(); ++i) th(i) = tanh(qtil(i));
      return spec.lambda().cast<T>() * th;
    }
    case PhiKind::PHI3_MU1: {
      if (spec.kappa.size() != 2 * n || spec.theta.size() != 2 * n)
        throw ConfigError(key("kappa"), "PHI3_MU1 selected without kappa/theta");
      Vec<T> r(qtil.size());
      for (int blk = 0; blk < 2; ++blk) {
        const int o = blk * n;
        if (n == 1) {
          r(o) = (1.0 + spec.kappa(o)) * qtil(o);
          continue;
        }
        const double ta = spec.theta(o), tb = spec.theta(o + 1);
        r(o) = (1.0 + spec.kappa(o)) * qtil(o) + (tb / ta) * tanh(qtil(o + 1));
        r(o + 1) = (ta / tb) * tanh(qtil(o)) + (1.0 + spec.kappa(o + 1)) * qtil(o + 1);
      }
      return r;
    }
  }
  throw Unsupported("phi: unknown kind");
}

template Vec<double> phi<double>(const ControllerSpec&, const Vec<double>&);
template Vec<Jet> phi<Jet>(const ControllerSpec&, const Vec<Jet>&);

VecX phi(const ControllerSpec& spec, const VecX& qtil) { return phi<double>(spec, qtil); }

MatX phi_jacobian(const ControllerSpec& spec, const VecX& qtil) {
  const int n = spec.n_links();
  require_size(qtil.size(), 2 * n, "phi argument");
  auto sech2 = [](double x) {
    const double c = std::cosh(x);
    return 1.0 / (c * c);
  };
  switch (spec.phi_kind) {
    case PhiKind::PHI2_LINEAR:
      return spec.lambda();
    case PhiKind::PHI1_SATURATED: {
      VecX s(qtil.size());
      for (Index i = 0; i < s.size(); ++i) s(i) = sech2(qtil(i));
      return spec.lambda() * s.asDiagonal();
    }
    case PhiKind::PHI3_MU1: {
      if (spec.kappa.size() != 2 * n || spec.theta.size() != 2 * n)
        throw ConfigError(key("kappa"), "PHI3_MU1 selected without kappa/theta");
      MatX j = MatX::Zero(2 * n, 2 * n);
      for (int blk = 0; blk < 2; ++blk) {
        const int o = blk * n;
        for (int i = 0; i < n; ++i) j(o + i, o + i) = 1.0 + spec.kappa(o + i);
        if (n == 2) {
          const double ta = spec.theta(o), tb = spec.theta(o + 1);
          j(o, o + 1) = (tb / ta) * sech2(qtil(o + 1));
          j(o + 1, o) = (ta / tb) * sech2(qtil(o));
        }
      }
      return j;
    }
  }
  throw Unsupported("phi_jacobian: unknown kind");
}

VecX ErrorCoords::stacked() const {
  VecX r(qtil_l.size() + qtil_m.size() + sigma_l.size() + sigma_m.size());
  r << qtil_l, qtil_m, sigma_l, sigma_m;
  return r;
}

ControllerTerms evaluate(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                         const State& x_v, const State& x, double t, const OmegaFn& omega) {
  check_inputs(model, spec, ref, x_v, x);
  const bool diagonal = same_state(x_v, x);
  const Index m = model.motor_dof();
  const Jets j = expand(model, x_v, x, diagonal, unknown_jet(m), unknown_jet(m));
  return to_terms(exact_chain(model, spec, ref, j, t, omega));
}

LinkMomentumRef link_momentum_ref(const FjrModel& model, const ControllerSpec& spec,
                                  const Reference& ref, const State& x_v, const State& x,
                                  double t) {
  const ControllerTerms c = evaluate(model, spec, ref, x_v, x, t);
  return {c.p_lr, c.dp_lr};
}

LinkControl link_control(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                         const State& x_v, const State& x, double t, const OmegaFn& omega) {
  const ControllerTerms c = evaluate(model, spec, ref, x_v, x, t, omega);
  return {c.u_lv, c.q_md, c.dq_md};
}

VecX motor_control(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                   const State& x_v, const State& x, double t, const OmegaFn& omega) {
  return evaluate(model, spec, ref, x_v, x, t, omega).u_mv;
}

VecX tracking_controller(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                         const State& x, double t, const OmegaFn& omega) {
  return motor_control(model, spec, ref, x, x, t, omega);
}

ErrorCoords error_coords(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                         const State& x_v, const State& x, double t, const OmegaFn& omega) {
  return evaluate(model, spec, ref, x_v, x, t, omega).err;
}

ErrorCoords error_rates(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                        const State& x_v, const State& x, double t, const OmegaFn& omega) {
  check_inputs(model, spec, ref, x_v, x);
  const bool diagonal = same_state(x_v, x);
  const VecX u = evaluate(model, spec, ref, x, x, t, omega).u_mv;
  const VecX u_v = diagonal ? u : evaluate(model, spec, ref, x_v, x, t, omega).u_mv;
  const Jets j = expand(model, x_v, x, diagonal, unknown_jet(u), unknown_jet(u_v));
  const Chain<Jet> c = exact_chain(model, spec, ref, j, t, omega);
  auto rate = [](const Vec<Jet>& v) {
    VecX r(v.size());
    for (Index i = 0; i < v.size(); ++i) r(i) = v(i)[1];
    return r;
  };
  return {rate(c.qtil_l), rate(c.sigma_l), rate(c.qtil_m), rate(c.sigma_m)};
}

ControllerTerms evaluate_filtered(const FjrModel& model, const ControllerSpec& spec,
                                  const Reference& ref, const State& x_v, const State& x, double t,
                                  DifferentiatorState& filt, const OmegaFn& omega) {
  check_inputs(model, spec, ref, x_v, x);
  const double tau = spec.filter_tau;
  if (!filt.initialized) {
    const ControllerTerms exact = evaluate(model, spec, ref, x_v, x, t, omega);
    filt.z_plr = exact.p_lr - tau * exact.dp_lr;
    filt.z_qmd = exact.q_md - tau * exact.dq_md;
    filt.z_pmr = exact.p_mr - tau * exact.dp_mr;
    filt.initialized = true;
  }
  const int n = model.link_dof();
  VecX w = VecX::Zero(2 * n);
  if (omega) w = values(omega_jet(omega, t, n));
  auto deriv = [&](int which, const VecX& s) -> VecX {
    const VecX& z = which == 0 ? filt.z_plr : which == 1 ? filt.z_qmd : filt.z_pmr;
    return (s - z) / tau;
  };
  const Chain<double> c = run_chain<double>(model, spec, x.q, x.p, x_v.q, x_v.p, ref.position(t),
                                            ref.velocity(t), w, deriv);
  ControllerTerms r;
  r.err = {c.qtil_l, c.sigma_l, c.qtil_m, c.sigma_m};
  r.p_lr = c.p_lr;
  r.dp_lr = c.dp_lr;
  r.u_lv = c.u_lv;
  r.q_md = c.q_md;
  r.dq_md = c.dq_md;
  r.vbar_mr = c.vbar_mr;
  r.p_mr = c.p_mr;
  r.dp_mr = c.dp_mr;
  r.u_mv = c.u_mv;
  return r;
}

void advance(DifferentiatorState& filt, const ControllerTerms& terms, double dt, double tau) {
  const double a = std::exp(-dt / tau);
  filt.z_plr = terms.p_lr + (filt.z_plr - terms.p_lr) * a;
  filt.z_qmd = terms.q_md + (filt.z_qmd - terms.q_md) * a;
  filt.z_pmr = terms.p_mr + (filt.z_pmr - terms.p_mr) * a;
}

State desired_state(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                    double t) {
  const int n = model.link_dof();
  require_size(ref.n_links(), n, "reference");
  // On the manifold the link flow is the reference itself, so the link jets
  // are known exactly; motor jets only enter through terms that vanish here.
  const Vec<Jet> q_l = ref.jet(0, t);
  const Vec<Jet> dq_l = ref.jet(1, t);
  const Vec<Jet> p_l = model.link_inertia<Jet>(q_l) * dq_l;
  // First pass with placeholder motor jets gives q_md; the links' chain does
  // not read the motor state, so q_md and q_md' are exact.
  Vec<Jet> q(2 * n), p(2 * n);
  q.head(n) = q_l;
  p.head(n) = p_l;
  q.tail(n) = unknown_jet(n);
  p.tail(n) = unknown_jet(n);
  auto deriv = [](int, const Vec<Jet>& s) { return vec_derivative(s); };
  const Chain<Jet> c = run_chain<Jet>(model, spec, q, p, q, p, q_l, dq_l, Vec<Jet>::Zero(2 * n), deriv);
  State s;
  s.n_links = n;
  s.q.resize(2 * n);
  s.p.resize(2 * n);
  s.q.head(n) = values(q_l);
  s.p.head(n) = values(p_l);
  s.q.tail(n) = values(c.q_md);
  s.p.tail(n) = model.motor_inertia() * values(c.dq_md);
  return s;
}

State rest_state(const FjrModel& model, const Reference& ref, double t, const VecX& link_offset) {
  const int n = model.link_dof();
  require_size(link_offset.size(), n, "link offset");
  State s;
  s.n_links = n;
  s.q.resize(2 * n);
  s.q.head(n) = ref.position(t) + link_offset;
  s.q.tail(n) = s.q.head(n);
  s.p = VecX::Zero(2 * n);
  return s;
}

}  // namespace vcbc::control
