#include "vcbc/sim.hpp"

#include "vcbc/vsys.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace vcbc::sim {

using control::ControllerTerms;
using control::DerivativeMode;

VecX rk4_step(const Rhs& f, double t, const VecX& x, double dt) {
  const VecX k1 = f(t, x);
  const VecX k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1);
  const VecX k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2);
  const VecX k4 = f(t + dt, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate_rk4(const Rhs& f, const VecX& x0, double t0, double dt, long steps,
                         int stride) {
  if (!(dt > 0.0)) throw ConfigError("sim.dt", "must be positive");
  if (stride < 1) throw ConfigError("sim.log_stride", "must be >= 1");
  if (!x0.allFinite()) throw SimulationAbort("non-finite initial state", t0);
  Trajectory tr;
  VecX x = x0;
  tr.t.push_back(t0);
  tr.x.push_back(x);
  for (long k = 0; k < steps; ++k) {
    const double t = t0 + k * dt;
    const VecX next = rk4_step(f, t, x, dt);
    if (!next.allFinite()) throw SimulationAbort("non-finite state or derivative", t);
    x = next;
    if ((k + 1) % stride == 0 || k + 1 == steps) {
      tr.t.push_back(t0 + (k + 1) * dt);
      tr.x.push_back(x);
    }
  }
  return tr;
}

long SimConfig::steps() const { return std::lround((t_end - t0) / dt); }

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim.dt", "must be positive");
  if (!(t_end - t0 >= dt)) throw ConfigError("sim.t_end", "must be at least one step past t0");
  if (log_stride < 1) throw ConfigError("sim.log_stride", "must be >= 1");
  if (!(noise_std >= 0.0)) throw ConfigError("sim.noise_std", "must be non-negative");
  if (!initial_state.finite()) throw ConfigError("sim.initial", "initial state must be finite");
  if (initial_virtual_state && !initial_virtual_state->finite())
    throw ConfigError("sim.virtual_offset", "virtual initial state must be finite");
}

namespace {

struct PlantRate {
  VecX rate;  // (dq, dp, supplied power, dissipated power)
};

// Augmented plant: state, then the two energy accumulators.
VecX plant_rate(const FjrModel& model, const VecX& z, const VecX& u) {
  const int n = model.dof();
  const VecX q = z.segment(0, n);
  const VecX p = z.segment(n, n);
  VecX dq, dp;
  dynamics<double>(model, q, p, u, dq, dp);
  VecX r(2 * n + 2);
  r << dq, dp, u.dot(dq.tail(model.motor_dof())), dq.dot(model.damping(q, p) * dq);
  return r;
}

State state_of(const VecX& z, int n_links, Index offset = 0) {
  const Index n = 2 * n_links;
  return State(z.segment(offset, n), z.segment(offset + n, n), n_links);
}

LogSample make_sample(const FjrModel& model, const control::ControllerSpec& spec,
                      const control::Reference& ref, double t, const State& s,
                      const ControllerTerms& terms, const VecX& u) {
  LogSample ls;
  ls.t = t;
  ls.q = s.q;
  ls.p = s.p;
  ls.q_ld = ref.position(t);
  ls.q_md = terms.q_md;
  ls.err = terms.err;
  ls.u = u;
  ls.hamiltonian = hamiltonian(model, s);
  const PowerBalance pb = power_balance(model, s, u);
  ls.supplied = pb.supplied;
  ls.dissipated = pb.dissipated;
  ls.storage = contraction::differential_storage(model, spec, s, terms.err.stacked());
  return ls;
}

void check_run(const FjrModel& model, const control::ControllerSpec& spec,
               const control::Reference& ref, const SimConfig& cfg) {
  cfg.validate();
  spec.validate(model.link_dof());
  ref.validate();
  check_state(model, cfg.initial_state);
  require_size(ref.n_links(), model.link_dof(), "reference");
}

}  // namespace

TrajectoryLog run_closed_loop(const FjrModel& model, const control::ControllerSpec& spec,
                              const control::Reference& ref, const SimConfig& cfg) {
  check_run(model, spec, ref, cfg);
  const int nl = model.link_dof();
  const int n = model.dof();
  const bool filtered = spec.derivative_mode == DerivativeMode::FILTERED_NUMERIC;
  const bool noisy = cfg.noise_std > 0.0;
  // With a filter or noisy measurements the control is sampled once per step
  // and held; otherwise it is re-evaluated at every stage.
  const bool held = filtered || noisy;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, cfg.noise_std > 0.0 ? cfg.noise_std : 1.0);
  control::DifferentiatorState filt;

  TrajectoryLog log;
  log.n_links = nl;
  VecX z(2 * n + 2);
  z << cfg.initial_state.q, cfg.initial_state.p, 0.0, 0.0;
  const long steps = cfg.steps();

  auto control_at = [&](double t, const VecX& zz) {
    return control::tracking_controller(model, spec, ref, state_of(zz, nl), t, cfg.omega);
  };

  for (long k = 0;; ++k) {
    const double t = cfg.t0 + k * cfg.dt;
    const State s = state_of(z, nl);
    State meas = s;
    if (noisy) {
      for (Index i = 0; i < n; ++i) meas.q(i) += noise(rng);
      for (Index i = 0; i < n; ++i) meas.p(i) += noise(rng);
    }
    ControllerTerms terms;
    try {
      terms = filtered ? control::evaluate_filtered(model, spec, ref, meas, meas, t, filt, cfg.omega)
                       : control::evaluate(model, spec, ref, meas, meas, t, cfg.omega);
    } catch (const ModelDefect& e) {
      log.aborted = true;
      log.abort_message = e.what();
      log.last_valid_time = t;
      break;
    }
    const VecX u = terms.u_mv;
    if (!u.allFinite()) {
      log.aborted = true;
      log.abort_message = "controller produced a non-finite torque";
      log.last_valid_time = t;
      break;
    }
    if (k % cfg.log_stride == 0 || k == steps) {
      terms.err.qtil_l = s.q_l() - ref.position(t);  // true error, not the measured one
      log.samples.push_back(make_sample(model, spec, ref, t, s, terms, u));
    }
    log.last_valid_time = t;
    if (k == steps) break;

    VecX next;
    try {
      if (held) {
        next = rk4_step([&](double, const VecX& zz) { return plant_rate(model, zz, u); }, t, z,
                        cfg.dt);
        if (filtered) control::advance(filt, terms, cfg.dt, spec.filter_tau);
      } else {
        const double h = cfg.dt;
        const VecX k1 = plant_rate(model, z, u);
        const VecX z2 = z + 0.5 * h * k1;
        const VecX k2 = plant_rate(model, z2, control_at(t + 0.5 * h, z2));
        const VecX z3 = z + 0.5 * h * k2;
        const VecX k3 = plant_rate(model, z3, control_at(t + 0.5 * h, z3));
        const VecX z4 = z + h * k3;
        const VecX k4 = plant_rate(model, z4, control_at(t + h, z4));
        next = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
    } catch (const ModelDefect& e) {
      log.aborted = true;
      log.abort_message = e.what();
      break;
    }
    if (!next.allFinite()) {
      log.aborted = true;
      log.abort_message = "non-finite state";
      break;
    }
    z = next;
  }
  log.energy_supplied = z(2 * n);
  log.energy_dissipated = z(2 * n + 1);
  return log;
}

TrajectoryLog run_virtual_pair(const FjrModel& model, const control::ControllerSpec& spec,
                               const control::Reference& ref, const SimConfig& cfg) {
  check_run(model, spec, ref, cfg);
  if (!cfg.initial_virtual_state)
    throw ConfigError("sim.virtual_offset", "a virtual initial state is required");
  check_state(model, *cfg.initial_virtual_state);
  if (spec.derivative_mode != DerivativeMode::MODEL_EXACT || cfg.noise_std > 0.0)
    throw Unsupported("virtual pair runs need MODEL_EXACT derivatives and no noise");
  const int nl = model.link_dof();
  const int n = model.dof();

  // Combined state: actual (q, p), virtual (q_v, p_v), energy accumulators.
  auto rhs = [&](double t, const VecX& z, VecX* u_out) {
    const State x = state_of(z, nl, 0);
    const State xv = state_of(z, nl, 2 * n);
    const VecX u = control::tracking_controller(model, spec, ref, x, t, cfg.omega);
    const VecX uv = control::motor_control(model, spec, ref, xv, x, t, cfg.omega);
    VecX r(4 * n + 2);
    r.head(2 * n + 2) = plant_rate(model, (VecX(2 * n + 2) << x.q, x.p, 0.0, 0.0).finished(), u);
    const StateRate vr = virtual_dynamics(model, VirtualState{xv, x}, uv);
    r.segment(2 * n, n) = vr.dq;
    r.segment(3 * n, n) = vr.dp;
    r(4 * n) = r(2 * n);
    r(4 * n + 1) = r(2 * n + 1);
    if (u_out) *u_out = u;
    return r;
  };

  TrajectoryLog log;
  log.n_links = nl;
  VecX z(4 * n + 2);
  z << cfg.initial_state.q, cfg.initial_state.p, cfg.initial_virtual_state->q,
      cfg.initial_virtual_state->p, 0.0, 0.0;
  const long steps = cfg.steps();
  for (long k = 0;; ++k) {
    const double t = cfg.t0 + k * cfg.dt;
    VecX u;
    VecX k1;
    try {
      k1 = rhs(t, z, &u);
    } catch (const ModelDefect& e) {
      log.aborted = true;
      log.abort_message = e.what();
      break;
    }
    if (!k1.allFinite()) {
      log.aborted = true;
      log.abort_message = "non-finite derivative";
      break;
    }
    if (k % cfg.log_stride == 0 || k == steps) {
      const State x = state_of(z, nl, 0);
      const State xv = state_of(z, nl, 2 * n);
      const ControllerTerms terms = control::evaluate(model, spec, ref, x, x, t, cfg.omega);
      const control::ErrorCoords ev = control::error_coords(model, spec, ref, xv, x, t, cfg.omega);
      LogSample ls = make_sample(model, spec, ref, t, x, terms, u);
      ls.storage = contraction::differential_storage(model, spec, x,
                                                     ev.stacked() - terms.err.stacked());
      log.samples.push_back(ls);
      log.virtual_states.push_back(xv);
    }
    log.last_valid_time = t;
    if (k == steps) break;
    const double h = cfg.dt;
    const VecX k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1, nullptr);
    const VecX k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2, nullptr);
    const VecX k4 = rhs(t + h, z + h * k3, nullptr);
    const VecX next = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
      log.aborted = true;
      log.abort_message = "non-finite state";
      break;
    }
    z = next;
  }
  log.energy_supplied = z(4 * n);
  log.energy_dissipated = z(4 * n + 1);
  return log;
}

std::vector<std::string> TrajectoryLog::header(int nl) {
  std::vector<std::string> h{"t"};
  auto add = [&](const char* base) {
    for (int i = 1; i <= nl; ++i) h.push_back(std::string(base) + std::to_string(i));
  };
  add("q_l");
  add("q_m");
  add("p_l");
  add("p_m");
  add("q_ld");
  add("q_md");
  add("qtil_l");
  add("qtil_m");
  add("sigma_l");
  add("sigma_m");
  add("u");
  for (const char* c : {"H", "W", "P_supplied", "P_dissipated"}) h.emplace_back(c);
  return h;
}

std::vector<double> TrajectoryLog::row(std::size_t i) const {
  const LogSample& s = samples.at(i);
  std::vector<double> r{s.t};
  auto add = [&](const VecX& v) { r.insert(r.end(), v.data(), v.data() + v.size()); };
  add(s.q.head(n_links));
  add(s.q.tail(n_links));
  add(s.p.head(n_links));
  add(s.p.tail(n_links));
  add(s.q_ld);
  add(s.q_md);
  add(s.err.qtil_l);
  add(s.err.qtil_m);
  add(s.err.sigma_l);
  add(s.err.sigma_m);
  add(s.u);
  r.push_back(s.hamiltonian);
  r.push_back(s.storage);
  r.push_back(s.supplied);
  r.push_back(s.dissipated);
  return r;
}

void TrajectoryLog::write_csv(std::ostream& os) const {
  const auto h = header(n_links);
  for (std::size_t i = 0; i < h.size(); ++i) os << (i ? "," : "") << h[i];
  os << "\n";
  char buf[32];
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto r = row(k);
    for (std::size_t i = 0; i < r.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.15g", r[i]);
      os << (i ? "," : "") << buf;
    }
    os << "\n";
  }
}

double fit_decay_rate(const TrajectoryLog& log, long* used, long min_samples) {
  if (used) *used = 0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (log.samples.empty()) return nan;
  const double e0 = log.samples.front().err.qtil_l.norm();
  if (!(e0 > 0.0)) return nan;
  double st = 0, sy = 0, stt = 0, sty = 0;
  long m = 0;
  for (const auto& s : log.samples) {
    const double e = s.err.qtil_l.norm();
    if (!(e > 0.0)) break;
    const double y = std::log(e);
    st += s.t;
    sy += y;
    stt += s.t * s.t;
    sty += s.t * y;
    ++m;
    if (e <= 0.01 * e0) break;
  }
  if (used) *used = m;
  if (m < min_samples) return nan;
  const double den = m * stt - st * st;
  if (!(den > 0.0)) return nan;
  return -(m * sty - st * sy) / den;
}

Summary summarize(const TrajectoryLog& log) {
  Summary s;
  s.fitted_rate = fit_decay_rate(log, &s.fit_samples);
  if (log.samples.empty()) return s;
  const double t_first = log.samples.front().t;
  const double t_last = log.samples.back().t;
  const double t_quarter = t_first + 0.75 * (t_last - t_first);
  const double t_second = t_last - 1.0;
  double acc_q = 0, acc_s = 0;
  long n_q = 0, n_s = 0;
  bool finite = true;
  for (const auto& x : log.samples) {
    const double e2 = x.err.qtil_l.squaredNorm();
    if (x.t >= t_quarter) {
      acc_q += e2;
      ++n_q;
    }
    if (x.t >= t_second) {
      acc_s += e2;
      ++n_s;
    }
    s.peak_u = std::max(s.peak_u, x.u.lpNorm<Eigen::Infinity>());
    s.max_abs_state = std::max({s.max_abs_state, x.q.lpNorm<Eigen::Infinity>(),
                                x.p.lpNorm<Eigen::Infinity>()});
    finite = finite && x.q.allFinite() && x.p.allFinite() && x.u.allFinite();
  }
  s.rms_final_quarter = n_q ? std::sqrt(acc_q / n_q) : 0.0;
  s.rms_final_second = n_s ? std::sqrt(acc_s / n_s) : 0.0;
  s.bounded = finite && !log.aborted && s.max_abs_state < 1e6 && s.peak_u < 1e6;

  const Index nl = log.samples.front().err.qtil_l.size();
  for (Index i = 0; i < nl; ++i) {
    const double e0 = log.samples.front().err.qtil_l(i);
    bool crossed = false;
    for (const auto& x : log.samples) {
      const double e = x.err.qtil_l(i);
      if (!crossed && e0 != 0.0 && e * e0 < 0.0) crossed = true;
      if (crossed) s.overshoot = std::max(s.overshoot, std::abs(e));
    }
  }
  return s;
}

std::string format_summary(const Summary& s) {
  std::ostringstream os;
  os.precision(12);
  os << "rms_error_final_quarter " << s.rms_final_quarter << "\n";
  os << "rms_error_final_second  " << s.rms_final_second << "\n";
  os << "peak_abs_u              " << s.peak_u << "\n";
  os << "overshoot               " << s.overshoot << "\n";
  os << "fitted_rate             " << s.fitted_rate << " (" << s.fit_samples << " samples)\n";
  os << "bounded                 " << (s.bounded ? "yes" : "no") << "\n";
  os << "max_abs_state           " << s.max_abs_state << "\n";
  return os.str();
}

}  // namespace vcbc::sim
