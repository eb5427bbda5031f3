// Virtual-contraction-based tracking controller for flexible-joint robots.
//
// The law is evaluated on a virtual state x_v anchored to the actual state x.
// Link stage: a momentum reference and a link torque u_lv, realized through
// the springs by the motor position reference q_md = q_lv + K^-1 u_lv. Motor
// stage: a motor momentum reference and the motor torque u_mv. The actual
// robot is driven by u_m(x, t) = u_mv(x, x, t).
#pragma once

#include "vcbc/fjr_model.hpp"
#include "vcbc/taylor.hpp"

#include <functional>
#include <string>

namespace vcbc::control {

enum class PhiKind { PHI1_SATURATED, PHI2_LINEAR, PHI3_MU1 };
enum class DerivativeMode { MODEL_EXACT, FILTERED_NUMERIC };

std::string to_string(PhiKind k);
std::string to_string(DerivativeMode m);
PhiKind parse_phi_kind(const std::string& s);
DerivativeMode parse_derivative_mode(const std::string& s);

struct ControllerSpec {
  MatX lambda_l;  // link position metric
  MatX lambda_m;  // motor position metric
  MatX kd_l;      // link momentum-error gain
  MatX kd_m;      // motor momentum-error gain
  PhiKind phi_kind = PhiKind::PHI2_LINEAR;
  VecX kappa;  // PHI3: link entries first, then motor entries
  VecX theta;  // PHI3: Lambda = diag(theta)^2
  DerivativeMode derivative_mode = DerivativeMode::MODEL_EXACT;
  double filter_tau = 0.01;

  int n_links() const { return static_cast<int>(lambda_l.rows()); }
  MatX lambda() const;
  MatX kd() const;

  /// Throws ConfigError keyed "controller.<field>".
  void validate(int n_links) const;
};

/// Gains used on the Quanser robot: Lambda_l = diag(55, 30), Lambda_m = diag(70, 60),
/// K_ld = diag(15, 10), K_md = diag(10, 5); PHI3 uses kappa = (10, 8, 10, 8).
ControllerSpec quanser_gains(PhiKind kind);

/// q_ld,i(t) = offset_i + amplitude_i sin(frequency_i t + phase_i), frequency in rad/s.
struct Reference {
  VecX amplitude;
  VecX frequency;
  VecX phase;
  VecX offset;

  static Reference sine(int n_links);  // sin(t) on every joint
  int n_links() const { return static_cast<int>(amplitude.size()); }
  VecX derivative(int order, double t) const;
  VecX position(double t) const { return derivative(0, t); }
  VecX velocity(double t) const { return derivative(1, t); }
  /// Series of the (order)-th derivative around t.
  Vec<Jet> jet(int order, double t) const;
  void validate() const;
};

/// External port signal (link entries first, then motor). Empty means zero.
using OmegaFn = std::function<Vec<Jet>(const Jet& t)>;

/// phi(qtil) for the full n-vector (links then motors).
template <typename T>
Vec<T> phi(const ControllerSpec& spec, const Vec<T>& qtil);
VecX phi(const ControllerSpec& spec, const VecX& qtil);

/// d phi / d qtil.
MatX phi_jacobian(const ControllerSpec& spec, const VecX& qtil);

struct ErrorCoords {
  VecX qtil_l, sigma_l, qtil_m, sigma_m;
  VecX stacked() const;  // (qtil_l, qtil_m, sigma_l, sigma_m)
};

/// Every intermediate signal of one controller evaluation.
struct ControllerTerms {
  ErrorCoords err;
  VecX p_lr, dp_lr;
  VecX u_lv, q_md, dq_md;
  VecX vbar_mr;
  VecX p_mr, dp_mr;
  VecX u_mv;
};

struct LinkMomentumRef {
  VecX p_lr, dp_lr;
};
struct LinkControl {
  VecX u_lv, q_md, dq_md;
};

/// Exact evaluation (MODEL_EXACT). Time derivatives of the references come
/// from Taylor propagation of the actual and virtual flows.
ControllerTerms evaluate(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                         const State& x_v, const State& x, double t, const OmegaFn& omega = {});

LinkMomentumRef link_momentum_ref(const FjrModel& model, const ControllerSpec& spec,
                                  const Reference& ref, const State& x_v, const State& x, double t);
LinkControl link_control(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                         const State& x_v, const State& x, double t, const OmegaFn& omega = {});
VecX motor_control(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                   const State& x_v, const State& x, double t, const OmegaFn& omega = {});
VecX tracking_controller(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                         const State& x, double t, const OmegaFn& omega = {});

/// Time derivative of the error coordinates of x_v when the virtual system is
/// driven by u_mv(x_v, x, t) and the actual robot by u_m(x, t).
ErrorCoords error_rates(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                        const State& x_v, const State& x, double t, const OmegaFn& omega = {});

/// Filter states of the three s/(tau s + 1) differentiators (p_lr, q_md, p_mr).
struct DifferentiatorState {
  VecX z_plr, z_qmd, z_pmr;
  bool initialized = false;
};

/// FILTERED_NUMERIC evaluation. An uninitialized filter is seeded so that its
/// first outputs equal the exact derivatives.
ControllerTerms evaluate_filtered(const FjrModel& model, const ControllerSpec& spec,
                                  const Reference& ref, const State& x_v, const State& x, double t,
                                  DifferentiatorState& filt, const OmegaFn& omega = {});

/// Exact discretization of z' = (s - z)/tau over dt with s held.
void advance(DifferentiatorState& filt, const ControllerTerms& terms, double dt, double tau);

/// State on the tracking manifold at time t: zero errors in every coordinate.
State desired_state(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                    double t);

/// Robot at rest with q_l = q_ld(t) + link_offset and unloaded springs.
State rest_state(const FjrModel& model, const Reference& ref, double t, const VecX& link_offset);

/// Error coordinates only (no derivatives needed beyond q_md').
ErrorCoords error_coords(const FjrModel& model, const ControllerSpec& spec, const Reference& ref,
                         const State& x_v, const State& x, double t, const OmegaFn& omega = {});

}  // namespace vcbc::control
