// Sampled certificates for the contraction and passivity conditions of the
// closed loop, plus the differential storage and rate bookkeeping.
#pragma once

#include "vcbc/controller.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace vcbc::contraction {

using control::ControllerSpec;
using control::PhiKind;

struct CertificateReport {
  std::string condition_id;
  long sample_count = 0;
  double worst_margin = 0.0;  // <= 0 means satisfied
  VecX worst_point;
  bool pass = false;
  double beta_estimate = 0.0;  // 1/s
  // Extras; NaN when not applicable.
  double beta_tight = std::numeric_limits<double>::quiet_NaN();
  double failure_radius = std::numeric_limits<double>::quiet_NaN();
  std::string note;

  std::string verdict() const { return pass ? "pass" : "fail"; }
  std::string to_text() const;
  std::string to_row() const;  // condition_id,verdict,worst_margin,beta
  static std::string row_header();
};

/// Tensor grid on the box |qtil|_inf <= radius (odd point counts include 0).
struct Grid {
  double radius = M_PI;
  int points_per_dim = 13;
};

/// Largest beta such that
///   lambda_max(-Lambda phi' - phi'^T Lambda) + 2 beta lambda_max(Lambda) <= 0
/// at every grid sample, found by bisection. `beta_tight` holds the
/// largest beta for the matrix form -Lambda phi' - phi'^T Lambda + 2 beta Lambda <= 0.
CertificateReport check_metric_inequality(const ControllerSpec& spec, PhiKind kind,
                                          const Grid& grid = {});

/// Theta (-d phi / d qtil) Theta^-1 with Theta = diag(theta) (sqrt of diag Lambda
/// when theta is unset).
MatX generalized_jacobian(const ControllerSpec& spec, const VecX& qtil);

/// max_j (A_jj + sum_{i != j} |A_ij|)
double matrix_measure_mu1(const MatX& a);

/// mu_1(Jbar) <= -2 beta with 2 beta = min(kappa). Requires PHI3_MU1.
CertificateReport check_mu1_contraction(const ControllerSpec& spec, const Grid& grid = {});

struct ClosedLoopStructure {
  MatX pi, xi, upsilon, psi;
  MatX pi_dot;
  MatX margin_matrix;  // Pi' - Pi (Upsilon + Upsilon^T) Pi
  double margin = 0.0;  // its largest eigenvalue
};

/// Block matrices of the closed-loop variational system in error coordinates
/// (qtil_l, qtil_m, sigma_l, sigma_m), anchored at x.
ClosedLoopStructure closed_loop_structure(const FjrModel& model, const ControllerSpec& spec,
                                          const State& x, const VecX& xtil);

/// W = 1/2 delta' blockdiag(Lambda_l, Lambda_m, M_l^-1, M_m^-1) delta.
double differential_storage(const FjrModel& model, const ControllerSpec& spec, const State& x,
                            const VecX& delta);
double link_storage(const FjrModel& model, const ControllerSpec& spec, const State& x,
                    const VecX& delta);
double motor_storage(const FjrModel& model, const ControllerSpec& spec, const State& x,
                     const VecX& delta);

struct PairSampling {
  int pairs = 2000;
  double radius = 10.0;
  std::uint64_t seed = 1;
};

/// Strict monotonicity of chi = Lambda phi per block against 2 beta Lambda.
/// beta is certified first (metric inequality, or mu_1 for PHI3_MU1).
CertificateReport check_incremental_passivity(const ControllerSpec& spec, PhiKind kind,
                                              const PairSampling& sampling = {},
                                              const Grid& grid = {});

struct StateBox {
  double q_radius = M_PI;
  double p_radius = 1.0;
  int samples = 2000;
  std::uint64_t seed = 7;
};

struct RateEstimate {
  double beta = 0.0;
  double beta_qtil = 0.0;
  double lambda_min_damping = 0.0;          // min lambda_min(D + K_d)
  double lambda_min_inverse_inertia = 0.0;  // min lambda_min(M^-1)
};

/// beta = 2 min{beta_qtil, lambda_min(D + K_d) lambda_min(M^-1)}, both
/// eigenvalue minima taken over the sampled box. Throws if `certificate` failed.
RateEstimate convergence_rate(const FjrModel& model, const ControllerSpec& spec,
                              const StateBox& box, const CertificateReport& certificate);

/// The certificate appropriate to the controller's phi kind.
CertificateReport certify_qtil(const ControllerSpec& spec, const Grid& grid = {});

}  // namespace vcbc::contraction
