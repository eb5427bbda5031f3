#include "vcbc/contraction.hpp"
#include "vcbc/linalg.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace vcbc;
using namespace vcbc::contraction;
using control::PhiKind;
using control::quanser_gains;

namespace {

State random_state(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  State s(VecX(4), VecX(4), 2);
  for (int i = 0; i < 4; ++i) s.q(i) = 1.5 * u(rng);
  for (int i = 0; i < 4; ++i) s.p(i) = 0.3 * u(rng);
  return s;
}

}  // namespace

TEST(Contraction, LinearMetricRateClosedForm) {
  const CertificateReport r = check_metric_inequality(quanser_gains(PhiKind::PHI2_LINEAR),
                                                      PhiKind::PHI2_LINEAR);
  EXPECT_TRUE(r.pass);
  // -2 Lambda^2 + 2 beta lambda_max(Lambda) <= 0  ->  beta = min(Lambda)^2 / max(Lambda).
  EXPECT_NEAR(r.beta_estimate, 900.0 / 70.0, 1e-6);
  // Matrix form -2 Lambda^2 + 2 beta Lambda <= 0  ->  beta = min(Lambda).
  EXPECT_NEAR(r.beta_tight, 30.0, 1e-6);
  EXPECT_LE(r.worst_margin, 0.0);
  EXPECT_EQ(r.sample_count, 13L * 13 * 13 * 13);
}

TEST(Contraction, SaturatedMetricRateClosedForm) {
  const CertificateReport r = check_metric_inequality(quanser_gains(PhiKind::PHI1_SATURATED),
                                                      PhiKind::PHI1_SATURATED);
  EXPECT_TRUE(r.pass);
  // The weakest slope of Lambda tanh is at the grid corner |qtil| = pi.
  const double sech2 = 1.0 / (std::cosh(M_PI) * std::cosh(M_PI));
  EXPECT_NEAR(r.beta_estimate, 900.0 * sech2 / 70.0, 1e-6);
}

TEST(Contraction, MatrixMeasureMu1) {
  MatX a(2, 2);
  a << -3.0, 1.0, -2.0, -1.0;
  // Columns: -3 + 2 = -1, -1 + 1 = 0.
  EXPECT_DOUBLE_EQ(matrix_measure_mu1(a), 0.0);
  EXPECT_DOUBLE_EQ(matrix_measure_mu1(-MatX::Identity(3, 3)), -1.0);
}

TEST(Contraction, GeneralizedJacobianAtOrigin) {
  const auto spec = quanser_gains(PhiKind::PHI3_MU1);
  const MatX j = generalized_jacobian(spec, VecX::Zero(4));
  EXPECT_NEAR(j(0, 0), -11.0, 1e-14);
  EXPECT_NEAR(j(1, 1), -9.0, 1e-14);
  EXPECT_NEAR(j(0, 1), -1.0, 1e-14);
  EXPECT_NEAR(j(1, 0), -1.0, 1e-14);
  EXPECT_NEAR(j(0, 2), 0.0, 1e-14);
  EXPECT_NEAR(matrix_measure_mu1(j), -8.0, 1e-14);
}

TEST(Contraction, Mu1CertifiesHalfMinKappa) {
  const auto spec = quanser_gains(PhiKind::PHI3_MU1);
  const CertificateReport r = check_mu1_contraction(spec, Grid{10.0, 11});
  EXPECT_TRUE(r.pass);
  EXPECT_DOUBLE_EQ(2.0 * r.beta_estimate, 8.0);
  EXPECT_LE(r.worst_margin, 0.0);
  EXPECT_THROW(check_mu1_contraction(quanser_gains(PhiKind::PHI2_LINEAR)), ConfigError);
}

TEST(Contraction, Mu1FailsWhenCouplingDominates) {
  auto spec = quanser_gains(PhiKind::PHI3_MU1);
  spec.kappa = (VecX(4) << 0.5, 0.5, 0.5, 0.5).finished();
  // Off-diagonal column sums reach theta ratios > 1, which beat the 0.5 margin.
  const CertificateReport r = check_mu1_contraction(spec);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.worst_margin, 0.0);
}

TEST(Contraction, ClosedLoopStructureReproducesErrorDynamics) {
  const FjrModel model(quanser_params());
  const auto spec = quanser_gains(PhiKind::PHI2_LINEAR);
  const auto ref = control::Reference::sine(2);
  std::mt19937_64 rng(51);
  for (int i = 0; i < 20; ++i) {
    const State x = random_state(rng);
    const double t = 0.2 * i;
    const VecX e = control::error_coords(model, spec, ref, x, x, t).stacked();
    const VecX r = control::error_rates(model, spec, ref, x, x, t).stacked();
    const ClosedLoopStructure cl = closed_loop_structure(model, spec, x, e);
    const VecX predicted = (cl.xi - cl.upsilon) * cl.pi * e;
    EXPECT_LT((predicted - r).lpNorm<Eigen::Infinity>(), 1e-8 * (1 + r.norm()));
    EXPECT_EQ(cl.psi.rows(), 8);
    EXPECT_EQ(cl.psi.bottomRows(4), MatX::Identity(4, 4));
    EXPECT_LT((cl.margin_matrix - cl.margin_matrix.transpose()).norm(), 1e-9);
    // Xi is skew up to the symmetric structure inside S_l, S_m.
    EXPECT_LT((cl.xi + cl.xi.transpose()).norm(), 1e-9);
  }
}

TEST(Contraction, StorageIsNonIncreasingForLinearPhi) {
  const FjrModel model(quanser_params());
  const auto spec = quanser_gains(PhiKind::PHI2_LINEAR);
  const auto ref = control::Reference::sine(2);
  std::mt19937_64 rng(52);
  for (int i = 0; i < 200; ++i) {
    const State x = random_state(rng);
    const double t = 0.05 * i;
    const VecX e = control::error_coords(model, spec, ref, x, x, t).stacked();
    const VecX r = control::error_rates(model, spec, ref, x, x, t).stacked();
    const ClosedLoopStructure cl = closed_loop_structure(model, spec, x, e);
    const double wdot = e.dot(cl.pi * r) + 0.5 * e.dot(cl.pi_dot * e);
    EXPECT_LE(wdot, 1e-9 * (1 + e.squaredNorm())) << i;
    const double w = differential_storage(model, spec, x, e);
    EXPECT_NEAR(w, 0.5 * e.dot(cl.pi * e), 1e-12 * w);
    EXPECT_NEAR(link_storage(model, spec, x, e) + motor_storage(model, spec, x, e), w, 1e-12 * w);
  }
}

TEST(Contraction, IncrementalPassivity) {
  const auto p2 = check_incremental_passivity(quanser_gains(PhiKind::PHI2_LINEAR),
                                              PhiKind::PHI2_LINEAR);
  EXPECT_TRUE(p2.pass);
  EXPECT_EQ(p2.sample_count, 4000);
  const auto p3 = check_incremental_passivity(quanser_gains(PhiKind::PHI3_MU1), PhiKind::PHI3_MU1);
  EXPECT_TRUE(p3.pass);
  // Saturation cannot keep a uniform slope on |qtil| <= 10.
  const auto p1 = check_incremental_passivity(quanser_gains(PhiKind::PHI1_SATURATED),
                                              PhiKind::PHI1_SATURATED);
  EXPECT_FALSE(p1.pass);
  EXPECT_TRUE(std::isfinite(p1.failure_radius));
  EXPECT_GT(p1.failure_radius, M_PI);
}

TEST(Contraction, IncrementalPassivityIsSeeded) {
  const auto spec = quanser_gains(PhiKind::PHI2_LINEAR);
  const auto a = check_incremental_passivity(spec, PhiKind::PHI2_LINEAR, PairSampling{500, 10.0, 9});
  const auto b = check_incremental_passivity(spec, PhiKind::PHI2_LINEAR, PairSampling{500, 10.0, 9});
  EXPECT_EQ(a.worst_margin, b.worst_margin);
  EXPECT_EQ(a.worst_point, b.worst_point);
}

TEST(Contraction, ConvergenceRateCombinesMetricAndDamping) {
  const FjrModel model(quanser_params());
  const auto spec = quanser_gains(PhiKind::PHI2_LINEAR);
  const auto cert = certify_qtil(spec);
  const RateEstimate r = convergence_rate(model, spec, {}, cert);
  EXPECT_NEAR(r.lambda_min_damping, 10.2, 1e-12);
  EXPECT_NEAR(r.lambda_min_inverse_inertia, 1.0 / 0.23, 1e-9);
  EXPECT_NEAR(r.beta, 2.0 * 900.0 / 70.0, 1e-5);
  const auto p3 = quanser_gains(PhiKind::PHI3_MU1);
  EXPECT_NEAR(convergence_rate(model, p3, {}, certify_qtil(p3)).beta, 8.0, 1e-12);
  CertificateReport failed = cert;
  failed.pass = false;
  EXPECT_THROW(convergence_rate(model, spec, {}, failed), Error);
}

TEST(Contraction, ReportRow) {
  CertificateReport r;
  r.condition_id = "x";
  r.pass = true;
  r.worst_margin = -0.5;
  r.beta_estimate = 2.0;
  EXPECT_EQ(CertificateReport::row_header(), "condition_id,verdict,worst_margin,beta");
  EXPECT_EQ(r.to_row(), "x,pass,-0.5,2");
}
