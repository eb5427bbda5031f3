#include "vcbc/controller.hpp"
#include "vcbc/vsys.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace vcbc;
using namespace vcbc::control;

namespace {

const PhiKind kKinds[] = {PhiKind::PHI1_SATURATED, PhiKind::PHI2_LINEAR, PhiKind::PHI3_MU1};

State random_state(std::mt19937_64& rng, double q_scale = 1.5, double p_scale = 0.3) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  State s(VecX(4), VecX(4), 2);
  for (int i = 0; i < 4; ++i) s.q(i) = q_scale * u(rng);
  for (int i = 0; i < 4; ++i) s.p(i) = p_scale * u(rng);
  return s;
}

// Closed-loop error dynamics written out from the controller definition, with
// every model quantity taken at the anchor x.
ErrorCoords predicted_rates(const FjrModel& model, const ControllerSpec& spec, const State& x,
                            const ErrorCoords& e, const VecX& omega) {
  const MatX m_l = model.link_inertia<double>(VecX(x.q.head(2)));
  const MatX m_l_inv = m_l.inverse();
  const MatX m_m_inv = model.motor_inertia().inverse();
  const MatX ew = workless_matrix(model, x);
  const MatX k = model.stiffness();
  VecX qtil(4);
  qtil << e.qtil_l, e.qtil_m;
  const VecX ph = phi(spec, qtil);
  // phi blocks are decoupled across link and motor for every kind used here.
  ErrorCoords r;
  r.qtil_l = m_l_inv * e.sigma_l - ph.head(2);
  r.qtil_m = m_m_inv * e.sigma_m - ph.tail(2) - spec.lambda_m.inverse() * k * m_l_inv * e.sigma_l;
  r.sigma_l = -spec.lambda_l * e.qtil_l + k * e.qtil_m -
              (ew.topLeftCorner(2, 2) + model.link_damping() + spec.kd_l) * m_l_inv * e.sigma_l +
              omega.head(2);
  r.sigma_m = -spec.lambda_m * e.qtil_m -
              (ew.bottomRightCorner(2, 2) + model.motor_damping() + spec.kd_m) * m_m_inv * e.sigma_m +
              omega.tail(2);
  return r;
}

void expect_close(const ErrorCoords& a, const ErrorCoords& b, double tol) {
  EXPECT_LT((a.stacked() - b.stacked()).lpNorm<Eigen::Infinity>(), tol)
      << "got " << a.stacked().transpose() << "\nwant " << b.stacked().transpose();
}

}  // namespace

TEST(Controller, ParsesKindsAndModes) {
  for (PhiKind k : kKinds) EXPECT_EQ(parse_phi_kind(to_string(k)), k);
  EXPECT_EQ(parse_derivative_mode("FILTERED_NUMERIC"), DerivativeMode::FILTERED_NUMERIC);
  try {
    parse_phi_kind("PHI9");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "controller.phi_kind");
  }
}

TEST(Controller, ValidationRejectsSingularMetric) {
  ControllerSpec s = quanser_gains(PhiKind::PHI2_LINEAR);
  s.lambda_l(1, 1) = 0.0;
  try {
    s.validate(2);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "controller.lambda_l");
  }
  ControllerSpec p3 = quanser_gains(PhiKind::PHI3_MU1);
  p3.kappa.resize(0);
  EXPECT_THROW(p3.validate(2), ConfigError);
  EXPECT_NO_THROW(quanser_gains(PhiKind::PHI3_MU1).validate(2));
}

TEST(Controller, ReferenceDerivatives) {
  Reference r = Reference::sine(2);
  r.amplitude(1) = 0.5;
  r.frequency(1) = 2.0;
  r.phase(1) = 0.3;
  const double t = 0.8;
  EXPECT_NEAR(r.position(t)(1), 0.5 * std::sin(1.6 + 0.3), 1e-15);
  EXPECT_NEAR(r.velocity(t)(1), 1.0 * std::cos(1.6 + 0.3), 1e-15);
  EXPECT_NEAR(r.derivative(2, t)(1), -2.0 * std::sin(1.6 + 0.3), 1e-15);
  EXPECT_NEAR(r.derivative(4, t)(0), std::sin(t), 1e-15);
  const Vec<Jet> j = r.jet(1, t);
  EXPECT_NEAR(j(1).derivative_value(2), r.derivative(3, t)(1), 1e-14);
}

TEST(Controller, PhiJacobianMatchesDifferences) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (PhiKind k : kKinds) {
    const ControllerSpec s = quanser_gains(k);
    const VecX q = (VecX(4) << u(rng), u(rng), u(rng), u(rng)).finished();
    const MatX j = phi_jacobian(s, q);
    const double h = 1e-6;
    for (int c = 0; c < 4; ++c) {
      VecX a = q, b = q;
      a(c) += h;
      b(c) -= h;
      EXPECT_LT((j.col(c) - (phi(s, a) - phi(s, b)) / (2 * h)).norm(), 1e-6);
    }
    EXPECT_LT(phi(s, VecX(VecX::Zero(4))).norm(), 1e-15);
  }
}

TEST(Controller, PhiThreeBlockForm) {
  const ControllerSpec s = quanser_gains(PhiKind::PHI3_MU1);
  const VecX q = (VecX(4) << 0.2, -0.4, 0.1, 0.3).finished();
  const VecX r = phi(s, q);
  const double t1 = std::sqrt(55.0), t2 = std::sqrt(30.0);
  EXPECT_NEAR(r(0), 11.0 * 0.2 + (t2 / t1) * std::tanh(-0.4), 1e-14);
  EXPECT_NEAR(r(1), (t1 / t2) * std::tanh(0.2) + 9.0 * -0.4, 1e-14);
}

TEST(Controller, ManifoldStateHasZeroErrorAndZeroRate) {
  const FjrModel model(quanser_params());
  const Reference ref = Reference::sine(2);
  for (PhiKind k : kKinds) {
    const ControllerSpec spec = quanser_gains(k);
    for (double t : {0.0, 0.7, 2.9}) {
      const State xd = desired_state(model, spec, ref, t);
      const ErrorCoords e = error_coords(model, spec, ref, xd, xd, t);
      EXPECT_LT(e.stacked().lpNorm<Eigen::Infinity>(), 1e-12) << to_string(k) << " t=" << t;
      const ErrorCoords r = error_rates(model, spec, ref, xd, xd, t);
      EXPECT_LT(r.stacked().lpNorm<Eigen::Infinity>(), 1e-10) << to_string(k) << " t=" << t;
    }
  }
}

TEST(Controller, ErrorRatesFollowClosedLoopForm) {
  const FjrModel model(quanser_params());
  const Reference ref = Reference::sine(2);
  std::mt19937_64 rng(42);
  for (PhiKind k : kKinds) {
    const ControllerSpec spec = quanser_gains(k);
    for (int i = 0; i < 20; ++i) {
      const State x = random_state(rng);
      const double t = 0.1 * i;
      const ErrorCoords e = error_coords(model, spec, ref, x, x, t);
      const ErrorCoords r = error_rates(model, spec, ref, x, x, t);
      expect_close(r, predicted_rates(model, spec, x, e, VecX::Zero(4)), 1e-8 * (1 + e.stacked().norm()));
    }
  }
}

TEST(Controller, VirtualErrorRatesFollowClosedLoopForm) {
  const FjrModel model(quanser_params());
  const Reference ref = Reference::sine(2);
  std::mt19937_64 rng(43);
  for (PhiKind k : kKinds) {
    const ControllerSpec spec = quanser_gains(k);
    for (int i = 0; i < 10; ++i) {
      const State x = random_state(rng);
      const State xv = random_state(rng);
      const double t = 0.3 * i;
      const ErrorCoords e = error_coords(model, spec, ref, xv, x, t);
      const ErrorCoords r = error_rates(model, spec, ref, xv, x, t);
      expect_close(r, predicted_rates(model, spec, x, e, VecX::Zero(4)), 1e-8 * (1 + e.stacked().norm()));
    }
  }
}

TEST(Controller, ErrorRatesMatchDifferencesAlongTheFlow) {
  const FjrModel model(quanser_params());
  const Reference ref = Reference::sine(2);
  std::mt19937_64 rng(44);
  const double h = 1e-6;
  for (PhiKind k : kKinds) {
    const ControllerSpec spec = quanser_gains(k);
    const State x = random_state(rng, 1.0, 0.05);
    const double t = 0.5;
    const StateRate f = dynamics(model, x, tracking_controller(model, spec, ref, x, t));
    const State fwd(x.q + h * f.dq, x.p + h * f.dp, 2);
    const State bwd(x.q - h * f.dq, x.p - h * f.dp, 2);
    const VecX fd = (error_coords(model, spec, ref, fwd, fwd, t + h).stacked() -
                     error_coords(model, spec, ref, bwd, bwd, t - h).stacked()) /
                    (2 * h);
    const VecX r = error_rates(model, spec, ref, x, x, t).stacked();
    EXPECT_LT((fd - r).lpNorm<Eigen::Infinity>(), 1e-4 * (1 + r.lpNorm<Eigen::Infinity>()))
        << to_string(k) << "\n" << fd.transpose() << "\n" << r.transpose();
  }
}

TEST(Controller, OmegaShiftsMomentumErrorRates) {
  const FjrModel model(quanser_params());
  const Reference ref = Reference::sine(2);
  const ControllerSpec spec = quanser_gains(PhiKind::PHI2_LINEAR);
  std::mt19937_64 rng(45);
  const State x = random_state(rng);
  const OmegaFn omega = [](const Jet& t) {
    Vec<Jet> w(4);
    w << sin(t), Jet(0.5), 2.0 * t, Jet(-1.0);
    return w;
  };
  const double t = 0.4;
  const ErrorCoords e = error_coords(model, spec, ref, x, x, t, omega);
  const ErrorCoords r = error_rates(model, spec, ref, x, x, t, omega);
  const VecX w = (VecX(4) << std::sin(t), 0.5, 2.0 * t, -1.0).finished();
  expect_close(r, predicted_rates(model, spec, x, e, w), 1e-8 * (1 + e.stacked().norm()));
}

TEST(Controller, DiagonalVirtualFlowReproducesActualFlow) {
  const FjrModel model(quanser_params());
  const Reference ref = Reference::sine(2);
  const ControllerSpec spec = quanser_gains(PhiKind::PHI3_MU1);
  std::mt19937_64 rng(46);
  const State x = random_state(rng);
  const VecX u = tracking_controller(model, spec, ref, x, 1.0);
  const VecX u_v = motor_control(model, spec, ref, x, x, 1.0);
  EXPECT_EQ(u, u_v);
  const StateRate a = dynamics(model, x, u);
  const StateRate v = virtual_dynamics(model, VirtualState{x, x}, u_v);
  EXPECT_EQ(a.dq, v.dq);
  EXPECT_EQ(a.dp, v.dp);
}

TEST(Controller, FilteredStartsAtExactAndConverges) {
  const FjrModel model(quanser_params());
  const Reference ref = Reference::sine(2);
  ControllerSpec spec = quanser_gains(PhiKind::PHI2_LINEAR);
  spec.derivative_mode = DerivativeMode::FILTERED_NUMERIC;
  std::mt19937_64 rng(47);
  const State x = random_state(rng);
  DifferentiatorState filt;
  const ControllerTerms f = evaluate_filtered(model, spec, ref, x, x, 0.2, filt);
  const ControllerTerms e = evaluate(model, spec, ref, x, x, 0.2);
  EXPECT_TRUE(filt.initialized);
  EXPECT_LT((f.u_mv - e.u_mv).lpNorm<Eigen::Infinity>(), 1e-8 * (1 + e.u_mv.norm()));
  EXPECT_LT((f.dp_lr - e.dp_lr).norm(), 1e-10 * (1 + e.dp_lr.norm()));
}

TEST(Controller, FilterAdvanceIsExactFirstOrderLag) {
  DifferentiatorState filt;
  filt.z_plr = VecX::Zero(1);
  filt.z_qmd = VecX::Zero(1);
  filt.z_pmr = VecX::Zero(1);
  filt.initialized = true;
  ControllerTerms t;
  t.p_lr = VecX::Ones(1);
  t.q_md = VecX::Constant(1, 2.0);
  t.p_mr = VecX::Constant(1, -1.0);
  const double tau = 0.01;
  for (int i = 0; i < 10; ++i) advance(filt, t, 1e-3, tau);
  const double g = 1.0 - std::exp(-0.01 / tau);
  EXPECT_NEAR(filt.z_plr(0), g, 1e-14);
  EXPECT_NEAR(filt.z_qmd(0), 2.0 * g, 1e-14);
  EXPECT_NEAR(filt.z_pmr(0), -g, 1e-14);
}

TEST(Controller, RestStateHasUnloadedSprings) {
  const FjrModel model(quanser_params());
  const Reference ref = Reference::sine(2);
  const State s = rest_state(model, ref, 1.0, VecX::Constant(2, 0.3));
  EXPECT_NEAR(s.q(0), std::sin(1.0) + 0.3, 1e-15);
  EXPECT_EQ(s.q.head(2), s.q.tail(2));
  EXPECT_EQ(s.p, VecX::Zero(4));
}

TEST(Controller, DimensionMismatchThrows) {
  const FjrModel model(quanser_params());
  const Reference ref = Reference::sine(3);
  const ControllerSpec spec = quanser_gains(PhiKind::PHI2_LINEAR);
  const State x(VecX::Zero(4), VecX::Zero(4), 2);
  EXPECT_THROW(evaluate(model, spec, ref, x, x, 0.0), DimensionError);
}
