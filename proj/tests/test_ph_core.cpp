#include "vcbc/fjr_model.hpp"
#include "vcbc/linalg.hpp"
#include "vcbc/ph_core.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace vcbc;

namespace {

State random_state(std::mt19937_64& rng, int n_links) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  State s(VecX(2 * n_links), VecX(2 * n_links), n_links);
  for (Index i = 0; i < s.q.size(); ++i) s.q(i) = u(rng);
  for (Index i = 0; i < s.p.size(); ++i) s.p(i) = 0.2 * u(rng);
  return s;
}

}  // namespace

TEST(PhCore, QuadraticModelIsLinear) {
  const MatX m = (MatX(2, 2) << 2.0, 0.5, 0.5, 1.0).finished();
  const MatX d = (MatX(2, 2) << 0.3, 0.0, 0.0, 0.7).finished();
  const MatX k = (MatX(2, 2) << 4.0, -1.0, -1.0, 2.0).finished();
  const QuadraticModel model(m, d, k, 1);
  const State s((VecX(2) << 0.1, -0.4).finished(), (VecX(2) << 0.3, 0.2).finished(), 1);
  const VecX u = (VecX(1) << 1.5).finished();
  const StateRate r = dynamics(model, s, u);
  const VecX qdot = m.inverse() * s.p;
  EXPECT_LT((r.dq - qdot).norm(), 1e-14);
  const VecX expected = -k * s.q - d * qdot + model.input_map() * u;
  EXPECT_LT((r.dp - expected).norm(), 1e-14);
  EXPECT_NEAR(hamiltonian(model, s), 0.5 * s.p.dot(qdot) + 0.5 * s.q.dot(k * s.q), 1e-15);
}

TEST(PhCore, InputMapActuatesMotors) {
  const FjrModel model(quanser_params());
  const MatX b = model.input_map();
  ASSERT_EQ(b.rows(), 4);
  ASSERT_EQ(b.cols(), 2);
  EXPECT_EQ(b.topRows(2), MatX::Zero(2, 2));
  EXPECT_EQ(b.bottomRows(2), MatX::Identity(2, 2));
}

TEST(PhCore, CoriolisStructureIsExactlyAntisymmetric) {
  const FjrModel model(quanser_params());
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const State s = random_state(rng, 2);
    const MatX sh = coriolis_structure(model, s.q, velocity(model, s));
    EXPECT_EQ(sh + sh.transpose(), MatX::Zero(4, 4));
  }
}

TEST(PhCore, WorklessForcesDoNoWork) {
  const FjrModel model(quanser_params());
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const State s = random_state(rng, 2);
    const VecX qdot = velocity(model, s);
    const MatX e = workless_matrix(model, s);
    const MatX mdot = inertia_rate<double>(model.inertia_partials(s.q), qdot);
    // E + E' = -Mdot, hence qdot' E qdot = -1/2 qdot' Mdot qdot.
    EXPECT_LT((e + e.transpose() + mdot).norm(), 1e-14);
  }
}

TEST(PhCore, StandardAndWorklessFormsAgree) {
  const FjrModel model(quanser_params());
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uu(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const State s = random_state(rng, 2);
    const VecX u = (VecX(2) << uu(rng), uu(rng)).finished();
    const StateRate a = dynamics(model, s, u);
    const StateRate b = dynamics_standard(model, s, u);
    EXPECT_LT((a.dq - b.dq).norm(), 1e-12);
    EXPECT_LT((a.dp - b.dp).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(PhCore, PowerBalanceAlongTheFlow) {
  FjrParams params = quanser_params();
  params.gravity_enabled = true;
  const FjrModel model(params);
  std::mt19937_64 rng(14);
  const double h = 1e-6;
  for (int i = 0; i < 50; ++i) {
    const State s = random_state(rng, 2);
    const VecX u = (VecX(2) << 0.7, -1.1).finished();
    const StateRate r = dynamics(model, s, u);
    const State fwd(s.q + h * r.dq, s.p + h * r.dp, 2);
    const State bwd(s.q - h * r.dq, s.p - h * r.dp, 2);
    const double hdot = (hamiltonian(model, fwd) - hamiltonian(model, bwd)) / (2 * h);
    const PowerBalance pb = power_balance(model, s, u);
    EXPECT_NEAR(hdot, pb.supplied - pb.dissipated, 1e-6 * (1.0 + std::abs(hdot)));
    EXPECT_GE(pb.dissipated, 0.0);
  }
}

TEST(PhCore, JetDynamicsMatchDouble) {
  const FjrModel model(quanser_params());
  std::mt19937_64 rng(15);
  const State s = random_state(rng, 2);
  const VecX u = (VecX(2) << 0.2, 0.1).finished();
  const StateRate r = dynamics(model, s, u);
  Vec<Jet> dq, dp;
  dynamics<Jet>(model, to_jet_vector<Jet>(s.q), to_jet_vector<Jet>(s.p), to_jet_vector<Jet>(u), dq, dp);
  EXPECT_LT((values(dq) - r.dq).norm(), 1e-14);
  EXPECT_LT((values(dp) - r.dp).norm(), 1e-12);
}

TEST(PhCore, RejectsWrongSizes) {
  const FjrModel model(quanser_params());
  const State bad(VecX::Zero(3), VecX::Zero(4), 2);
  EXPECT_THROW(hamiltonian(model, bad), DimensionError);
  const State ok(VecX::Zero(4), VecX::Zero(4), 2);
  EXPECT_THROW(dynamics(model, ok, VecX::Zero(3)), DimensionError);
}
