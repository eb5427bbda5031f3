#include "vcbc/contraction.hpp"

#include <algorithm>
#include <functional>
#include <iomanip>
#include <random>
#include <sstream>

namespace vcbc::contraction {

namespace {

// Calls f(point) for every node of the tensor grid.
void for_each_grid_point(int dim, const Grid& grid, const std::function<void(const VecX&)>& f) {
  if (grid.points_per_dim < 1) throw ConfigError("grid.points_per_dim", "must be >= 1");
  if (!(grid.radius >= 0.0)) throw ConfigError("grid.radius", "must be non-negative");
  const int m = grid.points_per_dim;
  VecX nodes(m);
  for (int i = 0; i < m; ++i)
    nodes(i) = m == 1 ? 0.0 : -grid.radius + 2.0 * grid.radius * i / (m - 1);
  std::vector<int> idx(dim, 0);
  VecX x(dim);
  while (true) {
    for (int d = 0; d < dim; ++d) x(d) = nodes(idx[d]);
    f(x);
    int d = 0;
    while (d < dim && ++idx[d] == m) idx[d++] = 0;
    if (d == dim) break;
  }
}

ControllerSpec with_kind(const ControllerSpec& spec, PhiKind kind) {
  ControllerSpec s = spec;
  s.phi_kind = kind;
  return s;
}

MatX theta_matrix(const ControllerSpec& spec) {
  const MatX lam = spec.lambda();
  if (spec.theta.size() == lam.rows()) return spec.theta.asDiagonal();
  if (!lam.isDiagonal(0.0)) throw Unsupported("generalized_jacobian: Lambda must be diagonal");
  return lam.diagonal().cwiseSqrt().asDiagonal();
}

// Largest beta in [0, inf) with max_s(a_s) + 2 beta scale <= 0, by bisection.
double bisect_beta(double worst, double scale) {
  auto g = [&](double beta) { return worst + 2.0 * beta * scale; };
  if (g(0.0) > 0.0) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (g(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > 1e-9 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) <= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

MatX inverse_spd(const MatX& a) { return solve<double>(a, MatX(MatX::Identity(a.rows(), a.cols()))); }

}  // namespace

std::string CertificateReport::row_header() { return "condition_id,verdict,worst_margin,beta"; }

std::string CertificateReport::to_row() const {
  return condition_id + "," + verdict() + "," + fmt(worst_margin) + "," + fmt(beta_estimate);
}

std::string CertificateReport::to_text() const {
  std::ostringstream os;
  os << "certificate " << condition_id << ": " << verdict() << "\n";
  os << "  samples        " << sample_count << "\n";
  os << "  worst margin   " << fmt(worst_margin) << "\n";
  os << "  worst point    [";
  for (Index i = 0; i < worst_point.size(); ++i) os << (i ? ", " : "") << fmt(worst_point(i));
  os << "]\n";
  os << "  beta           " << fmt(beta_estimate) << "\n";
  if (std::isfinite(beta_tight)) os << "  beta (matrix)  " << fmt(beta_tight) << "\n";
  if (std::isfinite(failure_radius)) os << "  failure radius " << fmt(failure_radius) << "\n";
  if (!note.empty()) os << "  note           " << note << "\n";
  return os.str();
}

CertificateReport check_metric_inequality(const ControllerSpec& spec_in, PhiKind kind,
                                          const Grid& grid) {
  const ControllerSpec spec = with_kind(spec_in, kind);
  const MatX lam = spec.lambda();
  const double lam_max = lambda_max(lam);
  const Eigen::SelfAdjointEigenSolver<MatX> es(lam);
  const MatX lam_inv_sqrt = es.operatorInverseSqrt();

  CertificateReport r;
  r.condition_id = "metric_inequality_" + control::to_string(kind);
  double worst = -std::numeric_limits<double>::infinity();
  double worst_tight = -std::numeric_limits<double>::infinity();
  for_each_grid_point(static_cast<int>(lam.rows()), grid, [&](const VecX& q) {
    const MatX jac = control::phi_jacobian(spec, q);
    const MatX a = -lam * jac - jac.transpose() * lam;
    const double top = lambda_max(a);
    if (top > worst) {
      worst = top;
      r.worst_point = q;
    }
    worst_tight = std::max(worst_tight, lambda_max(lam_inv_sqrt * a * lam_inv_sqrt));
    ++r.sample_count;
  });
  r.beta_estimate = bisect_beta(worst, lam_max);
  r.worst_margin = worst + 2.0 * r.beta_estimate * lam_max;
  r.pass = worst < 0.0 && r.worst_margin <= 0.0;
  r.beta_tight = std::max(0.0, -0.5 * worst_tight);
  return r;
}

MatX generalized_jacobian(const ControllerSpec& spec, const VecX& qtil) {
  const MatX theta = theta_matrix(spec);
  for (Index i = 0; i < theta.rows(); ++i)
    if (!(theta(i, i) > 0.0)) throw ConfigError("controller.theta", "entries must be positive");
  const MatX theta_inv = theta.diagonal().cwiseInverse().asDiagonal();
  return theta * (-control::phi_jacobian(spec, qtil)) * theta_inv;
}

double matrix_measure_mu1(const MatX& a) {
  require_size(a.rows(), a.cols(), "matrix_measure_mu1: square matrix");
  double best = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < a.cols(); ++j) {
    double s = a(j, j);
    for (Index i = 0; i < a.rows(); ++i)
      if (i != j) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return a.cols() == 0 ? 0.0 : best;
}

CertificateReport check_mu1_contraction(const ControllerSpec& spec, const Grid& grid) {
  if (spec.phi_kind != PhiKind::PHI3_MU1)
    throw ConfigError("controller.phi_kind", "the mu_1 certificate needs PHI3_MU1");
  spec.validate(spec.n_links());
  const double two_beta = spec.kappa.minCoeff();
  CertificateReport r;
  r.condition_id = "mu1_contraction";
  r.worst_margin = -std::numeric_limits<double>::infinity();
  for_each_grid_point(static_cast<int>(spec.kappa.size()), grid, [&](const VecX& q) {
    const double margin = matrix_measure_mu1(generalized_jacobian(spec, q)) + two_beta;
    if (margin > r.worst_margin) {
      r.worst_margin = margin;
      r.worst_point = q;
    }
    ++r.sample_count;
  });
  r.pass = r.worst_margin <= 0.0;
  r.beta_estimate = 0.5 * two_beta;
  r.note = "2 beta = min(kappa) = " + fmt(two_beta);
  return r;
}

ClosedLoopStructure closed_loop_structure(const FjrModel& model, const ControllerSpec& spec,
                                          const State& x, const VecX& xtil) {
  check_state(model, x);
  const int n = model.link_dof();
  require_size(xtil.size(), 4 * n, "closed_loop_structure xtil");
  const MatX m = model.inertia(x.q);
  const MatX m_inv = inverse_spd(m);
  const VecX qdot = m_inv * x.p;
  const auto partials = model.inertia_partials(x.q);
  const MatX s = coriolis_structure<double>(partials, qdot);
  const MatX m_dot = inertia_rate<double>(partials, qdot);
  const MatX& k = model.stiffness();
  const MatX lm_inv = inverse_spd(spec.lambda_m);
  const MatX lam = spec.lambda();
  const MatX lam_inv = inverse_spd(lam);
  const MatX id = MatX::Identity(n, n);
  const MatX zero = MatX::Zero(n, n);

  ClosedLoopStructure c;
  c.pi = block_diag({spec.lambda_l, spec.lambda_m, m_inv.topLeftCorner(n, n),
                     m_inv.bottomRightCorner(n, n)});

  c.xi = MatX::Zero(4 * n, 4 * n);
  c.xi.block(0, 2 * n, n, n) = id;
  c.xi.block(n, 2 * n, n, n) = -lm_inv * k.transpose();
  c.xi.block(n, 3 * n, n, n) = id;
  c.xi.block(2 * n, 0, n, n) = -id;
  c.xi.block(2 * n, n, n, n) = k * lm_inv;
  c.xi.block(2 * n, 2 * n, n, n) = -s.topLeftCorner(n, n);
  c.xi.block(3 * n, n, n, n) = -id;
  c.xi.block(3 * n, 3 * n, n, n) = -s.bottomRightCorner(n, n);

  const MatX jac = control::phi_jacobian(spec, xtil.head(2 * n));
  const MatX dk = model.damping(x.q, x.p) + spec.kd() - 0.5 * m_dot;
  c.upsilon = MatX::Zero(4 * n, 4 * n);
  c.upsilon.topLeftCorner(2 * n, 2 * n) = jac * lam_inv;
  c.upsilon.bottomRightCorner(2 * n, 2 * n) = dk;
  // Links and motors do not share inertia or gain blocks.
  c.upsilon.block(0, n, n, n).setZero();
  c.upsilon.block(n, 0, n, n).setZero();
  c.upsilon.block(2 * n, 3 * n, n, n).setZero();
  c.upsilon.block(3 * n, 2 * n, n, n).setZero();

  c.psi = MatX::Zero(4 * n, 2 * n);
  c.psi.bottomRows(2 * n).setIdentity();

  c.pi_dot = MatX::Zero(4 * n, 4 * n);
  c.pi_dot.bottomRightCorner(2 * n, 2 * n) = -m_inv * m_dot * m_inv;
  c.margin_matrix = c.pi_dot - c.pi * (c.upsilon + c.upsilon.transpose()) * c.pi;
  c.margin = lambda_max(c.margin_matrix);
  return c;
}

double differential_storage(const FjrModel& model, const ControllerSpec& spec, const State& x,
                            const VecX& delta) {
  return link_storage(model, spec, x, delta) + motor_storage(model, spec, x, delta);
}

double link_storage(const FjrModel& model, const ControllerSpec& spec, const State& x,
                    const VecX& delta) {
  check_state(model, x);
  const int n = model.link_dof();
  require_size(delta.size(), 4 * n, "storage delta");
  const MatX m_l = model.link_inertia<double>(x.q_l());
  const VecX dq = delta.segment(0, n);
  const VecX ds = delta.segment(2 * n, n);
  return 0.5 * (dq.dot(spec.lambda_l * dq) + ds.dot(solve<double>(m_l, ds)));
}

double motor_storage(const FjrModel& model, const ControllerSpec& spec, const State& x,
                     const VecX& delta) {
  check_state(model, x);
  const int n = model.link_dof();
  require_size(delta.size(), 4 * n, "storage delta");
  const VecX dq = delta.segment(n, n);
  const VecX ds = delta.segment(3 * n, n);
  const VecX mm = model.params().motor_masses;
  return 0.5 * (dq.dot(spec.lambda_m * dq) + ds.dot(ds.cwiseQuotient(mm)));
}

CertificateReport certify_qtil(const ControllerSpec& spec, const Grid& grid) {
  if (spec.phi_kind == PhiKind::PHI3_MU1) return check_mu1_contraction(spec, grid);
  return check_metric_inequality(spec, spec.phi_kind, grid);
}

CertificateReport check_incremental_passivity(const ControllerSpec& spec_in, PhiKind kind,
                                              const PairSampling& sampling, const Grid& grid) {
  const ControllerSpec spec = with_kind(spec_in, kind);
  const CertificateReport cert = certify_qtil(spec, grid);
  const double beta = cert.beta_estimate;
  const int n = spec.n_links();
  const MatX lam = spec.lambda();

  std::mt19937_64 rng(sampling.seed);
  std::uniform_real_distribution<double> uni(-sampling.radius, sampling.radius);
  CertificateReport r;
  r.condition_id = "incremental_passivity_" + control::to_string(kind);
  r.beta_estimate = beta;
  double worst_ratio = std::numeric_limits<double>::infinity();
  double fail_radius = std::numeric_limits<double>::infinity();
  for (int s = 0; s < sampling.pairs; ++s) {
    VecX a(2 * n), b(2 * n);
    for (int i = 0; i < 2 * n; ++i) a(i) = uni(rng);
    for (int i = 0; i < 2 * n; ++i) b(i) = uni(rng);
    const VecX chi_a = lam * control::phi(spec, a);
    const VecX chi_b = lam * control::phi(spec, b);
    const VecX d = b - a;
    for (int blk = 0; blk < 2; ++blk) {
      const VecX db = d.segment(blk * n, n);
      if (db.squaredNorm() == 0.0) continue;  // degenerate pair
      const MatX lb = lam.block(blk * n, blk * n, n, n);
      const double lhs = db.dot((chi_b - chi_a).segment(blk * n, n));
      const double rhs = 2.0 * beta * db.dot(lb * db);
      const double ratio = rhs > 0.0 ? lhs / rhs : (lhs >= 0.0 ? 1.0 : -1.0);
      ++r.sample_count;
      if (ratio < worst_ratio) {
        worst_ratio = ratio;
        r.worst_point.resize(4 * n);
        r.worst_point << a, b;
      }
      if (ratio < 1.0) {
        const double rad = std::max(a.segment(blk * n, n).lpNorm<Eigen::Infinity>(),
                                    b.segment(blk * n, n).lpNorm<Eigen::Infinity>());
        fail_radius = std::min(fail_radius, rad);
      }
    }
  }
  r.worst_margin = 1.0 - worst_ratio;
  r.pass = cert.pass && worst_ratio >= 1.0;
  if (std::isfinite(fail_radius)) r.failure_radius = fail_radius;
  r.note = "pairs in |qtil|_inf <= " + fmt(sampling.radius) + ", worst ratio " + fmt(worst_ratio);
  return r;
}

RateEstimate convergence_rate(const FjrModel& model, const ControllerSpec& spec,
                              const StateBox& box, const CertificateReport& certificate) {
  if (!certificate.pass)
    throw Error("convergence_rate: certificate '" + certificate.condition_id + "' did not pass");
  const int n = model.dof();
  std::mt19937_64 rng(box.seed);
  std::uniform_real_distribution<double> uq(-box.q_radius, box.q_radius);
  std::uniform_real_distribution<double> up(-box.p_radius, box.p_radius);
  const MatX kd = spec.kd();
  RateEstimate e;
  e.beta_qtil = certificate.beta_estimate;
  e.lambda_min_damping = std::numeric_limits<double>::infinity();
  e.lambda_min_inverse_inertia = std::numeric_limits<double>::infinity();
  for (int s = 0; s <= box.samples; ++s) {
    VecX q = VecX::Zero(n), p = VecX::Zero(n);
    if (s > 0) {  // sample 0 is the origin
      for (int i = 0; i < n; ++i) q(i) = uq(rng);
      for (int i = 0; i < n; ++i) p(i) = up(rng);
    }
    e.lambda_min_damping = std::min(e.lambda_min_damping, lambda_min(model.damping(q, p) + kd));
    e.lambda_min_inverse_inertia =
        std::min(e.lambda_min_inverse_inertia, 1.0 / lambda_max(model.inertia(q)));
  }
  e.beta = 2.0 * std::min(e.beta_qtil, e.lambda_min_damping * e.lambda_min_inverse_inertia);
  return e;
}

}  // namespace vcbc::contraction
