// Fixed-step closed-loop simulation, logging and run metrics.
#pragma once

#include "vcbc/contraction.hpp"
#include "vcbc/controller.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace vcbc::sim {

using Rhs = std::function<VecX(double t, const VecX& x)>;

/// One classical Runge-Kutta step.
VecX rk4_step(const Rhs& f, double t, const VecX& x, double dt);

struct Trajectory {
  std::vector<double> t;
  std::vector<VecX> x;
};

/// Fixed-step RK4 from t0, recording every `stride`-th state (and the last).
/// Throws SimulationAbort carrying the last valid time on a non-finite value.
Trajectory integrate_rk4(const Rhs& f, const VecX& x0, double t0, double dt, long steps,
                         int stride = 1);

struct SimConfig {
  double t0 = 0.0;
  double t_end = 20.0;
  double dt = 1e-4;
  State initial_state;
  std::optional<State> initial_virtual_state;
  int log_stride = 10;
  control::OmegaFn omega;
  double noise_std = 0.0;  // rad and momentum units, added to the controller's measurement
  std::uint64_t seed = 0;

  long steps() const;
  void validate() const;
};

struct LogSample {
  double t = 0.0;
  VecX q, p, q_ld, q_md;
  control::ErrorCoords err;
  VecX u;
  double hamiltonian = 0.0;
  double storage = 0.0;  // W
  double supplied = 0.0;
  double dissipated = 0.0;
};

struct TrajectoryLog {
  int n_links = 0;
  std::vector<LogSample> samples;
  std::vector<State> virtual_states;  // pair runs only, aligned with samples
  double energy_supplied = 0.0;       // integral of u'y over the run
  double energy_dissipated = 0.0;     // integral of qdot' D qdot
  bool aborted = false;
  double last_valid_time = 0.0;
  std::string abort_message;

  static std::vector<std::string> header(int n_links);
  std::vector<double> row(std::size_t i) const;
  void write_csv(std::ostream& os) const;
};

struct Summary {
  double rms_final_quarter = 0.0;  // rad
  double rms_final_second = 0.0;   // rad
  double peak_u = 0.0;             // N m
  double overshoot = 0.0;          // rad
  double fitted_rate = 0.0;        // 1/s, NaN when not fitted
  long fit_samples = 0;
  bool bounded = false;
  double max_abs_state = 0.0;
};

/// Actual robot under u_m(x, t).
TrajectoryLog run_closed_loop(const FjrModel& model, const control::ControllerSpec& spec,
                              const control::Reference& ref, const SimConfig& cfg);

/// Actual robot plus the virtual system anchored to it, integrated as one
/// system. The W column is the storage of the error difference between the two.
TrajectoryLog run_virtual_pair(const FjrModel& model, const control::ControllerSpec& spec,
                               const control::Reference& ref, const SimConfig& cfg);

Summary summarize(const TrajectoryLog& log);

/// Least-squares decay rate of log|qtil_l| from the first sample to the first
/// crossing of 1 % of the initial error. NaN with fewer than `min_samples`.
double fit_decay_rate(const TrajectoryLog& log, long* used = nullptr, long min_samples = 50);

std::string format_summary(const Summary& s);

}  // namespace vcbc::sim
