// Run configuration: robot, controller, sim, reference and output sections.
//
// Units: masses kg, inertias kg m^2, lengths m, damping N m s/rad, stiffness
// N m/rad, times s, angles rad, reference frequency rad/s.
#pragma once

#include "vcbc/controller.hpp"
#include "vcbc/sim.hpp"
#include "vcbc/toml_lite.hpp"

#include <cstdint>
#include <string>

namespace vcbc {

struct SimSection {
  double t_end = 20.0;
  double dt = 1e-4;
  int log_stride = 10;
  std::string initial = "rest";  // "rest" or "reference"
  VecX link_offset;              // added to q_l(0); empty means zero
  VecX virtual_offset;           // added to the virtual q_l(0); empty means no pair run
  bool verify = false;           // attach certificates to the simulate report
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

struct OutputSection {
  std::string directory;  // empty: <config-stem>_<timestamp> under the output root
  std::string name = "run";
};

struct RunConfig {
  FjrParams robot;
  control::ControllerSpec controller;
  SimSection sim;
  control::Reference reference;
  OutputSection output;
};

/// Throws ConfigError naming the section or "section.key" at fault.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

toml::Document to_document(const RunConfig& cfg);
std::string serialize(const RunConfig& cfg);

/// Simulation settings with the initial (and optional virtual) state resolved.
sim::SimConfig make_sim_config(const FjrModel& model, const RunConfig& cfg);

}  // namespace vcbc
