// simulate / verify / compare commands. Each takes explicit streams so the
// commands can be driven from tests; stdout receives only output paths.
#pragma once

#include "vcbc/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace vcbc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfigError = 2,
  kSimulationAbort = 3,
  kCertificateFailure = 4,
};

struct Options {
  std::string out;                   // output directory override
  std::optional<double> dt;          // overrides [sim] dt
  std::optional<std::uint64_t> seed; // randomized certificate sampling only
  std::string out_root;              // default root; empty means $VCBC_OUT or "."
};

int cmd_simulate(const std::string& config_path, const Options& opts, std::ostream& out,
                 std::ostream& err);
int cmd_verify(const std::string& config_path, const Options& opts, std::ostream& out,
               std::ostream& err);
int cmd_compare(const std::string& path_a, const std::string& path_b, const Options& opts,
                std::ostream& out, std::ostream& err);

/// --out, then [output] directory, then <root>/<stem>_<timestamp>.
std::string output_directory(const std::string& stem, const RunConfig* cfg, const Options& opts);

struct CompareRow {
  std::string run;
  sim::Summary summary;
};

/// Side-by-side metrics: rms error (final 25 %), final-second rms, overshoot,
/// peak |u| and fitted rate.
std::string metrics_table(const CompareRow& a, const CompareRow& b);

}  // namespace vcbc::cli
