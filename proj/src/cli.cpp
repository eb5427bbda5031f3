#include "vcbc/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

namespace vcbc::cli {

namespace fs = std::filesystem;

namespace {

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

struct Loaded {
  RunConfig cfg;
  std::string stem;
};

Loaded load(const std::string& path, const Options& opts) {
  Loaded l{load_config(path), fs::path(path).stem().string()};
  if (opts.dt) {
    if (!(*opts.dt > 0.0)) throw ConfigError("--dt", "must be positive");
    l.cfg.sim.dt = *opts.dt;
  }
  return l;
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("output.directory", "cannot create " + dir + ": " + ec.message());
  return p;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path.string());
  f << content;
}

contraction::PairSampling sampling(const Options& opts) {
  contraction::PairSampling s;
  if (opts.seed) s.seed = *opts.seed;
  return s;
}

struct RunResult {
  sim::TrajectoryLog log;
  sim::Summary summary;
};

RunResult simulate(const RunConfig& cfg) {
  const FjrModel model(cfg.robot);
  const sim::SimConfig sc = make_sim_config(model, cfg);
  RunResult r;
  r.log = sc.initial_virtual_state ? sim::run_virtual_pair(model, cfg.controller, cfg.reference, sc)
                                   : sim::run_closed_loop(model, cfg.controller, cfg.reference, sc);
  r.summary = sim::summarize(r.log);
  return r;
}

std::string section_text(const RunConfig& cfg, const std::string& name) {
  const toml::Document doc = to_document(cfg);
  toml::Document one;
  one.add(name) = doc.at(name);
  return toml::to_string(one);
}

}  // namespace

std::string output_directory(const std::string& stem, const RunConfig* cfg, const Options& opts) {
  if (!opts.out.empty()) return opts.out;
  if (cfg && !cfg->output.directory.empty()) return cfg->output.directory;
  std::string root = opts.out_root;
  if (root.empty()) {
    const char* env = std::getenv("VCBC_OUT");
    root = env && *env ? env : ".";
  }
  const std::string base = (fs::path(root) / (stem + "_" + timestamp())).string();
  std::string dir = base;
  for (int i = 1; fs::exists(dir); ++i) dir = base + "-" + std::to_string(i);
  return dir;
}

int cmd_simulate(const std::string& config_path, const Options& opts, std::ostream& out,
                 std::ostream& err) {
  Loaded l;
  try {
    l = load(config_path, opts);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  const RunConfig& cfg = l.cfg;
  RunResult r;
  std::ostringstream report;
  report << "config " << config_path << "\n";
  report << "phi_kind " << control::to_string(cfg.controller.phi_kind) << "\n";
  report << "derivative_mode " << control::to_string(cfg.controller.derivative_mode) << "\n";
  report << "dt " << fmt(cfg.sim.dt) << "\n";
  try {
    r = simulate(cfg);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kSimulationAbort;
  }
  report << sim::format_summary(r.summary);
  report << "energy_supplied         " << fmt(r.log.energy_supplied) << "\n";
  report << "energy_dissipated       " << fmt(r.log.energy_dissipated) << "\n";
  if (cfg.sim.virtual_offset.size())
    report << "W column holds the storage of the virtual-minus-actual error\n";
  if (cfg.sim.verify) {
    const FjrModel model(cfg.robot);
    const contraction::CertificateReport cert = contraction::certify_qtil(cfg.controller);
    report << cert.to_text();
    if (cert.pass) {
      const contraction::RateEstimate rate =
          contraction::convergence_rate(model, cfg.controller, {}, cert);
      report << "certified_beta          " << fmt(rate.beta) << "\n";
      report << "fitted_over_certified   " << fmt(r.summary.fitted_rate / rate.beta) << "\n";
    }
  }
  if (r.log.aborted) {
    report << "aborted at t = " << fmt(r.log.last_valid_time) << ": " << r.log.abort_message
           << "\n";
  }
  fs::path dir;
  try {
    dir = prepare_dir(output_directory(l.stem, &cfg, opts));
    std::ofstream csv(dir / (cfg.output.name + ".csv"));
    r.log.write_csv(csv);
    write_file(dir / (cfg.output.name + ".report.txt"), report.str());
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  out << (dir / (cfg.output.name + ".csv")).string() << "\n";
  out << (dir / (cfg.output.name + ".report.txt")).string() << "\n";
  if (r.log.aborted) {
    err << "simulation aborted at t = " << fmt(r.log.last_valid_time) << ": "
        << r.log.abort_message << "\n";
    return kSimulationAbort;
  }
  return kOk;
}

int cmd_verify(const std::string& config_path, const Options& opts, std::ostream& out,
               std::ostream& err) {
  Loaded l;
  try {
    l = load(config_path, opts);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  const RunConfig& cfg = l.cfg;
  const control::ControllerSpec& spec = cfg.controller;
  std::vector<contraction::CertificateReport> reports;
  std::ostringstream text;
  try {
    if (spec.phi_kind == control::PhiKind::PHI3_MU1)
      reports.push_back(contraction::check_mu1_contraction(spec));
    else
      reports.push_back(contraction::check_metric_inequality(spec, spec.phi_kind));
    reports.push_back(contraction::check_incremental_passivity(spec, spec.phi_kind, sampling(opts)));
    for (const auto& r : reports) text << r.to_text();
    if (reports.front().pass) {
      const FjrModel model(cfg.robot);
      const auto rate = contraction::convergence_rate(model, spec, {}, reports.front());
      text << "certified_beta " << fmt(rate.beta) << " (beta_qtil " << fmt(rate.beta_qtil)
           << ", damping " << fmt(rate.lambda_min_damping) << ", inverse inertia "
           << fmt(rate.lambda_min_inverse_inertia) << ")\n";
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  fs::path dir;
  try {
    dir = prepare_dir(output_directory(l.stem, &cfg, opts));
    std::ostringstream rows;
    rows << contraction::CertificateReport::row_header() << "\n";
    for (const auto& r : reports) rows << r.to_row() << "\n";
    write_file(dir / (cfg.output.name + ".certificates.csv"), rows.str());
    write_file(dir / (cfg.output.name + ".verify.txt"), text.str());
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  out << (dir / (cfg.output.name + ".certificates.csv")).string() << "\n";
  out << (dir / (cfg.output.name + ".verify.txt")).string() << "\n";
  for (const auto& r : reports) {
    if (!r.pass) {
      err << "certificate " << r.condition_id << " failed (worst margin "
          << fmt(r.worst_margin) << ")\n";
      return kCertificateFailure;
    }
  }
  return kOk;
}

std::string metrics_table(const CompareRow& a, const CompareRow& b) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %18s %18s\n", "metric", a.run.c_str(), b.run.c_str());
  os << line;
  auto row = [&](const char* name, double x, double y) {
    std::snprintf(line, sizeof line, "%-24s %18.10g %18.10g\n", name, x, y);
    os << line;
  };
  row("rms_error_final_quarter", a.summary.rms_final_quarter, b.summary.rms_final_quarter);
  row("rms_error_final_second", a.summary.rms_final_second, b.summary.rms_final_second);
  row("overshoot", a.summary.overshoot, b.summary.overshoot);
  row("peak_abs_u", a.summary.peak_u, b.summary.peak_u);
  row("fitted_rate", a.summary.fitted_rate, b.summary.fitted_rate);
  return os.str();
}

int cmd_compare(const std::string& path_a, const std::string& path_b, const Options& opts,
                std::ostream& out, std::ostream& err) {
  Loaded a, b;
  try {
    a = load(path_a, opts);
    b = load(path_b, opts);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  for (const char* section : {"robot", "reference"}) {
    if (section_text(a.cfg, section) != section_text(b.cfg, section)) {
      err << "config error: [" << section << "] differs between " << path_a << " and " << path_b
          << "\n";
      return kConfigError;
    }
  }
  if (a.cfg.sim.dt != b.cfg.sim.dt)
    err << "warning: dt differs (" << fmt(a.cfg.sim.dt) << " vs " << fmt(b.cfg.sim.dt) << ")\n";

  RunResult ra, rb;
  try {
    auto fa = std::async(std::launch::async, [&] { return simulate(a.cfg); });
    auto fb = std::async(std::launch::async, [&] { return simulate(b.cfg); });
    ra = fa.get();
    rb = fb.get();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kSimulationAbort;
  }
  std::string name_a = a.stem, name_b = b.stem;
  if (name_a == name_b) {
    name_a += "_a";
    name_b += "_b";
  }
  const std::string table = metrics_table({name_a, ra.summary}, {name_b, rb.summary});
  fs::path dir;
  try {
    dir = prepare_dir(output_directory(a.stem + "_vs_" + b.stem, nullptr, opts));
    write_file(dir / "compare.txt", table);
    std::ofstream csv(dir / "compare.csv");
    const auto header = sim::TrajectoryLog::header(ra.log.n_links);
    csv << "run";
    for (const auto& h : header) csv << "," << h;
    csv << "\n";
    char buf[32];
    for (const auto* run : {&ra, &rb}) {
      const std::string& name = run == &ra ? name_a : name_b;
      for (std::size_t k = 0; k < run->log.samples.size(); ++k) {
        csv << name;
        for (double x : run->log.row(k)) {
          std::snprintf(buf, sizeof buf, "%.15g", x);
          csv << "," << buf;
        }
        csv << "\n";
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  out << (dir / "compare.txt").string() << "\n";
  out << (dir / "compare.csv").string() << "\n";
  if (ra.log.aborted || rb.log.aborted) {
    err << "a simulation aborted\n";
    return kSimulationAbort;
  }
  return kOk;
}

}  // namespace vcbc::cli
