#include "vcbc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace vcbc {

namespace {

using toml::Value;

class SectionReader {
 public:
  SectionReader(const toml::Document& doc, std::string name)
      : table_(doc.at(name)), name_(std::move(name)) {}

  bool has(const std::string& key) const { return find(key) != nullptr; }

  double number(const std::string& key) {
    const Value& v = need(key);
    if (v.kind != Value::Kind::Number) fail(key, "expected a number");
    return v.number;
  }

  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const Value& v = need(key);
    if (v.kind != Value::Kind::Bool) fail(key, "expected true or false");
    return v.boolean;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const Value& v = need(key);
    if (v.kind != Value::Kind::String) fail(key, "expected a string");
    return v.text;
  }

  std::string text(const std::string& key) {
    need(key);
    return text(key, "");
  }

  /// Array of numbers; a bare number becomes a one-entry vector.
  VecX vector(const std::string& key) {
    const Value& v = need(key);
    if (v.kind == Value::Kind::Number) return VecX::Constant(1, v.number);
    return to_vector(key, v);
  }

  VecX vector(const std::string& key, const VecX& fallback) {
    return has(key) ? vector(key) : fallback;
  }

  /// Either a flat array (the diagonal) or an array of rows.
  MatX matrix(const std::string& key) {
    const Value& v = need(key);
    if (v.kind == Value::Kind::Number) return MatX::Constant(1, 1, v.number);
    if (v.kind != Value::Kind::Array) fail(key, "expected an array");
    if (v.items.empty()) fail(key, "empty array");
    if (v.items.front().kind != Value::Kind::Array) return to_vector(key, v).asDiagonal();
    const Index n = static_cast<Index>(v.items.size());
    MatX m(n, n);
    for (Index i = 0; i < n; ++i) {
      const VecX row = to_vector(key, v.items[i]);
      if (row.size() != n) fail(key, "matrix must be square");
      m.row(i) = row.transpose();
    }
    return m;
  }

  void finish() const {
    for (const auto& kv : table_)
      if (!used_.count(kv.first)) fail(kv.first, "unknown key");
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(name_ + "." + key, what);
  }

 private:
  const Value* find(const std::string& key) const {
    for (const auto& kv : table_)
      if (kv.first == key) return &kv.second;
    return nullptr;
  }

  const Value& need(const std::string& key) {
    const Value* v = find(key);
    if (!v) fail(key, "missing required key");
    used_.insert(key);
    return *v;
  }

  VecX to_vector(const std::string& key, const Value& v) const {
    if (v.kind != Value::Kind::Array) fail(key, "expected an array of numbers");
    VecX out(static_cast<Index>(v.items.size()));
    for (std::size_t i = 0; i < v.items.size(); ++i) {
      if (v.items[i].kind != Value::Kind::Number) fail(key, "expected an array of numbers");
      out(static_cast<Index>(i)) = v.items[i].number;
    }
    return out;
  }

  const toml::Table& table_;
  std::string name_;
  std::set<std::string> used_;
};

const std::set<std::string> kSections{"robot", "controller", "sim", "reference", "output"};

Value vec_value(const VecX& v) {
  std::vector<Value> items;
  for (Index i = 0; i < v.size(); ++i) items.push_back(Value::of(v(i)));
  return Value::array(std::move(items));
}

Value mat_value(const MatX& m) {
  if (m.isDiagonal(0.0)) return vec_value(m.diagonal());
  std::vector<Value> rows;
  for (Index i = 0; i < m.rows(); ++i) rows.push_back(vec_value(m.row(i).transpose()));
  return Value::array(std::move(rows));
}

// Scalar offsets apply to every link.
VecX broadcast(const VecX& v, int n, const char* key) {
  if (v.size() == 0) return VecX::Zero(n);
  if (v.size() == 1) return VecX::Constant(n, v(0));
  if (v.size() != n) throw ConfigError(key, "expected 1 or " + std::to_string(n) + " entries");
  return v;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  const toml::Document doc = toml::parse(text);
  for (const auto& s : doc.sections)
    if (!kSections.count(s.first)) throw ConfigError(s.first, "unknown section [" + s.first + "]");

  RunConfig cfg;
  {
    SectionReader r(doc, "robot");
    FjrParams& p = cfg.robot;
    p.link_masses = r.vector("link_masses");
    p.link_inertias = r.vector("link_inertias");
    p.link_lengths = r.vector("link_lengths");
    p.link_com = r.vector("link_com");
    p.motor_masses = r.vector("motor_masses");
    p.link_damping = r.vector("link_damping");
    p.motor_damping = r.vector("motor_damping");
    p.stiffness = r.matrix("stiffness");
    p.gravity_enabled = r.boolean("gravity_enabled", false);
    p.gravity = r.number("gravity", 9.81);
    r.finish();
    validate(p);
  }
  const int n = cfg.robot.n_links();
  {
    SectionReader r(doc, "controller");
    control::ControllerSpec& c = cfg.controller;
    c.phi_kind = control::parse_phi_kind(r.text("phi_kind"));
    c.lambda_l = r.matrix("lambda_l");
    c.lambda_m = r.matrix("lambda_m");
    c.kd_l = r.matrix("kd_l");
    c.kd_m = r.matrix("kd_m");
    if (r.has("kappa")) c.kappa = r.vector("kappa");
    if (r.has("theta")) c.theta = r.vector("theta");
    c.derivative_mode =
        control::parse_derivative_mode(r.text("derivative_mode", "MODEL_EXACT"));
    c.filter_tau = r.number("filter_tau", 0.01);
    r.finish();
    if (c.phi_kind == control::PhiKind::PHI3_MU1 && c.theta.size() == 0 &&
        c.lambda().isDiagonal(0.0))
      c.theta = c.lambda().diagonal().cwiseSqrt();
    c.validate(n);
  }
  {
    SectionReader r(doc, "sim");
    SimSection& s = cfg.sim;
    s.t_end = r.number("t_end", s.t_end);
    s.dt = r.number("dt", s.dt);
    const double stride = r.number("log_stride", s.log_stride);
    if (!(stride >= 1.0) || stride != std::floor(stride)) r.fail("log_stride", "must be a positive integer");
    s.log_stride = static_cast<int>(stride);
    s.initial = r.text("initial", s.initial);
    if (s.initial != "rest" && s.initial != "reference")
      r.fail("initial", "expected \"rest\" or \"reference\"");
    s.link_offset = broadcast(r.vector("link_offset", VecX()), n, "sim.link_offset");
    if (r.has("virtual_offset"))
      s.virtual_offset = broadcast(r.vector("virtual_offset"), n, "sim.virtual_offset");
    s.verify = r.boolean("verify", false);
    s.noise_std = r.number("noise_std", 0.0);
    const double seed = r.number("seed", 0.0);
    if (!(seed >= 0.0) || seed != std::floor(seed) || seed > 9.007199254740992e15)
      r.fail("seed", "must be a non-negative integer");
    s.seed = static_cast<std::uint64_t>(seed);
    r.finish();
    if (!(s.dt > 0.0)) r.fail("dt", "must be positive");
    if (!(s.t_end >= s.dt)) r.fail("t_end", "must be at least one step");
    if (!(s.noise_std >= 0.0)) r.fail("noise_std", "must be non-negative");
  }
  {
    SectionReader r(doc, "reference");
    control::Reference& ref = cfg.reference;
    ref.amplitude = r.vector("amplitude");
    ref.frequency = r.vector("frequency");
    ref.phase = r.vector("phase", VecX::Zero(ref.amplitude.size()));
    ref.offset = r.vector("offset", VecX::Zero(ref.amplitude.size()));
    r.finish();
    ref.validate();
    if (ref.n_links() != n)
      throw ConfigError("reference.amplitude", "expected " + std::to_string(n) + " entries");
  }
  if (doc.has("output")) {
    SectionReader r(doc, "output");
    cfg.output.directory = r.text("directory", "");
    cfg.output.name = r.text("name", cfg.output.name);
    r.finish();
    if (cfg.output.name.empty() || cfg.output.name.find('/') != std::string::npos)
      r.fail("name", "must be a plain file stem");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path, "cannot open config file");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

toml::Document to_document(const RunConfig& cfg) {
  toml::Document doc;
  {
    toml::Table& t = doc.add("robot");
    const FjrParams& p = cfg.robot;
    t.emplace_back("link_masses", vec_value(p.link_masses));
    t.emplace_back("link_inertias", vec_value(p.link_inertias));
    t.emplace_back("link_lengths", vec_value(p.link_lengths));
    t.emplace_back("link_com", vec_value(p.link_com));
    t.emplace_back("motor_masses", vec_value(p.motor_masses));
    t.emplace_back("link_damping", vec_value(p.link_damping));
    t.emplace_back("motor_damping", vec_value(p.motor_damping));
    t.emplace_back("stiffness", mat_value(p.stiffness));
    t.emplace_back("gravity_enabled", Value::of(p.gravity_enabled));
    t.emplace_back("gravity", Value::of(p.gravity));
  }
  {
    toml::Table& t = doc.add("controller");
    const control::ControllerSpec& c = cfg.controller;
    t.emplace_back("phi_kind", Value::of(control::to_string(c.phi_kind)));
    t.emplace_back("lambda_l", mat_value(c.lambda_l));
    t.emplace_back("lambda_m", mat_value(c.lambda_m));
    t.emplace_back("kd_l", mat_value(c.kd_l));
    t.emplace_back("kd_m", mat_value(c.kd_m));
    if (c.kappa.size()) t.emplace_back("kappa", vec_value(c.kappa));
    if (c.theta.size()) t.emplace_back("theta", vec_value(c.theta));
    t.emplace_back("derivative_mode", Value::of(control::to_string(c.derivative_mode)));
    t.emplace_back("filter_tau", Value::of(c.filter_tau));
  }
  {
    toml::Table& t = doc.add("sim");
    const SimSection& s = cfg.sim;
    t.emplace_back("t_end", Value::of(s.t_end));
    t.emplace_back("dt", Value::of(s.dt));
    t.emplace_back("log_stride", Value::of(static_cast<double>(s.log_stride)));
    t.emplace_back("initial", Value::of(s.initial));
    if (s.link_offset.size()) t.emplace_back("link_offset", vec_value(s.link_offset));
    if (s.virtual_offset.size()) t.emplace_back("virtual_offset", vec_value(s.virtual_offset));
    t.emplace_back("verify", Value::of(s.verify));
    t.emplace_back("noise_std", Value::of(s.noise_std));
    t.emplace_back("seed", Value::of(static_cast<double>(s.seed)));
  }
  {
    toml::Table& t = doc.add("reference");
    const control::Reference& r = cfg.reference;
    t.emplace_back("amplitude", vec_value(r.amplitude));
    t.emplace_back("frequency", vec_value(r.frequency));
    t.emplace_back("phase", vec_value(r.phase));
    t.emplace_back("offset", vec_value(r.offset));
  }
  {
    toml::Table& t = doc.add("output");
    if (!cfg.output.directory.empty())
      t.emplace_back("directory", Value::of(cfg.output.directory));
    t.emplace_back("name", Value::of(cfg.output.name));
  }
  return doc;
}

std::string serialize(const RunConfig& cfg) { return toml::to_string(to_document(cfg)); }

sim::SimConfig make_sim_config(const FjrModel& model, const RunConfig& cfg) {
  const int n = model.link_dof();
  sim::SimConfig sc;
  sc.t_end = cfg.sim.t_end;
  sc.dt = cfg.sim.dt;
  sc.log_stride = cfg.sim.log_stride;
  sc.noise_std = cfg.sim.noise_std;
  sc.seed = cfg.sim.seed;
  const VecX offset = broadcast(cfg.sim.link_offset, n, "sim.link_offset");
  if (cfg.sim.initial == "reference") {
    State s = control::desired_state(model, cfg.controller, cfg.reference, sc.t0);
    s.q.head(n) += offset;
    sc.initial_state = s;
  } else {
    sc.initial_state = control::rest_state(model, cfg.reference, sc.t0, offset);
  }
  if (cfg.sim.virtual_offset.size()) {
    State v = sc.initial_state;
    v.q.head(n) += broadcast(cfg.sim.virtual_offset, n, "sim.virtual_offset");
    sc.initial_virtual_state = v;
  }
  return sc;
}

}  // namespace vcbc
