#include "vcbc/config.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace vcbc;

namespace {

std::string config_dir() {
  const char* d = std::getenv("VCBC_CONFIG_DIR");
  return d ? d : "configs";
}

std::string read(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string drop_section(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  bool skipping = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '[') skipping = line == "[" + name + "]";
    if (!skipping) out << line << "\n";
  }
  return out.str();
}

std::string error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

}  // namespace

TEST(Toml, ParsesSubset) {
  const auto doc = toml::parse(R"(# comment
[a]
x = 1.5e-3   # trailing
flag = true
name = "he said \"hi\" # not a comment"
m = [[1, 2],
     [3, 4],]   # multi-line, trailing comma
big = 1_000
)");
  const toml::Table& t = doc.at("a");
  ASSERT_EQ(t.size(), 5u);
  EXPECT_DOUBLE_EQ(t[0].second.number, 1.5e-3);
  EXPECT_TRUE(t[1].second.boolean);
  EXPECT_EQ(t[2].second.text, "he said \"hi\" # not a comment");
  EXPECT_EQ(t[3].second.items.size(), 2u);
  EXPECT_DOUBLE_EQ(t[3].second.items[1].items[0].number, 3.0);
  EXPECT_DOUBLE_EQ(t[4].second.number, 1000.0);
}

TEST(Toml, ReportsLineOfSyntaxError) {
  try {
    toml::parse("[a]\nx = 1\ny = [1, 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "line 3");
  }
  EXPECT_THROW(toml::parse("x = 1\n"), ConfigError);
  EXPECT_THROW(toml::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
  EXPECT_THROW(toml::parse("[a]\nx = nan\n"), ConfigError);
  EXPECT_THROW(toml::parse("[a]\nx = 1 2\n"), ConfigError);
}

TEST(Toml, WriteParseRoundTrip) {
  toml::Document d;
  auto& t = d.add("s");
  t.emplace_back("x", toml::Value::of(0.1 + 0.2));
  t.emplace_back("s", toml::Value::of(std::string("a\"b\\c")));
  t.emplace_back("v", toml::Value::array({toml::Value::of(1.0), toml::Value::of(false)}));
  const auto back = toml::parse(toml::to_string(d));
  EXPECT_EQ(back.at("s")[0].second.number, 0.1 + 0.2);
  EXPECT_EQ(back.at("s")[1].second.text, "a\"b\\c");
  EXPECT_FALSE(back.at("s")[2].second.items[1].boolean);
}

TEST(Config, BundledConfigsLoad) {
  for (const char* name : {"quanser_phi1", "quanser_phi2", "quanser_phi3"}) {
    const RunConfig c = load_config(config_dir() + "/" + name + ".toml");
    EXPECT_EQ(c.robot.n_links(), 2);
    EXPECT_DOUBLE_EQ(c.robot.stiffness(0, 0), 9.0);
    EXPECT_DOUBLE_EQ(c.controller.lambda_m(1, 1), 60.0);
    EXPECT_EQ(c.output.name, name);
    EXPECT_DOUBLE_EQ(c.sim.link_offset(1), 0.3);
  }
  const RunConfig p3 = load_config(config_dir() + "/quanser_phi3.toml");
  EXPECT_EQ(p3.controller.phi_kind, control::PhiKind::PHI3_MU1);
  ASSERT_EQ(p3.controller.theta.size(), 4);
  EXPECT_DOUBLE_EQ(p3.controller.theta(0), std::sqrt(55.0));
}

TEST(Config, RoundTripPreservesValues) {
  const std::string text = read(config_dir() + "/quanser_phi3.toml");
  RunConfig a = parse_config(text);
  a.sim.virtual_offset = VecX::Constant(2, 0.2);
  a.robot.stiffness(0, 1) = 0.5;
  a.robot.stiffness(1, 0) = 0.5;
  a.output.directory = "out dir";
  const std::string s1 = serialize(a);
  const RunConfig b = parse_config(s1);
  EXPECT_EQ(serialize(b), s1);
  EXPECT_EQ(b.robot.stiffness, a.robot.stiffness);
  EXPECT_EQ(b.controller.kappa, a.controller.kappa);
  EXPECT_EQ(b.controller.theta, a.controller.theta);
  EXPECT_EQ(b.sim.virtual_offset, a.sim.virtual_offset);
  EXPECT_EQ(b.reference.frequency, a.reference.frequency);
  EXPECT_EQ(b.output.directory, "out dir");
  EXPECT_EQ(b.sim.seed, a.sim.seed);
}

TEST(Config, MissingSectionIsNamed) {
  const std::string text = read(config_dir() + "/quanser_phi1.toml");
  EXPECT_EQ(error_key(drop_section(text, "controller")), "controller");
  EXPECT_EQ(error_key(drop_section(text, "robot")), "robot");
  EXPECT_EQ(error_key(drop_section(text, "reference")), "reference");
  EXPECT_EQ(error_key(drop_section(text, "output")), "");
}

TEST(Config, BadValuesAreNamed) {
  const std::string text = read(config_dir() + "/quanser_phi2.toml");
  auto replace = [&](const std::string& from, const std::string& to) {
    std::string t = text;
    const auto pos = t.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    return t.replace(pos, from.size(), to);
  };
  EXPECT_EQ(error_key(replace("lambda_l = [55.0, 30.0]", "lambda_l = [55.0, 0.0]")),
            "controller.lambda_l");
  EXPECT_EQ(error_key(replace("phi_kind = \"PHI2_LINEAR\"", "phi_kind = \"PHI7\"")),
            "controller.phi_kind");
  EXPECT_EQ(error_key(replace("dt = 1e-4", "dt = -1")), "sim.dt");
  EXPECT_EQ(error_key(replace("dt = 1e-4", "dtt = 1e-4")), "sim.dtt");
  EXPECT_EQ(error_key(replace("link_inertias = [0.0392, 0.00808]", "link_inertias = [0.0392]")),
            "robot.link_inertias");
  EXPECT_EQ(error_key(replace("amplitude = [1.0, 1.0]", "amplitude = [1.0, 1.0, 1.0]")),
            "reference.frequency");
  EXPECT_EQ(error_key(replace("[output]", "[extra]")), "extra");
}

TEST(Config, InitialStates) {
  const std::string text = read(config_dir() + "/quanser_phi2.toml");
  RunConfig c = parse_config(text);
  const FjrModel model(c.robot);
  sim::SimConfig sc = make_sim_config(model, c);
  EXPECT_DOUBLE_EQ(sc.initial_state.q(0), 0.3);
  EXPECT_EQ(sc.initial_state.q.head(2), sc.initial_state.q.tail(2));
  EXPECT_FALSE(sc.initial_virtual_state.has_value());
  c.sim.initial = "reference";
  c.sim.link_offset = VecX::Zero(2);
  c.sim.virtual_offset = VecX::Constant(2, 0.2);
  sc = make_sim_config(model, c);
  // On the reference at t = 0: q_l = 0 and q_l' = (1, 1).
  EXPECT_NEAR(sc.initial_state.p(0), model.link_inertia<double>(VecX(VecX::Zero(2))).row(0).sum(),
              1e-12);
  ASSERT_TRUE(sc.initial_virtual_state.has_value());
  EXPECT_NEAR(sc.initial_virtual_state->q(1) - sc.initial_state.q(1), 0.2, 1e-15);
}
