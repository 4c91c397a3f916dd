#include <catch2/catch_amalgamated.hpp>

#include "polyreach/scenario.hpp"
#include "support/fixtures.hpp"

using namespace polyreach;

namespace {

std::string scenario_path(const std::string& name) {
  return std::string(POLYREACH_SCENARIO_DIR) + "/" + name;
}

Json golden_sensor2() { return read_json_file(scenario_path("twotank_sensor2.json")); }

std::string schema_path_of(const Json& j) {
  try {
    (void)parse_scenario(j);
  } catch (const SchemaError& e) {
    return e.path;
  }
  return "<no error>";
}

// max |a-b|, tolerating empty blocks (the attack-free mode has zero-width B/D)
double max_abs_diff(const Matrix& a, const Matrix& b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  if (a.size() == 0) return 0.0;
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("scenario loading shifts constraints to deviation coordinates") {
  const Scenario sc = load_scenario(scenario_path("twotank_sensor2.json"));

  CHECK(sc.name == "twotank_sensor2");
  REQUIRE(sc.plant.A.rows() == 2);
  CHECK(sc.plant.A(0, 0) == 0.9);
  CHECK(sc.plant.C(0, 0) == 0.0);
  CHECK(sc.plant.C(0, 1) == 1.0);

  // operating point kept in absolute units, plant boxes recentred around it
  REQUIRE(sc.x_star.size() == 2);
  CHECK(sc.x_star[0] == 2.0);
  CHECK(sc.x_star[1] == 1.0);
  CHECK(sc.u_star[0] == 1.0);
  for (int i = 0; i < 2; ++i) {
    Vector d = Vector::Zero(2);
    d[i] = 1.0;
    CHECK(support(sc.plant.X, d) == Catch::Approx(1.0).margin(1e-12));
    CHECK(support(sc.plant.X, -d) == Catch::Approx(1.0).margin(1e-12));
  }
  CHECK(support(sc.plant.U, Vector::Ones(1)) == Catch::Approx(1.0).margin(1e-12));
  CHECK(support(sc.plant.U, -Vector::Ones(1)) == Catch::Approx(1.0).margin(1e-12));

  // output box derived from the state box through the measurement row
  CHECK(support(sc.plant.Y, Vector::Ones(1)) == Catch::Approx(1.0).margin(1e-12));
  CHECK(support(sc.plant.V, Vector::Ones(2)) == Catch::Approx(0.02).margin(1e-12));
  CHECK(support(sc.plant.W, Vector::Ones(1)) == Catch::Approx(0.01).margin(1e-12));

  // pole placement resolves to the hand-computed state feedback [2 1]
  REQUIRE(sc.gains.K.rows() == 1);
  CHECK(sc.gains.K(0, 0) == Catch::Approx(2.0).margin(1e-9));
  CHECK(sc.gains.K(0, 1) == Catch::Approx(1.0).margin(1e-9));
  const Matrix Acl = sc.plant.A - sc.gains.L * sc.plant.C;
  CHECK(spectral_radius(Acl) < 1.0);

  CHECK(support(sc.detector.R, Vector::Ones(1)) == Catch::Approx(0.1).margin(1e-12));
  CHECK(sc.e_max == 0.5);
  CHECK(sc.seed == 12345);
  CHECK(sc.tol.rng_seed == 12345);

  REQUIRE(sc.channels.size() == 1);
  CHECK(sc.channels[0].kind == ChannelPattern::Kind::Sensor);
  CHECK(sc.channels[0].index == 1);
  CHECK(sc.channels[0].bound == 0.05);
  CHECK_FALSE(sc.channels[0].explicit_graph);
  CHECK(sc.channels[0].n_max == 2);
  CHECK(sc.channels[0].n_min == 1);
  CHECK(sc.channels[0].n_min_rule == "n_max-1");

  REQUIRE(sc.sweep.present);
  CHECK(sc.sweep.n_max_values == std::vector<int>{0, 1, 2, 3, 4, 5, 6});
  CHECK(sc.sweep.n_min_rule == "n_max-1");
}

TEST_CASE("scenario assembly matches the hand-built coupled-tanks system") {
  const Scenario sc = load_scenario(scenario_path("twotank_sensor2.json"));
  const SwitchedSystem got = build_system(sc);
  const SwitchedSystem want = fixtures::tank_sensor_system(2, 1, 0.05, 0.5);

  REQUIRE(got.graph.nodes == want.graph.nodes);
  REQUIRE(got.graph.edges.size() == want.graph.edges.size());
  REQUIRE(got.label_to_mode == want.label_to_mode);
  REQUIRE(got.modes.size() == want.modes.size());
  for (std::size_t m = 0; m < got.modes.size(); ++m) {
    CHECK(max_abs_diff(got.modes[m].A, want.modes[m].A) == 0.0);
    CHECK(max_abs_diff(got.modes[m].B, want.modes[m].B) == 0.0);
    CHECK(max_abs_diff(got.modes[m].E, want.modes[m].E) == 0.0);
    CHECK(max_abs_diff(got.modes[m].C, want.modes[m].C) == 0.0);
    CHECK(max_abs_diff(got.modes[m].D, want.modes[m].D) == 0.0);
    CHECK(max_abs_diff(got.modes[m].F, want.modes[m].F) == 0.0);
  }
  CHECK((got.Z.G() - want.Z.G()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((got.Z.g() - want.Z.g()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((got.H.G() - want.H.G()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((got.H.g() - want.H.g()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("schema violations report the offending json path") {
  const Json base = golden_sensor2();

  SECTION("missing plant block") {
    Json j = base;
    j.erase("plant");
    CHECK(schema_path_of(j) == "plant");
  }
  SECTION("missing state bounds") {
    Json j = base;
    j["plant"].erase("x_min");
    CHECK(schema_path_of(j) == "plant.x_min");
  }
  SECTION("operating point that is not an equilibrium") {
    Json j = base;
    j["plant"]["operating_point"]["x"] = {2.0, 1.5};
    CHECK(schema_path_of(j) == "plant.operating_point");
  }
  SECTION("unknown channel type") {
    Json j = base;
    j["channels"][0]["type"] = "spoof";
    CHECK(schema_path_of(j) == "channels[0].type");
  }
  SECTION("channel index beyond the available channels") {
    Json j = base;
    j["channels"][0]["index"] = 2;  // single measured output
    CHECK(schema_path_of(j) == "channels[0].index");
  }
  SECTION("non-positive detector bound") {
    Json j = base;
    j["detector"]["bound"] = 0.0;
    CHECK(schema_path_of(j) == "detector.bound");
  }
  SECTION("unknown top-level field") {
    Json j = base;
    j["plnat"] = Json::object();
    CHECK(schema_path_of(j) == "plnat");
  }
  SECTION("dwell and explicit graph are mutually exclusive") {
    Json j = base;
    j["channels"][0]["graph"] = {{"nodes", {"p"}}, {"edges", {{"p", "p", "N"}}}};
    CHECK(schema_path_of(j) == "channels[0]");
  }
  SECTION("degenerate state box") {
    Json j = base;
    j["plant"]["x_max"] = {1.0, 2.0};  // equals x_min in the first coordinate
    CHECK(schema_path_of(j) == "plant.x_min");
  }
  SECTION("unreadable file surfaces as a schema error") {
    CHECK_THROWS_AS(load_scenario(scenario_path("no_such_scenario.json")), SchemaError);
  }
}

TEST_CASE("explicit attack-pattern graphs are accepted and assemble") {
  Json j = golden_sensor2();
  j["channels"][0].erase("dwell");
  j["channels"][0]["graph"] = {
      {"nodes", {"p", "q"}},
      {"edges", {{"p", "q", "A"}, {"q", "p", "N"}}},
  };
  const Scenario sc = parse_scenario(j);
  REQUIRE(sc.channels.size() == 1);
  CHECK(sc.channels[0].explicit_graph);
  CHECK(sc.channels[0].graph.nodes == std::vector<std::string>{"p", "q"});

  const SwitchedSystem sys = build_system(sc);
  CHECK(sys.graph.nodes.size() == 2);
  CHECK(sys.modes.size() == 2);

  // sweep stops must keep an explicit pattern untouched
  const auto chans = sweep_channels(sc, 5);
  REQUIRE(chans.size() == 1);
  CHECK(chans[0].pattern.pattern.nodes == std::vector<std::string>{"p", "q"});
}

TEST_CASE("sweep rows score the attack-free stop as exactly zero impact") {
  Json j = golden_sensor2();
  j["sweep"]["n_max_values"] = {0, 1};
  const Scenario sc = parse_scenario(j);

  const ScenarioSweep sw = scenario_sweep(sc);
  REQUIRE(sw.full.size() == 2);
  REQUIRE(sw.slice.size() == 2);

  CHECK(sw.full[0].n_max == 0);
  CHECK(sw.full[0].impact.I1 == 0.0);
  CHECK(sw.full[0].impact.I2 == 0.0);
  CHECK(sw.full[0].status == "converged");
  CHECK(sw.slice[0].impact.I1 == 0.0);
  CHECK(sw.slice[0].impact.I2 == 0.0);

  // one-step attacks keep a usable safe set but cannot enlarge it
  CHECK(sw.full[1].status == "converged");
  CHECK(sw.full[1].impact.I1 >= 0.0);
  CHECK(sw.full[1].impact.I1 <= 1.0);
  CHECK(sw.slice[1].impact.I1 >= 0.0);
  CHECK(sw.slice[1].impact.I1 <= 1.0);
  CHECK(sw.full[1].impact.vol_nominal > 0.0);
}

TEST_CASE("every shipped scenario file loads cleanly") {
  for (const char* name :
       {"twotank_nominal.json", "twotank_sensor1.json", "twotank_sensor2.json",
        "twotank_actuator.json", "twotank_combined.json"}) {
    INFO(name);
    const Scenario sc = load_scenario(scenario_path(name));
    CHECK(sc.plant.A.rows() == 2);
    CHECK_NOTHROW(build_system(sc));
  }
}
