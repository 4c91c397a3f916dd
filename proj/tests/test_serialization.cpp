#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "polyreach/serialization.hpp"
#include "support/fixtures.hpp"

using namespace polyreach;

TEST_CASE("polytope json round trip is exact", "[serialization]") {
  Rng rng(31);
  for (int t = 0; t < 20; ++t) {
    Vector c(3);
    for (int i = 0; i < 3; ++i) c[i] = rng.uniform(-1.0, 1.0);
    HPolytope P = intersect(HPolytope::box(3, 1.0 + rng.uniform(0.0, 1.0)),
                            translate(HPolytope::box(3, 1.5), c));
    auto j = to_json(P);
    HPolytope Q = polytope_from_json(Json::parse(j.dump()));
    REQUIRE(Q.dim() == P.dim());
    REQUIRE(Q.rows() == P.rows());
    REQUIRE((Q.G() - P.G()).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((Q.g() - P.g()).cwiseAbs().maxCoeff() == 0.0);
  }

  // degenerate shapes keep their identity
  HPolytope e = polytope_from_json(to_json(HPolytope::empty(4)));
  REQUIRE(e.explicitly_empty());
  REQUIRE(e.dim() == 4);
  HPolytope w = polytope_from_json(to_json(HPolytope::whole(2)));
  REQUIRE(w.dim() == 2);
  REQUIRE(w.rows() == 0);
  REQUIRE_FALSE(w.explicitly_empty());
}

TEST_CASE("union round trip preserves every piece", "[serialization]") {
  PolyUnion U{2, {HPolytope::box(2, 1.0), translate(HPolytope::box(2, 0.5), Vector::Ones(2))}};
  PolyUnion V = union_from_json(to_json(U));
  REQUIRE(V.dim == 2);
  REQUIRE(V.pieces.size() == 2);
  auto eq = multiset_equal(U, V, Tolerances{});
  REQUIRE(eq.equal);
}

TEST_CASE("graph round trip preserves nodes, edges, and labels", "[serialization]") {
  auto G = build_dwell_graph(2, 1);
  AttackGraph H = graph_from_json(to_json(G));
  REQUIRE(H.nodes == G.nodes);
  REQUIRE(H.edges.size() == G.edges.size());
  for (std::size_t i = 0; i < G.edges.size(); ++i) {
    REQUIRE(H.edges[i].src == G.edges[i].src);
    REQUIRE(H.edges[i].dst == G.edges[i].dst);
    REQUIRE(H.edges[i].label == G.edges[i].label);
  }
  validate(H);
}

TEST_CASE("parametric set round trip evaluates identically", "[serialization]") {
  auto p = fixtures::two_tank(2);
  auto gn = fixtures::two_tank_gains(p);
  HPolytope bounds = HPolytope::box(1, 0.05);
  auto A = build_output_set(build_gamma({1}, 1), p.Y, p.W, p.C, &bounds);
  auto B = parampoly_from_json(to_json(A));
  REQUIRE(B.na() == A.na());
  REQUIRE(B.nz() == A.nz());
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    Vector z(4);
    for (int i = 0; i < 4; ++i) z[i] = rng.uniform(-0.5, 0.5);
    HPolytope Pa = eval_at(A, z), Pb = eval_at(B, z);
    REQUIRE((Pa.g() - Pb.g()).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE((Pa.G() - Pb.G()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("reach result round trip", "[serialization]") {
  auto sys = fixtures::quiet_nominal();
  auto res = backward_sequence(sys, Tolerances{}, 100);
  REQUIRE(res.status == ReachStatus::Converged);
  auto j = to_json(res, sys);
  auto back = reach_from_json(Json::parse(j.dump()));
  REQUIRE(back.result.status == res.status);
  REQUIRE(back.result.iterations == res.iterations);
  REQUIRE(back.result.exact == res.exact);
  REQUIRE(back.node_names == sys.graph.nodes);
  REQUIRE(back.result.per_node.size() == res.per_node.size());
  for (std::size_t i = 0; i < res.per_node.size(); ++i)
    REQUIRE(multiset_equal(back.result.per_node[i], res.per_node[i], Tolerances{}).equal);
  REQUIRE(multiset_equal(back.result.safe_set, res.safe_set, Tolerances{}).equal);
}

TEST_CASE("trajectory export is one json object per step", "[serialization]") {
  auto sys = fixtures::tank_sensor_system();
  SimOptions opt;
  opt.steps = 10;
  opt.seed = 3;
  auto tr = rollout(sys, Detector{fixtures::tank_detector()}, Vector::Zero(4), opt);
  std::string lines = trajectory_jsonl(tr, sys);

  std::vector<std::string> rows;
  std::size_t pos = 0;
  while (pos < lines.size()) {
    auto nl = lines.find('\n', pos);
    REQUIRE(nl != std::string::npos);  // newline-terminated
    rows.push_back(lines.substr(pos, nl - pos));
    pos = nl + 1;
  }
  REQUIRE(rows.size() == 11);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto j = Json::parse(rows[k]);
    REQUIRE(j.at("k").get<int>() == static_cast<int>(k));
    REQUIRE(j.at("z").size() == 4);
    REQUIRE(j.at("node").is_string());
    if (k + 1 < rows.size()) {
      REQUIRE(j.at("alarm").get<bool>() == tr.alarms[k]);
      REQUIRE(j.at("mode").get<int>() == tr.modes[k] + 1);
    } else {
      REQUIRE_FALSE(j.contains("mode"));  // terminal state row
    }
  }
}

TEST_CASE("text files round trip and bad input throws", "[serialization]") {
  auto dir = std::filesystem::temp_directory_path() / "polyreach_ser_test";
  std::filesystem::create_directories(dir);
  auto path = (dir / "t.json").string();
  write_text_file(path, "{\"a\": 1}\n");
  REQUIRE(read_text_file(path) == "{\"a\": 1}\n");
  REQUIRE(read_json_file(path).at("a").get<int>() == 1);
  REQUIRE_THROWS_AS(read_json_file((dir / "missing.json").string()), Error);
  write_text_file(path, "{nope");
  REQUIRE_THROWS_AS(read_json_file(path), Error);
  std::filesystem::remove_all(dir);
}
