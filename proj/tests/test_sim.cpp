#include <catch2/catch_amalgamated.hpp>

#include "polyreach/sim.hpp"
#include "support/fixtures.hpp"

using namespace polyreach;

TEST_CASE("quiet policies hold the origin still", "[sim]") {
  auto p = fixtures::two_tank(2);
  auto gn = fixtures::two_tank_gains(p);
  auto sys = assemble_system(p, gn, fixtures::tank_detector(), {}, 0.5);
  SimOptions opt;
  opt.attack = AttackPolicy::Zero;
  opt.noise = NoisePolicy::Zero;
  opt.steps = 20;
  auto tr = rollout(sys, Detector{fixtures::tank_detector()}, Vector::Zero(4), opt);
  REQUIRE(tr.first_exit == -1);
  REQUIRE(tr.z.size() == 21);
  for (const auto& z : tr.z) REQUIRE(z.norm() < 1e-12);
  for (bool al : tr.alarms) REQUIRE_FALSE(al);
}

TEST_CASE("identical seeds give identical trajectories", "[sim]") {
  auto sys = fixtures::tank_sensor_system();
  SimOptions opt;
  opt.steps = 40;
  opt.seed = 2024;
  auto a = rollout(sys, Detector{fixtures::tank_detector()}, Vector::Zero(4), opt);
  auto b = rollout(sys, Detector{fixtures::tank_detector()}, Vector::Zero(4), opt);
  REQUIRE(a.z.size() == b.z.size());
  for (std::size_t k = 0; k < a.z.size(); ++k) REQUIRE((a.z[k] - b.z[k]).norm() == 0.0);
  REQUIRE(a.modes == b.modes);
  REQUIRE(a.alarms == b.alarms);
}

TEST_CASE("stealthy attacks never trip the detector while active", "[sim][property]") {
  auto sys = fixtures::tank_sensor_system();
  int attacked_steps = 0;
  for (std::uint64_t seed : {1u, 7u, 23u, 99u}) {
    SimOptions opt;
    opt.steps = 60;
    opt.seed = seed;
    opt.attack = AttackPolicy::Extreme;
    opt.noise = NoisePolicy::Vertex;
    auto tr = rollout(sys, Detector{fixtures::tank_detector()}, Vector::Zero(4), opt);
    for (std::size_t k = 0; k < tr.alarms.size(); ++k) {
      // stored residuals must agree with the output map
      const Mode& m = sys.modes[static_cast<std::size_t>(tr.modes[k])];
      Vector rr = m.C * tr.z[k] + m.D * tr.attacks[k] + m.F * tr.noises[k];
      REQUIRE((rr - tr.residuals[k]).lpNorm<Eigen::Infinity>() <= 1e-12);
      REQUIRE_FALSE(tr.forced[k]);
      if (!tr.attacked[k]) continue;
      ++attacked_steps;
      INFO("seed " << seed << " step " << k);
      REQUIRE_FALSE(tr.alarms[k]);
      // the injected signal must be admissible at the state it was played
      auto Az = eval_at(sys.attacks[tr.modes[k]], tr.z[k]);
      REQUIRE(contains_point(Az, tr.attacks[k], 1e-7));
    }
  }
  REQUIRE(attacked_steps > 20);  // the aggressive policy actually attacks
}

TEST_CASE("an unplayable pattern step is forced with a tagged zero attack", "[sim]") {
  auto p = fixtures::two_tank(2);
  auto gn = fixtures::two_tank_gains(p);
  // a pattern that must attack every step: with a large estimation error the
  // admissible set is empty, so the step can only be forced
  ChannelPattern pat;
  pat.kind = ChannelPattern::Kind::Sensor;
  pat.index = 1;
  pat.pattern = AttackGraph{{"g"}, {{"g", "g", "A"}}};
  auto sys = assemble_system(p, gn, fixtures::tank_detector(), {AttackChannel{pat, 0.05}}, 0.5);
  Vector z0(4);
  z0 << 0.0, 0.0, 0.0, 0.2;  // e2 = 0.2: compensating it needs |a| > 0.05
  SimOptions opt;
  opt.steps = 1;
  opt.noise = NoisePolicy::Zero;
  auto tr = rollout(sys, Detector{fixtures::tank_detector()}, z0, opt);
  REQUIRE(tr.forced[0]);
  REQUIRE(tr.attacks[0].norm() == 0.0);
  REQUIRE(tr.alarms[0]);  // the uncompensated estimation error is visible
}

namespace {
// Unstable scalar-per-axis toy: z+ = 2 z + eta, so every nonzero start
// eventually crosses the 0.5 box regardless of play.
SwitchedSystem expanding_toy() {
  SwitchedSystem sys;
  Mode m;
  m.id = 1;
  m.A = 2.0 * Matrix::Identity(2, 2);
  m.B = Matrix::Zero(2, 0);
  m.E = Matrix::Identity(2, 2);
  m.C = Matrix::Zero(1, 2);
  m.D = Matrix::Zero(1, 0);
  m.F = Matrix::Zero(1, 2);
  sys.modes.push_back(m);
  sys.attacks.push_back(ParamPolytope(Matrix::Zero(0, 0), Vector(0), Matrix::Zero(0, 2)));
  sys.graph.nodes = {"s"};
  sys.graph.edges = {{"s", "s", "N"}};
  sys.label_to_mode = {{"N", 1}};
  sys.Z = HPolytope::box(2, 0.5);
  sys.H = HPolytope::box(2, 0.1);
  return sys;
}
}  // namespace

TEST_CASE("escape is reported the moment the constraints break", "[sim]") {
  auto sys = expanding_toy();
  SimOptions opt;
  opt.attack = AttackPolicy::Zero;
  opt.noise = NoisePolicy::Zero;
  opt.steps = 10;
  Vector z0(2);
  z0 << 0.3, 0.0;
  auto tr = rollout(sys, Detector{HPolytope::box(1, 1.0)}, z0, opt);
  REQUIRE(tr.first_exit == 1);  // 0.3 -> 0.6 leaves the 0.5 box
  REQUIRE(tr.z.size() == static_cast<std::size_t>(opt.steps) + 1);

  Vector far(2);
  far << 0.9, 0.0;
  REQUIRE_THROWS_AS(rollout(sys, Detector{HPolytope::box(1, 1.0)}, far, opt),
                    InitialStateOutsideZ);
}

TEST_CASE("no adversarial run escapes the computed safe set's guarantee",
          "[sim][acceptance-oracle]") {
  auto sys = fixtures::tank_sensor_system();
  Tolerances tol;
  auto res = backward_sequence(sys, tol, 200);
  REQUIRE(res.status == ReachStatus::Converged);
  auto fal = falsify(sys, Detector{fixtures::tank_detector()}, res.safe_set, 60, 40, 7u);
  REQUIRE(fal.trials == 60);
  REQUIRE_FALSE(fal.found);
}

TEST_CASE("the greedy adversary does escape from unsafe territory", "[sim]") {
  // sanity check that the falsifier has teeth: hand it a claim that is too big
  auto sys = expanding_toy();
  PolyUnion bogus{2, {sys.Z}};  // nothing in this box is actually safe
  auto fal = falsify(sys, Detector{HPolytope::box(1, 1.0)}, bogus, 20, 40, 7u);
  REQUIRE(fal.found);
  REQUIRE(fal.witness.first_exit >= 1);
  REQUIRE_FALSE(contains_point(sys.Z, fal.witness.z[fal.witness.first_exit], 1e-9));
}

namespace {
// One-dimensional single-mode system z+ = a z + w, |w| <= wbar, |z| <= zbound.
SwitchedSystem scalar_toy(double a, double wbar, double zbound) {
  SwitchedSystem sys;
  Mode m;
  m.id = 1;
  m.A = Matrix::Constant(1, 1, a);
  m.B = Matrix::Zero(1, 0);
  m.E = Matrix::Identity(1, 1);
  m.C = Matrix::Zero(1, 1);
  m.D = Matrix::Zero(1, 0);
  m.F = Matrix::Zero(1, 1);
  sys.modes.push_back(m);
  sys.attacks.push_back(ParamPolytope(Matrix::Zero(0, 0), Vector(0), Matrix::Zero(0, 1)));
  sys.graph.nodes = {"s"};
  sys.graph.edges = {{"s", "s", "N"}};
  sys.label_to_mode = {{"N", 1}};
  sys.Z = HPolytope::box(1, zbound);
  sys.H = HPolytope::box(1, wbar);
  return sys;
}
}  // namespace

TEST_CASE("grid oracle matches hand analysis on scalar systems", "[sim][oracle]") {
  SECTION("unstable: every start is doomed") {
    // z+ = 1.2 z + w grows from anywhere: pushing w = 0.1 from z = 0 gives
    // z_t = 0.5 (1.2^t - 1), which crosses 1 at t = 7; other starts sooner.
    auto sys = scalar_toy(1.2, 0.1, 1.0);
    auto rep = grid_oracle(sys, 21, 30, 4000);
    REQUIRE(rep.cells.size() == 21);
    REQUIRE(rep.violating == 21);
    for (const auto& c : rep.cells) {
      REQUIRE(c.first_violation >= 1);
      REQUIRE(c.first_violation <= 7);
    }
    auto res = backward_sequence(sys, Tolerances{}, 200);
    REQUIRE(res.status == ReachStatus::Empty);
    REQUIRE(compare_safe_grid(rep, res.safe_set).mismatches == 0);
  }
  SECTION("contractive: nothing violates and the whole box is safe") {
    auto sys = scalar_toy(0.5, 0.25, 1.0);
    auto rep = grid_oracle(sys, 21, 30, 800);
    REQUIRE(rep.violating == 0);
    auto res = backward_sequence(sys, Tolerances{}, 200);
    REQUIRE(res.status == ReachStatus::Converged);
    auto cmp = compare_safe_grid(rep, res.safe_set);
    REQUIRE(cmp.safe_cells >= 19);  // every strictly interior grid point
    REQUIRE(cmp.mismatches == 0);
    REQUIRE(contains_set(res.safe_set.pieces.at(0), sys.Z, 1e-9));
  }
}
