#pragma once

// Shared coupled-tanks fixture: a 2-state plant with one measured level,
// stabilizing state feedback, and a deadbeat-ish observer.

#include "polyreach/model.hpp"
#include "polyreach/reach.hpp"

namespace fixtures {

using namespace polyreach;

inline PlantModel two_tank(int measured = 2) {
  PlantModel p;
  p.A.resize(2, 2);
  p.A << 0.9, 0.1, 0.1, 0.8;
  p.B.resize(2, 1);
  p.B << 0.1, 0.0;
  p.C.resize(1, 2);
  if (measured == 1)
    p.C << 1.0, 0.0;
  else
    p.C << 0.0, 1.0;
  p.X = HPolytope::box(2, 1.0);
  p.U = HPolytope::box(1, 1.0);
  p.Y = HPolytope::box(1, 1.0);
  p.V = HPolytope::box(2, 0.01);
  p.W = HPolytope::box(1, 0.01);
  return p;
}

inline Gains two_tank_gains(const PlantModel& p) {
  Gains gn;
  gn.K = ackermann_place(p.A, p.B, {0.7, 0.8});
  gn.L = ackermann_place(p.A.transpose(), p.C.transpose(), {0.86, 0.001}).transpose();
  return gn;
}

inline HPolytope tank_detector() { return HPolytope::box(1, 0.01); }

inline AttackChannel sensor_channel(int index, int n_max, int n_min, double bound) {
  AttackChannel ch;
  ch.pattern.kind = ChannelPattern::Kind::Sensor;
  ch.pattern.index = index;
  ch.pattern.pattern = build_dwell_graph(n_max, n_min);
  ch.bound = bound;
  return ch;
}

inline AttackChannel actuator_channel(int index, int n_max, int n_min, double bound) {
  AttackChannel ch;
  ch.pattern.kind = ChannelPattern::Kind::Actuator;
  ch.pattern.index = index;
  ch.pattern.pattern = build_dwell_graph(n_max, n_min);
  ch.bound = bound;
  return ch;
}

inline SwitchedSystem tank_sensor_system(int n_max = 2, int n_min = 1,
                                         double bound = 0.05, double e_max = 0.5) {
  auto p = two_tank(2);
  auto gn = two_tank_gains(p);
  return assemble_system(p, gn, tank_detector(),
                         {sensor_channel(1, n_max, n_min, bound)}, e_max);
}

inline SwitchedSystem tank_actuator_system(int n_max = 2, int n_min = 3,
                                           double bound = 0.01, double e_max = 0.5) {
  auto p = two_tank(2);
  auto gn = two_tank_gains(p);
  return assemble_system(p, gn, tank_detector(),
                         {actuator_channel(1, n_max, n_min, bound)}, e_max);
}

// A single-mode attack-free system with hand-picked state bounds and an
// exactly zero disturbance set; useful for closed-form expectations.
inline SwitchedSystem quiet_nominal(double zbound = 0.6) {
  auto p = two_tank(2);
  auto gn = two_tank_gains(p);
  SwitchedSystem sys;
  sys.modes.push_back(build_mode(p, gn, ChannelSelection{}));
  sys.attacks.push_back(ParamPolytope(Matrix::Zero(0, 0), Vector(0), Matrix::Zero(0, 4)));
  sys.graph.nodes = {"s"};
  sys.graph.edges = {{"s", "s", "N"}};
  sys.label_to_mode = {{"N", 1}};
  sys.Z = HPolytope::box(4, zbound);
  sys.H = HPolytope::box(3, 0.0);
  return sys;
}

}  // namespace fixtures
