#pragma once

#include <algorithm>
#include <vector>

#include "polyreach/geometry.hpp"

namespace polyreach {

// Discrete-time plant under observer-based output feedback:
//
//   x+ = Ax + Bu + v,   y = Cx + w,   u = -K xhat,
//   xhat+ = A xhat + B u_applied + L (y_meas - C xhat).
//
// The analysis state is z = (x, e) with estimation error e = x - xhat; the
// estimator consumes the applied input and the measured output, so actuator
// and sensor corruption enter the z recursion through separate channels.
struct PlantModel {
  Matrix A, B, C;
  HPolytope X, U, Y;  // state, input, and measured-output constraints
  HPolytope V, W;     // process and measurement disturbance bounds
};

struct Gains {
  Matrix K;  // n_u x n state feedback
  Matrix L;  // n x n_y observer injection
};

// 1-based indices of attacked input and output channels.
struct ChannelSelection {
  std::vector<int> inputs;
  std::vector<int> outputs;
};

struct Detector {
  HPolytope R;  // residual acceptance set, a c-set
};

// One switching mode of the augmented system
//   z+ = A z + B a + E eta,   r = C z + D a + F eta,
// with a = (a_u, a_y) stacked over the attacked channels and eta = (v, w).
struct Mode {
  int id = 1;
  Matrix A, B, E, C, D, F;
  Matrix gamma_u, gamma_y;
  ChannelSelection sel;
  double rho = 0.0;
  bool stable = false;
};

struct AugmentedConstraints {
  HPolytope Z;  // constraint c-set in z space
  HPolytope H;  // disturbance c-set for eta = (v, w)
};

// Injection matrix with one unit column per selected channel, columns ordered
// by ascending channel index.
inline Matrix build_gamma(const std::vector<int>& selection, int total) {
  std::vector<int> s = selection;
  std::sort(s.begin(), s.end());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 1 || s[i] > total) throw IndexOutOfRange("build_gamma: channel index");
    if (i > 0 && s[i] == s[i - 1]) throw IndexOutOfRange("build_gamma: repeated channel");
  }
  Matrix g = Matrix::Zero(total, static_cast<int>(s.size()));
  for (size_t i = 0; i < s.size(); ++i) g(s[i] - 1, static_cast<int>(i)) = 1.0;
  return g;
}

// Single-input pole placement: K = e_n' Ctrb^-1 prod_i (A - p_i I).
inline Matrix ackermann_place(const Matrix& A, const Matrix& B,
                              const std::vector<double>& poles) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n) throw DimensionMismatch("ackermann_place: A not square");
  if (B.rows() != n || B.cols() != 1) throw DimensionMismatch("ackermann_place: B not n x 1");
  if (static_cast<int>(poles.size()) != n) throw DimensionMismatch("ackermann_place: pole count");
  Matrix ctrb(n, n);
  Matrix col = B;
  for (int i = 0; i < n; ++i) {
    ctrb.col(i) = col;
    col = A * col;
  }
  Eigen::FullPivLU<Matrix> lu(ctrb);
  if (lu.rank() < n) throw Uncontrollable("ackermann_place: controllability matrix is singular");
  Matrix phi = Matrix::Identity(n, n);
  for (double p : poles) phi = phi * (A - p * Matrix::Identity(n, n));
  Matrix sol = lu.solve(phi);
  return sol.row(n - 1);
}

inline double spectral_radius(const Matrix& M) {
  Eigen::EigenSolver<Matrix> es(M);
  double rho = 0.0;
  for (int i = 0; i < M.rows(); ++i) rho = std::max(rho, std::abs(es.eigenvalues()[i]));
  return rho;
}

inline Mode build_mode(const PlantModel& p, const Gains& gn, const ChannelSelection& sel,
                       int id = 1) {
  const int n = static_cast<int>(p.A.rows());
  const int n_u = static_cast<int>(p.B.cols());
  const int n_y = static_cast<int>(p.C.rows());
  if (p.A.cols() != n || p.B.rows() != n || p.C.cols() != n)
    throw DimensionMismatch("build_mode: plant matrices");
  if (gn.K.rows() != n_u || gn.K.cols() != n || gn.L.rows() != n || gn.L.cols() != n_y)
    throw DimensionMismatch("build_mode: gain matrices");

  Mode m;
  m.id = id;
  m.sel = sel;
  m.gamma_u = build_gamma(sel.inputs, n_u);
  m.gamma_y = build_gamma(sel.outputs, n_y);
  const int au = static_cast<int>(m.gamma_u.cols());
  const int ay = static_cast<int>(m.gamma_y.cols());

  m.A = Matrix::Zero(2 * n, 2 * n);
  m.A.topLeftCorner(n, n) = p.A - p.B * gn.K;
  m.A.topRightCorner(n, n) = p.B * gn.K;
  m.A.bottomRightCorner(n, n) = p.A - gn.L * p.C;

  m.B = Matrix::Zero(2 * n, au + ay);
  m.B.block(0, 0, n, au) = p.B * m.gamma_u;
  m.B.block(n, 0, n, au) = p.B * m.gamma_u;
  m.B.block(n, au, n, ay) = -gn.L * m.gamma_y;

  m.E = Matrix::Zero(2 * n, n + n_y);
  m.E.topLeftCorner(n, n).setIdentity();
  m.E.bottomLeftCorner(n, n).setIdentity();
  m.E.bottomRightCorner(n, n_y) = -gn.L;

  m.C = Matrix::Zero(n_y, 2 * n);
  m.C.rightCols(n) = p.C;
  m.D = Matrix::Zero(n_y, au + ay);
  m.D.rightCols(ay) = m.gamma_y;
  m.F = Matrix::Zero(n_y, n + n_y);
  m.F.rightCols(n_y).setIdentity();

  m.rho = spectral_radius(m.A);
  m.stable = m.rho < 1.0;
  return m;
}

// Constraint c-set in z space: state box, input rows through the feedback,
// measured-output rows eroded by the measurement noise, and a box on the
// estimation error.  Rows that vanish (zero feedback) drop out naturally.
inline AugmentedConstraints build_augmented_constraints(const PlantModel& p, const Gains& gn,
                                                        double e_max) {
  const int n = static_cast<int>(p.A.rows());
  const int n_y = static_cast<int>(p.C.rows());
  if (e_max <= 0.0) throw EmptyConstraintSet("build_augmented_constraints: e_max must be positive");

  HPolytope Ye = erode(p.Y, p.W);
  if (is_empty(Ye))
    throw EmptyConstraintSet("build_augmented_constraints: output set swallowed by noise");

  const int mx = p.X.rows(), mu = p.U.rows(), my = Ye.rows();
  Matrix G = Matrix::Zero(mx + mu + my + 2 * n, 2 * n);
  Vector g(mx + mu + my + 2 * n);
  int at = 0;
  G.block(at, 0, mx, n) = p.X.G();
  g.segment(at, mx) = p.X.g();
  at += mx;
  // u(z) = -K x + K e
  G.block(at, 0, mu, n) = -p.U.G() * gn.K;
  G.block(at, n, mu, n) = p.U.G() * gn.K;
  g.segment(at, mu) = p.U.g();
  at += mu;
  G.block(at, 0, my, n) = Ye.G() * p.C;
  g.segment(at, my) = Ye.g();
  at += my;
  for (int i = 0; i < n; ++i) {
    G(at, n + i) = 1.0;
    g[at] = e_max;
    ++at;
    G(at, n + i) = -1.0;
    g[at] = e_max;
    ++at;
  }

  AugmentedConstraints ac;
  ac.Z = HPolytope(G, g);
  if (!is_cset(ac.Z))
    throw EmptyConstraintSet("build_augmented_constraints: constraint set is not a c-set");

  const int mv = p.V.rows(), mw = p.W.rows();
  Matrix Gh = Matrix::Zero(mv + mw, n + n_y);
  Vector gh(mv + mw);
  Gh.block(0, 0, mv, n) = p.V.G();
  gh.head(mv) = p.V.g();
  Gh.block(mv, n, mw, n_y) = p.W.G();
  gh.tail(mw) = p.W.g();
  ac.H = HPolytope(Gh, gh);
  if (!is_cset(ac.H))
    throw EmptyConstraintSet("build_augmented_constraints: disturbance set is not a c-set");
  return ac;
}

// True when the residual leaves the acceptance set by more than eps.
inline bool residual_alarm(const Detector& det, const Vector& r, double eps = 1e-9) {
  if (det.R.explicitly_empty()) return true;
  if (r.size() != det.R.dim()) throw DimensionMismatch("residual_alarm: residual dimension");
  const double scale = 1.0 + det.R.g().cwiseAbs().maxCoeff();
  return ((det.R.G() * r - det.R.g()).array() > eps * scale).any();
}

}  // namespace polyreach
