// Random instance generators shared by the property tests and the acceptance
// checks.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dcsynth/chordal.h"
#include "dcsynth/graph.h"
#include "dcsynth/sdp.h"
#include "dcsynth/system_model.h"

namespace dcsynth::testgen {

inline ChordalStructure LineCliques(int n) {
  UndirectedGraph g(n);
  for (int i = 0; i + 1 < n; ++i) g.AddEdge(i, i + 1);
  return MaximalCliques(g);
}

// Random PSD matrix supported on the chordal graph: a sum of low-rank Gram
// terms, one per clique. Rank-one terms make the equal split indefinite in
// many draws, which exercises the elimination sweep.
inline Mat RandomCliqueSupportedPsd(const ChordalStructure& cs, const std::vector<int>& sizes,
                                    std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> rank(1, 2);
  const int n = BlockOffsets(sizes).back();
  Mat x = Mat::Zero(n, n);
  for (const auto& c : cs.cliques) {
    int d = 0;
    for (int v : c) d += sizes[v];
    const Mat f = Mat::NullaryExpr(d, rank(rng), [&] { return g(rng); });
    x += Inflate(f * f.transpose(), c, sizes);
  }
  return x;
}

/// Line, star and (for n = 4) the two-triangle pattern on n nodes.
inline std::vector<ChordalStructure> PropertyPatterns(int n) {
  UndirectedGraph star(n);
  for (int i = 1; i < n; ++i) star.AddEdge(0, i);
  std::vector<ChordalStructure> out{LineCliques(n), MaximalCliques(star)};
  if (n == 4) {
    out.push_back(MaximalCliques(UndirectedGraph(4, {{0, 1}, {0, 3}, {1, 2}, {1, 3}, {2, 3}})));
  }
  return out;
}

// Random feasible problem: equalities Tr(A_k X) = Tr(A_k X0) for a positive
// definite X0, plus a coupled LMI, with a positive definite cost so the
// optimum is attained.
struct RandomSdp {
  SdpProblem problem;
  Var x, w;
  std::vector<Mat> a;
  std::vector<double> b;
  Mat c;
};

inline RandomSdp MakeRandomSdp(std::mt19937_64& rng, double row_scale) {
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> dim(2, 4), count(1, 3);
  RandomSdp r;
  const int n = dim(rng);
  auto sym = [&] {
    Mat m = Mat::NullaryExpr(n, n, [&] { return g(rng); });
    return Mat(0.5 * (m + m.transpose()));
  };
  const Mat h = Mat::NullaryExpr(n, n, [&] { return g(rng); });
  const Mat x0 = h * h.transpose() + Mat::Identity(n, n);
  r.x = r.problem.AddPsd(n);
  r.w = r.problem.AddSymmetric(n);
  const int m = count(rng);
  for (int k = 0; k < m; ++k) {
    r.a.push_back(sym());
    r.b.push_back((r.a.back() * x0).trace());
    MatExpr e = MatExpr::Zero(1, 1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Mat sel = Mat::Zero(1, n);
        sel(0, i) = 1;
        Mat col = Mat::Zero(n, 1);
        col(j, 0) = r.a.back()(j, i);
        e += sel * MatExpr(r.x) * col;
      }
    r.problem.AddEquality(row_scale * (e - MatExpr::Constant(Mat::Constant(1, 1, r.b.back()))));
  }
  // W <= X - I/2 keeps the LMI block coupled to the equalities.
  r.problem.AddLmi(MatExpr(r.x) - MatExpr(r.w) - MatExpr::Constant(0.5 * Mat::Identity(n, n)));
  const Mat f = Mat::NullaryExpr(n, n, [&] { return g(rng); });
  r.c = f * f.transpose() + 0.1 * Mat::Identity(n, n);
  r.problem.AddTraceObjective(r.c, r.x);
  r.problem.AddProximal(r.w, sym(), 1.0);
  return r;
}

// Chain of 2..5 subsystems with 1..2 states, square random inputs and
// couplings in [-1, 1].
inline InterconnectedSystem RandomChain(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> count(2, 5), dim(1, 2);
  const int n = count(rng);
  std::vector<int> d(n);
  std::vector<SubsystemModel> subs;
  for (int i = 0; i < n; ++i) {
    d[i] = dim(rng);
    Mat b = Mat::NullaryExpr(d[i], d[i], [&] { return u(rng); });
    b += 2.0 * Mat::Identity(d[i], d[i]);
    subs.push_back({Mat::NullaryExpr(d[i], d[i], [&] { return u(rng); }), b,
                    Mat::Identity(d[i], d[i]), SymMat::Identity(d[i]), SymMat::Identity(d[i])});
  }
  std::vector<CouplingBlock> cps;
  for (int i = 0; i + 1 < n; ++i) {
    cps.push_back({i, i + 1, Mat::NullaryExpr(d[i], d[i + 1], [&] { return u(rng); })});
    cps.push_back({i + 1, i, Mat::NullaryExpr(d[i + 1], d[i], [&] { return u(rng); })});
  }
  return InterconnectedSystem(subs, cps);
}

/// 2x2 matrix P C P^-1 with C either diag(r1, r2) or a rotation-scaled block
/// with real part r1. The largest real part of the spectrum goes to `max_re`
/// and is kept at least 0.3 away from zero.
inline Mat RandomKnownSpectrum(std::mt19937_64& rng, double* max_re) {
  std::uniform_real_distribution<double> re(-2.0, 2.0), im(0.0, 3.0), mix(-1.0, 1.0);
  std::bernoulli_distribution complex_pair(0.5);
  double r1 = re(rng), r2 = re(rng);
  if (std::abs(r1) < 0.3) r1 = std::copysign(0.3, r1);
  if (std::abs(r2) < 0.3) r2 = std::copysign(0.3, r2);
  Mat core = Mat::Zero(2, 2);
  if (complex_pair(rng)) {
    const double w = im(rng);
    core << r1, w, -w, r1;
    *max_re = r1;
  } else {
    core << r1, 0, 0, r2;
    *max_re = std::max(r1, r2);
  }
  Mat p(2, 2);
  p << 1, mix(rng), mix(rng) * 0.5, 1;
  return p * core * p.inverse();
}

// exp(At) x0 integrated with a fine RK4 step, for a spectrum kept away from
// the imaginary axis so decay and growth separate clearly by t = 60.
inline bool TrajectoryDecays(const Mat& a) {
  const double dt = 0.005;
  double growth = 0;
  for (int c = 0; c < 2; ++c) {
    Vec x = Vec::Unit(2, c);
    for (int step = 0; step < 12000; ++step) {
      const Vec k1 = a * x;
      const Vec k2 = a * (x + 0.5 * dt * k1);
      const Vec k3 = a * (x + 0.5 * dt * k2);
      const Vec k4 = a * (x + dt * k3);
      x += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    growth = std::max(growth, x.norm());
  }
  return growth < 1e-3;
}

/// Coupled chain whose blocks all have square invertible inputs.
inline InterconnectedSystem RandomFullyActuated(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> count(2, 4), dim(1, 3);
  const int n = count(rng);
  std::vector<int> d(n);
  std::vector<SubsystemModel> subs;
  for (int i = 0; i < n; ++i) {
    d[i] = dim(rng);
    Mat b = Mat::NullaryExpr(d[i], d[i], [&] { return g(rng); });
    b += 3.0 * Mat::Identity(d[i], d[i]);
    subs.push_back({Mat::NullaryExpr(d[i], d[i], [&] { return 2.0 * g(rng); }), b,
                    Mat::Identity(d[i], d[i]), SymMat::Identity(d[i]), SymMat::Identity(d[i])});
  }
  std::vector<CouplingBlock> cps;
  for (int i = 0; i + 1 < n; ++i) {
    cps.push_back({i, i + 1, Mat::NullaryExpr(d[i], d[i + 1], [&] { return 2.0 * g(rng); })});
    cps.push_back({i + 1, i, Mat::NullaryExpr(d[i + 1], d[i], [&] { return 2.0 * g(rng); })});
  }
  return InterconnectedSystem(subs, cps);
}

/// Chain of scalar nodes with random actuation and couplings in
/// [-bound, bound]. Some draws leave nodes unactuated.
inline InterconnectedSystem RandomWeakChain(std::mt19937_64& rng, double bound) {
  std::uniform_real_distribution<double> a(-2.0, 1.0), b(0.0, 2.0), c(-bound, bound);
  std::uniform_int_distribution<int> count(2, 5);
  std::bernoulli_distribution actuated(0.8);
  const int n = count(rng);
  std::vector<SubsystemModel> subs;
  for (int i = 0; i < n; ++i) {
    subs.push_back({Mat::Constant(1, 1, a(rng)), Mat::Constant(1, 1, actuated(rng) ? b(rng) : 0.0),
                    Mat::Ones(1, 1), SymMat::Identity(1), SymMat::Identity(1)});
  }
  std::vector<CouplingBlock> cps;
  for (int i = 0; i + 1 < n; ++i) {
    cps.push_back({i, i + 1, Mat::Constant(1, 1, c(rng))});
    cps.push_back({i + 1, i, Mat::Constant(1, 1, c(rng))});
  }
  return InterconnectedSystem(subs, cps);
}

}  // namespace dcsynth::testgen
