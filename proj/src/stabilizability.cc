#include "dcsynth/stabilizability.h"

#include <cmath>

#include "dcsynth/errors.h"
#include "dcsynth/sdp.h"

namespace dcsynth {

namespace {

LmiCheck FromFeasibility(const FeasibilityResult& f) {
  LmiCheck c;
  c.feasible = f.feasible;
  c.indeterminate = f.indeterminate;
  c.diagnostic = std::string(ToString(f.solution.status));
  if (!f.solution.diagnostic.empty()) c.diagnostic += ": " + f.solution.diagnostic;
  return c;
}

}  // namespace

bool CheckFullyActuated(const InterconnectedSystem& sys, double rank_tol) {
  for (const SubsystemModel& s : sys.subsystems()) {
    if (s.b.cols() < s.b.rows()) return false;
    const Vec sv = ComputeSvd(s.b).singular_values;
    const double smin = sv(s.b.rows() - 1);
    if (!(smin > rank_tol * sv(0))) return false;
  }
  return true;
}

std::vector<double> FullyActuatedShifts(const InterconnectedSystem& sys, double margin) {
  if (!(margin > 0)) throw ValidationError("margin must be positive");
  std::vector<double> alpha;
  for (int i = 0; i < sys.num_subsystems(); ++i) {
    Vec row_sums = Vec::Zero(sys.partition().state_sizes()[i]);
    for (const CouplingBlock& c : sys.couplings()) {
      if (c.target == i) row_sums += c.a.cwiseAbs().rowwise().sum();
    }
    alpha.push_back(margin + (row_sums.size() ? row_sums.maxCoeff() : 0.0));
  }
  return alpha;
}

DecentralizedController FullyActuatedGain(const InterconnectedSystem& sys, double margin) {
  if (!CheckFullyActuated(sys)) {
    throw DomainError("fully actuated construction needs full row rank B_i");
  }
  const std::vector<double> alpha = FullyActuatedShifts(sys, margin);
  DecentralizedController k;
  for (int i = 0; i < sys.num_subsystems(); ++i) {
    const SubsystemModel& s = sys.subsystem(i);
    const Svd svd = ComputeSvd(s.b);
    const int ni = static_cast<int>(s.b.rows()), mi = static_cast<int>(s.b.cols());
    // Right inverse V [Gamma^{-1}; 0] U'.
    Mat inv = Mat::Zero(mi, ni);
    for (int r = 0; r < ni; ++r) inv(r, r) = 1.0 / svd.singular_values(r);
    const Mat right_inv = svd.v * inv * svd.u.transpose();
    k.gains.push_back(right_inv * (s.a + alpha[i] * Mat::Identity(ni, ni)));
  }
  return k;
}

LmiCheck CheckStabilizableLmi(const Mat& a, const Mat& b, Mat* gain) {
  if (a.rows() != a.cols() || b.rows() != a.rows()) {
    throw ValidationError("CheckStabilizableLmi: dimension mismatch");
  }
  const int n = static_cast<int>(a.rows()), m = static_cast<int>(b.cols());
  // The constraint set is a cone, so unit margins lose no generality.
  SdpProblem p;
  const Var x = p.AddPsd(n, 1.0);
  const Var z = p.AddFree(m, n);
  const MatExpr g = a * MatExpr(x) - b * MatExpr(z);
  p.AddLmi(-(g + g.Transpose()), 1.0);
  const FeasibilityResult f = CheckFeasible(p);
  LmiCheck c = FromFeasibility(f);
  if (c.feasible && gain) *gain = RecoverGain(f.solution.Value(z), f.solution.Value(x));
  return c;
}

bool TopologicalReport::certified() const {
  if (!acyclic) return false;
  for (bool b : node_stabilizable) {
    if (!b) return false;
  }
  return true;
}

TopologicalReport CheckTopologicallyWeak(const InterconnectedSystem& sys) {
  TopologicalReport r;
  r.acyclic = IsAcyclic(sys.plant_graph());
  for (const SubsystemModel& s : sys.subsystems()) {
    Mat k;
    const LmiCheck c = CheckStabilizableLmi(s.a, s.b, &k);
    r.node_stabilizable.push_back(c.feasible);
    r.node_indeterminate.push_back(c.indeterminate);
    r.local_gains.push_back(c.feasible ? k : Mat::Zero(s.b.cols(), s.a.rows()));
  }
  return r;
}

WeightAssignment IdentityWeights(const InterconnectedSystem& sys) {
  WeightAssignment w;
  for (const CouplingBlock& c : sys.couplings()) {
    const int nj = sys.partition().state_sizes()[c.source];
    w[{c.target, c.source}] = Mat::Identity(nj, nj);
  }
  return w;
}

std::optional<DynamicallyWeakCertificate> CheckDynamicallyWeak(
    const InterconnectedSystem& sys, const WeightAssignment& weights) {
  for (const CouplingBlock& c : sys.couplings()) {
    auto it = weights.find({c.target, c.source});
    if (it == weights.end()) throw ValidationError("missing weight for a coupling block");
    const int nj = sys.partition().state_sizes()[c.source];
    if (it->second.rows() != nj || it->second.cols() != nj ||
        ClassifyPsd(SymMat(it->second)).kind != PsdKind::kPositiveDefinite) {
      throw ValidationError("weights must be positive definite and sized n_j");
    }
  }
  const double eps = StrictMargin(sys);
  DynamicallyWeakCertificate cert;
  cert.weights = weights;
  for (int i = 0; i < sys.num_subsystems(); ++i) {
    const SubsystemModel& s = sys.subsystem(i);
    const int ni = static_cast<int>(s.a.rows()), mi = static_cast<int>(s.b.cols());
    Mat in_term = Mat::Zero(ni, ni);   // sum_j A_ij W_ij^{-1} A_ij'
    Mat out_sum = Mat::Zero(ni, ni);   // sum over j influenced by i of W_ji
    for (const CouplingBlock& c : sys.couplings()) {
      const Mat& w = weights.at({c.target, c.source});
      if (c.target == i) in_term += c.a * w.llt().solve(c.a.transpose());
      if (c.source == i) out_sum += w;
    }
    const Mat w_hat = SymSqrt(SymMat(out_sum)).matrix();
    SdpProblem p;
    const Var x = p.AddPsd(ni, eps);
    const Var z = p.AddFree(mi, ni);
    const MatExpr g = s.a * MatExpr(x) - s.b * MatExpr(z);
    const MatExpr top = g + g.Transpose() + MatExpr::Constant(in_term);
    const MatExpr off = MatExpr(x) * w_hat;
    const MatExpr lmi = MatExpr::Blocks(
        {{top, off}, {off.Transpose(), MatExpr::Constant(-Mat::Identity(ni, ni))}});
    p.AddLmi(-lmi, eps);
    const FeasibilityResult f = CheckFeasible(p);
    if (!f.feasible) return std::nullopt;
    const Mat xv = f.solution.Value(x), zv = f.solution.Value(z);
    cert.x.push_back(xv);
    cert.z.push_back(zv);
    cert.p.push_back(xv.inverse());
    cert.gain.gains.push_back(RecoverGain(zv, xv));
  }
  return cert;
}

LmiCheck BlockDiagonalLyapunov(const InterconnectedSystem& sys, const Mat& closed_loop) {
  const BlockPartition& part = sys.partition();
  if (closed_loop.rows() != part.total_states() || closed_loop.cols() != part.total_states()) {
    throw ValidationError("closed loop has wrong dimension");
  }
  SdpProblem p;
  std::vector<std::vector<MatExpr>> blocks(sys.num_subsystems(),
                                           std::vector<MatExpr>(sys.num_subsystems()));
  for (int i = 0; i < sys.num_subsystems(); ++i) {
    for (int j = 0; j < sys.num_subsystems(); ++j) {
      blocks[i][j] = MatExpr::Zero(part.state_sizes()[i], part.state_sizes()[j]);
    }
    blocks[i][i] = MatExpr(p.AddPsd(part.state_sizes()[i], 1.0));
  }
  const MatExpr pm = MatExpr::Blocks(blocks);
  const MatExpr lyap = closed_loop.transpose() * pm + pm * closed_loop;
  p.AddLmi(-lyap, 1.0);
  return FromFeasibility(CheckFeasible(p));
}

const char* ToString(GainSource s) {
  switch (s) {
    case GainSource::kRestriction: return "Restriction";
    case GainSource::kDynamicallyWeak: return "DynamicallyWeak";
    case GainSource::kAcyclic: return "Acyclic";
    case GainSource::kFullyActuated: return "FullyActuated";
  }
  return "Unknown";
}

bool StabilizabilityReport::sigma2_certified() const {
  return fully_actuated || topological.certified() || dynamically_weak.has_value() ||
         restriction.has_value();
}

StabilizabilityReport Classify(const InterconnectedSystem& sys) {
  StabilizabilityReport r;
  r.fully_actuated = CheckFullyActuated(sys);
  r.topological = CheckTopologicallyWeak(sys);
  r.dynamically_weak = CheckDynamicallyWeak(sys, IdentityWeights(sys));
  SynthesisResult restr = SolveRestriction(sys);
  r.restriction_status = restr.status;
  if (restr.ok()) r.restriction = restr;
  const GlobalMatrices g = AssembleGlobal(sys);
  r.sigma0 = CheckStabilizableLmi(g.a, g.b);

  if (r.restriction) {
    r.constructed_gain = r.restriction->controller;
    r.gain_source = GainSource::kRestriction;
  } else if (r.dynamically_weak) {
    r.constructed_gain = r.dynamically_weak->gain;
    r.gain_source = GainSource::kDynamicallyWeak;
  } else if (r.topological.certified()) {
    r.constructed_gain = DecentralizedController{r.topological.local_gains};
    r.gain_source = GainSource::kAcyclic;
  } else if (r.fully_actuated) {
    r.constructed_gain = FullyActuatedGain(sys);
    r.gain_source = GainSource::kFullyActuated;
  }
  return r;
}

}  // namespace dcsynth
