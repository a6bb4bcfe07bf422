#include "dcsynth/synth.h"

#include <cmath>

#include "dcsynth/errors.h"

namespace dcsynth {

const char* ToString(SynthStatus s) {
  switch (s) {
    case SynthStatus::kSuccess: return "success";
    case SynthStatus::kInfeasible: return "infeasible";
    case SynthStatus::kNotStabilizing: return "not_stabilizing";
    case SynthStatus::kNumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

double StrictMargin(const InterconnectedSystem& sys, double margin_scale) {
  const GlobalMatrices g = AssembleGlobal(sys);
  const double data = std::max({g.a.norm(), g.b.norm(), g.m.norm()});
  return margin_scale * std::max(1.0, data);
}

Mat RecoverGain(const Mat& z, const Mat& x) {
  Eigen::FullPivLU<Mat> lu(x.transpose());
  const double rc = lu.rcond();
  if (!(rc > 1e-10)) {
    throw NumericalError("Lyapunov block too ill-conditioned for gain recovery (rcond " +
                         std::to_string(rc) + ")");
  }
  return lu.solve(z.transpose()).transpose();
}

double H2Norm(const InterconnectedSystem& sys, const Mat& global_gain) {
  const GlobalMatrices g = AssembleGlobal(sys);
  if (global_gain.rows() != g.b.cols() || global_gain.cols() != g.a.rows()) {
    throw ValidationError("H2Norm: gain has wrong shape");
  }
  const Mat acl = g.a - g.b * global_gain;
  std::string why;
  if (!IsHurwitz(acl, &why)) throw DomainError("closed loop is not Hurwitz: " + why);
  const SymMat w = SolveLyapunov(acl, SymMat(g.m * g.m.transpose()));
  const double val = (g.q.matrix() * w.matrix()).trace() +
                     (global_gain.transpose() * g.r.matrix() * global_gain * w.matrix()).trace();
  return std::sqrt(std::max(0.0, val));
}

double H2Norm(const InterconnectedSystem& sys, const DecentralizedController& k) {
  return H2Norm(sys, GlobalGain(sys, k));
}

void Certify(const InterconnectedSystem& sys, SynthesisResult* r) {
  const GlobalMatrices g = AssembleGlobal(sys);
  std::string why;
  if (!IsHurwitz(g.a - g.b * r->gain, &why)) {
    r->status = SynthStatus::kNotStabilizing;
    r->message = "closed loop is not Hurwitz: " + why;
    return;
  }
  r->h2 = H2Norm(sys, r->gain);
  r->status = SynthStatus::kSuccess;
}

namespace {

SynthStatus FromSdp(SdpStatus s) {
  return s == SdpStatus::kInfeasible ? SynthStatus::kInfeasible
                                     : SynthStatus::kNumericalFailure;
}

Mat DiagonalBlocksGain(const InterconnectedSystem& sys, const Mat& dense,
                       DecentralizedController* k) {
  const BlockPartition& p = sys.partition();
  k->gains.clear();
  for (int i = 0; i < sys.num_subsystems(); ++i) {
    k->gains.push_back(dense.block(p.input_offset(i), p.state_offset(i),
                                   p.input_sizes()[i], p.state_sizes()[i]));
  }
  return GlobalGain(sys, *k);
}

}  // namespace

SynthesisResult SolveRestriction(const InterconnectedSystem& sys, const SynthOptions& opts) {
  const int nsub = sys.num_subsystems();
  const BlockPartition& p = sys.partition();
  const double eps = StrictMargin(sys, opts.margin_scale);
  SdpProblem prob;
  std::vector<Var> xv, yv, zv;
  for (int i = 0; i < nsub; ++i) {
    xv.push_back(prob.AddPsd(p.state_sizes()[i], eps));
    yv.push_back(prob.AddSymmetric(p.input_sizes()[i]));
    zv.push_back(prob.AddFree(p.input_sizes()[i], p.state_sizes()[i]));
  }
  std::vector<std::vector<MatExpr>> f(nsub, std::vector<MatExpr>(nsub));
  for (int i = 0; i < nsub; ++i) {
    const SubsystemModel& s = sys.subsystem(i);
    const MatExpr g = s.a * MatExpr(xv[i]) - s.b * MatExpr(zv[i]);
    f[i][i] = -(g + g.Transpose()) - MatExpr::Constant(s.m * s.m.transpose());
    for (int j = 0; j < nsub; ++j) {
      if (j == i) continue;
      const Mat* a_ij = sys.Coupling(i, j);
      const Mat* a_ji = sys.Coupling(j, i);
      MatExpr blk = MatExpr::Zero(p.state_sizes()[i], p.state_sizes()[j]);
      if (a_ij) blk -= *a_ij * MatExpr(xv[j]);
      if (a_ji) blk -= MatExpr(xv[i]) * a_ji->transpose();
      f[i][j] = blk;
    }
    prob.AddLmi(MatExpr::Blocks({{MatExpr(yv[i]), MatExpr(zv[i])},
                                 {MatExpr(zv[i]).Transpose(), MatExpr(xv[i])}}));
    prob.AddTraceObjective(s.q.matrix(), xv[i]);
    prob.AddTraceObjective(s.r.matrix(), yv[i]);
  }
  prob.AddLmi(MatExpr::Blocks(f), eps);

  SynthesisResult r;
  const SdpSolution sol = SolveSdp(prob, opts.sdp);
  r.iterations = sol.iterations;
  if (!sol.optimal()) {
    r.status = FromSdp(sol.status);
    r.message = sol.status == SdpStatus::kInfeasible
                    ? "not certified strongly decentralized stabilizable with this restriction"
                    : std::string("SDP solver: ") + ToString(sol.status) + " " + sol.diagnostic;
    return r;
  }
  r.objective = sol.primal_objective;
  try {
    for (int i = 0; i < nsub; ++i) {
      r.x.push_back(sol.Value(xv[i]));
      r.y.push_back(sol.Value(yv[i]));
      r.z.push_back(sol.Value(zv[i]));
      r.controller.gains.push_back(RecoverGain(r.z[i], r.x[i]));
    }
  } catch (const NumericalError& e) {
    r.status = SynthStatus::kNumericalFailure;
    r.message = e.what();
    return r;
  }
  r.gain = GlobalGain(sys, r.controller);
  Certify(sys, &r);
  return r;
}

SynthesisResult SolveUnstructuredH2(const InterconnectedSystem& sys, const SynthOptions& opts) {
  const GlobalMatrices g = AssembleGlobal(sys);
  const int n = static_cast<int>(g.a.rows()), m = static_cast<int>(g.b.cols());
  const double eps = StrictMargin(sys, opts.margin_scale);
  SdpProblem prob;
  const Var x = prob.AddPsd(n, eps);
  const Var y = prob.AddSymmetric(m);
  const Var z = prob.AddFree(m, n);
  const MatExpr gx = g.a * MatExpr(x) - g.b * MatExpr(z);
  prob.AddLmi(-(gx + gx.Transpose()) - MatExpr::Constant(g.m * g.m.transpose()), eps);
  prob.AddLmi(MatExpr::Blocks({{MatExpr(y), MatExpr(z)}, {MatExpr(z).Transpose(), MatExpr(x)}}));
  prob.AddTraceObjective(g.q.matrix(), x);
  prob.AddTraceObjective(g.r.matrix(), y);

  SynthesisResult r;
  const SdpSolution sol = SolveSdp(prob, opts.sdp);
  r.iterations = sol.iterations;
  if (!sol.optimal()) {
    r.status = FromSdp(sol.status);
    r.message = sol.status == SdpStatus::kInfeasible
                    ? "pair (A, B) is not stabilizable"
                    : std::string("SDP solver: ") + ToString(sol.status) + " " + sol.diagnostic;
    return r;
  }
  r.objective = sol.primal_objective;
  r.x = {sol.Value(x)};
  r.y = {sol.Value(y)};
  r.z = {sol.Value(z)};
  try {
    r.gain = RecoverGain(r.z[0], r.x[0]);
  } catch (const NumericalError& e) {
    r.status = SynthStatus::kNumericalFailure;
    r.message = e.what();
    return r;
  }
  DiagonalBlocksGain(sys, r.gain, &r.controller);
  Certify(sys, &r);
  return r;
}

SynthesisResult TruncatedLqr(const InterconnectedSystem& sys, const SynthOptions& opts) {
  SynthesisResult full = SolveUnstructuredH2(sys, opts);
  if (full.status != SynthStatus::kSuccess) return full;
  SynthesisResult r;
  r.iterations = full.iterations;
  r.objective = full.objective;
  r.gain = DiagonalBlocksGain(sys, full.gain, &r.controller);
  Certify(sys, &r);
  if (r.status == SynthStatus::kNotStabilizing) r.message = "destabilizing truncation";
  return r;
}

SynthesisResult LocalizedLqr(const InterconnectedSystem& sys, const SynthOptions& opts) {
  SynthesisResult r;
  for (int i = 0; i < sys.num_subsystems(); ++i) {
    const InterconnectedSystem local({sys.subsystem(i)}, {});
    SynthesisResult li = SolveUnstructuredH2(local, opts);
    r.iterations += li.iterations;
    if (li.status != SynthStatus::kSuccess) {
      r.status = li.status;
      r.message = "subsystem " + std::to_string(i + 1) + ": " + li.message;
      return r;
    }
    r.objective += li.objective;
    r.controller.gains.push_back(li.gain);
  }
  r.gain = GlobalGain(sys, r.controller);
  Certify(sys, &r);
  if (r.status == SynthStatus::kNotStabilizing) {
    r.message = "local gains destabilize the coupled system";
  }
  return r;
}

}  // namespace dcsynth
