#include "dcsynth/admm.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dcsynth/errors.h"
#include "parallel.h"

namespace dcsynth {

namespace {

MatExpr FDiagonalExpr(const SubsystemModel& s, const Var& x, const Var& z) {
  const MatExpr g = s.a * MatExpr(x) - s.b * MatExpr(z);
  return -(g + g.Transpose()) - MatExpr::Constant(s.m * s.m.transpose());
}

MatExpr SchurBlock(const Var& x, const Var& y, const Var& z) {
  return MatExpr::Blocks({{MatExpr(y), MatExpr(z)}, {MatExpr(z).Transpose(), MatExpr(x)}});
}

double TraceObjective(const SubsystemModel& s, const Mat& x, const Mat& y) {
  return (s.q.matrix() * x).trace() + (s.r.matrix() * y).trace();
}

std::string SdpFailure(const std::string& who, const SdpSolution& sol) {
  std::ostringstream os;
  os << who << ": " << ToString(sol.status);
  if (!sol.diagnostic.empty()) os << " (" << sol.diagnostic << ")";
  return os.str();
}

}  // namespace

const char* ToString(ConsensusKind k) {
  switch (k) {
    case ConsensusKind::kNodeX: return "node_x";
    case ConsensusKind::kNodeJ: return "node_j";
    case ConsensusKind::kEdgeXHead: return "edge_x_head";
    case ConsensusKind::kEdgeXTail: return "edge_x_tail";
    case ConsensusKind::kEdgeJ: return "edge_j";
  }
  return "?";
}

ChordalStructure PlantChordalStructure(const InterconnectedSystem& sys) {
  UndirectedGraph g = UndirectedClosure(sys.plant_graph());
  if (!IsChordal(g)) g = ChordalExtension(g);
  return MaximalCliques(g);
}

ConsensusLayout BuildLayout(const BlockPartition& partition, const ChordalStructure& cs) {
  ConsensusLayout l;
  l.structure = cs;
  l.blocks = CliqueBlocks(cs);
  l.state_sizes = partition.state_sizes();
  l.input_sizes = partition.input_sizes();
  const auto& n = l.state_sizes;
  const int num_cliques = static_cast<int>(cs.cliques.size());
  l.clique_equations.resize(num_cliques);
  auto add = [&](ConsensusEquation eq) {
    const int idx = static_cast<int>(l.equations.size());
    l.equations.push_back(eq);
    l.clique_equations[eq.clique].push_back(idx);
    if (eq.node >= 0) {
      l.node_equations[eq.node].push_back(idx);
    } else {
      l.edge_equations[eq.edge].push_back(idx);
    }
    l.consensus_dim += eq.size();
  };
  for (int k = 0; k < num_cliques; ++k) {
    const auto& c = l.blocks.cliques[k];
    for (int i : c.shared_nodes) {
      add({ConsensusKind::kNodeX, k, i, {-1, -1}, n[i], n[i]});
      add({ConsensusKind::kNodeJ, k, i, {-1, -1}, n[i], n[i]});
    }
    for (const Edge& e : c.shared_edges) {
      const int i = e.first, j = e.second;
      add({ConsensusKind::kEdgeXHead, k, -1, e, n[j], n[j]});
      add({ConsensusKind::kEdgeXTail, k, -1, e, n[i], n[i]});
      add({ConsensusKind::kEdgeJ, k, -1, e, n[i], n[j]});
    }
  }
  return l;
}

ConsensusLayout BuildLayout(const InterconnectedSystem& sys) {
  return BuildLayout(sys.partition(), PlantChordalStructure(sys));
}

CliqueShard MakeCliqueShard(const InterconnectedSystem& sys, const ConsensusLayout& layout,
                            int clique) {
  CliqueShard s;
  s.clique = clique;
  s.nodes = layout.structure.cliques.at(clique);
  for (int i : s.nodes) s.subsystems.emplace(i, sys.subsystem(i));
  for (int i : s.nodes) {
    for (int j : s.nodes) {
      if (const Mat* a = sys.Coupling(i, j)) s.couplings.emplace(Edge{i, j}, *a);
    }
  }
  return s;
}

NodeShard MakeNodeShard(const InterconnectedSystem& sys, int node) {
  return NodeShard{node, sys.subsystem(node)};
}

EdgeShard MakeEdgeShard(const InterconnectedSystem& sys, const Edge& edge) {
  return EdgeShard{edge, sys.CouplingOrZero(edge.first, edge.second),
                   sys.CouplingOrZero(edge.second, edge.first)};
}

CliqueUpdate XUpdate(const CliqueShard& shard, const ConsensusLayout& layout,
                     const std::vector<Mat>& targets, double rho, double margin) {
  const int k = shard.clique;
  const auto& c = layout.blocks.cliques.at(k);
  const auto& eqs = layout.clique_equations.at(k);
  if (targets.size() != eqs.size()) throw ValidationError("XUpdate: wrong number of targets");
  const auto& n = layout.state_sizes;
  const auto& m = layout.input_sizes;

  SdpProblem prob;
  std::map<int, Var> xv, yv, zv, jn;
  std::map<Edge, Var> je;
  for (int i : c.exclusive_nodes) {
    xv[i] = prob.AddPsd(n[i], margin);
    yv[i] = prob.AddSymmetric(m[i]);
    zv[i] = prob.AddFree(m[i], n[i]);
  }
  for (int i : c.shared_nodes) {
    xv[i] = prob.AddPsd(n[i], margin);
    jn[i] = prob.AddSymmetric(n[i]);
  }
  for (const Edge& e : c.shared_edges) je[e] = prob.AddFree(n[e.first], n[e.second]);

  const int size = static_cast<int>(c.nodes.size());
  std::vector<std::vector<MatExpr>> blocks(size, std::vector<MatExpr>(size));
  for (int a = 0; a < size; ++a) {
    const int i = c.nodes[a];
    blocks[a][a] = jn.count(i) ? MatExpr(jn.at(i))
                               : FDiagonalExpr(shard.subsystems.at(i), xv.at(i), zv.at(i));
    for (int b = a + 1; b < size; ++b) {
      const int j = c.nodes[b];
      MatExpr blk;
      if (je.count({i, j})) {
        blk = MatExpr(je.at({i, j}));
      } else {
        blk = MatExpr::Zero(n[i], n[j]);
        auto ij = shard.couplings.find({i, j});
        auto ji = shard.couplings.find({j, i});
        if (ij != shard.couplings.end()) blk -= ij->second * MatExpr(xv.at(j));
        if (ji != shard.couplings.end()) blk -= MatExpr(xv.at(i)) * ji->second.transpose();
      }
      blocks[b][a] = blk.Transpose();
      blocks[a][b] = std::move(blk);
    }
  }
  prob.AddLmi(MatExpr::Blocks(blocks), margin);
  for (int i : c.exclusive_nodes) {
    prob.AddLmi(SchurBlock(xv[i], yv[i], zv[i]));
    prob.AddTraceObjective(shard.subsystems.at(i).q.matrix(), xv[i]);
    prob.AddTraceObjective(shard.subsystems.at(i).r.matrix(), yv[i]);
  }

  std::vector<MatExpr> local;
  local.reserve(eqs.size());
  for (int idx : eqs) {
    const ConsensusEquation& eq = layout.equations[idx];
    switch (eq.kind) {
      case ConsensusKind::kNodeX: local.emplace_back(xv.at(eq.node)); break;
      case ConsensusKind::kNodeJ: local.emplace_back(jn.at(eq.node)); break;
      case ConsensusKind::kEdgeXHead: local.emplace_back(xv.at(eq.edge.second)); break;
      case ConsensusKind::kEdgeXTail: local.emplace_back(xv.at(eq.edge.first)); break;
      case ConsensusKind::kEdgeJ: local.emplace_back(je.at(eq.edge)); break;
    }
  }
  for (size_t e = 0; e < eqs.size(); ++e) prob.AddProximal(local[e], targets[e], rho);

  CliqueUpdate out;
  const SdpSolution sol = SolveSdp(prob);
  out.status = sol.status;
  if (!sol.optimal()) {
    out.diagnostic = SdpFailure("clique " + std::to_string(k + 1), sol);
    return out;
  }
  for (const MatExpr& e : local) out.shared.push_back(sol.Value(e));
  for (int i : c.exclusive_nodes) {
    NodeVariables v{sol.Value(xv[i]), sol.Value(yv[i]), sol.Value(zv[i])};
    out.objective += TraceObjective(shard.subsystems.at(i), v.x, v.y);
    out.exclusive.emplace(i, std::move(v));
  }
  return out;
}

CoordinatorUpdate YUpdateNode(const NodeShard& shard, const ConsensusLayout& layout,
                              const std::vector<Mat>& targets, double rho, double margin) {
  const int i = shard.node;
  const auto& eqs = layout.node_equations.at(i);
  if (targets.size() != eqs.size()) throw ValidationError("YUpdateNode: wrong number of targets");
  const int ni = layout.state_sizes[i], mi = layout.input_sizes[i];
  const SubsystemModel& s = shard.subsystem;

  SdpProblem prob;
  const Var x = prob.AddPsd(ni, margin);
  const Var y = prob.AddSymmetric(mi);
  const Var z = prob.AddFree(mi, ni);
  std::vector<MatExpr> value;
  MatExpr sum = MatExpr::Zero(ni, ni);
  for (int idx : eqs) {
    if (layout.equations[idx].kind == ConsensusKind::kNodeX) {
      value.emplace_back(x);
    } else {
      const Var j = prob.AddSymmetric(ni);
      sum += MatExpr(j);
      value.emplace_back(j);
    }
  }
  prob.AddSymmetricEquality(sum - FDiagonalExpr(s, x, z));
  prob.AddLmi(SchurBlock(x, y, z));
  prob.AddTraceObjective(s.q.matrix(), x);
  prob.AddTraceObjective(s.r.matrix(), y);
  for (size_t e = 0; e < eqs.size(); ++e) prob.AddProximal(value[e], targets[e], rho);

  CoordinatorUpdate out;
  const SdpSolution sol = SolveSdp(prob);
  out.status = sol.status;
  if (!sol.optimal()) {
    out.diagnostic = SdpFailure("node coordinator " + std::to_string(i + 1), sol);
    return out;
  }
  for (const MatExpr& e : value) out.values.push_back(sol.Value(e));
  out.node = NodeVariables{sol.Value(x), sol.Value(y), sol.Value(z)};
  out.objective = TraceObjective(s, out.node->x, out.node->y);
  return out;
}

CoordinatorUpdate YUpdateEdge(const EdgeShard& shard, const ConsensusLayout& layout,
                              const std::vector<Mat>& targets, double rho) {
  const auto& eqs = layout.edge_equations.at(shard.edge);
  if (targets.size() != eqs.size()) throw ValidationError("YUpdateEdge: wrong number of targets");
  const int i = shard.edge.first, j = shard.edge.second;
  const int ni = layout.state_sizes[i], nj = layout.state_sizes[j];

  SdpProblem prob;
  const Var head = prob.AddSymmetric(nj);  // copy of X_j
  const Var tail = prob.AddSymmetric(ni);  // copy of X_i
  std::vector<MatExpr> value;
  MatExpr sum = MatExpr::Zero(ni, nj);
  for (int idx : eqs) {
    switch (layout.equations[idx].kind) {
      case ConsensusKind::kEdgeXHead: value.emplace_back(head); break;
      case ConsensusKind::kEdgeXTail: value.emplace_back(tail); break;
      default: {
        const Var jv = prob.AddFree(ni, nj);
        sum += MatExpr(jv);
        value.emplace_back(jv);
      }
    }
  }
  prob.AddEquality(sum + shard.a_ij * MatExpr(head) + MatExpr(tail) * shard.a_ji.transpose());
  for (size_t e = 0; e < eqs.size(); ++e) prob.AddProximal(value[e], targets[e], rho);

  CoordinatorUpdate out;
  SdpSolution sol;
  try {
    sol = SolveEqualityQp(prob);
  } catch (const NumericalError& e) {
    out.status = SdpStatus::kNumericalLimit;
    out.diagnostic = "edge coordinator (" + std::to_string(i + 1) + "," +
                     std::to_string(j + 1) + "): " + e.what();
    return out;
  }
  out.status = sol.status;
  for (const MatExpr& e : value) out.values.push_back(sol.Value(e));
  return out;
}

Residuals ComputeResiduals(const std::vector<Mat>& x_hat, const std::vector<Mat>& y,
                           const std::vector<Mat>& y_prev, double rho) {
  double p = 0.0, d = 0.0;
  for (size_t e = 0; e < y.size(); ++e) {
    p += (x_hat[e] - y[e]).squaredNorm();
    d += (y[e] - y_prev[e]).squaredNorm();
  }
  return {std::sqrt(p), rho * std::sqrt(d)};
}

bool ShouldStop(const Residuals& r, const std::vector<Mat>& x_hat, const std::vector<Mat>& y,
                const std::vector<Mat>& lambda, int consensus_dim, const AdmmOptions& opts) {
  const double abs_tol = opts.tol * std::sqrt(static_cast<double>(consensus_dim));
  if (opts.stopping == StoppingRule::kAbsolute) return r.primal <= abs_tol && r.dual <= abs_tol;
  double nx = 0.0, ny = 0.0, nl = 0.0;
  for (size_t e = 0; e < y.size(); ++e) {
    nx += x_hat[e].squaredNorm();
    ny += y[e].squaredNorm();
    nl += lambda[e].squaredNorm();
  }
  const double p_tol = abs_tol + opts.tol * std::sqrt(std::max(nx, ny));
  const double d_tol = abs_tol + opts.tol * opts.rho * std::sqrt(nl);
  return r.primal <= p_tol && r.dual <= d_tol;
}

void LambdaUpdate(const std::vector<Mat>& x_hat, const std::vector<Mat>& y,
                  std::vector<Mat>* lambda) {
  for (size_t e = 0; e < y.size(); ++e) (*lambda)[e] += x_hat[e] - y[e];
}

AdmmState InitializeAdmm(const ConsensusLayout& layout, double rho) {
  AdmmState s;
  s.rho = rho;
  for (const ConsensusEquation& eq : layout.equations) {
    const bool is_x = eq.kind != ConsensusKind::kNodeJ && eq.kind != ConsensusKind::kEdgeJ;
    const Mat v = is_x ? Mat(Mat::Identity(eq.rows, eq.cols)) : Mat(Mat::Zero(eq.rows, eq.cols));
    s.y.push_back(v);
    s.x_hat.push_back(v);
    s.lambda.push_back(Mat::Zero(eq.rows, eq.cols));
  }
  for (size_t k = 0; k < layout.blocks.cliques.size(); ++k) {
    CliqueUpdate c;
    const auto& eqs = layout.clique_equations[k];
    for (int idx : eqs) c.shared.push_back(s.x_hat[idx]);
    for (int i : layout.blocks.cliques[k].exclusive_nodes) {
      const int ni = layout.state_sizes[i], mi = layout.input_sizes[i];
      c.exclusive.emplace(i, NodeVariables{Mat::Identity(ni, ni), Mat::Identity(mi, mi),
                                           Mat::Zero(mi, ni)});
    }
    s.cliques.push_back(std::move(c));
  }
  for (int i : layout.structure.overlap_nodes) {
    const int ni = layout.state_sizes[i], mi = layout.input_sizes[i];
    s.coordinators.emplace(
        i, NodeVariables{Mat::Identity(ni, ni), Mat::Identity(mi, mi), Mat::Zero(mi, ni)});
    s.coordinator_objectives[i] = 0.0;
  }
  return s;
}

std::vector<NodeVariables> CollectNodeVariables(const ConsensusLayout& layout,
                                                const AdmmState& state) {
  std::vector<NodeVariables> out(layout.state_sizes.size());
  for (const CliqueUpdate& c : state.cliques) {
    for (const auto& [i, v] : c.exclusive) out[i] = v;
  }
  for (const auto& [i, v] : state.coordinators) out[i] = v;
  return out;
}

double AdmmObjective(const AdmmState& state) {
  double f = 0.0;
  for (const CliqueUpdate& c : state.cliques) f += c.objective;
  for (const auto& [i, v] : state.coordinator_objectives) f += v;
  return f;
}

void FinishAdmm(const InterconnectedSystem& sys, const ConsensusLayout& layout,
                bool converged, AdmmResult* result) {
  SynthesisResult& r = result->synthesis;
  result->converged = converged;
  r.iterations = result->state.iteration;
  r.objective = AdmmObjective(result->state);
  r.x.clear();
  r.y.clear();
  r.z.clear();
  r.controller.gains.clear();
  try {
    for (const NodeVariables& v : CollectNodeVariables(layout, result->state)) {
      r.x.push_back(v.x);
      r.y.push_back(v.y);
      r.z.push_back(v.z);
      r.controller.gains.push_back(RecoverGain(v.z, v.x));
    }
  } catch (const NumericalError& e) {
    r.status = SynthStatus::kNumericalFailure;
    r.message = e.what();
    return;
  }
  r.gain = GlobalGain(sys, r.controller);
  Certify(sys, &r);
  if (!converged) {
    const std::string certified = r.ok() ? "; final iterate is stabilizing" : "";
    r.status = SynthStatus::kNumericalFailure;
    r.message = "ADMM did not reach tolerance in " + std::to_string(r.iterations) +
                " iterations" + certified;
  }
}

AdmmResult RunAdmm(const InterconnectedSystem& sys, const ConsensusLayout& layout,
                   const AdmmOptions& opts) {
  if (!(opts.rho > 0.0) || !(opts.tol > 0.0)) {
    throw ValidationError("ADMM options: rho and tol must be positive");
  }
  const int num_cliques = static_cast<int>(layout.blocks.cliques.size());
  std::vector<CliqueShard> clique_shards;
  for (int k = 0; k < num_cliques; ++k) clique_shards.push_back(MakeCliqueShard(sys, layout, k));
  std::vector<NodeShard> node_shards;
  for (int i : layout.structure.overlap_nodes) node_shards.push_back(MakeNodeShard(sys, i));
  std::vector<EdgeShard> edge_shards;
  for (const Edge& e : layout.structure.overlap_edges) edge_shards.push_back(MakeEdgeShard(sys, e));

  AdmmResult result;
  AdmmState& s = result.state;
  s = InitializeAdmm(layout, opts.rho);
  auto fail = [&](SynthStatus status, const std::string& msg) {
    result.synthesis.status = status;
    result.synthesis.message = msg;
    result.synthesis.iterations = s.iteration;
    result.synthesis.objective = AdmmObjective(s);
    return result;
  };

  while (s.iteration < opts.max_iter) {
    // Cliques.
    std::vector<CliqueUpdate> updates(num_cliques);
    internal::ForEach(num_cliques, opts.parallel, [&](int k) {
      const auto& eqs = layout.clique_equations[k];
      std::vector<Mat> targets;
      for (int idx : eqs) targets.push_back(s.y[idx] - s.lambda[idx]);
      updates[k] = XUpdate(clique_shards[k], layout, targets, opts.rho, opts.margin);
    });
    for (int k = 0; k < num_cliques; ++k) {
      if (updates[k].status == SdpStatus::kInfeasible) {
        return fail(SynthStatus::kInfeasible,
                    "not certified strongly decentralized stabilizable with this restriction: " +
                        updates[k].diagnostic);
      }
      if (updates[k].status != SdpStatus::kOptimal) {
        return fail(SynthStatus::kNumericalFailure, updates[k].diagnostic);
      }
    }
    for (int k = 0; k < num_cliques; ++k) {
      const auto& eqs = layout.clique_equations[k];
      for (size_t e = 0; e < eqs.size(); ++e) s.x_hat[eqs[e]] = updates[k].shared[e];
    }
    s.cliques = std::move(updates);

    // Coordinators.
    const std::vector<Mat> y_prev = s.y;
    const int num_nodes = static_cast<int>(node_shards.size());
    const int num_edges = static_cast<int>(edge_shards.size());
    std::vector<CoordinatorUpdate> coord(num_nodes + num_edges);
    internal::ForEach(num_nodes + num_edges, opts.parallel, [&](int c) {
      const std::vector<int>& eqs =
          c < num_nodes ? layout.node_equations.at(node_shards[c].node)
                        : layout.edge_equations.at(edge_shards[c - num_nodes].edge);
      std::vector<Mat> targets;
      for (int idx : eqs) targets.push_back(s.x_hat[idx] + s.lambda[idx]);
      coord[c] = c < num_nodes
                     ? YUpdateNode(node_shards[c], layout, targets, opts.rho, opts.margin)
                     : YUpdateEdge(edge_shards[c - num_nodes], layout, targets, opts.rho);
    });
    for (int c = 0; c < num_nodes + num_edges; ++c) {
      if (coord[c].status != SdpStatus::kOptimal) {
        return fail(SynthStatus::kNumericalFailure, coord[c].diagnostic);
      }
      const std::vector<int>& eqs =
          c < num_nodes ? layout.node_equations.at(node_shards[c].node)
                        : layout.edge_equations.at(edge_shards[c - num_nodes].edge);
      for (size_t e = 0; e < eqs.size(); ++e) s.y[eqs[e]] = coord[c].values[e];
      if (c < num_nodes) {
        const int i = node_shards[c].node;
        s.coordinators[i] = *coord[c].node;
        s.coordinator_objectives[i] = coord[c].objective;
      }
    }

    LambdaUpdate(s.x_hat, s.y, &s.lambda);
    ++s.iteration;
    const Residuals res = ComputeResiduals(s.x_hat, s.y, y_prev, opts.rho);
    s.trace.push_back({s.iteration, res.primal, res.dual, AdmmObjective(s)});
    if (ShouldStop(res, s.x_hat, s.y, s.lambda, layout.consensus_dim, opts)) {
      FinishAdmm(sys, layout, true, &result);
      return result;
    }
  }
  FinishAdmm(sys, layout, false, &result);
  return result;
}

AdmmResult RunAdmm(const InterconnectedSystem& sys, const AdmmOptions& opts) {
  return RunAdmm(sys, BuildLayout(sys), opts);
}

void WriteTraceCsv(const std::vector<TraceRow>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write trace file " + path);
  out << "iteration,primal_residual,dual_residual,objective\n";
  out << std::setprecision(12);
  for (const TraceRow& r : trace) {
    out << r.iteration << ',' << r.primal_residual << ',' << r.dual_residual << ','
        << r.objective << '\n';
  }
}

}  // namespace dcsynth
