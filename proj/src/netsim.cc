#include "dcsynth/netsim.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "dcsynth/errors.h"
#include "dcsynth/json_io.h"
#include "parallel.h"

namespace dcsynth {

namespace {

std::string EqKindLetter(ConsensusKind k) {
  return k == ConsensusKind::kNodeJ || k == ConsensusKind::kEdgeJ ? "J" : "X";
}

/// Name of the variable pair tied by an equation, 1-based.
std::string Subject(const ConsensusEquation& eq) {
  const std::string k = std::to_string(eq.clique + 1);
  const std::string i = std::to_string(eq.edge.first + 1);
  const std::string j = std::to_string(eq.edge.second + 1);
  switch (eq.kind) {
    case ConsensusKind::kNodeX: return "X_" + std::to_string(eq.node + 1) + "," + k;
    case ConsensusKind::kNodeJ: {
      const std::string n = std::to_string(eq.node + 1);
      return "J_" + n + n + "," + k;
    }
    case ConsensusKind::kEdgeXHead: return "Xhat_" + i + j + "," + k;
    case ConsensusKind::kEdgeXTail: return "Xhat_" + j + i + "," + k;
    case ConsensusKind::kEdgeJ: return "J_" + i + j + "," + k;
  }
  return {};
}

AgentId Owner(const ConsensusEquation& eq) {
  return eq.node >= 0 ? AgentId::Node(eq.node) : AgentId::EdgeOf(eq.edge);
}

int Position(const std::vector<int>& v, int x) {
  return static_cast<int>(std::find(v.begin(), v.end(), x) - v.begin());
}

Message MakeMessage(int round, const AgentId& from, const AgentId& to, PayloadKind kind,
                    const ConsensusLayout& layout, int eq, std::vector<Mat> values) {
  Message m;
  m.round = round;
  m.from = from;
  m.to = to;
  if (eq >= 0) {
    const ConsensusEquation& e = layout.equations[eq];
    m.tag = PayloadTag(kind, e.kind);
    m.subject = Subject(e);
    m.equation = eq;
    m.rows = e.rows;
    m.cols = e.cols;
  } else {
    m.tag = PayloadTag(kind, ConsensusKind::kNodeX);
  }
  m.values = std::move(values);
  return m;
}

/// Iterates of all agents in the monolithic layout.
AdmmState Collect(const Network& net, int iteration, double rho,
                  const std::vector<TraceRow>& trace) {
  AdmmState s = InitializeAdmm(net.layout, rho);
  s.iteration = iteration;
  s.trace = trace;
  for (size_t k = 0; k < net.cliques.size(); ++k) s.cliques[k] = net.cliques[k].last;
  for (const CoordinatorAgent& c : net.coordinators) {
    for (size_t p = 0; p < c.equations.size(); ++p) {
      s.x_hat[c.equations[p]] = c.x_hat[p];
      s.y[c.equations[p]] = c.y[p];
      s.lambda[c.equations[p]] = c.lambda[p];
    }
    if (c.id.kind == AgentKind::kNodeCoordinator) {
      s.coordinators[c.id.index] = c.node;
      s.coordinator_objectives[c.id.index] = c.objective;
    }
  }
  return s;
}

}  // namespace

std::string AgentId::ToString() const {
  switch (kind) {
    case AgentKind::kClique: return "clique:" + std::to_string(index + 1);
    case AgentKind::kNodeCoordinator: return "node:" + std::to_string(index + 1);
    case AgentKind::kEdgeCoordinator:
      return "edge:" + std::to_string(edge.first + 1) + "-" + std::to_string(edge.second + 1);
  }
  return "?";
}

std::string PayloadTag(PayloadKind kind, ConsensusKind eq_kind) {
  switch (kind) {
    case PayloadKind::kConsensus: return "consensus." + EqKindLetter(eq_kind);
    case PayloadKind::kCopy: return "copy." + EqKindLetter(eq_kind);
    case PayloadKind::kContinue: return "control.continue";
    case PayloadKind::kStop: return "control.stop";
  }
  return "?";
}

const std::vector<std::string>& AllowedTags() {
  static const std::vector<std::string> tags{"consensus.X", "consensus.J", "copy.X",
                                             "copy.J",      "control.continue",
                                             "control.stop"};
  return tags;
}

std::string TranscriptLine(const Message& m, bool include_values) {
  Json j;
  j["round"] = m.round;
  j["from"] = m.from.ToString();
  j["to"] = m.to.ToString();
  j["tag"] = m.tag;
  if (!m.subject.empty()) {
    j["subject"] = m.subject;
    j["shape"] = {m.rows, m.cols};
  }
  if (include_values && !m.values.empty()) {
    Json v = Json::array();
    for (const Mat& x : m.values) v.push_back(MatToJson(x));
    j["values"] = v;
  }
  return j.dump();
}

void WriteTranscript(const TranscriptLog& log, const std::string& path, bool include_values) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write transcript " + path);
  for (const Message& m : log) out << TranscriptLine(m, include_values) << '\n';
}

Network Deploy(const InterconnectedSystem& sys, const ConsensusLayout& layout) {
  Network net;
  net.layout = layout;
  const AdmmState init = InitializeAdmm(layout, 1.0);
  for (size_t k = 0; k < layout.blocks.cliques.size(); ++k) {
    CliqueAgent a;
    a.shard = MakeCliqueShard(sys, layout, static_cast<int>(k));
    a.equations = layout.clique_equations[k];
    a.last = init.cliques[k];
    net.cliques.push_back(std::move(a));
  }
  auto add = [&](CoordinatorAgent c, const std::vector<int>& eqs) {
    c.equations = eqs;
    std::set<int> cl;
    for (int e : eqs) {
      c.x_hat.push_back(init.x_hat[e]);
      c.y.push_back(init.y[e]);
      c.lambda.push_back(init.lambda[e]);
      cl.insert(layout.equations[e].clique);
    }
    c.y_prev = c.y;
    c.cliques.assign(cl.begin(), cl.end());
    net.coordinators.push_back(std::move(c));
  };
  for (int i : layout.structure.overlap_nodes) {
    CoordinatorAgent c;
    c.id = AgentId::Node(i);
    c.node_shard = MakeNodeShard(sys, i);
    c.node = init.coordinators.at(i);
    add(std::move(c), layout.node_equations.at(i));
  }
  for (const Edge& e : layout.structure.overlap_edges) {
    CoordinatorAgent c;
    c.id = AgentId::EdgeOf(e);
    c.edge_shard = MakeEdgeShard(sys, e);
    add(std::move(c), layout.edge_equations.at(e));
  }
  return net;
}

DistributedRun RunDistributed(Network* net, const AdmmOptions& opts) {
  if (!(opts.rho > 0.0) || !(opts.tol > 0.0)) {
    throw ValidationError("ADMM options: rho and tol must be positive");
  }
  const ConsensusLayout& layout = net->layout;
  const int num_cliques = static_cast<int>(net->cliques.size());
  const int num_coord = static_cast<int>(net->coordinators.size());
  DistributedRun run;
  std::vector<TraceRow> trace;
  int iteration = 0;

  auto finish = [&](bool converged) {
    run.converged = converged;
    run.state = Collect(*net, iteration, opts.rho, trace);
    return std::move(run);
  };

  while (iteration < opts.max_iter) {
    const int round = iteration + 1;
    // Phase A: (y, lambda) to the cliques.
    const size_t phase_a_begin = run.transcript.size();
    for (const CoordinatorAgent& c : net->coordinators) {
      for (size_t p = 0; p < c.equations.size(); ++p) {
        const int e = c.equations[p];
        const int k = layout.equations[e].clique;
        run.transcript.push_back(MakeMessage(round, c.id, AgentId::Clique(k),
                                             PayloadKind::kConsensus, layout, e,
                                             {c.y[p], c.lambda[p]}));
      }
    }
    // Delivery.
    for (CliqueAgent& a : net->cliques) {
      a.y.assign(a.equations.size(), Mat());
      a.lambda.assign(a.equations.size(), Mat());
    }
    for (size_t t = phase_a_begin; t < run.transcript.size(); ++t) {
      const Message& m = run.transcript[t];
      CliqueAgent& a = net->cliques[m.to.index];
      const int p = Position(a.equations, m.equation);
      a.y[p] = m.values[0];
      a.lambda[p] = m.values[1];
    }

    // Phase B: clique subproblems.
    std::vector<CliqueUpdate> updates(num_cliques);
    internal::ForEach(num_cliques, opts.parallel, [&](int k) {
      const CliqueAgent& a = net->cliques[k];
      std::vector<Mat> targets;
      for (size_t p = 0; p < a.equations.size(); ++p) targets.push_back(a.y[p] - a.lambda[p]);
      updates[k] = XUpdate(a.shard, layout, targets, opts.rho, opts.margin);
    });
    for (int k = 0; k < num_cliques; ++k) {
      if (updates[k].status == SdpStatus::kInfeasible) {
        run.failure = SynthStatus::kInfeasible;
        run.message = "not certified strongly decentralized stabilizable with this restriction: " +
                      updates[k].diagnostic;
        return finish(false);
      }
      if (updates[k].status != SdpStatus::kOptimal) {
        run.failure = SynthStatus::kNumericalFailure;
        run.message = updates[k].diagnostic;
        return finish(false);
      }
    }
    const size_t phase_b_begin = run.transcript.size();
    for (int k = 0; k < num_cliques; ++k) {
      CliqueAgent& a = net->cliques[k];
      a.last = std::move(updates[k]);
      for (size_t p = 0; p < a.equations.size(); ++p) {
        const int e = a.equations[p];
        run.transcript.push_back(MakeMessage(round, AgentId::Clique(k),
                                             Owner(layout.equations[e]), PayloadKind::kCopy,
                                             layout, e, {a.last.shared[p]}));
      }
    }
    for (size_t t = phase_b_begin; t < run.transcript.size(); ++t) {
      const Message& m = run.transcript[t];
      for (CoordinatorAgent& c : net->coordinators) {
        if (c.id == m.to) c.x_hat[Position(c.equations, m.equation)] = m.values[0];
      }
    }

    // Phase C: coordinator subproblems and multipliers.
    std::vector<CoordinatorUpdate> coord(num_coord);
    internal::ForEach(num_coord, opts.parallel, [&](int c) {
      const CoordinatorAgent& a = net->coordinators[c];
      std::vector<Mat> targets;
      for (size_t p = 0; p < a.equations.size(); ++p) targets.push_back(a.x_hat[p] + a.lambda[p]);
      coord[c] = a.node_shard
                     ? YUpdateNode(*a.node_shard, layout, targets, opts.rho, opts.margin)
                     : YUpdateEdge(*a.edge_shard, layout, targets, opts.rho);
    });
    for (int c = 0; c < num_coord; ++c) {
      CoordinatorAgent& a = net->coordinators[c];
      if (coord[c].status != SdpStatus::kOptimal) {
        run.failure = SynthStatus::kNumericalFailure;
        run.message = coord[c].diagnostic;
        return finish(false);
      }
      a.y_prev = a.y;
      a.y = coord[c].values;
      if (coord[c].node) {
        a.node = *coord[c].node;
        a.objective = coord[c].objective;
      }
    }
    for (CoordinatorAgent& a : net->coordinators) {
      for (size_t p = 0; p < a.equations.size(); ++p) a.lambda[p] += a.x_hat[p] - a.y[p];
    }
    ++iteration;

    // Joint stop decision, accumulated in equation order.
    const size_t ne = layout.equations.size();
    std::vector<Mat> x_hat(ne), y(ne), y_prev(ne), lambda(ne);
    for (const CoordinatorAgent& a : net->coordinators) {
      for (size_t p = 0; p < a.equations.size(); ++p) {
        x_hat[a.equations[p]] = a.x_hat[p];
        y[a.equations[p]] = a.y[p];
        y_prev[a.equations[p]] = a.y_prev[p];
        lambda[a.equations[p]] = a.lambda[p];
      }
    }
    const Residuals res = ComputeResiduals(x_hat, y, y_prev, opts.rho);
    trace.push_back({iteration, res.primal, res.dual,
                     AdmmObjective(Collect(*net, iteration, opts.rho, {}))});
    const bool stop = ShouldStop(res, x_hat, y, lambda, layout.consensus_dim, opts);
    for (const CoordinatorAgent& a : net->coordinators) {
      for (int k : a.cliques) {
        run.transcript.push_back(MakeMessage(round, a.id, AgentId::Clique(k),
                                             stop ? PayloadKind::kStop : PayloadKind::kContinue,
                                             layout, -1, {}));
      }
    }
    if (stop) return finish(true);
  }
  return finish(false);
}

DistributedResult SynthesizeDistributed(const InterconnectedSystem& sys,
                                        const AdmmOptions& opts) {
  const ConsensusLayout layout = BuildLayout(sys);
  Network net = Deploy(sys, layout);
  DistributedRun run = RunDistributed(&net, opts);
  DistributedResult out;
  out.admm.state = std::move(run.state);
  if (run.failure) {
    out.admm.synthesis.status = *run.failure;
    out.admm.synthesis.message = run.message;
    out.admm.synthesis.iterations = out.admm.state.iteration;
    out.admm.synthesis.objective = AdmmObjective(out.admm.state);
  } else {
    FinishAdmm(sys, layout, run.converged, &out.admm);
  }
  out.transcript = std::move(run.transcript);
  return out;
}

AuditReport AuditPrivacy(const TranscriptLog& log, const ConsensusLayout& layout) {
  AuditReport report;
  const auto& tags = AllowedTags();
  const int num_cliques = static_cast<int>(layout.structure.cliques.size());
  auto valid_clique = [&](const AgentId& a) {
    return a.kind == AgentKind::kClique && a.index >= 0 && a.index < num_cliques;
  };
  // Is `c` a coordinator adjacent to clique k?
  auto adjacent = [&](const AgentId& c, int k) {
    if (c.kind == AgentKind::kNodeCoordinator) {
      if (c.index < 0 || c.index >= static_cast<int>(layout.structure.node_cliques.size()) ||
          !layout.structure.IsOverlapNode(c.index)) {
        return false;
      }
      const auto& nc = layout.structure.node_cliques[c.index];
      return std::find(nc.begin(), nc.end(), k) != nc.end();
    }
    if (c.kind == AgentKind::kEdgeCoordinator) {
      const auto& e0 = layout.structure.overlap_edges;
      if (std::find(e0.begin(), e0.end(), c.edge) == e0.end()) return false;
      const auto& ec = layout.structure.EdgeCliques(c.edge.first, c.edge.second);
      return std::find(ec.begin(), ec.end(), k) != ec.end();
    }
    return false;
  };

  for (const Message& m : log) {
    AuditEntry entry{m.round, m.from.ToString(), m.to.ToString(), m.tag, true, {}};
    auto fail = [&](const std::string& why) {
      if (entry.ok) {
        entry.ok = false;
        entry.reason = why;
      }
    };
    if (std::find(tags.begin(), tags.end(), m.tag) == tags.end()) {
      fail("tag '" + m.tag + "' is not an iterate kind");
    }
    const bool to_coordinator = m.tag.rfind("copy.", 0) == 0;
    const AgentId& clique = to_coordinator ? m.from : m.to;
    const AgentId& coordinator = to_coordinator ? m.to : m.from;
    if (!valid_clique(clique)) {
      fail("clique end of the link is " + clique.ToString());
    } else if (!adjacent(coordinator, clique.index)) {
      fail(coordinator.ToString() + " is not a coordinator of " + clique.ToString());
    }
    const bool is_control = m.tag.rfind("control.", 0) == 0;
    if (entry.ok && !is_control) {
      if (m.equation < 0 || m.equation >= static_cast<int>(layout.equations.size())) {
        fail("payload names no consensus equation");
      } else {
        const ConsensusEquation& eq = layout.equations[m.equation];
        if (eq.clique != clique.index || !(Owner(eq) == coordinator)) {
          fail("equation " + Subject(eq) + " is not shared by this link");
        } else if (m.subject != Subject(eq) || m.rows != eq.rows || m.cols != eq.cols ||
                   m.tag.back() != EqKindLetter(eq.kind)[0]) {
          fail("payload '" + m.subject + "' does not match equation " + Subject(eq));
        }
        const size_t expected = to_coordinator ? 1 : 2;
        if (entry.ok && !m.values.empty() && m.values.size() != expected) {
          fail("unexpected payload arity");
        }
      }
    }
    if (is_control && !m.values.empty()) fail("control token carries values");
    if (!entry.ok) {
      report.passed = false;
      report.failures.push_back("round " + std::to_string(m.round) + " " + entry.from + " -> " +
                                entry.to + " [" + m.tag + "]: " + entry.reason);
    }
    report.entries.push_back(std::move(entry));
  }
  return report;
}

int ExpectedMessagesPerRound(const ConsensusLayout& layout) {
  int fan_out = 0;
  for (const auto& [i, eqs] : layout.node_equations) {
    std::set<int> cl;
    for (int e : eqs) cl.insert(layout.equations[e].clique);
    fan_out += static_cast<int>(cl.size());
  }
  for (const auto& [edge, eqs] : layout.edge_equations) {
    std::set<int> cl;
    for (int e : eqs) cl.insert(layout.equations[e].clique);
    fan_out += static_cast<int>(cl.size());
  }
  return 2 * static_cast<int>(layout.equations.size()) + fan_out;
}

}  // namespace dcsynth
