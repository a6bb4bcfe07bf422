#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcsynth/chordal.h"
#include "dcsynth/graph.h"
#include "dcsynth/sdp.h"
#include "dcsynth/synth.h"
#include "dcsynth/system_model.h"

namespace dcsynth {

/// Kinds of consensus equations. Every equation ties one clique-local copy
/// to one coordinator-side value.
enum class ConsensusKind {
  kNodeX,      // X_{i,k} = X_i at node coordinator i
  kNodeJ,      // J_{ii,k} = Jhat_{ii,k} at node coordinator i
  kEdgeXHead,  // X_{j,k} = Xhat_{ij} at edge coordinator (i, j)
  kEdgeXTail,  // X_{i,k} = Xhat_{ji} at edge coordinator (i, j)
  kEdgeJ,      // J_{ij,k} = Jhat_{ij,k} at edge coordinator (i, j)
};

const char* ToString(ConsensusKind k);

struct ConsensusEquation {
  ConsensusKind kind;
  int clique;
  int node;   // node coordinator (node kinds); -1 otherwise
  Edge edge;  // edge coordinator (i < j) for edge kinds; (-1, -1) otherwise
  int rows;
  int cols;
  int size() const { return rows * cols; }
};

/// Variable layout of the distributed restriction. Holds structure only,
/// never model data.
struct ConsensusLayout {
  ChordalStructure structure;
  CliqueBlockLayout blocks;
  std::vector<int> state_sizes;
  std::vector<int> input_sizes;
  /// Fixed global order: by clique, then shared nodes (X then J), then
  /// shared edges (head X, tail X, J).
  std::vector<ConsensusEquation> equations;
  std::vector<std::vector<int>> clique_equations;  // per clique
  std::map<int, std::vector<int>> node_equations;  // per overlap node
  std::map<Edge, std::vector<int>> edge_equations; // per overlap edge
  int consensus_dim = 0;
};

/// Chordal structure of the plant (extended to a chordal graph when needed)
/// and the consensus layout.
ConsensusLayout BuildLayout(const InterconnectedSystem& sys);
ConsensusLayout BuildLayout(const BlockPartition& partition, const ChordalStructure& cs);

/// Chordal structure for a plant graph: closure, extension, cliques.
ChordalStructure PlantChordalStructure(const InterconnectedSystem& sys);

// Model shards: the data each agent is entitled to.

struct CliqueShard {
  int clique = -1;
  std::vector<int> nodes;
  std::map<int, SubsystemModel> subsystems;  // nodes of the clique
  std::map<Edge, Mat> couplings;             // (target, source) inside the clique
};

struct NodeShard {
  int node = -1;
  SubsystemModel subsystem;
};

struct EdgeShard {
  Edge edge{-1, -1};  // (i, j), i < j
  Mat a_ij;           // zero block when absent
  Mat a_ji;
};

CliqueShard MakeCliqueShard(const InterconnectedSystem& sys, const ConsensusLayout& layout,
                            int clique);
NodeShard MakeNodeShard(const InterconnectedSystem& sys, int node);
EdgeShard MakeEdgeShard(const InterconnectedSystem& sys, const Edge& edge);

struct NodeVariables {
  Mat x, y, z;
};

struct CliqueUpdate {
  SdpStatus status = SdpStatus::kNumericalLimit;
  std::string diagnostic;
  /// Local values of the clique's consensus equations, in layout order.
  std::vector<Mat> shared;
  /// Variables of the nodes owned exclusively by the clique.
  std::map<int, NodeVariables> exclusive;
  double objective = 0.0;  // sum of Tr(Q X) + Tr(R Y) over exclusive nodes
};

struct CoordinatorUpdate {
  SdpStatus status = SdpStatus::kNumericalLimit;
  std::string diagnostic;
  /// Coordinator-side values of the coordinator's equations, layout order.
  std::vector<Mat> values;
  std::optional<NodeVariables> node;  // node coordinators only
  double objective = 0.0;
};

/// Clique subproblem; `targets[e]` is y - lambda for each of the clique's
/// equations.
CliqueUpdate XUpdate(const CliqueShard& shard, const ConsensusLayout& layout,
                     const std::vector<Mat>& targets, double rho, double margin);

/// Node coordinator subproblem; `targets[e]` is x_hat + lambda for each of
/// the node's equations.
CoordinatorUpdate YUpdateNode(const NodeShard& shard, const ConsensusLayout& layout,
                              const std::vector<Mat>& targets, double rho, double margin);

/// Edge coordinator subproblem, solved in closed form.
CoordinatorUpdate YUpdateEdge(const EdgeShard& shard, const ConsensusLayout& layout,
                              const std::vector<Mat>& targets, double rho);

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
};

/// primal = ||x_hat - y||, dual = rho ||y - y_prev|| over all equations,
/// accumulated in index order.
Residuals ComputeResiduals(const std::vector<Mat>& x_hat, const std::vector<Mat>& y,
                           const std::vector<Mat>& y_prev, double rho);

/// lambda += x_hat - y.
void LambdaUpdate(const std::vector<Mat>& x_hat, const std::vector<Mat>& y,
                  std::vector<Mat>* lambda);

enum class StoppingRule {
  /// primal, dual <= tol sqrt(consensus dimension).
  kAbsolute,
  /// Absolute plus relative terms with eps_abs = eps_rel = tol:
  /// primal <= tol (sqrt(p) + max(||x_hat||, ||y||)),
  /// dual <= tol (sqrt(p) + rho ||lambda||).
  kAbsoluteRelative,
};

struct AdmmOptions {
  double rho = 5.0;
  double tol = 1e-3;
  StoppingRule stopping = StoppingRule::kAbsolute;
  int max_iter = 500;
  bool parallel = false;
  /// Closure of the strict inequalities.
  double margin = 1e-6;
};

/// Stopping test after the multiplier update.
bool ShouldStop(const Residuals& r, const std::vector<Mat>& x_hat, const std::vector<Mat>& y,
                const std::vector<Mat>& lambda, int consensus_dim, const AdmmOptions& opts);

struct TraceRow {
  int iteration;
  double primal_residual;
  double dual_residual;
  double objective;
};

struct AdmmState {
  int iteration = 0;
  std::vector<Mat> x_hat;   // clique-side values per equation
  std::vector<Mat> y;       // coordinator-side values per equation
  std::vector<Mat> lambda;  // scaled multipliers per equation
  std::vector<CliqueUpdate> cliques;
  std::map<int, NodeVariables> coordinators;  // node coordinators' X, Y, Z
  std::map<int, double> coordinator_objectives;
  std::vector<TraceRow> trace;
  double rho = 5.0;
};

/// X copies = I, Y = I, Z = 0, all J = 0, lambda = 0.
AdmmState InitializeAdmm(const ConsensusLayout& layout, double rho);

struct AdmmResult {
  SynthesisResult synthesis;
  bool converged = false;
  AdmmState state;
};

/// Owner of each node's (X, Y, Z): the coordinator for overlap nodes, the
/// unique clique otherwise.
std::vector<NodeVariables> CollectNodeVariables(const ConsensusLayout& layout,
                                                const AdmmState& state);

/// Sum of Tr(Q_i X_i) + Tr(R_i Y_i) over the owners' values, as reported by
/// the agents that own them.
double AdmmObjective(const AdmmState& state);

/// Monolithic consensus ADMM on the restriction.
AdmmResult RunAdmm(const InterconnectedSystem& sys, const AdmmOptions& opts = {});
AdmmResult RunAdmm(const InterconnectedSystem& sys, const ConsensusLayout& layout,
                   const AdmmOptions& opts);

/// Recovers gains from the final iterate and certifies them against the
/// full system.
void FinishAdmm(const InterconnectedSystem& sys, const ConsensusLayout& layout,
                bool converged, AdmmResult* result);

/// Writes iteration,primal_residual,dual_residual,objective.
void WriteTraceCsv(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace dcsynth
