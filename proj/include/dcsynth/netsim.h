#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dcsynth/admm.h"

namespace dcsynth {

enum class AgentKind { kClique, kNodeCoordinator, kEdgeCoordinator };

struct AgentId {
  AgentKind kind = AgentKind::kClique;
  int index = -1;     // clique or node, 0-based
  Edge edge{-1, -1};  // edge coordinators only

  static AgentId Clique(int k) { return {AgentKind::kClique, k, {-1, -1}}; }
  static AgentId Node(int i) { return {AgentKind::kNodeCoordinator, i, {-1, -1}}; }
  static AgentId EdgeOf(const Edge& e) { return {AgentKind::kEdgeCoordinator, -1, e}; }

  /// "clique:1", "node:2", "edge:2-4" (1-based).
  std::string ToString() const;
  bool operator==(const AgentId& o) const {
    return kind == o.kind && index == o.index && edge == o.edge;
  }
};

/// Payload kinds a message may carry. Only iterates exist here: there is
/// no kind for model data.
enum class PayloadKind {
  kConsensus,  // (y, lambda) of one consensus equation, coordinator -> clique
  kCopy,       // clique-local copy x_hat of one equation, clique -> coordinator
  kContinue,   // control token, coordinator -> clique
  kStop,
};

/// Tag string of a payload, e.g. "consensus.X", "copy.J", "control.stop".
std::string PayloadTag(PayloadKind kind, ConsensusKind eq_kind);

/// The closed set of tags accepted by the audit.
const std::vector<std::string>& AllowedTags();

struct Message {
  int round = 0;
  AgentId from;
  AgentId to;
  std::string tag;
  /// Variable named by the payload, e.g. "X_2" or "J_24,1"; empty for
  /// control tokens.
  std::string subject;
  int equation = -1;  // consensus equation index, -1 for control tokens
  int rows = 0;
  int cols = 0;
  /// Consensus payloads hold {y, lambda}; copies hold {x_hat}.
  std::vector<Mat> values;
};

using TranscriptLog = std::vector<Message>;

/// One JSON object per line: round, from, to, tag, subject, shape and,
/// with `include_values`, the payload matrices.
void WriteTranscript(const TranscriptLog& log, const std::string& path,
                     bool include_values = false);
std::string TranscriptLine(const Message& m, bool include_values = false);

struct CliqueAgent {
  CliqueShard shard;
  std::vector<int> equations;
  std::vector<Mat> y, lambda;  // last received, aligned with `equations`
  CliqueUpdate last;
};

struct CoordinatorAgent {
  AgentId id;
  std::optional<NodeShard> node_shard;
  std::optional<EdgeShard> edge_shard;
  std::vector<int> equations;
  std::vector<Mat> x_hat, y, y_prev, lambda;  // aligned with `equations`
  NodeVariables node;  // node coordinators only
  double objective = 0.0;
  /// Cliques this coordinator talks to, ascending.
  std::vector<int> cliques;
};

/// Agents with their model shards. Holds no reference to the global model.
struct Network {
  ConsensusLayout layout;
  std::vector<CliqueAgent> cliques;
  /// Node coordinators in ascending node order, then edge coordinators.
  std::vector<CoordinatorAgent> coordinators;
};

Network Deploy(const InterconnectedSystem& sys, const ConsensusLayout& layout);

struct DistributedRun {
  bool converged = false;
  /// Set when an agent's subproblem failed.
  std::optional<SynthStatus> failure;
  std::string message;
  /// Iterates collected from the agents after the run.
  AdmmState state;
  TranscriptLog transcript;
};

/// Round-synchronous message passing: phase A coordinators send (y, lambda),
/// phase B cliques solve and send copies, phase C coordinators update y and
/// lambda and send a continue or stop token.
DistributedRun RunDistributed(Network* net, const AdmmOptions& opts);

struct DistributedResult {
  AdmmResult admm;
  TranscriptLog transcript;
};

/// Deploys, runs, and certifies the gains reported by their owners against
/// the full model.
DistributedResult SynthesizeDistributed(const InterconnectedSystem& sys,
                                        const AdmmOptions& opts = {});

struct AuditEntry {
  int round;
  std::string from, to, tag;
  bool ok;
  std::string reason;  // empty when ok
};

struct AuditReport {
  bool passed = true;
  std::vector<AuditEntry> entries;
  std::vector<std::string> failures;
};

/// Checks every message: tag in the closed iterate set, sender and receiver
/// adjacent in the clique-coordinator structure, and the subject owned by the
/// coordinator end of the link. Exclusive-node variables and model data
/// never qualify.
AuditReport AuditPrivacy(const TranscriptLog& log, const ConsensusLayout& layout);

/// 2 * (sum of shared copies over cliques) + sum of coordinator fan-outs.
int ExpectedMessagesPerRound(const ConsensusLayout& layout);

}  // namespace dcsynth
