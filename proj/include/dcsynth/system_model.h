#pragma once

#include <string>
#include <vector>

#include "dcsynth/graph.h"
#include "dcsynth/linalg.h"

namespace dcsynth {

/// Per-subsystem state, input and disturbance dimensions.
class BlockPartition {
 public:
  BlockPartition() = default;
  BlockPartition(std::vector<int> n, std::vector<int> m, std::vector<int> q);

  int num_subsystems() const { return static_cast<int>(n_.size()); }
  const std::vector<int>& state_sizes() const { return n_; }
  const std::vector<int>& input_sizes() const { return m_; }
  const std::vector<int>& disturbance_sizes() const { return q_; }
  int state_offset(int i) const { return n_off_.at(i); }
  int input_offset(int i) const { return m_off_.at(i); }
  int disturbance_offset(int i) const { return q_off_.at(i); }
  int total_states() const { return n_off_.back(); }
  int total_inputs() const { return m_off_.back(); }
  int total_disturbances() const { return q_off_.back(); }

 private:
  std::vector<int> n_, m_, q_;
  std::vector<int> n_off_{0}, m_off_{0}, q_off_{0};
};

struct SubsystemModel {
  Mat a;    // A_ii, n_i x n_i
  Mat b;    // B_i, n_i x m_i
  Mat m;    // M_i, n_i x q_i
  SymMat q;  // state weight, PSD
  SymMat r;  // control weight, PD
};

/// A_ij: influence of subsystem `source` (j) on subsystem `target` (i).
/// Indices are 0-based.
struct CouplingBlock {
  int target;
  int source;
  Mat a;
};

class InterconnectedSystem {
 public:
  /// Validates dimensions, definiteness of the weights and the coupling set.
  /// Throws ValidationError with an explanation.
  InterconnectedSystem(std::vector<SubsystemModel> subsystems,
                       std::vector<CouplingBlock> couplings);

  int num_subsystems() const { return partition_.num_subsystems(); }
  const BlockPartition& partition() const { return partition_; }
  const SubsystemModel& subsystem(int i) const { return subsystems_.at(i); }
  const std::vector<SubsystemModel>& subsystems() const { return subsystems_; }
  /// Sorted by (target, source).
  const std::vector<CouplingBlock>& couplings() const { return couplings_; }
  /// Null when the pair is not coupled.
  const Mat* Coupling(int target, int source) const;
  /// Returns A_ij or the zero block.
  Mat CouplingOrZero(int target, int source) const;
  const DirectedGraph& plant_graph() const { return plant_graph_; }

 private:
  BlockPartition partition_;
  std::vector<SubsystemModel> subsystems_;
  std::vector<CouplingBlock> couplings_;
  DirectedGraph plant_graph_;
};

struct DecentralizedController {
  std::vector<Mat> gains;  // K_ii, m_i x n_i
};

struct GlobalMatrices {
  Mat a;
  Mat b;
  Mat m;
  SymMat q;
  SymMat r;
};

GlobalMatrices AssembleGlobal(const InterconnectedSystem& sys);

/// Block-diagonal global gain.
Mat GlobalGain(const InterconnectedSystem& sys, const DecentralizedController& k);

/// A - B blkdiag(K_ii).
Mat ClosedLoop(const InterconnectedSystem& sys, const DecentralizedController& k);

InterconnectedSystem LoadSystem(const std::string& path);
void SaveSystem(const InterconnectedSystem& sys, const std::string& path);

}  // namespace dcsynth
