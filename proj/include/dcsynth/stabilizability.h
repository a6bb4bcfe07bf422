#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dcsynth/synth.h"
#include "dcsynth/system_model.h"

namespace dcsynth {

/// Outcome of an LMI feasibility test. `indeterminate` is set when the
/// solver could certify neither feasibility nor infeasibility.
struct LmiCheck {
  bool feasible = false;
  bool indeterminate = false;
  std::string diagnostic;
};

/// True iff every B_i has full row rank: sigma_min > rank_tol * sigma_max.
bool CheckFullyActuated(const InterconnectedSystem& sys, double rank_tol = 1e-9);

/// Per-node shift alpha_i = margin + max row sum of |A_ij| over the
/// neighbours j, so that A - BK has diagonal blocks -alpha_i I and is
/// strictly row diagonally dominant.
std::vector<double> FullyActuatedShifts(const InterconnectedSystem& sys, double margin);

/// K_ii = V_i [Gamma_i^{-1}; 0] U_i' (A_ii + alpha_i I). Throws DomainError
/// if some B_i lacks full row rank.
DecentralizedController FullyActuatedGain(const InterconnectedSystem& sys,
                                          double margin = 1.0);

/// Exists X > 0, Z with A X - B Z + (A X - B Z)' < 0. On success and when
/// `gain` is non-null, stores the stabilizing gain Z X^{-1}.
LmiCheck CheckStabilizableLmi(const Mat& a, const Mat& b, Mat* gain = nullptr);

struct TopologicalReport {
  bool acyclic = false;
  std::vector<bool> node_stabilizable;
  std::vector<bool> node_indeterminate;
  /// Local stabilizing gains (valid entries where node_stabilizable).
  std::vector<Mat> local_gains;
  bool certified() const;
};

TopologicalReport CheckTopologicallyWeak(const InterconnectedSystem& sys);

/// W_ij keyed by (target i, source j), one per coupling block; sized n_j.
using WeightAssignment = std::map<Edge, Mat>;

WeightAssignment IdentityWeights(const InterconnectedSystem& sys);

struct DynamicallyWeakCertificate {
  std::vector<Mat> x;  // X_i = P_i^{-1}
  std::vector<Mat> z;  // Z_i = K_ii X_i
  std::vector<Mat> p;  // P_i
  DecentralizedController gain;
  WeightAssignment weights;
};

/// Node-wise scaled coupling LMI with the weights held fixed. Returns nullopt
/// if any node LMI is infeasible or undecided.
std::optional<DynamicallyWeakCertificate> CheckDynamicallyWeak(
    const InterconnectedSystem& sys, const WeightAssignment& weights);

/// Exists P = blkdiag(P_i) > 0 with A_cl' P + P A_cl < 0 for the partition
/// of `sys`.
LmiCheck BlockDiagonalLyapunov(const InterconnectedSystem& sys, const Mat& closed_loop);

enum class GainSource { kRestriction, kDynamicallyWeak, kAcyclic, kFullyActuated };
const char* ToString(GainSource s);

struct StabilizabilityReport {
  bool fully_actuated = false;
  TopologicalReport topological;
  std::optional<DynamicallyWeakCertificate> dynamically_weak;
  /// Restriction feasibility; holds the optimal restriction result when
  /// feasible.
  std::optional<SynthesisResult> restriction;
  SynthStatus restriction_status = SynthStatus::kNumericalFailure;
  LmiCheck sigma0;
  std::optional<DecentralizedController> constructed_gain;
  std::optional<GainSource> gain_source;

  /// Certified strongly decentralized stabilizable by at least one test.
  bool sigma2_certified() const;
};

StabilizabilityReport Classify(const InterconnectedSystem& sys);

}  // namespace dcsynth
