#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dcsynth/admm.h"
#include "dcsynth/system_model.h"

namespace dcsynth {

struct BenchConfig {
  int chain_length = 5;
  int instances = 100;
  double bound = 0.5;
  std::uint64_t seed = 1;
  std::vector<std::string> methods{"admm", "localized-lqr", "truncated-lqr"};
  /// Disturbances enter through M_i = I_2 instead of M_i = B_i.
  bool identity_disturbance = false;
  AdmmOptions admm;
};

/// Chain of unstable second-order subsystems with random couplings in
/// [-bound, bound] between neighbours, drawn from a generator seeded with
/// `instance_seed`.
InterconnectedSystem MakeChainInstance(int chain_length, double bound,
                                       std::uint64_t instance_seed,
                                       bool identity_disturbance = false);

struct BenchRow {
  int instance_id;
  std::uint64_t seed;
  std::string method;
  SynthStatus status;
  double h2;  // NaN unless the method succeeded
  int iterations;
};

struct MethodSummary {
  int successes = 0;
  double success_percent = 0.0;
  double mean_h2_common = 0.0;  // NaN when the common-success set is empty
};

struct BenchReport {
  BenchConfig config;
  std::vector<BenchRow> rows;
  std::map<std::string, MethodSummary> methods;
  int common_successes = 0;
  /// Instances discarded because the centralized restriction was infeasible.
  int regenerated = 0;
  /// ADMM iteration counts of converged runs, bucketed by `histogram_bin`.
  std::map<int, int> admm_histogram;
  int histogram_bin = 25;
  double seconds = 0.0;
};

/// Runs one method on a system. Known methods: centralized, admm,
/// localized-lqr, truncated-lqr.
SynthesisResult RunMethod(const InterconnectedSystem& sys, const std::string& method,
                          const AdmmOptions& admm = {});

BenchReport RunBench(const BenchConfig& config);

void WriteBenchCsv(const BenchReport& report, const std::string& path);

}  // namespace dcsynth
