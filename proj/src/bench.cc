#include "dcsynth/bench.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>

#include "dcsynth/errors.h"
#include "dcsynth/synth.h"

namespace dcsynth {

InterconnectedSystem MakeChainInstance(int chain_length, double bound,
                                       std::uint64_t instance_seed,
                                       bool identity_disturbance) {
  if (chain_length < 2) throw ValidationError("chain length must be at least 2");
  if (!(bound > 0)) throw ValidationError("coupling bound must be positive");
  std::mt19937_64 rng(instance_seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  SubsystemModel s;
  s.a = (Mat(2, 2) << 1, 1, 1, 2).finished();
  s.b = (Mat(2, 1) << 0, 1).finished();
  s.m = identity_disturbance ? Mat(Mat::Identity(2, 2)) : s.b;
  s.q = SymMat::Identity(2);
  s.r = SymMat::Identity(1);
  std::vector<SubsystemModel> subs(chain_length, s);
  std::vector<CouplingBlock> couplings;
  for (int i = 0; i + 1 < chain_length; ++i) {
    for (const auto& [t, src] : {std::pair{i, i + 1}, std::pair{i + 1, i}}) {
      Mat a(2, 2);
      for (int c = 0; c < 2; ++c) {
        for (int r = 0; r < 2; ++r) a(r, c) = dist(rng);
      }
      couplings.push_back({t, src, a});
    }
  }
  return InterconnectedSystem(std::move(subs), std::move(couplings));
}

SynthesisResult RunMethod(const InterconnectedSystem& sys, const std::string& method,
                          const AdmmOptions& admm) {
  if (method == "centralized") return SolveRestriction(sys);
  if (method == "admm") return RunAdmm(sys, admm).synthesis;
  if (method == "localized-lqr") return LocalizedLqr(sys);
  if (method == "truncated-lqr") return TruncatedLqr(sys);
  throw ValidationError("unknown method '" + method + "'");
}

BenchReport RunBench(const BenchConfig& config) {
  if (config.instances < 1) throw ValidationError("instance count must be positive");
  for (const std::string& m : config.methods) {
    if (m != "centralized" && m != "admm" && m != "localized-lqr" && m != "truncated-lqr") {
      throw ValidationError("unknown method '" + m + "'");
    }
  }
  const auto start = std::chrono::steady_clock::now();
  BenchReport report;
  report.config = config;
  std::mt19937_64 seeds(config.seed);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<std::map<std::string, double>> h2(config.instances);
  for (int id = 0; id < config.instances; ++id) {
    std::uint64_t s = seeds();
    InterconnectedSystem sys = MakeChainInstance(config.chain_length, config.bound, s,
                                                 config.identity_disturbance);
    while (!SolveRestriction(sys).ok()) {
      ++report.regenerated;
      s = seeds();
      sys = MakeChainInstance(config.chain_length, config.bound, s, config.identity_disturbance);
    }
    for (const std::string& m : config.methods) {
      const SynthesisResult r = RunMethod(sys, m, config.admm);
      const double v = r.ok() ? r.h2 : nan;
      report.rows.push_back({id + 1, s, m, r.status, v, r.iterations});
      if (r.ok()) {
        h2[id][m] = v;
        ++report.methods[m].successes;
        if (m == "admm") {
          const int bin = (r.iterations / report.histogram_bin) * report.histogram_bin;
          ++report.admm_histogram[bin];
        }
      }
    }
  }

  std::map<std::string, double> sums;
  for (const auto& per : h2) {
    if (per.size() != config.methods.size()) continue;
    ++report.common_successes;
    for (const auto& [m, v] : per) sums[m] += v;
  }
  for (const std::string& m : config.methods) {
    MethodSummary& s = report.methods[m];
    s.success_percent = 100.0 * s.successes / config.instances;
    s.mean_h2_common = report.common_successes ? sums[m] / report.common_successes : nan;
  }
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

void WriteBenchCsv(const BenchReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "instance_id,seed,method,status,h2,iterations\n" << std::setprecision(10);
  for (const BenchRow& r : report.rows) {
    out << r.instance_id << ',' << r.seed << ',' << r.method << ',' << ToString(r.status) << ',';
    if (!std::isnan(r.h2)) out << r.h2;
    out << ',' << r.iterations << '\n';
  }
}

}  // namespace dcsynth
