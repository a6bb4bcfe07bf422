// dcsynth command-line interface.
//
// Exit codes: 0 success, 2 not certified or method failure, 1 error.

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcsynth/admm.h"
#include "dcsynth/bench.h"
#include "dcsynth/errors.h"
#include "dcsynth/graph.h"
#include "dcsynth/json_io.h"
#include "dcsynth/netsim.h"
#include "dcsynth/stabilizability.h"
#include "dcsynth/synth.h"
#include "dcsynth/system_model.h"

namespace {

using namespace dcsynth;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotCertified = 2;

Json EdgeJson(const Edge& e) { return Json::array({e.first + 1, e.second + 1}); }

Json NodeList(const std::vector<int>& nodes) {
  Json j = Json::array();
  for (int i : nodes) j.push_back(i + 1);
  return j;
}

Json NumberOrNull(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void Emit(const Json& j, const std::string& path) {
  if (path.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    WriteJsonFile(j, path);
  }
}

Json ResultJson(const std::string& method, const SynthesisResult& r) {
  Json j;
  j["method"] = method;
  j["status"] = ToString(r.status);
  if (!r.message.empty()) j["message"] = r.message;
  if (!r.controller.gains.empty()) j["gains"] = ControllerToJson(r.controller);
  if (r.ok()) j["h2"] = r.h2;
  j["objective"] = r.objective;
  j["iterations"] = r.iterations;
  return j;
}

int Classify(const std::string& system_path, const std::string& out) {
  const InterconnectedSystem sys = LoadSystem(system_path);
  const StabilizabilityReport r = Classify(sys);
  Json j;
  j["sigma0"] = {{"feasible", r.sigma0.feasible}, {"indeterminate", r.sigma0.indeterminate}};
  j["fully_actuated"] = r.fully_actuated;
  Json stab = Json::array();
  for (bool b : r.topological.node_stabilizable) stab.push_back(b);
  j["topologically_weak"] = {{"acyclic", r.topological.acyclic},
                             {"node_stabilizable", stab},
                             {"certified", r.topological.certified()}};
  j["dynamically_weak"] = r.dynamically_weak.has_value();
  j["restriction"] = {{"status", ToString(r.restriction_status)}};
  if (r.restriction) j["restriction"]["h2"] = r.restriction->h2;
  j["sigma2_certified"] = r.sigma2_certified();
  if (r.gain_source) j["gain_source"] = ToString(*r.gain_source);
  if (r.constructed_gain) j["gains"] = ControllerToJson(*r.constructed_gain);
  Emit(j, out);
  return r.sigma2_certified() ? kExitOk : kExitNotCertified;
}

struct SynthArgs {
  std::string system;
  std::string method = "centralized";
  AdmmOptions admm;
  std::string trace;
  std::string transcript = "transcript.jsonl";
  bool transcript_values = false;
  std::string out;
};

int Synthesize(const SynthArgs& a) {
  const InterconnectedSystem sys = LoadSystem(a.system);
  SynthesisResult r;
  Json extra;
  if (a.method == "admm") {
    const AdmmResult res = RunAdmm(sys, a.admm);
    r = res.synthesis;
    extra["converged"] = res.converged;
    if (!a.trace.empty()) WriteTraceCsv(res.state.trace, a.trace);
  } else if (a.method == "distributed") {
    const DistributedResult res = SynthesizeDistributed(sys, a.admm);
    r = res.admm.synthesis;
    extra["converged"] = res.admm.converged;
    if (!a.trace.empty()) WriteTraceCsv(res.admm.state.trace, a.trace);
    WriteTranscript(res.transcript, a.transcript, a.transcript_values);
    const AuditReport audit = AuditPrivacy(res.transcript, BuildLayout(sys));
    extra["transcript"] = a.transcript;
    extra["messages"] = res.transcript.size();
    extra["privacy_audit"] = audit.passed ? "pass" : "fail";
    if (!audit.passed) extra["audit_failures"] = audit.failures;
  } else if (a.method == "fully-actuated") {
    try {
      r.controller = FullyActuatedGain(sys);
      r.gain = GlobalGain(sys, r.controller);
      Certify(sys, &r);
    } catch (const DomainError& e) {
      r.status = SynthStatus::kInfeasible;
      r.message = e.what();
    }
  } else {
    r = RunMethod(sys, a.method, a.admm);
  }
  Json j = ResultJson(a.method, r);
  for (auto& [k, v] : extra.items()) j[k] = v;
  Emit(j, a.out);
  return r.ok() ? kExitOk : kExitNotCertified;
}

int Check(const std::string& system_path, const std::string& gains_path, const std::string& out) {
  const InterconnectedSystem sys = LoadSystem(system_path);
  const DecentralizedController k = ControllerFromJson(ReadJsonFile(gains_path));
  const Mat closed = ClosedLoop(sys, k);
  const bool hurwitz = IsHurwitz(closed);
  Json j;
  j["hurwitz"] = hurwitz;
  j["h2"] = hurwitz ? NumberOrNull(H2Norm(sys, k)) : Json(nullptr);
  const LmiCheck cert = BlockDiagonalLyapunov(sys, closed);
  j["block_diagonal_certificate"] = cert.feasible;
  if (cert.indeterminate) j["block_diagonal_indeterminate"] = true;
  Emit(j, out);
  return hurwitz ? kExitOk : kExitNotCertified;
}

int Decompose(const std::string& system_path, const std::string& out) {
  const InterconnectedSystem sys = LoadSystem(system_path);
  const UndirectedGraph gu = UndirectedClosure(sys.plant_graph());
  const bool chordal = IsChordal(gu);
  const ChordalStructure cs = PlantChordalStructure(sys);
  Json j;
  Json edges = Json::array(), fill = Json::array();
  for (const Edge& e : gu.Edges()) edges.push_back(EdgeJson(e));
  for (const Edge& e : cs.graph.Edges()) {
    if (!gu.HasEdge(e.first, e.second)) fill.push_back(EdgeJson(e));
  }
  j["edges"] = edges;
  j["chordal"] = chordal;
  j["fill_edges"] = fill;
  Json cliques = Json::array();
  for (const auto& c : cs.cliques) cliques.push_back(NodeList(c));
  j["cliques"] = cliques;
  j["overlap_nodes"] = NodeList(cs.overlap_nodes);
  Json e0 = Json::array();
  for (const Edge& e : cs.overlap_edges) e0.push_back(EdgeJson(e));
  j["overlap_edges"] = e0;
  Emit(j, out);
  return kExitOk;
}

int Bench(const BenchConfig& config, const std::string& csv, const std::string& out) {
  const BenchReport r = RunBench(config);
  if (!csv.empty()) WriteBenchCsv(r, csv);
  Json j;
  j["chain_length"] = config.chain_length;
  j["instances"] = config.instances;
  j["bound"] = config.bound;
  j["seed"] = config.seed;
  j["regenerated"] = r.regenerated;
  j["common_successes"] = r.common_successes;
  Json methods;
  for (const std::string& m : config.methods) {
    const MethodSummary& s = r.methods.at(m);
    methods[m] = {{"success_percent", s.success_percent},
                  {"mean_h2_common", NumberOrNull(s.mean_h2_common)}};
  }
  j["methods"] = methods;
  Json hist = Json::array();
  for (const auto& [bin, count] : r.admm_histogram) {
    hist.push_back({{"from", bin}, {"to", bin + r.histogram_bin}, {"count", count}});
  }
  j["admm_iterations"] = hist;
  j["seconds"] = r.seconds;
  Emit(j, out);
  return kExitOk;
}

void AddAdmmFlags(CLI::App* cmd, AdmmOptions* o) {
  cmd->add_option("--rho", o->rho, "ADMM penalty")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", o->tol, "ADMM stopping tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", o->max_iter, "ADMM iteration limit")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--parallel", o->parallel, "solve clique subproblems on threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized H2 controller synthesis for interconnected systems"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out;
  app.add_option("-o,--output", out, "write JSON here instead of stdout");

  std::string system_path, gains_path;
  auto* classify = app.add_subcommand("classify", "stabilizability certificates of a system");
  classify->add_option("system", system_path)->required()->check(CLI::ExistingFile);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synthesize", "compute decentralized gains");
  synth->add_option("system", sa.system)->required()->check(CLI::ExistingFile);
  synth->add_option("--method", sa.method)
      ->check(CLI::IsMember({"centralized", "admm", "distributed", "localized-lqr",
                             "truncated-lqr", "fully-actuated"}));
  AddAdmmFlags(synth, &sa.admm);
  synth->add_option("--trace", sa.trace, "ADMM residual trace CSV");
  synth->add_option("--transcript", sa.transcript, "message transcript (distributed)");
  synth->add_flag("--transcript-values", sa.transcript_values, "include payload values");

  auto* check = app.add_subcommand("check", "verify gains on a system");
  check->add_option("system", system_path)->required()->check(CLI::ExistingFile);
  check->add_option("gains", gains_path)->required()->check(CLI::ExistingFile);

  auto* decompose = app.add_subcommand("decompose", "chordal decomposition of the plant graph");
  decompose->add_option("system", system_path)->required()->check(CLI::ExistingFile);

  BenchConfig bc;
  std::string csv;
  auto* bench = app.add_subcommand("bench", "random chain benchmark");
  bench->add_option("--chain-length", bc.chain_length)->check(CLI::Range(2, 1000));
  bench->add_option("--instances", bc.instances)->check(CLI::PositiveNumber);
  bench->add_option("--bound", bc.bound)->check(CLI::PositiveNumber);
  bench->add_option("--seed", bc.seed);
  bench->add_option("--methods", bc.methods)
      ->delimiter(',')
      ->check(CLI::IsMember({"centralized", "admm", "localized-lqr", "truncated-lqr"}));
  bench->add_flag("--identity-disturbance", bc.identity_disturbance, "use M_i = I");
  bench->add_option("--csv", csv, "per-instance rows");
  AddAdmmFlags(bench, &bc.admm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*classify) return Classify(system_path, out);
    if (*synth) {
      sa.out = out;
      return Synthesize(sa);
    }
    if (*check) return Check(system_path, gains_path, out);
    if (*decompose) return Decompose(system_path, out);
    if (*bench) return Bench(bc, csv, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
