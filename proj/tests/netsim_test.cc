#include "dcsynth/netsim.h"

#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "dcsynth/json_io.h"

namespace dcsynth {
namespace {

const std::string kData = DCSYNTH_DATA_DIR;

Mat S(double v) { return Mat::Constant(1, 1, v); }

SubsystemModel Scalar(double a) {
  return {S(a), S(1.0), S(1.0), SymMat::Identity(1), SymMat::Identity(1)};
}

void ExpectSameRun(const InterconnectedSystem& sys, const AdmmOptions& opts) {
  const ConsensusLayout layout = BuildLayout(sys);
  const AdmmResult mono = RunAdmm(sys, layout, opts);
  Network net = Deploy(sys, layout);
  const DistributedRun dist = RunDistributed(&net, opts);
  EXPECT_EQ(dist.converged, mono.converged);
  ASSERT_EQ(dist.state.trace.size(), mono.state.trace.size());
  for (size_t h = 0; h < mono.state.trace.size(); ++h) {
    EXPECT_EQ(dist.state.trace[h].primal_residual, mono.state.trace[h].primal_residual) << h;
    EXPECT_EQ(dist.state.trace[h].dual_residual, mono.state.trace[h].dual_residual) << h;
    EXPECT_EQ(dist.state.trace[h].objective, mono.state.trace[h].objective) << h;
  }
  EXPECT_EQ(dist.state.y, mono.state.y);
  EXPECT_EQ(dist.state.lambda, mono.state.lambda);
  EXPECT_TRUE(AuditPrivacy(dist.transcript, layout).passed);
  EXPECT_EQ(static_cast<int>(dist.transcript.size()),
            mono.state.iteration * ExpectedMessagesPerRound(layout));
}

TEST(DeployTest, Line) {
  const InterconnectedSystem sys = LoadSystem(kData + "/line3.json");
  const Network net = Deploy(sys, BuildLayout(sys));
  EXPECT_EQ(net.cliques.size(), 2u);
  ASSERT_EQ(net.coordinators.size(), 1u);
  const CoordinatorAgent& c = net.coordinators[0];
  EXPECT_EQ(c.id, AgentId::Node(1));
  ASSERT_TRUE(c.node_shard.has_value());
  EXPECT_FALSE(c.edge_shard.has_value());
  EXPECT_EQ(c.node_shard->subsystem.a, sys.subsystem(1).a);
  EXPECT_EQ(c.cliques, (std::vector<int>{0, 1}));
}

TEST(DeployTest, FourNode) {
  const InterconnectedSystem sys = LoadSystem(kData + "/four_node.json");
  const Network net = Deploy(sys, BuildLayout(sys));
  EXPECT_EQ(net.cliques.size(), 2u);
  ASSERT_EQ(net.coordinators.size(), 3u);
  EXPECT_EQ(net.coordinators[0].id.ToString(), "node:2");
  EXPECT_EQ(net.coordinators[1].id.ToString(), "node:4");
  EXPECT_EQ(net.coordinators[2].id.ToString(), "edge:2-4");
  EXPECT_EQ(net.coordinators[2].edge_shard->a_ji, S(2.0));
  EXPECT_EQ(net.cliques[0].shard.subsystems.count(2), 0u);
}

TEST(DeployTest, DisjointCliquesHaveNoCoordinators) {
  const InterconnectedSystem sys({Scalar(1), Scalar(1), Scalar(2)}, {{1, 0, S(1.0)}});
  const Network net = Deploy(sys, BuildLayout(sys));
  EXPECT_EQ(net.cliques.size(), 2u);
  EXPECT_TRUE(net.coordinators.empty());
}

TEST(RunDistributedTest, FourNodeMatchesMonolithic) {
  ExpectSameRun(LoadSystem(kData + "/four_node.json"), {});
}

TEST(RunDistributedTest, LineMatchesMonolithic) {
  ExpectSameRun(LoadSystem(kData + "/line3.json"), {});
}

TEST(RunDistributedTest, ExtendedCycleMatchesMonolithic) {
  ExpectSameRun(LoadSystem(kData + "/cycle4.json"), {});
}

TEST(RunDistributedTest, RandomChainsMatchMonolithic) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<SubsystemModel> subs;
    std::vector<CouplingBlock> cps;
    for (int i = 0; i < 4; ++i) subs.push_back(Scalar(u(rng)));
    for (int i = 0; i + 1 < 4; ++i) {
      cps.push_back({i, i + 1, S(u(rng))});
      cps.push_back({i + 1, i, S(u(rng))});
    }
    AdmmOptions o;
    o.parallel = trial % 2 == 1;
    ExpectSameRun(InterconnectedSystem(subs, cps), o);
  }
}

TEST(RunDistributedTest, SynthesizedGainsMatch) {
  const InterconnectedSystem sys = LoadSystem(kData + "/four_node.json");
  const DistributedResult d = SynthesizeDistributed(sys);
  const AdmmResult m = RunAdmm(sys);
  ASSERT_TRUE(d.admm.synthesis.ok());
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(d.admm.synthesis.controller.gains[i], m.synthesis.controller.gains[i]);
  }
  EXPECT_EQ(d.admm.synthesis.h2, m.synthesis.h2);
}

TEST(RunDistributedTest, LineMessageCounts) {
  const InterconnectedSystem sys = LoadSystem(kData + "/line3.json");
  const ConsensusLayout layout = BuildLayout(sys);
  // Two copies per clique, each sent both ways, plus one token per clique.
  EXPECT_EQ(ExpectedMessagesPerRound(layout), 2 * (2 + 2) + 2);
  AdmmOptions o;
  o.max_iter = 3;
  Network net = Deploy(sys, layout);
  const DistributedRun run = RunDistributed(&net, o);
  std::map<int, int> per_round;
  for (const Message& m : run.transcript) ++per_round[m.round];
  EXPECT_EQ(per_round, (std::map<int, int>{{1, 10}, {2, 10}, {3, 10}}));
}

TEST(RunDistributedTest, ZeroIterationsGiveEmptyLog) {
  const InterconnectedSystem sys = LoadSystem(kData + "/line3.json");
  Network net = Deploy(sys, BuildLayout(sys));
  AdmmOptions o;
  o.max_iter = 0;
  const DistributedRun run = RunDistributed(&net, o);
  EXPECT_TRUE(run.transcript.empty());
  EXPECT_EQ(run.state.iteration, 0);
}

TEST(RunDistributedTest, ExclusiveNodeNeverLeavesItsClique) {
  const InterconnectedSystem sys = LoadSystem(kData + "/four_node.json");
  const ConsensusLayout layout = BuildLayout(sys);
  AdmmOptions o;
  o.max_iter = 5;
  Network net = Deploy(sys, layout);
  const DistributedRun run = RunDistributed(&net, o);
  ASSERT_FALSE(run.transcript.empty());
  for (const Message& m : run.transcript) {
    if (m.equation < 0) continue;
    const ConsensusEquation& eq = layout.equations[m.equation];
    EXPECT_NE(eq.node, 0);
    EXPECT_NE(eq.edge.first, 0);
    EXPECT_NE(eq.edge.second, 0);
  }
}

Message Forged(const std::string& tag) {
  Message m;
  m.round = 1;
  m.from = AgentId::Clique(0);
  m.to = AgentId::Node(1);
  m.tag = tag;
  m.subject = "A_11";
  m.rows = m.cols = 1;
  m.values = {S(1.0)};
  return m;
}

TEST(AuditTest, EmptyLogPasses) {
  const ConsensusLayout layout = BuildLayout(LoadSystem(kData + "/line3.json"));
  const AuditReport r = AuditPrivacy({}, layout);
  EXPECT_TRUE(r.passed);
  EXPECT_TRUE(r.entries.empty());
}

TEST(AuditTest, ForgedModelTagFails) {
  const ConsensusLayout layout = BuildLayout(LoadSystem(kData + "/line3.json"));
  const AuditReport r = AuditPrivacy({Forged("A_11")}, layout);
  EXPECT_FALSE(r.passed);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_NE(r.failures[0].find("clique:1 -> node:2 [A_11]"), std::string::npos) << r.failures[0];
}

TEST(AuditTest, TamperedMessagesFail) {
  const InterconnectedSystem sys = LoadSystem(kData + "/four_node.json");
  const ConsensusLayout layout = BuildLayout(sys);
  AdmmOptions o;
  o.max_iter = 1;
  Network net = Deploy(sys, layout);
  const TranscriptLog log = RunDistributed(&net, o).transcript;
  ASSERT_TRUE(AuditPrivacy(log, layout).passed);

  // Copy sent to a coordinator that does not own the equation.
  TranscriptLog bad = log;
  for (Message& m : bad) {
    if (m.from.kind == AgentKind::kClique && m.to == AgentId::Node(1)) {
      m.to = AgentId::Node(3);
      break;
    }
  }
  EXPECT_FALSE(AuditPrivacy(bad, layout).passed);

  // Subject renamed to an exclusive node's variable.
  bad = log;
  bad[0].subject = "X_1,1";
  EXPECT_FALSE(AuditPrivacy(bad, layout).passed);

  // Control token carrying data.
  bad = log;
  for (Message& m : bad) {
    if (m.tag == "control.continue") {
      m.values = {S(0.0)};
      break;
    }
  }
  EXPECT_FALSE(AuditPrivacy(bad, layout).passed);

  // Unknown agent.
  bad = log;
  bad[0].from = AgentId::Clique(7);
  EXPECT_FALSE(AuditPrivacy(bad, layout).passed);
}

TEST(TranscriptTest, JsonLines) {
  const InterconnectedSystem sys = LoadSystem(kData + "/line3.json");
  Network net = Deploy(sys, BuildLayout(sys));
  AdmmOptions o;
  o.max_iter = 1;
  const TranscriptLog log = RunDistributed(&net, o).transcript;
  const Json first = Json::parse(TranscriptLine(log[0]));
  EXPECT_EQ(first["round"], 1);
  EXPECT_EQ(first["from"], "node:2");
  EXPECT_EQ(first["to"], "clique:1");
  EXPECT_EQ(first["tag"], "consensus.X");
  EXPECT_FALSE(first.contains("values"));
  const Json with = Json::parse(TranscriptLine(log[0], true));
  ASSERT_TRUE(with.contains("values"));
  EXPECT_EQ(with["values"].size(), 2u);

  const std::string path = ::testing::TempDir() + "/transcript.jsonl";
  WriteTranscript(log, path);
  std::ifstream in(path);
  int lines = 0;
  for (std::string line; std::getline(in, line);) {
    EXPECT_NO_THROW(Json::parse(line));
    ++lines;
  }
  EXPECT_EQ(lines, static_cast<int>(log.size()));
}

TEST(TranscriptTest, TagsAreClosed) {
  const std::vector<std::string>& tags = AllowedTags();
  for (const std::string& t : tags) {
    EXPECT_TRUE(t.rfind("consensus.", 0) == 0 || t.rfind("copy.", 0) == 0 ||
                t.rfind("control.", 0) == 0)
        << t;
  }
}

}  // namespace
}  // namespace dcsynth
