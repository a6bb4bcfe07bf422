#include "dcsynth/stabilizability.h"

#include <random>

#include <gtest/gtest.h>

#include "dcsynth/errors.h"
#include "generators.h"

namespace dcsynth {
namespace {

const std::string kData = DCSYNTH_DATA_DIR;

Mat S(double v) { return Mat::Constant(1, 1, v); }

SubsystemModel Scalar(double a, double b = 1.0) {
  return {S(a), S(b), S(1.0), SymMat::Identity(1), SymMat::Identity(1)};
}

// Two scalar nodes, the first without actuation, closed under u_2 = -k x_2.
Mat PartialClosedLoop(double k2) {
  Mat a(2, 2);
  a << 1, 2, -1, -k2;
  return a;
}

TEST(StabilizabilityTest, FullyActuatedCheck) {
  EXPECT_TRUE(CheckFullyActuated(InterconnectedSystem({Scalar(2.0)}, {})));
  Mat a(2, 2);
  a << 1, 1, 1, 2;
  Mat b(2, 1);
  b << 0, 1;
  const InterconnectedSystem narrow({{a, b, b, SymMat::Identity(2), SymMat::Identity(1)}}, {});
  EXPECT_FALSE(CheckFullyActuated(narrow));
  EXPECT_THROW(FullyActuatedGain(narrow), DomainError);
  EXPECT_TRUE(CheckFullyActuated(LoadSystem(kData + "/four_node.json")));
}

TEST(StabilizabilityTest, FullyActuatedGainDecoupled) {
  Mat a(2, 2);
  a << 3, -1, 4, 0.5;
  Mat b(2, 2);
  b << 2, 1, 0, 1;
  const InterconnectedSystem sys(
      {{a, b, Mat::Identity(2, 2), SymMat::Identity(2), SymMat::Identity(2)}, Scalar(-3.0, 0.5)},
      {});
  const Mat acl = ClosedLoop(sys, FullyActuatedGain(sys, 1.0));
  EXPECT_LE((acl + Mat::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(StabilizabilityTest, FullyActuatedGainFourNode) {
  const InterconnectedSystem sys = LoadSystem(kData + "/four_node.json");
  const std::vector<double> alpha = FullyActuatedShifts(sys, 1.0);
  EXPECT_EQ(alpha, (std::vector<double>{1.0, 2.0, 7.0, 4.0}));
  const Mat acl = ClosedLoop(sys, FullyActuatedGain(sys, 1.0));
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(acl(i, i), -alpha[i], 1e-12);
  EXPECT_TRUE(IsHurwitz(acl));
  EXPECT_TRUE(BlockDiagonalLyapunov(sys, acl).feasible);
}

TEST(StabilizabilityTest, FullyActuatedShiftFromSingleEntry) {
  Mat c = Mat::Zero(2, 2);
  c(1, 0) = 0.3;
  const SubsystemModel s{Mat::Identity(2, 2), Mat::Identity(2, 2), Mat::Identity(2, 2),
                         SymMat::Identity(2), SymMat::Identity(2)};
  const InterconnectedSystem sys({s, s}, {{0, 1, c}});
  EXPECT_EQ(FullyActuatedShifts(sys, 1.0), (std::vector<double>{1.3, 1.0}));
  const Mat acl = ClosedLoop(sys, FullyActuatedGain(sys, 1.0));
  EXPECT_NEAR(acl(1, 1), -1.3, 1e-12);
}

TEST(StabilizabilityTest, StabilizableLmiExamples) {
  Mat k;
  EXPECT_TRUE(CheckStabilizableLmi(S(1.0), S(1.0), &k).feasible);
  EXPECT_LT(1.0 - k(0, 0), 0.0);
  const LmiCheck no = CheckStabilizableLmi(S(1.0), S(0.0));
  EXPECT_FALSE(no.feasible);
  EXPECT_FALSE(no.indeterminate);
  Mat a(2, 2);
  a << 0, 1, 0, 0;
  Mat b(2, 1);
  b << 0, 1;
  EXPECT_TRUE(CheckStabilizableLmi(a, b, &k).feasible);
  EXPECT_TRUE(IsHurwitz(a - b * k));
}

TEST(StabilizabilityTest, TopologicallyWeak) {
  const TopologicalReport four = CheckTopologicallyWeak(LoadSystem(kData + "/four_node.json"));
  EXPECT_TRUE(four.acyclic);
  EXPECT_EQ(four.node_stabilizable, std::vector<bool>(4, true));
  EXPECT_TRUE(four.certified());

  const TopologicalReport loop = CheckTopologicallyWeak(
      InterconnectedSystem({Scalar(1.0), Scalar(1.0)}, {{0, 1, S(1.0)}, {1, 0, S(1.0)}}));
  EXPECT_FALSE(loop.acyclic);
  EXPECT_FALSE(loop.certified());

  const TopologicalReport dead = CheckTopologicallyWeak(
      InterconnectedSystem({Scalar(1.0), Scalar(1.0, 0.0)}, {{1, 0, S(1.0)}}));
  EXPECT_TRUE(dead.acyclic);
  EXPECT_FALSE(dead.node_stabilizable[1]);
  EXPECT_FALSE(dead.certified());
}

TEST(StabilizabilityTest, DynamicallyWeakDecoupled) {
  const InterconnectedSystem sys({Scalar(1.0), Scalar(-2.0, 0.5)}, {});
  const auto cert = CheckDynamicallyWeak(sys, IdentityWeights(sys));
  ASSERT_TRUE(cert.has_value());
  EXPECT_TRUE(IsHurwitz(ClosedLoop(sys, cert->gain)));
}

TEST(StabilizabilityTest, DynamicallyWeakActuatedChain) {
  // With b = 1 the local gain absorbs any coupling, so both strengths pass.
  for (double delta : {0.1, 10.0}) {
    const InterconnectedSystem sys({Scalar(1.0), Scalar(1.0)}, {{1, 0, S(delta)}});
    const auto cert = CheckDynamicallyWeak(sys, IdentityWeights(sys));
    ASSERT_TRUE(cert.has_value()) << delta;
    EXPECT_TRUE(IsHurwitz(ClosedLoop(sys, cert->gain)));
  }
}

TEST(StabilizabilityTest, DynamicallyWeakUnactuatedLoop) {
  // Stable unactuated nodes in a loop: the node inequality x^2 - 2x + delta^2
  // < 0 has a solution iff |delta| < 1.
  for (double delta : {0.1, 0.9, 1.1, 10.0}) {
    const InterconnectedSystem sys({Scalar(-1.0, 0.0), Scalar(-1.0, 0.0)},
                                   {{0, 1, S(delta)}, {1, 0, S(delta)}});
    EXPECT_EQ(CheckDynamicallyWeak(sys, IdentityWeights(sys)).has_value(), delta < 1) << delta;
  }
}

TEST(StabilizabilityTest, ClassifyUnactuatedPair) {
  const InterconnectedSystem sys = LoadSystem(kData + "/two_node_partial.json");
  const StabilizabilityReport r = Classify(sys);
  EXPECT_TRUE(r.sigma0.feasible);
  EXPECT_EQ(r.restriction_status, SynthStatus::kInfeasible);
  EXPECT_FALSE(r.fully_actuated);
  EXPECT_FALSE(r.sigma2_certified());
  EXPECT_FALSE(r.constructed_gain.has_value());
}

TEST(StabilizabilityTest, UnactuatedPairWitness) {
  const InterconnectedSystem sys = LoadSystem(kData + "/two_node_partial.json");
  EXPECT_TRUE(IsHurwitz(PartialClosedLoop(1.5)));
  EXPECT_FALSE(IsHurwitz(PartialClosedLoop(0.5)));
  EXPECT_FALSE(IsHurwitz(PartialClosedLoop(3.0)));
  for (double k2 : {0.5, 1.5, 3.0}) {
    const DecentralizedController k{{S(0.0), S(k2)}};
    EXPECT_EQ(ClosedLoop(sys, k), PartialClosedLoop(k2));
    const LmiCheck diag = BlockDiagonalLyapunov(sys, PartialClosedLoop(k2));
    EXPECT_FALSE(diag.feasible) << k2;
    EXPECT_FALSE(diag.indeterminate) << k2;
  }
}

TEST(StabilizabilityTest, ClassifyFullyActuatedPair) {
  const StabilizabilityReport r = Classify(LoadSystem(kData + "/two_node_full.json"));
  EXPECT_TRUE(r.fully_actuated);
  EXPECT_TRUE(r.sigma0.feasible);
  EXPECT_TRUE(r.sigma2_certified());
}

TEST(StabilizabilityTest, ClassifyFourNode) {
  const InterconnectedSystem sys = LoadSystem(kData + "/four_node.json");
  const StabilizabilityReport r = Classify(sys);
  EXPECT_TRUE(r.fully_actuated);
  EXPECT_TRUE(r.topological.certified());
  EXPECT_TRUE(r.sigma0.feasible);
  ASSERT_TRUE(r.gain_source.has_value());
  EXPECT_EQ(*r.gain_source, GainSource::kRestriction);
  EXPECT_TRUE(IsHurwitz(ClosedLoop(sys, *r.constructed_gain)));
}

TEST(StabilizabilityPropertyTest, CertifiedImpliesCentralized) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> a(-1.0, 2.0), c(-2.0, 2.0);
  std::bernoulli_distribution actuated(0.7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<SubsystemModel> subs;
    for (int i = 0; i < 3; ++i) subs.push_back(Scalar(a(rng), actuated(rng) ? 1.0 : 0.0));
    const InterconnectedSystem sys(subs, {{1, 0, S(c(rng))}, {2, 1, S(c(rng))},
                                          {0, 2, S(c(rng))}});
    const StabilizabilityReport r = Classify(sys);
    if (r.sigma2_certified()) EXPECT_TRUE(r.sigma0.feasible);
    if (r.constructed_gain) EXPECT_TRUE(IsHurwitz(ClosedLoop(sys, *r.constructed_gain)));
  }
}

TEST(StabilizabilityPropertyTest, FullyActuatedGainIsCertified) {
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const InterconnectedSystem sys = testgen::RandomFullyActuated(rng);
    ASSERT_TRUE(CheckFullyActuated(sys));
    const Mat acl = ClosedLoop(sys, FullyActuatedGain(sys));
    EXPECT_TRUE(IsHurwitz(acl));
    EXPECT_TRUE(BlockDiagonalLyapunov(sys, acl).feasible);
  }
}

TEST(StabilizabilityPropertyTest, DynamicallyWeakGainIsCertified) {
  std::mt19937_64 rng(16);
  int qualifying = 0, rejected = 0;
  while (qualifying < 50) {
    const InterconnectedSystem sys = testgen::RandomWeakChain(rng, 1.5);
    const auto cert = CheckDynamicallyWeak(sys, IdentityWeights(sys));
    if (!cert) {
      ++rejected;
      continue;
    }
    const Mat acl = ClosedLoop(sys, cert->gain);
    EXPECT_TRUE(IsHurwitz(acl));
    EXPECT_TRUE(BlockDiagonalLyapunov(sys, acl).feasible);
    ++qualifying;
  }
  EXPECT_GT(rejected, 0);
}

}  // namespace
}  // namespace dcsynth
