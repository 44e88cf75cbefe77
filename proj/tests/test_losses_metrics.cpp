// Copyright 2026 The iseeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "iseeq/eval_metrics.hpp"
#include "iseeq/losses.hpp"
#include "oracles.hpp"

namespace {

using iseeq::EntailmentLabel;
using iseeq::LossBatch;
using iseeq::LossTerms;
using iseeq::QuestionPair;
using iseeq::RewardConfig;

using Tokens = std::vector<std::string>;

// a=(1,0) b=(0,1) c=(1,1) d=(-1,0) x=(1,-1)
const iseeq::VectorStore& plane() {
  static const iseeq::VectorStore s(2, {"a", "b", "c", "d", "x"}, {1, 0, 0, 1, 1, 1, -1, 0, 1, -1});
  return s;
}

QuestionPair pair_of(Tokens gen, Tokens ref, double prob = 1.0) {
  QuestionPair p;
  p.generated_doc = iseeq::build_token_doc("g", gen, plane());
  p.reference_doc = iseeq::build_token_doc("r", ref, plane());
  p.generated = std::move(gen);
  p.reference = std::move(ref);
  p.gen_prob = prob;
  return p;
}

// ---- LCS / indicator / reward --------------------------------------------------

TEST(Lcs, SelfAndDisjoint) {
  const Tokens x{"a", "b", "c", "b"};
  EXPECT_EQ(iseeq::lcs_len(x, x), 4u);
  EXPECT_EQ(iseeq::lcs_len(x, Tokens{"y", "z"}), 0u);
  EXPECT_EQ(iseeq::lcs_len(x, Tokens{}), 0u);
}

TEST(LcsProperty, MatchesTableOracle) {
  for (std::uint64_t seed = 1; seed <= 500; ++seed) {
    gen::Rng rng(seed);
    const auto a = gen::tokens(rng, rng.between(0, 15), rng.between(1, 6));
    const auto b = gen::tokens(rng, rng.between(0, 15), rng.between(1, 6));
    const std::size_t got = iseeq::lcs_len(a, b);
    EXPECT_EQ(got, oracle::lcs(a, b)) << "seed " << seed;
    EXPECT_LE(got, std::min(a.size(), b.size()));
    auto pa = b, pb = a;
    const auto prefix = gen::tokens(rng, 3, 4);
    pa.insert(pa.begin(), prefix.begin(), prefix.end());
    pb.insert(pb.begin(), prefix.begin(), prefix.end());
    EXPECT_EQ(iseeq::lcs_len(pb, pa), got + 3);
  }
}

TEST(Indicator, PositionalMatchRate) {
  EXPECT_DOUBLE_EQ(iseeq::indicator(Tokens{"a", "b", "c"}, Tokens{"a", "b", "c"}), 1.0);
  EXPECT_DOUBLE_EQ(iseeq::indicator(Tokens{"a", "b"}, Tokens{"c", "d"}), 0.0);
  EXPECT_DOUBLE_EQ(iseeq::indicator(Tokens{"a", "b", "c"}, Tokens{"a", "x", "c"}), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(iseeq::indicator(Tokens{"a"}, Tokens{"a", "b", "c", "d"}), 0.25);
}

TEST(Reward, IdenticalPairIsOne) {
  const RewardConfig cfg;
  EXPECT_DOUBLE_EQ(cfg.alpha(), 0.1971);
  EXPECT_NEAR(iseeq::reward(pair_of({"a", "b", "c"}, {"a", "b", "c"}), cfg), 1.0, 1e-12);
}

TEST(Reward, PureLcsWithoutOverlapIsZero) {
  EXPECT_DOUBLE_EQ(iseeq::reward(pair_of({"a", "b"}, {"c", "d"}), RewardConfig(1.0, 0.12)), 0.0);
}

TEST(Reward, FourTokenHandComputation) {
  // LCS([a,b,c,d],[a,x,c,d]) = 3. Best cosines: a->a 1, b->c 1/sqrt2, c->c 1,
  // d->d 1, each weighted 1/4.
  const double expected = 0.1971 * 0.75 + (1.0 - 0.1971) * (3.0 + std::sqrt(0.5)) / 4.0;
  EXPECT_NEAR(iseeq::reward(pair_of({"a", "b", "c", "d"}, {"a", "x", "c", "d"}), RewardConfig()), expected, 1e-9);
}

TEST(RewardConfigTest, Bounds) {
  EXPECT_THROW(RewardConfig(1.5, 0.1), std::invalid_argument);
  EXPECT_THROW(RewardConfig(0.5, -0.1), std::invalid_argument);
  EXPECT_DOUBLE_EQ(RewardConfig().gamma(), 0.12);
}

TEST(RewardProperty, BoundedByOne) {
  const std::vector<std::string> vocab{"a", "b", "c", "d", "x"};
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    gen::Rng rng(seed);
    Tokens g, r;
    for (std::size_t i = rng.between(1, 6); i > 0; --i) g.push_back(vocab[rng.index(5)]);
    for (std::size_t i = rng.between(1, 6); i > 0; --i) r.push_back(vocab[rng.index(5)]);
    const double v = iseeq::reward(pair_of(g, r), RewardConfig(rng.uniform(), 0.1));
    EXPECT_LE(std::abs(v), 1.0 + 1e-12);
  }
}

// ---- CE / RCE / ERL ------------------------------------------------------------

const std::vector<LossTerms> kMixed = {{0.5, 1.0, 0.5}, {1.0, 0.5, 0.25}, {0.2, 0.0, 0.9}};

TEST(CeLoss, CertainGenerationsCostNothing) {
  const std::vector<LossTerms> t{{0.7, 1.0, 1.0}, {0.3, 0.5, 1.0}};
  EXPECT_DOUBLE_EQ(iseeq::ce_loss(t, RewardConfig()), 0.0);
}

TEST(CeLoss, SingleTermAtInverseE) {
  LossBatch b;
  b.pairs.push_back(pair_of({"a", "b"}, {"a", "b"}, std::exp(-1.0)));
  EXPECT_NEAR(iseeq::ce_loss(b, RewardConfig()), 1.0, 1e-12);
}

TEST(CeLoss, MixedFixture) {
  // -(1/3) * (0.5 ln 0.5 + 0.5 ln 0.25 + 0) = ln 2 / 2
  EXPECT_NEAR(iseeq::ce_loss(kMixed, RewardConfig()), std::log(2.0) / 2.0, 1e-12);
}

TEST(CeLoss, ZeroProbabilityRejectedUnlessFloored) {
  const std::vector<LossTerms> t{{1.0, 1.0, 0.0}};
  RewardConfig cfg;
  EXPECT_THROW(iseeq::ce_loss(t, cfg), iseeq::DataError);
  cfg.prob_floor = 1e-12;
  EXPECT_NEAR(iseeq::ce_loss(t, cfg), -std::log(1e-12), 1e-9);
}

TEST(CeLossProperty, NonNegativeAndMonotoneInProbability) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    gen::Rng rng(seed);
    std::vector<LossTerms> t(rng.between(1, 6));
    for (auto& x : t) x = {rng.uniform(), rng.uniform(), rng.uniform(0.01, 1.0)};
    const double base = iseeq::ce_loss(t, RewardConfig());
    EXPECT_GE(base, 0.0);
    auto raised = t;
    auto& p = raised[rng.index(raised.size())].gen_prob;
    p = std::min(1.0, p + rng.uniform(0.0, 0.5));
    EXPECT_LE(iseeq::ce_loss(raised, RewardConfig()), base + 1e-15);
  }
}

TEST(RceLoss, Examples) {
  const std::vector<LossTerms> full{{0.8, 1.0, 0.3}, {0.4, 1.0, 0.6}};
  EXPECT_DOUBLE_EQ(iseeq::rce_loss(full), 0.0);
  EXPECT_DOUBLE_EQ(iseeq::rce_loss(std::vector<LossTerms>{{1.0, 0.0, 0.5}}), -0.5);
  // -(1/3) * (0 + 1 * 0.5 * 0.25 + 0.2 * 1 * 0.9)
  EXPECT_NEAR(iseeq::rce_loss(kMixed), -0.305 / 3.0, 1e-12);
}

LossBatch two_step_batch(EntailmentLabel label, double prob) {
  LossBatch b;
  b.pairs.push_back(pair_of({"a", "b", "c"}, {"a", "x", "c"}, 0.4));
  b.pairs.push_back(pair_of({"d", "c"}, {"c", "d"}, 0.7));
  b.entailments.push_back({label, prob});
  return b;
}

TEST(ErlLoss, BranchArithmetic) {
  const RewardConfig cfg;
  const auto ent = two_step_batch(EntailmentLabel::kEntailment, 1.0);
  EXPECT_NEAR(iseeq::erl_step_loss(ent, 0, cfg), iseeq::ce_loss(ent, cfg) - 1.0, 1e-12);
  const auto con = two_step_batch(EntailmentLabel::kContradiction, 0.0);
  EXPECT_NEAR(iseeq::erl_step_loss(con, 0, cfg), iseeq::rce_loss(con, cfg) - 1.0, 1e-12);
  const auto neu = two_step_batch(EntailmentLabel::kNeutral, 0.25);
  EXPECT_NEAR(iseeq::erl_step_loss(neu, 0, cfg), iseeq::rce_loss(neu, cfg) - 0.75, 1e-12);
}

TEST(ErlLoss, FlippingOnlyTheLabelSwitchesFormula) {
  const RewardConfig cfg;
  const auto a = two_step_batch(EntailmentLabel::kEntailment, 0.6);
  const auto b = two_step_batch(EntailmentLabel::kNeutral, 0.6);
  EXPECT_NEAR(iseeq::erl_step_loss(a, 0, cfg), iseeq::ce_loss(a, cfg) - 0.6, 1e-12);
  EXPECT_NEAR(iseeq::erl_step_loss(b, 0, cfg), iseeq::rce_loss(b, cfg) - 0.4, 1e-12);
  EXPECT_NE(iseeq::erl_step_loss(a, 0, cfg), iseeq::erl_step_loss(b, 0, cfg));
}

TEST(ErlLoss, Errors) {
  const RewardConfig cfg;
  const auto b = two_step_batch(EntailmentLabel::kEntailment, 0.5);
  EXPECT_THROW(iseeq::erl_step_loss(b, 1, cfg), std::out_of_range);
  auto bad = b;
  bad.entailments.clear();
  EXPECT_THROW(iseeq::erl_step_loss(bad, 0, cfg), std::invalid_argument);
  EXPECT_THROW(iseeq::ce_loss(LossBatch{}, cfg), std::invalid_argument);
  EXPECT_THROW(iseeq::parse_entailment_label("maybe"), iseeq::DataError);
}

TEST(ErlLossProperty, BranchDependsOnlyOnLabel) {
  const RewardConfig cfg;
  const EntailmentLabel labels[] = {EntailmentLabel::kEntailment, EntailmentLabel::kContradiction,
                                    EntailmentLabel::kNeutral};
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    gen::Rng rng(seed);
    const auto label = labels[rng.index(3)];
    const double p = rng.uniform(), q = rng.uniform();
    const double diff =
        iseeq::erl_step_loss(two_step_batch(label, q), 0, cfg) - iseeq::erl_step_loss(two_step_batch(label, p), 0, cfg);
    // Entailment branch subtracts prob, the other adds it back via (1 - prob).
    const double expected = label == EntailmentLabel::kEntailment ? -(q - p) : (q - p);
    EXPECT_NEAR(diff, expected, 1e-12);
  }
}

// ---- EMA -----------------------------------------------------------------------

TEST(Ema, Extremes) {
  EXPECT_DOUBLE_EQ(iseeq::ema_update(3.0, 5.0, RewardConfig(0.5, 0.0)), 5.0);
  EXPECT_DOUBLE_EQ(iseeq::ema_update(3.0, 5.0, RewardConfig(0.5, 1.0)), 3.0);
  EXPECT_NEAR(iseeq::ema_update(1.0, 2.0, RewardConfig()), 0.12 + 0.88 * 2.0, 1e-12);
}

TEST(Ema, UnrolledEqualsClosedForm) {
  const RewardConfig cfg;
  const double g = 0.12;
  const std::vector<double> batches{0.9, 0.4, 1.3, 0.2, 0.75};
  double l = 2.0;
  for (double b : batches) l = iseeq::ema_update(l, b, cfg);
  double closed = std::pow(g, 5) * 2.0;
  for (std::size_t s = 0; s < batches.size(); ++s) closed += (1.0 - g) * std::pow(g, 4 - s) * batches[s];
  EXPECT_NEAR(l, closed, 1e-12);
}

TEST(EmaProperty, ContractsTowardBatchLoss) {
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    gen::Rng rng(seed);
    const RewardConfig cfg(0.5, rng.uniform(0.0, 0.999));
    const double prev = rng.uniform(-10.0, 10.0), batch = rng.uniform(-10.0, 10.0);
    const double next = iseeq::ema_update(prev, batch, cfg);
    EXPECT_LE(std::abs(next - batch), cfg.gamma() * std::abs(prev - batch) + 1e-12);
  }
}

// ---- SR / LC -------------------------------------------------------------------

using Vecs = std::vector<std::vector<float>>;

TEST(Sr, IdenticalAndOrthogonal) {
  EXPECT_NEAR(iseeq::sr_score(Vecs{{0.3f, 0.4f}}, Vecs{{0.3f, 0.4f}}), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(iseeq::sr_score(Vecs{{1, 0}}, Vecs{{0, 1}}), 0.0);
}

TEST(Sr, Errors) {
  EXPECT_THROW(iseeq::sr_score(Vecs{}, Vecs{{1}}), std::invalid_argument);
  EXPECT_THROW(iseeq::sr_score(Vecs{{1, 0}}, Vecs{{1, 0, 0}}), std::invalid_argument);
  EXPECT_THROW(iseeq::sr_score(Vecs{{1}}, Vecs{{1}}, iseeq::PairScores{1, 2, {0.5, 0.5}}), std::invalid_argument);
}

TEST(Sr, ExternalScoresOverrideCosine) {
  EXPECT_DOUBLE_EQ(iseeq::sr_score(Vecs{{1}, {1}}, Vecs{{1}}, iseeq::PairScores{2, 1, {0.2, 0.6}}), 0.4);
}

TEST(SrProperty, MatchesDoubleLoopAndIsPermutationInvariant) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    gen::Rng rng(seed);
    Vecs g, r;
    for (int i = 0; i < 3; ++i) g.push_back(gen::gaussian_vector(rng, 5));
    for (int i = 0; i < 2; ++i) r.push_back(gen::gaussian_vector(rng, 5));
    double sum = 0.0;
    for (const auto& x : g) {
      for (const auto& y : r) {
        double d = 0.0, nx = 0.0, ny = 0.0;
        for (int k = 0; k < 5; ++k) {
          d += static_cast<double>(x[k]) * y[k];
          nx += static_cast<double>(x[k]) * x[k];
          ny += static_cast<double>(y[k]) * y[k];
        }
        sum += d / std::sqrt(nx * ny);
      }
    }
    const double got = iseeq::sr_score(g, r);
    EXPECT_NEAR(got, sum / 6.0, 1e-9);
    std::shuffle(g.begin(), g.end(), rng.engine());
    std::reverse(r.begin(), r.end());
    EXPECT_NEAR(iseeq::sr_score(g, r), got, 1e-12);
  }
}

std::vector<EntailmentLabel> labels(std::size_t entail, std::size_t total) {
  std::vector<EntailmentLabel> out(total, EntailmentLabel::kNeutral);
  for (std::size_t i = 0; i < entail; ++i) out[i] = EntailmentLabel::kEntailment;
  return out;
}

TEST(Lc, Examples) {
  EXPECT_DOUBLE_EQ(iseeq::lc_score(labels(8, 8)), 100.0);
  EXPECT_DOUBLE_EQ(iseeq::lc_score(labels(0, 8)), 0.0);
  EXPECT_DOUBLE_EQ(iseeq::lc_score(labels(37, 100)), 37.0);
  EXPECT_DOUBLE_EQ(iseeq::lc_score(std::vector<EntailmentLabel>{}), 0.0);
}

TEST(LcProperty, BoundedAndAdditiveByWeightedMean) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    gen::Rng rng(seed);
    const std::size_t n1 = rng.between(1, 30), n2 = rng.between(1, 30);
    auto a = labels(rng.between(0, n1), n1), b = labels(rng.between(0, n2), n2);
    std::shuffle(a.begin(), a.end(), rng.engine());
    const double la = iseeq::lc_score(a), lb = iseeq::lc_score(b);
    EXPECT_GE(la, 0.0);
    EXPECT_LE(la, 100.0);
    auto both = a;
    both.insert(both.end(), b.begin(), b.end());
    const double weighted = (la * static_cast<double>(n1) + lb * static_cast<double>(n2)) / static_cast<double>(n1 + n2);
    EXPECT_NEAR(iseeq::lc_score(both), weighted, 1e-9);
  }
}

TEST(MetricReport, PerQueryBreakdown) {
  const std::vector<iseeq::ScoredPair> scores{{"q1", 0.5}, {"q1", 0.7}, {"q2", 0.1}, {"", 0.9}};
  const std::vector<iseeq::LabeledPair> lab{{"q1", EntailmentLabel::kEntailment},
                                            {"q2", EntailmentLabel::kNeutral},
                                            {"q2", EntailmentLabel::kEntailment},
                                            {"q2", EntailmentLabel::kContradiction}};
  const auto rep = iseeq::build_metric_report(scores, lab);
  EXPECT_NEAR(rep.sr, 0.55, 1e-12);
  EXPECT_DOUBLE_EQ(rep.lc_percent, 50.0);
  EXPECT_EQ(rep.n_pairs, 4u);
  EXPECT_EQ(rep.sr_pairs, 4u);
  ASSERT_EQ(rep.per_query.size(), 2u);
  EXPECT_EQ(rep.per_query[0].query_id, "q1");
  EXPECT_NEAR(rep.per_query[0].sr, 0.6, 1e-12);
  EXPECT_DOUBLE_EQ(rep.per_query[0].lc, 100.0);
  EXPECT_NEAR(rep.per_query[1].lc, 100.0 / 3.0, 1e-12);
}

}  // namespace
