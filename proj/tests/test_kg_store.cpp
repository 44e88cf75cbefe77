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

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "iseeq/config.hpp"
#include "iseeq/kg_store.hpp"
#include "iseeq/text.hpp"
#include "oracles.hpp"

namespace {

using iseeq::EntityId;
using iseeq::KgFormat;
using iseeq::ParseMode;

iseeq::KgLoadResult parse(const std::string& body, ParseMode mode = ParseMode::kStrict,
                          KgFormat format = KgFormat::kTsv) {
  std::istringstream in(body);
  return iseeq::parse_kg(in, "fixture", format, mode);
}

std::vector<EntityId> ids(const iseeq::KnowledgeGraph& kg, std::initializer_list<const char*> names) {
  std::vector<EntityId> out;
  for (const char* n : names) out.push_back(*kg.lookup(n));
  return out;
}

TEST(Text, CanonicalizeTrimsLowercasesAndJoins) {
  EXPECT_EQ(iseeq::text::canonicalize("  Medical   Doctor \t"), "medical_doctor");
  EXPECT_EQ(iseeq::text::canonicalize("PA"), "pa");
  EXPECT_EQ(iseeq::text::canonicalize("   "), "");
}

TEST(Text, TokenizeStripsPossessiveButKeepsItInSpan) {
  const std::string s = "a physician's assistant";
  const auto toks = iseeq::text::tokenize(s);
  ASSERT_EQ(toks.size(), 3u);
  EXPECT_EQ(toks[1].text, "physician");
  EXPECT_EQ(s.substr(toks[1].begin, toks[1].end - toks[1].begin), "physician's");
  EXPECT_EQ(toks[2].text, "assistant");
}

TEST(Text, CurlyApostropheActsAsPossessive) {
  EXPECT_EQ(iseeq::text::match_key("Physician\xE2\x80\x99s Assistant"), "physician_assistant");
}

TEST(Text, MatchKeyIgnoresCaseSpacingAndUnderscores) {
  EXPECT_EQ(iseeq::text::match_key("Career  Options"), "career_options");
  EXPECT_EQ(iseeq::text::match_key("career_options"), "career_options");
  EXPECT_EQ(iseeq::text::match_key("it's"), "it");
}

TEST(KgStore, CareerFixtureHasThreeEntitiesTwoTriples) {
  const auto res = parse("career_options\tisrelatedto\tcareer_choice\ncareer_options\tisrelatedto\tprofession\n");
  EXPECT_EQ(res.graph.entity_count(), 3u);
  EXPECT_EQ(res.graph.triple_count(), 2u);
  EXPECT_TRUE(res.warnings.empty());
}

TEST(KgStore, RepeatedLineDeduplicates) {
  std::string body;
  for (int i = 0; i < 5; ++i) body += "nurse\tis_a\tpsychiatric_nurse\n";
  EXPECT_EQ(parse(body).graph.triple_count(), 1u);
}

TEST(KgStore, CanonicalizationMergesSurfaceVariants) {
  const auto res = parse("Career Options\tIsRelatedTo\tprofession\ncareer_options\tisrelatedto\tProfession\n");
  EXPECT_EQ(res.graph.triple_count(), 1u);
  EXPECT_EQ(res.graph.entity_count(), 2u);
  const auto id = res.graph.lookup("career options");
  ASSERT_TRUE(id.has_value());
  EXPECT_EQ(res.graph.name(*id), "career_options");
  EXPECT_EQ(res.graph.lookup("career_options"), id);
}

TEST(KgStore, LenientModeSkipsMalformedLinesWithWarnings) {
  const std::string body =
      "a\tr\tb\n"
      "b\tr\tc\n"
      "c\tr\td\n"
      "broken line without tabs\n"
      "d\tr\te\n"
      "e\tr\tf\n"
      "f\tr\tg\n"
      "too\tmany\tfields\there\n"
      "g\tr\th\n"
      "h\tr\ti\n";
  const auto res = parse(body, ParseMode::kLenient);
  EXPECT_EQ(res.graph.triple_count(), 8u);
  ASSERT_EQ(res.warnings.size(), 2u);
  EXPECT_NE(res.warnings[0].find(":4:"), std::string::npos);
  EXPECT_NE(res.warnings[1].find(":8:"), std::string::npos);
}

TEST(KgStore, StrictModeReportsLineNumber) {
  try {
    parse("a\tr\tb\n\nbad\n");
    FAIL() << "expected ParseError";
  } catch (const iseeq::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(KgStore, EmptyFileIsAnError) {
  EXPECT_THROW(parse(""), iseeq::DataError);
  EXPECT_THROW(parse("\n   \n"), iseeq::DataError);
}

TEST(KgStore, MissingFileIsDataError) {
  EXPECT_THROW(iseeq::load_kg("/nonexistent/kg.tsv"), iseeq::DataError);
}

TEST(KgStore, ConceptNetKeepsEnglishEdgesOnly) {
  const std::string body =
      "/a/x\t/r/IsA\t/c/en/nurse/n\t/c/en/health_professional\t{}\n"
      "/a/y\t/r/RelatedTo\t/c/fr/infirmier\t/c/en/nurse\t{}\n"
      "/a/z\t/r/RelatedTo\t/c/en/career_options\t/c/en/profession\t{}\n";
  const auto res = parse(body, ParseMode::kStrict, KgFormat::kConceptNet);
  EXPECT_EQ(res.graph.triple_count(), 2u);
  const auto nurse = res.graph.lookup("nurse");
  ASSERT_TRUE(nurse);
  ASSERT_EQ(res.graph.outgoing(*nurse).size(), 1u);
  EXPECT_EQ(res.graph.outgoing(*nurse)[0].relation, "isa");
}

TEST(KgStore, AdjacencyHoldsOnlyOwnSubject) {
  gen::Rng rng(3);
  const auto kg = gen::random_graph(rng, 20, 60);
  for (std::size_t e = 0; e < kg.entity_count(); ++e) {
    for (const auto& t : kg.outgoing(static_cast<EntityId>(e))) EXPECT_EQ(iseeq::index_of(t.subject), e);
  }
  for (const auto& name : kg.entities()) EXPECT_EQ(kg.name(*kg.lookup(name)), name);
}

TEST(ExtractTriples, NurseOneHopExcludesObjectSideTriple) {
  const auto kg = parse(
                      "nurse\tis_a\tpsychiatric_nurse\n"
                      "nurse\tis_a\tnurse_practitioner\n"
                      "hospital\temploys\tnurse\n")
                      .graph;
  const auto seeds = ids(kg, {"nurse"});
  const auto out = iseeq::extract_triples(kg, seeds, 1);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(kg.spell(out[0]).object, "psychiatric_nurse");
  EXPECT_EQ(kg.spell(out[1]).object, "nurse_practitioner");
}

TEST(ExtractTriples, EmptySeedsGiveEmptyList) {
  const auto kg = parse("a\tr\tb\n").graph;
  EXPECT_TRUE(iseeq::extract_triples(kg, {}, 2).empty());
}

TEST(ExtractTriples, ZeroHopsIsInvalid) {
  const auto kg = parse("a\tr\tb\n").graph;
  const auto seeds = ids(kg, {"a"});
  EXPECT_THROW(iseeq::extract_triples(kg, seeds, 0), std::invalid_argument);
}

TEST(ExtractTriples, UnknownSeedIsSkipped) {
  const auto kg = parse("a\tr\tb\n").graph;
  const std::vector<EntityId> seeds{static_cast<EntityId>(999), *kg.lookup("a")};
  EXPECT_EQ(iseeq::extract_triples(kg, seeds, 1).size(), 1u);
}

TEST(ExtractTriples, ShallowerRevisitExpandsFurther) {
  // c is first reached at depth 2 via a->b->c, then at depth 1 via a->c.
  const auto kg = parse("a\tr\tb\nb\tr\tc\na\ts\tc\nc\tr\td\n").graph;
  const auto seeds = ids(kg, {"a"});
  std::set<oracle::TripleKey> got;
  for (const auto& t : iseeq::extract_triples(kg, seeds, 2)) {
    const auto s = kg.spell(t);
    got.insert({s.subject, s.relation, s.object});
  }
  EXPECT_EQ(got, oracle::reachable_triples(kg, seeds, 2));
  EXPECT_TRUE(got.contains({"c", "r", "d"}));
}

TEST(ExtractTriplesProperty, MatchesBreadthFirstOracle) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    gen::Rng rng(seed);
    const auto kg = gen::random_graph(rng, 20, rng.between(10, 60));
    std::vector<EntityId> seeds;
    for (int k = 0; k < 3; ++k) seeds.push_back(static_cast<EntityId>(rng.index(kg.entity_count())));
    for (std::size_t hops : {1u, 2u, 3u}) {
      const auto out = iseeq::extract_triples(kg, seeds, hops);
      std::set<oracle::TripleKey> got;
      for (const auto& t : out) {
        const auto s = kg.spell(t);
        EXPECT_TRUE(got.insert({s.subject, s.relation, s.object}).second) << "duplicate triple";
      }
      EXPECT_EQ(got, oracle::reachable_triples(kg, seeds, hops)) << "seed " << seed << " hops " << hops;
      EXPECT_EQ(out.size(), iseeq::extract_triples(kg, seeds, hops).size());
    }
  }
}

TEST(ExtractTriplesProperty, DeterministicOrder) {
  gen::Rng rng(11);
  const auto kg = gen::random_graph(rng, 20, 50);
  const std::vector<EntityId> seeds{static_cast<EntityId>(0), static_cast<EntityId>(5)};
  const auto a = iseeq::extract_triples(kg, seeds, 2);
  const auto b = iseeq::extract_triples(kg, seeds, 2);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].subject, b[i].subject);
    EXPECT_EQ(a[i].relation, b[i].relation);
    EXPECT_EQ(a[i].object, b[i].object);
  }
}

// ---- run configuration -------------------------------------------------------

struct PrecedenceCase {
  const char* name;
  std::optional<std::string> file;
  std::vector<std::pair<std::string, std::string>> flags;
  double alpha;
  std::size_t top_k;
  std::size_t probe;
};

TEST(RunConfig, DefaultsMatchReferenceSettings) {
  const iseeq::RunConfig c;
  EXPECT_DOUBLE_EQ(c.alpha, 0.1971);
  EXPECT_DOUBLE_EQ(c.gamma, 0.12);
  EXPECT_DOUBLE_EQ(c.nes_threshold, 0.80);
  EXPECT_EQ(c.top_k, 20u);
  EXPECT_EQ(c.top_n, 100u);
  EXPECT_EQ(c.code_bits, 64u);
  EXPECT_EQ(c.itq_iters, 50u);
  EXPECT_EQ(c.seed, 42u);
  EXPECT_DOUBLE_EQ(c.cosine_relevance, 0.70);
  EXPECT_EQ(c.probe_or_default(), 800u);
}

TEST(RunConfig, PrecedenceDefaultsThenFileThenFlags) {
  const std::vector<PrecedenceCase> cases = {
      {"defaults", std::nullopt, {}, 0.1971, 20, 800},
      {"file", "alpha = 0.5\ntop_k = 10\n", {}, 0.5, 10, 800},
      {"flags", std::nullopt, {{"alpha", "0.3"}, {"probe", "50"}}, 0.3, 20, 50},
      {"flag beats file", "alpha = 0.5 # comment\n\ntop_k=10\nprobe = 7", {{"alpha", "0.25"}}, 0.25, 10, 7},
      {"file top_n drives probe", "top_n = 40\ntop_k = 5\n", {}, 0.1971, 5, 320},
  };
  for (const auto& c : cases) {
    const auto cfg = iseeq::resolve_config(c.file, c.flags);
    EXPECT_DOUBLE_EQ(cfg.alpha, c.alpha) << c.name;
    EXPECT_EQ(cfg.top_k, c.top_k) << c.name;
    EXPECT_EQ(cfg.probe_or_default(), c.probe) << c.name;
  }
}

TEST(RunConfig, RejectsBadInput) {
  EXPECT_THROW(iseeq::resolve_config("nokey\n", {}), iseeq::ParseError);
  EXPECT_THROW(iseeq::resolve_config("colour = red\n", {}), iseeq::ParseError);
  EXPECT_THROW(iseeq::resolve_config("alpha = abc\n", {}), iseeq::ParseError);
  EXPECT_THROW(iseeq::resolve_config(std::nullopt, {{"alpha", "1.5"}}), std::invalid_argument);
  EXPECT_THROW(iseeq::resolve_config(std::nullopt, {{"top_k", "200"}}), std::invalid_argument);
  EXPECT_THROW(iseeq::resolve_config(std::nullopt, {{"nes_threshold", "1"}}), std::invalid_argument);
  EXPECT_THROW(iseeq::resolve_config(std::nullopt, {{"bogus", "1"}}), iseeq::DataError);
  try {
    iseeq::resolve_config("alpha = 0.2\n\nseed = -\n", {});
    FAIL();
  } catch (const iseeq::ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

}  // namespace
