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

#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "iseeq/embed_io.hpp"
#include "iseeq/transport.hpp"
#include "iseeq/wmd.hpp"
#include "oracles.hpp"

namespace {

using iseeq::TokenDoc;
using iseeq::VectorStore;

TokenDoc single(const std::string& id, std::vector<float> v) {
  const std::size_t dim = v.size();
  return iseeq::make_token_doc(id, {id + "_tok"}, dim, std::move(v), {1.0});
}

// ---- vector store --------------------------------------------------------------

TEST(VectorStore, BinaryRoundTripThreeRows) {
  const VectorStore s(4, {"a", "b", "c"}, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  std::stringstream buf;
  iseeq::write_vectors(buf, s);
  char magic[8];
  buf.read(magic, 8);
  ASSERT_EQ(std::memcmp(magic, "ISEQVEC1", 8), 0);
  const auto back = iseeq::read_vectors_binary_body(buf);
  EXPECT_EQ(back.ids(), s.ids());
  EXPECT_EQ(back.matrix(), s.matrix());
}

TEST(VectorStore, JsonlUnitVectorNorm) {
  std::istringstream in(R"({"id":"p1","vec":[1,0,0,0]})");
  const auto s = iseeq::read_vectors_jsonl(in, "fixture");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_DOUBLE_EQ(s.norm(0), 1.0);
}

TEST(VectorStore, RandomRoundTripIsBitwiseEqual) {
  gen::Rng rng(5);
  const auto s = gen::gaussian_store(rng, 100, 16);
  std::stringstream buf;
  iseeq::write_vectors(buf, s);
  buf.seekg(8);
  const auto back = iseeq::read_vectors_binary_body(buf);
  ASSERT_EQ(back.matrix().size(), s.matrix().size());
  EXPECT_EQ(std::memcmp(back.matrix().data(), s.matrix().data(), s.matrix().size() * sizeof(float)), 0);
  EXPECT_EQ(back.ids(), s.ids());
}

TEST(VectorStore, RejectsBadInput) {
  EXPECT_THROW(VectorStore(2, {"a", "a"}, {1, 2, 3, 4}), iseeq::DataError);
  EXPECT_THROW(VectorStore(2, {"a"}, {1, 2, 3}), iseeq::DataError);
  EXPECT_THROW(VectorStore(2, {"a"}, {1, std::numeric_limits<float>::quiet_NaN()}), iseeq::DataError);
  EXPECT_THROW(VectorStore(2, {"a"}, {1, std::numeric_limits<float>::infinity()}), iseeq::DataError);
  std::istringstream mixed("{\"id\":\"a\",\"vec\":[1,2]}\n{\"id\":\"b\",\"vec\":[1,2,3]}\n");
  try {
    iseeq::read_vectors_jsonl(mixed, "mixed");
    FAIL();
  } catch (const iseeq::ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(VectorStore, TruncatedBinaryIsDataError) {
  const VectorStore s(4, {"a"}, {1, 2, 3, 4});
  std::stringstream buf;
  iseeq::write_vectors(buf, s);
  std::string bytes = buf.str();
  bytes.pop_back();
  std::istringstream in(bytes.substr(8));
  EXPECT_THROW(iseeq::read_vectors_binary_body(in), iseeq::DataError);
}

// ---- token documents -----------------------------------------------------------

TEST(TokenDoc, DuplicateTokensMergeIntoFrequencies) {
  const VectorStore words(2, {"a", "b"}, {1, 0, 0, 1});
  const std::vector<std::string> toks{"a", "a", "b"};
  const auto d = iseeq::build_token_doc("d", toks, words);
  ASSERT_EQ(d.tokens, (std::vector<std::string>{"a", "b"}));
  EXPECT_DOUBLE_EQ(d.weights[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(d.weights[1], 1.0 / 3.0);
}

TEST(TokenDoc, SingleTokenHasWeightOne) {
  const VectorStore words(2, {"a"}, {1, 0});
  const std::vector<std::string> toks{"a"};
  EXPECT_DOUBLE_EQ(iseeq::build_token_doc("d", toks, words).weights[0], 1.0);
}

TEST(TokenDoc, OutOfVocabularyTokensAreDropped) {
  gen::Rng rng(8);
  const auto words = gen::gaussian_store(rng, 20, 4, "w");
  std::vector<std::string> toks;
  for (int i = 0; i < 45; ++i) toks.push_back("w" + std::to_string(i % 20));
  for (int i = 0; i < 5; ++i) toks.push_back("oov" + std::to_string(i));
  std::vector<std::string> dropped;
  const auto d = iseeq::build_token_doc("d", toks, words, iseeq::ParseMode::kLenient, &dropped);
  EXPECT_EQ(dropped.size(), 5u);
  double sum = 0.0;
  for (double w : d.weights) sum += w;
  EXPECT_NEAR(sum, 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(d.weights[0], 3.0 / 45.0);  // w0 occurs at i = 0, 20, 40
  EXPECT_THROW(iseeq::build_token_doc("d", toks, words, iseeq::ParseMode::kStrict), iseeq::DataError);
}

TEST(TokenDoc, NoKnownTokenIsEmptyDocumentError) {
  const VectorStore words(2, {"a"}, {1, 0});
  const std::vector<std::string> toks{"x", "y"};
  EXPECT_THROW(iseeq::build_token_doc("d", toks, words), iseeq::DataError);
}

// ---- transport -----------------------------------------------------------------

TEST(Transport, ForcedPlanAndValidation) {
  const std::vector<double> a{1.0}, b{0.25, 0.75}, c{2.0, 4.0};
  const auto sol = iseeq::transport::solve(a, b, c);
  EXPECT_NEAR(sol.cost, 3.5, 1e-12);
  EXPECT_NEAR(sol.flow[0], 0.25, 1e-12);
  const std::vector<double> bad{0.5};
  EXPECT_THROW(iseeq::transport::solve(a, bad, std::vector<double>{1.0}), std::invalid_argument);
  EXPECT_THROW(iseeq::transport::solve(a, b, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(TransportProperty, MatchesDenseLpOnLargerProblems) {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    gen::Rng rng(seed);
    const std::size_t n = rng.between(1, 8), m = rng.between(1, 8);
    std::vector<double> a(n), b(m), c(n * m);
    double sa = 0.0, sb = 0.0;
    for (auto& x : a) sa += (x = rng.uniform(0.0, 1.0) + (rng.coin(0.2) ? 0.0 : 0.1));
    for (auto& x : b) sb += (x = rng.uniform(0.1, 1.0));
    for (auto& x : a) x /= sa;
    for (auto& x : b) x /= sb;
    // Integer costs make ties and degenerate pivots common.
    for (auto& x : c) x = static_cast<double>(rng.index(4));
    const auto sol = iseeq::transport::solve(a, b, c);
    EXPECT_NEAR(sol.cost, oracle::transport_lp(a, b, c), 1e-9) << "seed " << seed;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        EXPECT_GE(sol.flow[i * m + j], -1e-12);
        row += sol.flow[i * m + j];
      }
      EXPECT_NEAR(row, a[i], 1e-9);
    }
  }
}

// ---- WMD -----------------------------------------------------------------------

TEST(Wmd, IdenticalDocsAreZero) {
  gen::Rng rng(1);
  const auto d = gen::token_doc(rng, 4, 6);
  EXPECT_NEAR(iseeq::wmd_exact(d, d), 0.0, 1e-12);
  EXPECT_NEAR(iseeq::wmd_relaxed(d, d), 0.0, 1e-12);
}

TEST(Wmd, SingleTokensGiveEuclideanDistance) {
  const auto u = single("u", {0, 0, 0});
  const auto v = single("v", {1, 2, 2});
  EXPECT_NEAR(iseeq::wmd_exact(u, v), 3.0, 1e-12);
  EXPECT_NEAR(iseeq::wmd_relaxed(u, v), 3.0, 1e-12);
}

TEST(Wmd, Errors) {
  const auto u = single("u", {0, 0, 0});
  const auto v = single("v", {1, 2});
  EXPECT_THROW(iseeq::wmd_exact(u, v), std::invalid_argument);
  TokenDoc empty;
  empty.dim = 3;
  EXPECT_THROW(iseeq::wmd_exact(u, empty), iseeq::DataError);
}

TEST(WmdProperty, ExactMatchesDenseLp) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    gen::Rng rng(seed);
    const auto a = gen::token_doc(rng, rng.between(1, 5), 8, "a");
    const auto b = gen::token_doc(rng, rng.between(1, 5), 8, "b");
    EXPECT_NEAR(iseeq::wmd_exact(a, b), oracle::wmd(a, b), 1e-6) << "seed " << seed;
  }
}

TEST(WmdProperty, RelaxedNeverExceedsExact) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    gen::Rng rng(seed + 1000);
    const auto a = gen::token_doc(rng, rng.between(1, 6), 5, "a");
    const auto b = gen::token_doc(rng, rng.between(1, 6), 5, "b");
    EXPECT_LE(iseeq::wmd_relaxed(a, b), iseeq::wmd_exact(a, b)) << "seed " << seed;
  }
}

TEST(WmdProperty, MetricAxiomsOnUniformEqualSizeDocs) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    gen::Rng rng(seed + 2000);
    const std::size_t n = rng.between(1, 5);
    const auto x = gen::uniform_doc(rng, n, 4, "x");
    const auto y = gen::uniform_doc(rng, n, 4, "y");
    const auto z = gen::uniform_doc(rng, n, 4, "z");
    const double xy = iseeq::wmd_exact(x, y), yx = iseeq::wmd_exact(y, x);
    EXPECT_NEAR(xy, yx, 1e-9);
    EXPECT_NEAR(iseeq::wmd_exact(x, x), 0.0, 1e-9);
    EXPECT_LE(iseeq::wmd_exact(x, z), xy + iseeq::wmd_exact(y, z) + 1e-9);
    EXPECT_GE(xy, 0.0);
  }
}

// ---- soft match ----------------------------------------------------------------

TEST(SoftMatch, SelfMatchAndOrthogonal) {
  gen::Rng rng(2);
  const auto d = gen::token_doc(rng, 3, 5);
  EXPECT_NEAR(iseeq::soft_match(d, d), 1.0, 1e-9);
  EXPECT_NEAR(iseeq::soft_match(single("u", {1, 0}), single("v", {0, 1})), 0.0, 1e-12);
}

TEST(SoftMatchProperty, MatchesDoubleLoop) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    gen::Rng rng(seed + 3000);
    const auto a = gen::token_doc(rng, 3, 6, "a");
    const auto b = gen::token_doc(rng, 4, 6, "b");
    double expected = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      double best = -2.0;
      for (std::size_t j = 0; j < b.size(); ++j) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t k = 0; k < 6; ++k) {
          dot += static_cast<double>(a.vectors[i * 6 + k]) * b.vectors[j * 6 + k];
          na += static_cast<double>(a.vectors[i * 6 + k]) * a.vectors[i * 6 + k];
          nb += static_cast<double>(b.vectors[j * 6 + k]) * b.vectors[j * 6 + k];
        }
        best = std::max(best, dot / std::sqrt(na * nb));
      }
      expected += a.weights[i] * best;
    }
    const double got = iseeq::soft_match(a, b);
    EXPECT_NEAR(got, expected, 1e-9);
    EXPECT_GE(got, -1.0);
    EXPECT_LE(got, 1.0);
  }
}

TEST(Cosine, ZeroVectorScoresZero) {
  const std::vector<float> z{0, 0}, u{1, 0};
  EXPECT_EQ(iseeq::cosine(z, u), 0.0);
  EXPECT_THROW(iseeq::cosine(z, std::vector<float>{1, 0, 0}), std::invalid_argument);
}

}  // namespace
