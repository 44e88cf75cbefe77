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
#pragma once

// Planted-coverage synthetic corpus. Every query names two KG entities that
// appear nowhere else in the query text; a query is "covered" by a passage
// that mentions both. Covering passages for query i appear only in the batch
// given by the schedule, so the coverage loop's per-round counts are known
// in advance. Distractor passages mention at most one entity of any query.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iseeq/embed_io.hpp"
#include "iseeq/error.hpp"
#include "iseeq/kg_store.hpp"
#include "iseeq/kpr.hpp"
#include "iseeq/sqe.hpp"

namespace iseeq::synth {

struct CorpusSpec {
  std::size_t batch_size = 50;
  std::vector<std::size_t> schedule = {4, 3, 3, 0};  // queries first covered in each batch
  std::size_t covering_per_query = 2;
  std::size_t passage_words = 24;
  std::size_t filler_vocab = 240;
  std::size_t dim = 32;
  std::uint64_t seed = 7;
};

struct PlantedQuery {
  QueryDescription query;
  std::string entity_a;
  std::string entity_b;
  std::vector<std::string> related;  // KG neighbours named in the expansion
  std::size_t round = 0;  // 1-based; 0 if never covered
  std::vector<std::string> covering;
};

struct Corpus {
  std::vector<TripleText> triples;
  std::vector<PlantedQuery> queries;
  std::vector<std::vector<Passage>> batches;
  VectorStore word_vectors;

  std::size_t query_count() const { return queries.size(); }
  std::vector<QueryDescription> query_descriptions() const {
    std::vector<QueryDescription> out;
    for (const auto& q : queries) out.push_back(q.query);
    return out;
  }
  std::vector<Passage> all_passages() const {
    std::vector<Passage> out;
    for (const auto& b : batches) out.insert(out.end(), b.begin(), b.end());
    return out;
  }
  KnowledgeGraph graph() const {
    KnowledgeGraph::Builder b;
    for (const auto& t : triples) b.add(t.subject, t.relation, t.object);
    return std::move(b).build();
  }
};

namespace detail {

// Pronounceable unique pseudo-words; `taken` keeps every family disjoint.
class WordMaker {
 public:
  explicit WordMaker(std::uint64_t seed) : rng_(seed) {}

  std::string next(std::size_t syllables) {
    static constexpr char kOnset[] = "bdfgklmnprstvz";
    static constexpr char kVowel[] = "aeiou";
    for (;;) {
      std::string w;
      for (std::size_t s = 0; s < syllables; ++s) {
        w += kOnset[pick(sizeof(kOnset) - 1)];
        w += kVowel[pick(sizeof(kVowel) - 1)];
      }
      if (taken_.insert(w).second) return w;
    }
  }

  void reserve(const std::string& w) { taken_.insert(w); }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  std::mt19937_64 rng_;
  std::set<std::string> taken_;
};

inline const std::vector<std::string>& template_words() {
  static const std::vector<std::string> w = {"how", "should", "i", "handle", "while", "working", "with",
                                             "is",  "related", "to", "a", "part", "of", "used", "for"};
  return w;
}

}  // namespace detail

inline Corpus make_corpus(const CorpusSpec& spec = {}) {
  std::mt19937_64 rng(spec.seed);
  detail::WordMaker words(spec.seed ^ 0x5eedULL);
  for (const auto& w : detail::template_words()) words.reserve(w);

  Corpus c;
  std::vector<std::string> filler;
  for (std::size_t i = 0; i < spec.filler_vocab; ++i) filler.push_back(words.next(2));

  // Entities: a, b named by the query; c, d, e reachable from them.
  std::size_t qi = 0;
  for (std::size_t round = 0; round < spec.schedule.size(); ++round) {
    for (std::size_t k = 0; k < spec.schedule[round]; ++k, ++qi) {
      PlantedQuery pq;
      pq.entity_a = words.next(3);
      pq.entity_b = words.next(3);
      pq.round = round + 1;
      const std::string c1 = words.next(3), d1 = words.next(3), e1 = words.next(3);
      c.triples.push_back({pq.entity_a, "isrelatedto", c1});
      c.triples.push_back({pq.entity_b, "is_a", d1});
      c.triples.push_back({c1, "partof", e1});
      pq.related = {c1, d1};
      pq.query.id = "q" + std::to_string(qi + 1);
      pq.query.text = "how should i handle " + pq.entity_a + " while working with " + pq.entity_b;
      c.queries.push_back(std::move(pq));
    }
  }

  auto pick_filler = [&](std::size_t n) {
    std::vector<std::string> out;
    std::uniform_int_distribution<std::size_t> d(0, filler.size() - 1);
    for (std::size_t i = 0; i < n; ++i) out.push_back(filler[d(rng)]);
    return out;
  };
  auto join = [](const std::vector<std::string>& toks) {
    std::string s;
    for (const auto& t : toks) {
      if (!s.empty()) s += ' ';
      s += t;
    }
    return s;
  };
  auto insert_at_random = [&](std::vector<std::string>& toks, const std::string& w) {
    std::uniform_int_distribution<std::size_t> d(0, toks.size());
    toks.insert(toks.begin() + static_cast<std::ptrdiff_t>(d(rng)), w);
  };

  std::size_t pid = 0;
  auto next_id = [&] {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%03zu", ++pid);
    return std::string(buf);
  };

  c.batches.resize(spec.schedule.size());
  for (std::size_t round = 0; round < spec.schedule.size(); ++round) {
    std::vector<std::vector<std::string>> texts;
    std::vector<PlantedQuery*> owners;
    for (auto& pq : c.queries) {
      if (pq.round != round + 1) continue;
      for (std::size_t k = 0; k < spec.covering_per_query; ++k) {
        auto toks = pick_filler(spec.passage_words - 4 - pq.related.size());
        for (int rep = 0; rep < 2; ++rep) {
          insert_at_random(toks, pq.entity_a);
          insert_at_random(toks, pq.entity_b);
        }
        for (const auto& w : pq.related) insert_at_random(toks, w);
        texts.push_back(std::move(toks));
        owners.push_back(&pq);
      }
    }
    // Distractors: one entity of a (round-robin) query, or filler only.
    std::size_t turn = round;
    while (texts.size() < spec.batch_size) {
      auto toks = pick_filler(spec.passage_words - 1);
      if (turn % 3 != 2 && !c.queries.empty()) {
        const auto& pq = c.queries[turn % c.queries.size()];
        insert_at_random(toks, turn % 2 ? pq.entity_a : pq.entity_b);
      }
      ++turn;
      texts.push_back(std::move(toks));
      owners.push_back(nullptr);
    }
    // Deterministic shuffle so covering passages are not always first.
    std::vector<std::size_t> order(texts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const std::string id = next_id();
      c.batches[round].push_back(make_passage(id, join(texts[i])));
      if (owners[i]) owners[i]->covering.push_back(id);
    }
  }

  // Word vectors for every word that can occur in a query, expansion or passage.
  std::set<std::string> vocab(filler.begin(), filler.end());
  vocab.insert(detail::template_words().begin(), detail::template_words().end());
  for (const auto& t : c.triples) {
    for (const auto& w : text::words(t.subject)) vocab.insert(w);
    for (const auto& w : text::words(t.object)) vocab.insert(w);
  }
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  std::vector<std::string> ids(vocab.begin(), vocab.end());
  std::vector<float> m;
  m.reserve(ids.size() * spec.dim);
  for (std::size_t i = 0; i < ids.size() * spec.dim; ++i) m.push_back(gauss(rng));
  c.word_vectors = VectorStore(spec.dim, std::move(ids), std::move(m));
  return c;
}

// Writes the corpus as pipeline input files under `dir`: kg.tsv,
// queries.jsonl, passages.jsonl, batch_<n>.jsonl, word_vectors.jsonl and
// relevance.jsonl (covering passages per query).
inline void write_corpus(const Corpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("kg.tsv");
    for (const auto& t : c.triples) f << t.subject << '\t' << t.relation << '\t' << t.object << '\n';
  }
  {
    auto f = open("queries.jsonl");
    for (const auto& q : c.queries) {
      f << nlohmann::json{{"id", q.query.id}, {"text", q.query.text}, {"kind", to_string(q.query.kind)}}.dump()
        << '\n';
    }
  }
  {
    auto all = open("passages.jsonl");
    for (std::size_t b = 0; b < c.batches.size(); ++b) {
      auto f = open("batch_" + std::to_string(b + 1) + ".jsonl");
      for (const auto& p : c.batches[b]) {
        const auto line = nlohmann::json{{"id", p.id}, {"text", p.text}}.dump();
        f << line << '\n';
        all << line << '\n';
      }
    }
  }
  {
    auto f = open("word_vectors.jsonl");
    for (std::size_t i = 0; i < c.word_vectors.size(); ++i) {
      const auto row = c.word_vectors.row(i);
      f << nlohmann::json{{"id", c.word_vectors.id(i)}, {"vec", std::vector<float>(row.begin(), row.end())}}.dump()
        << '\n';
    }
  }
  {
    auto f = open("relevance.jsonl");
    for (const auto& q : c.queries) {
      f << nlohmann::json{{"query_id", q.query.id}, {"relevant", q.covering}, {"gt_questions", 1}}.dump() << '\n';
    }
  }
}

}  // namespace iseeq::synth
