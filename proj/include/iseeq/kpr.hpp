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

// Knowledge-aware passage retrieval: SITQ candidates, WMD scoring,
// normalized entity score (NES) re-ranking and filtering, the coverage loop
// over a growing corpus, and retriever evaluation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "iseeq/embed_io.hpp"
#include "iseeq/error.hpp"
#include "iseeq/sitq_index.hpp"
#include "iseeq/sqe.hpp"
#include "iseeq/text.hpp"
#include "iseeq/wmd.hpp"

namespace iseeq {

struct Passage {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;          // lowercase word sequence
  std::unordered_set<std::string> token_set;
};

inline Passage make_passage(std::string id, std::string text) {
  Passage p{std::move(id), std::move(text), {}, {}};
  p.tokens = text::words(p.text);
  p.token_set.insert(p.tokens.begin(), p.tokens.end());
  return p;
}

using PassageTable = std::unordered_map<std::string, Passage>;
using TokenDocTable = std::unordered_map<std::string, TokenDoc>;

// Whole-word phrase match: `phrase` (any spacing/underscores/case) occurs as
// a contiguous token run in the passage.
inline bool contains_entity(const Passage& p, std::string_view phrase) {
  const auto want = text::words(phrase);
  if (want.empty() || want.size() > p.tokens.size()) return false;
  if (!p.token_set.contains(want.front())) return false;
  for (std::size_t i = 0; i + want.size() <= p.tokens.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < want.size() && ok; ++k) ok = p.tokens[i + k] == want[k];
    if (ok) return true;
  }
  return false;
}

// Fraction of distinct query entities present in the passage; repeated
// mentions count once. 0 when there are no entities.
inline double nes(const Passage& p, std::span<const std::string> entities) {
  std::unordered_set<std::string> distinct;
  std::size_t hits = 0;
  for (const auto& e : entities) {
    const std::string key = text::match_key(e);
    if (key.empty() || !distinct.insert(key).second) continue;
    if (contains_entity(p, e)) ++hits;
  }
  if (distinct.empty()) return 0.0;
  return static_cast<double>(hits) / static_cast<double>(distinct.size());
}

inline double nes(const Passage& p, const ExpandedQuery& eq) { return nes(p, eq.entities); }

struct RetrieveParams {
  std::size_t top_n = 100;
  std::size_t k = 20;
  std::size_t probe = 800;
  double nes_threshold = 0.80;
};

inline void validate(const RetrieveParams& rp) {
  if (rp.top_n == 0 || rp.k == 0) throw InvalidArgument("top_n and k must be positive");
  if (rp.k > rp.top_n) throw InvalidArgument("k must not exceed top_n");
  if (!(rp.nes_threshold >= 0.0 && rp.nes_threshold < 1.0)) {
    throw InvalidArgument("nes_threshold must lie in [0, 1)");
  }
}

struct RankedPassage {
  std::string passage_id;
  double wmd_score = 0.0;  // +inf when the passage has no token document
  double nes = 0.0;
  double inner_product = 0.0;
  std::size_t hamming = 0;
};

struct RetrievalResult {
  std::string query_id;
  std::vector<RankedPassage> ranked;  // NES desc, WMD asc, id asc
  std::vector<std::string> kept;      // P_top-K
};

// Orders scored candidates and selects the kept prefix. Shared by retrieve()
// and callers that score candidates themselves.
inline void finalize_ranking(RetrievalResult& r, const RetrieveParams& rp) {
  std::sort(r.ranked.begin(), r.ranked.end(), [](const RankedPassage& a, const RankedPassage& b) {
    if (a.nes != b.nes) return a.nes > b.nes;
    if (a.wmd_score != b.wmd_score) return a.wmd_score < b.wmd_score;
    return a.passage_id < b.passage_id;
  });
  r.kept.clear();
  for (const auto& rp_entry : r.ranked) {
    if (r.kept.size() >= rp.k || !(rp_entry.nes > rp.nes_threshold)) break;
    r.kept.push_back(rp_entry.passage_id);
  }
}

// Three stages: SITQ candidates for the query vector, WMD between the query
// tokens and each candidate's token document, NES re-ranking. `kept` holds
// at most k passages, all with NES strictly above the threshold.
inline RetrievalResult retrieve(const SitqIndex& index, const PassageTable& passages,
                                const TokenDocTable& token_docs, const ExpandedQuery& eq,
                                std::span<const float> q_vec, const TokenDoc& q_tokens,
                                const RetrieveParams& rp) {
  validate(rp);
  RetrievalResult r;
  r.query_id = eq.source.id;
  for (const Candidate& c : index.query(q_vec, rp.top_n, rp.probe)) {
    const auto p = passages.find(c.passage_id);
    if (p == passages.end()) throw InvariantError("index references unknown passage " + c.passage_id);
    RankedPassage rp_entry{c.passage_id, std::numeric_limits<double>::infinity(), nes(p->second, eq),
                           c.inner_product, c.hamming};
    if (auto d = token_docs.find(c.passage_id); d != token_docs.end()) {
      rp_entry.wmd_score = wmd_exact(q_tokens, d->second);
    }
    r.ranked.push_back(std::move(rp_entry));
  }
  finalize_ranking(r, rp);
  return r;
}

// A query prepared for retrieval: expansion, its sentence vector and its
// token document.
struct PreparedQuery {
  ExpandedQuery eq;
  std::vector<float> vec;
  TokenDoc tokens;
};

struct CoverageRound {
  std::size_t corpus_size = 0;
  std::size_t covered_count = 0;
};

struct CoverageReport {
  std::size_t passages_scanned = 0;
  std::size_t queries_covered = 0;
  std::size_t total_queries = 0;
  bool complete = false;  // every query has at least one kept passage
  std::vector<CoverageRound> per_round;
  std::map<std::string, std::vector<std::string>> kept;  // query id -> kept passages
  std::map<std::string, std::size_t> covered_in_round;   // query id -> 1-based round
};

// Grows the corpus one batch at a time, rebuilding the index each round and
// retrying only the still-uncovered queries. Stops as soon as all queries
// are covered or the batches run out (then `complete` is false).
inline CoverageReport coverage_loop(std::span<const PreparedQuery> queries,
                                    std::span<const std::vector<Passage>> batches,
                                    const VectorStore& passage_vectors, const TokenDocTable& token_docs,
                                    const RetrieveParams& rp, const SitqParams& sp) {
  validate(rp);
  CoverageReport rep;
  rep.total_queries = queries.size();
  std::vector<char> covered(queries.size(), 0);
  PassageTable table;
  std::vector<std::size_t> rows;

  for (std::size_t round = 0; round < batches.size(); ++round) {
    if (rep.queries_covered == queries.size()) break;
    for (const Passage& p : batches[round]) {
      const auto row = passage_vectors.find(p.id);
      if (!row) throw DataError("no vector for passage " + p.id);
      if (!table.emplace(p.id, p).second) throw DataError("passage " + p.id + " appears in more than one batch");
      rows.push_back(*row);
    }
    auto store = std::make_shared<const VectorStore>(passage_vectors.subset(rows));
    const SitqIndex index = SitqIndex::build(store, sp);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
      if (covered[qi]) continue;
      const auto& q = queries[qi];
      auto res = retrieve(index, table, token_docs, q.eq, q.vec, q.tokens, rp);
      if (res.kept.empty()) continue;
      covered[qi] = 1;
      ++rep.queries_covered;
      rep.kept[q.eq.source.id] = std::move(res.kept);
      rep.covered_in_round[q.eq.source.id] = round + 1;
    }
    rep.per_round.push_back({table.size(), rep.queries_covered});
  }
  rep.passages_scanned = table.size();
  rep.complete = rep.queries_covered == queries.size();
  return rep;
}

struct Relevance {
  std::unordered_set<std::string> relevant;
  std::size_t gt_questions = 1;  // ground-truth questions for the query
};

struct RetrieverEval {
  std::map<std::size_t, double> hit_rate;  // k -> HR@k
  double map = 0.0;
  std::size_t map_k = 20;
  std::size_t queries = 0;
};

// HR@k: share of queries with a relevant passage among the first k ranked.
// MAP: mean over queries of (relevant among the first map_k) / map_k,
// divided by the query's ground-truth question count.
inline RetrieverEval eval_retriever(std::span<const RetrievalResult> results,
                                    const std::unordered_map<std::string, Relevance>& relevance,
                                    std::span<const std::size_t> ks, std::size_t map_k = 20) {
  if (results.empty()) throw InvalidArgument("no retrieval results to evaluate");
  if (map_k == 0) throw InvalidArgument("MAP cutoff must be positive");
  RetrieverEval ev;
  ev.map_k = map_k;
  ev.queries = results.size();
  for (std::size_t k : ks) {
    if (k == 0) throw InvalidArgument("hit-rate cutoff must be positive");
    ev.hit_rate[k] = 0.0;
  }

  for (const auto& r : results) {
    const auto it = relevance.find(r.query_id);
    if (it == relevance.end()) throw DataError("no relevance judgments for query " + r.query_id);
    const Relevance& rel = it->second;
    if (rel.gt_questions == 0) throw DataError("query " + r.query_id + " has zero ground-truth questions");

    std::size_t first_hit = r.ranked.size();
    for (std::size_t i = 0; i < r.ranked.size(); ++i) {
      if (rel.relevant.contains(r.ranked[i].passage_id)) {
        first_hit = i;
        break;
      }
    }
    for (auto& [k, hr] : ev.hit_rate) {
      if (first_hit < k) hr += 1.0;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(map_k, r.ranked.size()); ++i) {
      if (rel.relevant.contains(r.ranked[i].passage_id)) ++hits;
    }
    ev.map += (static_cast<double>(hits) / static_cast<double>(map_k)) / static_cast<double>(rel.gt_questions);
  }
  const double nq = static_cast<double>(results.size());
  for (auto& [k, hr] : ev.hit_rate) hr /= nq;
  ev.map /= nq;
  return ev;
}

struct LabeledVector {
  std::string owner;  // query id (ground truth) or passage id (generated)
  std::vector<float> vec;
};

// Relevance by question similarity: a passage is relevant to a query when
// some question generated from it has cosine > threshold with one of the
// query's ground-truth questions. gt_questions counts the query's rows.
inline std::unordered_map<std::string, Relevance> relevance_from_cosine(
    std::span<const LabeledVector> ground_truth, std::span<const LabeledVector> generated,
    double threshold = 0.70) {
  std::unordered_map<std::string, Relevance> out;
  for (const auto& gt : ground_truth) {
    auto [it, fresh] = out.try_emplace(gt.owner);
    if (fresh) {
      it->second.gt_questions = 1;
    } else {
      ++it->second.gt_questions;
    }
    for (const auto& gen : generated) {
      if (cosine(gt.vec, gen.vec) > threshold) it->second.relevant.insert(gen.owner);
    }
  }
  return out;
}

}  // namespace iseeq
