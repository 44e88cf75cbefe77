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

// JSONL readers and JSON report writers for the pipeline's file formats.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "iseeq/embed_io.hpp"
#include "iseeq/error.hpp"
#include "iseeq/eval_metrics.hpp"
#include "iseeq/kpr.hpp"
#include "iseeq/losses.hpp"
#include "iseeq/sqe.hpp"

namespace iseeq::formats {

using nlohmann::json;

namespace detail {

inline const json& field(const json& j, const char* name) {
  if (!j.is_object()) throw DataError("expected a JSON object");
  const auto it = j.find(name);
  if (it == j.end()) throw DataError(std::string("missing field \"") + name + "\"");
  return *it;
}

inline std::string string_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_string()) throw DataError(std::string("field \"") + name + "\" must be a string");
  return v.get<std::string>();
}

inline std::optional<std::string> optional_string(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw DataError(std::string("field \"") + name + "\" must be a string");
  return it->get<std::string>();
}

inline std::optional<double> optional_number(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) throw DataError(std::string("field \"") + name + "\" must be a number");
  return it->get<double>();
}

inline double number_field(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_number()) throw DataError(std::string("field \"") + name + "\" must be a number");
  return v.get<double>();
}

inline std::vector<std::string> string_list(const json& j, const char* name) {
  const json& v = field(j, name);
  if (!v.is_array()) throw DataError(std::string("field \"") + name + "\" must be an array");
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw DataError(std::string("field \"") + name + "\" must hold strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

// Rethrows DataError from a record as a ParseError carrying the line.
template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
  io::for_each_jsonl_file(path, [&](std::size_t line, const json& j) {
    try {
      fn(line, j);
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw ParseError(path, line, e.what());
    }
  });
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace detail

// ---- queries ---------------------------------------------------------------

inline std::vector<QueryDescription> read_queries(const std::string& path) {
  std::vector<QueryDescription> out;
  std::unordered_set<std::string> ids;
  detail::for_each_record(path, [&](std::size_t, const json& j) {
    QueryDescription q;
    q.id = detail::string_field(j, "id");
    q.text = detail::string_field(j, "text");
    q.kind = parse_query_kind(detail::optional_string(j, "kind").value_or(""));
    if (!ids.insert(q.id).second) throw DataError("duplicate query id " + q.id);
    out.push_back(std::move(q));
  });
  return out;
}

inline json to_json(const ExpandedQuery& eq) {
  json triples = json::array();
  for (const auto& t : eq.all_triples()) triples.push_back({t.subject, t.relation, t.object});
  return {{"id", eq.source.id}, {"entities", eq.entities}, {"k_d", eq.augmented_text}, {"triples", triples}};
}

// Reads expand-query output. Only id, entities, k_d and triples survive the
// round trip; the original text is not stored, so source.text holds k_d.
inline std::vector<ExpandedQuery> read_expanded(const std::string& path) {
  std::vector<ExpandedQuery> out;
  detail::for_each_record(path, [&](std::size_t, const json& j) {
    ExpandedQuery eq;
    eq.source.id = detail::string_field(j, "id");
    eq.augmented_text = detail::string_field(j, "k_d");
    eq.source.text = eq.augmented_text;
    eq.entities = detail::string_list(j, "entities");
    if (auto it = j.find("triples"); it != j.end()) {
      EntityTriples et;
      for (const auto& t : *it) {
        if (!t.is_array() || t.size() != 3) throw DataError("each triple must be [s, r, o]");
        et.triples.push_back({t[0].get<std::string>(), t[1].get<std::string>(), t[2].get<std::string>()});
      }
      if (!et.triples.empty()) eq.triples_by_entity.push_back(std::move(et));
    }
    out.push_back(std::move(eq));
  });
  return out;
}

// ---- passages and relevance ------------------------------------------------

inline std::vector<Passage> read_passages(const std::string& path) {
  std::vector<Passage> out;
  std::unordered_set<std::string> ids;
  detail::for_each_record(path, [&](std::size_t, const json& j) {
    auto id = detail::string_field(j, "id");
    if (!ids.insert(id).second) throw DataError("duplicate passage id " + id);
    out.push_back(make_passage(std::move(id), detail::string_field(j, "text")));
  });
  return out;
}

inline std::unordered_map<std::string, Relevance> read_relevance(const std::string& path) {
  std::unordered_map<std::string, Relevance> out;
  detail::for_each_record(path, [&](std::size_t, const json& j) {
    const auto qid = detail::string_field(j, "query_id");
    Relevance rel;
    for (auto& id : detail::string_list(j, "relevant")) rel.relevant.insert(std::move(id));
    if (auto gt = detail::optional_number(j, "gt_questions")) {
      if (!(*gt >= 1.0) || *gt != std::floor(*gt)) throw DataError("gt_questions must be a positive integer");
      rel.gt_questions = static_cast<std::size_t>(*gt);
    }
    if (!out.emplace(qid, std::move(rel)).second) throw DataError("duplicate relevance entry for " + qid);
  });
  return out;
}

// {"id": str, "vec": [float]} rows; ids may repeat (several questions per owner).
inline std::vector<LabeledVector> read_labeled_vectors(const std::string& path) {
  std::vector<LabeledVector> out;
  std::size_t dim = 0;
  detail::for_each_record(path, [&](std::size_t, const json& j) {
    LabeledVector lv;
    lv.owner = detail::string_field(j, "id");
    const json& v = detail::field(j, "vec");
    if (!v.is_array() || v.empty()) throw DataError("\"vec\" must be a non-empty array");
    for (const auto& x : v) {
      if (!x.is_number()) throw DataError("\"vec\" must hold numbers");
      lv.vec.push_back(x.get<float>());
    }
    if (dim == 0) dim = lv.vec.size();
    if (lv.vec.size() != dim) throw DataError("inconsistent vector dimension");
    out.push_back(std::move(lv));
  });
  return out;
}

// ---- token documents -------------------------------------------------------

struct TokenRecord {
  std::string id;
  std::vector<std::string> tokens;
};

// {"id", "tokens": [..]} or {"id", "text"} (tokenized to lowercase words).
inline std::vector<TokenRecord> read_token_records(const std::string& path) {
  std::vector<TokenRecord> out;
  detail::for_each_record(path, [&](std::size_t, const json& j) {
    TokenRecord r;
    r.id = detail::string_field(j, "id");
    if (j.contains("tokens")) {
      r.tokens = detail::string_list(j, "tokens");
    } else {
      r.tokens = text::words(detail::string_field(j, "text"));
    }
    out.push_back(std::move(r));
  });
  return out;
}

// ---- losses ----------------------------------------------------------------

struct LossRecord {
  std::vector<std::string> generated;
  std::vector<std::string> reference;
  double gen_prob = 1.0;
  std::optional<EntailmentLabel> entail_label;
  std::optional<double> entail_prob;
};

inline std::vector<LossRecord> read_loss_records(const std::string& path) {
  std::vector<LossRecord> out;
  detail::for_each_record(path, [&](std::size_t, const json& j) {
    LossRecord r;
    r.generated = detail::string_list(j, "generated");
    r.reference = detail::string_list(j, "reference");
    r.gen_prob = detail::number_field(j, "gen_prob");
    if (auto l = detail::optional_string(j, "entail_label")) r.entail_label = parse_entailment_label(*l);
    r.entail_prob = detail::optional_number(j, "entail_prob");
    if (r.entail_label.has_value() != r.entail_prob.has_value()) {
      throw DataError("entail_label and entail_prob must both be set or both be null");
    }
    out.push_back(std::move(r));
  });
  return out;
}

// ---- evaluation inputs -----------------------------------------------------

struct PairScoreRecord {
  std::string query_id;
  std::string gen_id;
  std::string ref_id;
  double score = 0.0;
};

inline std::vector<PairScoreRecord> read_pair_scores(const std::string& path) {
  std::vector<PairScoreRecord> out;
  detail::for_each_record(path, [&](std::size_t, const json& j) {
    out.push_back({detail::optional_string(j, "query_id").value_or(""), detail::string_field(j, "gen_id"),
                   detail::string_field(j, "ref_id"), detail::number_field(j, "score")});
  });
  return out;
}

enum class PairKind { kCross, kConsecutive };

struct LabelRecord {
  std::string query_id;
  std::string gen_id;
  std::string ref_id;
  EntailmentLabel label = EntailmentLabel::kNeutral;
  PairKind pair = PairKind::kCross;
};

inline std::vector<LabelRecord> read_labels(const std::string& path) {
  std::vector<LabelRecord> out;
  detail::for_each_record(path, [&](std::size_t, const json& j) {
    LabelRecord r{detail::optional_string(j, "query_id").value_or(""), detail::string_field(j, "gen_id"),
                  detail::string_field(j, "ref_id"), parse_entailment_label(detail::string_field(j, "label")),
                  PairKind::kCross};
    const auto pair = detail::optional_string(j, "pair").value_or("cross");
    if (pair == "consecutive") {
      r.pair = PairKind::kConsecutive;
    } else if (pair != "cross") {
      throw DataError("\"pair\" must be cross or consecutive");
    }
    out.push_back(std::move(r));
  });
  return out;
}

// ---- reports ---------------------------------------------------------------

inline json to_json(const RetrievalResult& r) {
  json ranked = json::array();
  for (const auto& p : r.ranked) {
    ranked.push_back({{"passage_id", p.passage_id},
                      {"wmd", detail::finite_or_null(p.wmd_score)},
                      {"nes", p.nes},
                      {"inner_product", p.inner_product},
                      {"hamming", p.hamming}});
  }
  return {{"query_id", r.query_id}, {"ranked", ranked}, {"kept", r.kept}};
}

inline RetrievalResult retrieval_from_json(const json& j) {
  RetrievalResult r;
  r.query_id = detail::string_field(j, "query_id");
  for (const auto& p : detail::field(j, "ranked")) {
    RankedPassage rp;
    rp.passage_id = detail::string_field(p, "passage_id");
    rp.wmd_score = detail::optional_number(p, "wmd").value_or(std::numeric_limits<double>::infinity());
    rp.nes = detail::optional_number(p, "nes").value_or(0.0);
    rp.inner_product = detail::optional_number(p, "inner_product").value_or(0.0);
    rp.hamming = static_cast<std::size_t>(detail::optional_number(p, "hamming").value_or(0.0));
    r.ranked.push_back(std::move(rp));
  }
  if (j.contains("kept")) r.kept = detail::string_list(j, "kept");
  return r;
}

// Accepts a retrieve report ({"results": [...]}) or JSONL of results.
inline std::vector<RetrievalResult> read_results(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<RetrievalResult> out;
  try {
    const json doc = json::parse(in);
    if (doc.is_object() && doc.contains("results")) {
      for (const auto& r : doc["results"]) out.push_back(retrieval_from_json(r));
      return out;
    }
    if (doc.is_object()) {
      out.push_back(retrieval_from_json(doc));
      return out;
    }
    throw DataError("unrecognized results document");
  } catch (const json::parse_error&) {
    // Multiple documents: treat as JSONL.
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  detail::for_each_record(path, [&](std::size_t, const json& j) { out.push_back(retrieval_from_json(j)); });
  return out;
}

inline json to_json(const CoverageReport& rep) {
  json rounds = json::array();
  for (std::size_t i = 0; i < rep.per_round.size(); ++i) {
    rounds.push_back({{"round", i + 1},
                      {"corpus_size", rep.per_round[i].corpus_size},
                      {"covered", rep.per_round[i].covered_count}});
  }
  return {{"passages_scanned", rep.passages_scanned},
          {"queries_covered", rep.queries_covered},
          {"total_queries", rep.total_queries},
          {"complete", rep.complete},
          {"per_round", rounds},
          {"kept", rep.kept},
          {"covered_in_round", rep.covered_in_round}};
}

inline json to_json(const RetrieverEval& ev) {
  json hr = json::object();
  for (const auto& [k, v] : ev.hit_rate) hr[std::to_string(k)] = v;
  return {{"queries", ev.queries}, {"hit_rate", hr}, {"map", ev.map}, {"map_k", ev.map_k}};
}

inline json to_json(const MetricReport& rep) {
  json per = json::array();
  for (const auto& q : rep.per_query) {
    per.push_back({{"query_id", q.query_id}, {"sr", q.sr}, {"lc", q.lc}, {"sr_pairs", q.sr_pairs},
                   {"lc_pairs", q.lc_pairs}});
  }
  return {{"sr", rep.sr}, {"lc_percent", rep.lc_percent}, {"n_pairs", rep.n_pairs}, {"sr_pairs", rep.sr_pairs},
          {"per_query", per}};
}

}  // namespace iseeq::formats
