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

// Semantic query expansion: find knowledge-graph entities in a query and
// splice their outgoing triples into the text right after the mention.

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "iseeq/error.hpp"
#include "iseeq/kg_store.hpp"
#include "iseeq/text.hpp"

namespace iseeq {

enum class QueryKind { kDescriptionOnly, kTitleAndDescription, kTopicAndAspects };

inline std::string_view to_string(QueryKind k) {
  switch (k) {
    case QueryKind::kDescriptionOnly: return "description_only";
    case QueryKind::kTitleAndDescription: return "title_and_description";
    case QueryKind::kTopicAndAspects: return "topic_and_aspects";
  }
  return "description_only";
}

inline QueryKind parse_query_kind(std::string_view s) {
  if (s.empty() || s == "description_only" || s == "d") return QueryKind::kDescriptionOnly;
  if (s == "title_and_description" || s == "t&d") return QueryKind::kTitleAndDescription;
  if (s == "topic_and_aspects" || s == "tp&asp") return QueryKind::kTopicAndAspects;
  throw DataError("unknown query kind: " + std::string(s));
}

struct QueryDescription {
  std::string id;
  std::string text;
  QueryKind kind = QueryKind::kDescriptionOnly;
};

struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Span&, const Span&) = default;
};

// One lexicon hit. `anchor` is the end of the maximal match that contains
// this hit; injected text for the entity goes there so nested mentions never
// split a longer phrase.
struct EntityMatch {
  EntityId entity;
  Span span;
  std::size_t anchor = 0;
  bool maximal = true;
};

struct EntityExtraction {
  std::vector<EntityId> entities;  // first-occurrence order, no duplicates
  std::vector<Span> spans;         // span of each entity's first occurrence
};

struct MatchOptions {
  // Also report single-token entities that sit inside a longer match
  // ("career" inside "career options").
  bool include_subtokens = true;
};

// Longest-match-first, left-to-right lexicon matching over word tokens.
// Case, spacing, underscores and possessive 's are ignored. Results are
// ordered by (begin, end).
inline std::vector<EntityMatch> match_entities(const KnowledgeGraph& kg, std::string_view text,
                                               MatchOptions opts = {}) {
  const auto toks = text::tokenize(text);
  std::vector<EntityMatch> out;
  const std::size_t longest = kg.max_phrase_tokens();

  std::size_t i = 0;
  while (i < toks.size()) {
    std::size_t taken = 0;
    std::optional<EntityId> hit;
    const std::size_t max_n = std::min(longest, toks.size() - i);
    for (std::size_t n = max_n; n >= 1; --n) {
      std::string key = toks[i].text;
      for (std::size_t k = 1; k < n; ++k) key += '_' + toks[i + k].text;
      if ((hit = kg.find_by_key(key))) {
        taken = n;
        break;
      }
    }
    if (!hit) {
      ++i;
      continue;
    }
    const Span span{toks[i].begin, toks[i + taken - 1].end};
    out.push_back({*hit, span, span.end, true});
    if (opts.include_subtokens && taken > 1) {
      for (std::size_t k = 0; k < taken; ++k) {
        if (auto sub = kg.find_by_key(toks[i + k].text); sub && *sub != *hit) {
          out.push_back({*sub, {toks[i + k].begin, toks[i + k].end}, span.end, false});
        }
      }
    }
    i += taken;
  }

  std::stable_sort(out.begin(), out.end(), [](const EntityMatch& a, const EntityMatch& b) {
    return a.span.begin != b.span.begin ? a.span.begin < b.span.begin : a.span.end < b.span.end;
  });
  return out;
}

inline EntityExtraction extract_entities(const KnowledgeGraph& kg, std::string_view text,
                                         MatchOptions opts = {}) {
  EntityExtraction ex;
  std::unordered_set<EntityId> seen;
  for (const auto& m : match_entities(kg, text, opts)) {
    if (seen.insert(m.entity).second) {
      ex.entities.push_back(m.entity);
      ex.spans.push_back(m.span);
    }
  }
  return ex;
}

// Surface form of a relation inside injected text. Compact ConceptNet
// labels are spelled out ("isrelatedto" -> "is related to"); anything else
// ("is_a") is kept verbatim.
inline std::string relation_phrase(std::string_view rel) {
  static const std::unordered_map<std::string_view, std::string_view> kPhrases = {
      {"relatedto", "is related to"},        {"isrelatedto", "is related to"},
      {"isa", "is a"},                       {"partof", "part of"},
      {"hasa", "has a"},                     {"usedfor", "used for"},
      {"capableof", "capable of"},           {"atlocation", "at location"},
      {"hasproperty", "has property"},       {"hassubevent", "has subevent"},
      {"hasfirstsubevent", "has first subevent"}, {"haslastsubevent", "has last subevent"},
      {"hasprerequisite", "has prerequisite"}, {"motivatedbygoal", "motivated by goal"},
      {"causesdesire", "causes desire"},     {"createdby", "created by"},
      {"madeof", "made of"},                 {"receivesaction", "receives action"},
      {"derivedfrom", "derived from"},       {"formof", "form of"},
      {"similarto", "similar to"},           {"definedas", "defined as"},
      {"mannerof", "manner of"},             {"locatednear", "located near"},
      {"hascontext", "has context"},         {"distinctfrom", "distinct from"},
      {"symbolof", "symbol of"},             {"obstructedby", "obstructed by"},
      {"notdesires", "not desires"},         {"etymologicallyrelatedto", "etymologically related to"},
  };
  const std::string folded = text::lower(rel);
  if (auto it = kPhrases.find(folded); it != kPhrases.end()) return std::string(it->second);
  return std::string(rel);
}

struct EntityTriples {
  std::string entity;
  std::vector<TripleText> triples;
};

// Byte range of one injected clause inside ExpandedQuery::augmented_text,
// including its leading space.
struct Injection {
  std::size_t offset = 0;
  std::size_t length = 0;
};

struct ExpandedQuery {
  QueryDescription source;
  std::vector<std::string> entities;            // E_d, canonical names
  std::vector<EntityTriples> triples_by_entity;  // parallel to `entities`
  std::string augmented_text;                   // k_d
  std::vector<Injection> injections;            // ascending offsets

  std::vector<TripleText> all_triples() const {
    std::vector<TripleText> out;
    for (const auto& et : triples_by_entity) out.insert(out.end(), et.triples.begin(), et.triples.end());
    return out;
  }
};

struct ExpandOptions {
  std::size_t max_hops = 2;
  std::size_t max_triples_per_entity = 8;
  MatchOptions match{};
};

// Renders triples as "subject relation object, object ..." with objects
// grouped per (subject, relation) in first-appearance order.
inline std::string render_clause(const std::vector<TripleText>& triples) {
  std::vector<std::pair<std::pair<std::string, std::string>, std::vector<std::string>>> groups;
  for (const auto& t : triples) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      return g.first.first == t.subject && g.first.second == t.relation;
    });
    if (it == groups.end()) {
      groups.push_back({{t.subject, t.relation}, {t.object}});
    } else {
      it->second.push_back(t.object);
    }
  }
  std::string out;
  for (const auto& [head, objects] : groups) {
    if (!out.empty()) out += ' ';
    out += head.first + ' ' + relation_phrase(head.second) + ' ';
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (i) out += ", ";
      out += objects[i];
    }
  }
  return out;
}

namespace detail {

inline ExpandedQuery expand_from_matches(const KnowledgeGraph& kg, const QueryDescription& q,
                                         const std::vector<EntityMatch>& matches,
                                         const ExpandOptions& opts) {
  if (opts.max_hops == 0) throw InvalidArgument("max_hops must be >= 1");
  if (opts.max_triples_per_entity == 0) throw InvalidArgument("max_triples_per_entity must be >= 1");

  ExpandedQuery eq;
  eq.source = q;

  struct Pending {
    EntityId entity;
    std::size_t anchor;
    bool maximal;
    std::size_t order;
  };
  std::vector<Pending> firsts;
  std::unordered_set<EntityId> seen;
  for (const auto& m : matches) {
    if (seen.insert(m.entity).second) firsts.push_back({m.entity, m.anchor, m.maximal, firsts.size()});
  }

  std::unordered_set<std::string> injected;
  std::vector<std::vector<TripleText>> chosen(firsts.size());
  for (std::size_t i = 0; i < firsts.size(); ++i) {
    const EntityId e = firsts[i].entity;
    eq.entities.push_back(kg.name(e));
    const std::array<EntityId, 1> seed{e};
    for (const Triple& t : extract_triples(kg, seed, opts.max_hops)) {
      if (chosen[i].size() >= opts.max_triples_per_entity) break;
      TripleText tt = kg.spell(t);
      if (!injected.insert(tt.subject + '\x1f' + tt.relation + '\x1f' + tt.object).second) continue;
      chosen[i].push_back(std::move(tt));
    }
    eq.triples_by_entity.push_back({kg.name(e), chosen[i]});
  }

  // Clauses sharing an anchor: the maximal match first, then nested ones.
  std::vector<std::size_t> order(firsts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (firsts[a].anchor != firsts[b].anchor) return firsts[a].anchor < firsts[b].anchor;
    if (firsts[a].maximal != firsts[b].maximal) return firsts[a].maximal;
    return firsts[a].order < firsts[b].order;
  });

  const std::string& src = q.text;
  std::size_t copied = 0;
  for (std::size_t idx = 0; idx < order.size();) {
    const std::size_t anchor = firsts[order[idx]].anchor;
    std::string clause;
    for (; idx < order.size() && firsts[order[idx]].anchor == anchor; ++idx) {
      const auto& triples = chosen[order[idx]];
      if (triples.empty()) continue;
      clause += ' ';
      clause += render_clause(triples);
    }
    if (clause.empty()) continue;
    eq.augmented_text.append(src, copied, anchor - copied);
    copied = anchor;
    eq.injections.push_back({eq.augmented_text.size(), clause.size()});
    eq.augmented_text += clause;
  }
  eq.augmented_text.append(src, copied, std::string::npos);
  return eq;
}

}  // namespace detail

// Builds the knowledge-augmented query k_d: entities found by the lexicon
// matcher, each followed (at its first mention) by up to
// max_triples_per_entity of its extracted triples.
inline ExpandedQuery expand_query(const KnowledgeGraph& kg, const QueryDescription& q,
                                  const ExpandOptions& opts = {}) {
  return detail::expand_from_matches(kg, q, match_entities(kg, q.text, opts.match), opts);
}

// Same as expand_query, but entity candidates come from an external phrase
// extractor. Phrases that are not KG entities or do not occur in the text
// are skipped.
inline ExpandedQuery expand_query_with_phrases(const KnowledgeGraph& kg, const QueryDescription& q,
                                               const std::vector<std::string>& phrases,
                                               const ExpandOptions& opts = {}) {
  const auto toks = text::tokenize(q.text);
  std::vector<EntityMatch> matches;
  for (const auto& phrase : phrases) {
    const auto ptoks = text::words(phrase);
    const auto id = kg.lookup(phrase);
    if (!id || ptoks.empty() || ptoks.size() > toks.size()) continue;
    for (std::size_t i = 0; i + ptoks.size() <= toks.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < ptoks.size() && ok; ++k) ok = toks[i + k].text == ptoks[k];
      if (!ok) continue;
      const Span span{toks[i].begin, toks[i + ptoks.size() - 1].end};
      matches.push_back({*id, span, span.end, true});
      break;
    }
  }
  for (auto& m : matches) {
    for (const auto& outer : matches) {
      const bool encloses = outer.span.begin <= m.span.begin && outer.span.end >= m.span.end &&
                            !(outer.span == m.span);
      if (encloses) {
        m.anchor = std::max(m.anchor, outer.span.end);
        m.maximal = false;
      }
    }
  }
  std::stable_sort(matches.begin(), matches.end(), [](const EntityMatch& a, const EntityMatch& b) {
    return a.span.begin != b.span.begin ? a.span.begin < b.span.begin : a.span.end < b.span.end;
  });
  return detail::expand_from_matches(kg, q, matches, opts);
}

// Removes every injected clause, recovering the source text.
inline std::string strip_injections(const ExpandedQuery& eq) {
  std::string out;
  std::size_t pos = 0;
  for (const auto& inj : eq.injections) {
    out.append(eq.augmented_text, pos, inj.offset - pos);
    pos = inj.offset + inj.length;
  }
  out.append(eq.augmented_text, pos, std::string::npos);
  return out;
}

}  // namespace iseeq
