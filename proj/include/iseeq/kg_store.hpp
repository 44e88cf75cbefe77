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

// Commonsense knowledge graph store: a deduplicated, directed, labeled
// multigraph over canonical entity strings, with a phrase lexicon and
// subject-rooted multi-hop triple extraction.

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "iseeq/error.hpp"
#include "iseeq/text.hpp"

namespace iseeq {

enum class EntityId : std::uint32_t {};

inline std::size_t index_of(EntityId id) { return static_cast<std::size_t>(id); }

struct Triple {
  EntityId subject;
  std::string relation;
  EntityId object;

  friend bool operator==(const Triple&, const Triple&) = default;
};

// A triple spelled out with entity names, as stored in expanded queries and
// written to JSON.
struct TripleText {
  std::string subject;
  std::string relation;
  std::string object;

  friend bool operator==(const TripleText&, const TripleText&) = default;
};

class KnowledgeGraph {
 public:
  class Builder;

  std::size_t entity_count() const { return entities_.size(); }
  std::size_t triple_count() const { return triple_count_; }

  const std::string& name(EntityId id) const { return entities_.at(index_of(id)); }
  const std::vector<std::string>& entities() const { return entities_; }

  bool contains(EntityId id) const { return index_of(id) < entities_.size(); }

  // Outgoing triples of `id` in insertion order.
  std::span<const Triple> outgoing(EntityId id) const { return adjacency_.at(index_of(id)); }

  // Resolves a surface phrase ("Career Options", "career options",
  // "career_options") to an entity.
  std::optional<EntityId> lookup(std::string_view phrase) const {
    if (auto it = lexicon_.find(std::string(phrase)); it != lexicon_.end()) return it->second;
    if (auto it = lexicon_.find(text::canonicalize(phrase)); it != lexicon_.end()) return it->second;
    return find_by_key(text::match_key(phrase));
  }

  // Lookup by token key (see text::match_key). Used by the entity matcher.
  std::optional<EntityId> find_by_key(const std::string& key) const {
    if (auto it = by_key_.find(key); it != by_key_.end()) return it->second;
    return std::nullopt;
  }

  // Number of tokens in the longest entity key; bounds the phrase matcher.
  std::size_t max_phrase_tokens() const { return max_phrase_tokens_; }

  const std::unordered_map<std::string, EntityId>& lexicon() const { return lexicon_; }

  TripleText spell(const Triple& t) const { return {name(t.subject), t.relation, name(t.object)}; }

 private:
  std::vector<std::string> entities_;
  std::vector<std::vector<Triple>> adjacency_;
  std::unordered_map<std::string, EntityId> lexicon_;
  std::unordered_map<std::string, EntityId> by_key_;
  std::size_t max_phrase_tokens_ = 0;
  std::size_t triple_count_ = 0;
};

class KnowledgeGraph::Builder {
 public:
  // Adds a triple after canonicalizing all three fields. Returns false for a
  // duplicate. Throws InvalidArgument when a field is empty after trimming.
  bool add(std::string_view subject, std::string_view relation, std::string_view object) {
    std::string s = text::canonicalize(subject);
    std::string r = text::canonicalize(relation);
    std::string o = text::canonicalize(object);
    if (s.empty() || r.empty() || o.empty()) throw InvalidArgument("triple has an empty field");
    const EntityId sid = intern(s);
    const EntityId oid = intern(o);
    std::string key = std::to_string(index_of(sid)) + '\x1f' + r + '\x1f' + std::to_string(index_of(oid));
    if (!seen_.insert(std::move(key)).second) return false;
    g_.adjacency_[index_of(sid)].push_back(Triple{sid, std::move(r), oid});
    ++g_.triple_count_;
    return true;
  }

  std::size_t triple_count() const { return g_.triple_count_; }

  KnowledgeGraph build() && {
    seen_.clear();
    return std::move(g_);
  }

 private:
  EntityId intern(const std::string& canonical) {
    if (auto it = g_.lexicon_.find(canonical); it != g_.lexicon_.end() &&
                                               g_.entities_[index_of(it->second)] == canonical) {
      return it->second;
    }
    const auto id = static_cast<EntityId>(g_.entities_.size());
    g_.entities_.push_back(canonical);
    g_.adjacency_.emplace_back();
    g_.lexicon_[canonical] = id;
    std::string spaced = canonical;
    for (auto& c : spaced) {
      if (c == '_') c = ' ';
    }
    g_.lexicon_.try_emplace(spaced, id);
    const std::string key = text::match_key(canonical);
    if (!key.empty()) {
      g_.by_key_.try_emplace(key, id);
      g_.max_phrase_tokens_ = std::max(g_.max_phrase_tokens_, text::tokenize(canonical).size());
    }
    return id;
  }

  KnowledgeGraph g_;
  std::unordered_set<std::string> seen_;
};

enum class KgFormat {
  kTsv,         // subject \t relation \t object
  kConceptNet,  // assertion-uri \t /r/Rel \t /c/en/start[/pos] \t /c/en/end[/pos] [\t json]
};

struct KgLoadResult {
  KnowledgeGraph graph;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  while (true) {
    const auto e = line.find('\t', b);
    out.push_back(line.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
    if (e == std::string_view::npos) break;
    b = e + 1;
  }
  return out;
}

// "/c/en/career_options/n" -> "career_options"; nullopt for other languages.
inline std::optional<std::string> conceptnet_term(std::string_view uri) {
  constexpr std::string_view prefix = "/c/en/";
  if (uri.substr(0, prefix.size()) != prefix) return std::nullopt;
  uri.remove_prefix(prefix.size());
  if (auto slash = uri.find('/'); slash != std::string_view::npos) uri = uri.substr(0, slash);
  if (uri.empty()) return std::nullopt;
  return std::string(uri);
}

}  // namespace detail

// Parses a knowledge graph from a stream. `source` names the input in error
// messages. Blank lines are ignored. In lenient mode malformed lines become
// warnings; in strict mode the first one throws ParseError.
inline KgLoadResult parse_kg(std::istream& in, const std::string& source,
                             KgFormat format = KgFormat::kTsv,
                             ParseMode mode = ParseMode::kStrict) {
  KnowledgeGraph::Builder builder;
  std::vector<std::string> warnings;
  std::string line;
  std::size_t lineno = 0;

  auto bad = [&](const std::string& why) {
    if (mode == ParseMode::kStrict) throw ParseError(source, lineno, why);
    warnings.push_back(source + ":" + std::to_string(lineno) + ": " + why);
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::canonicalize(line).empty()) continue;
    const auto fields = detail::split_tabs(line);

    std::string_view s, r, o;
    std::string cs, co, cr;
    if (format == KgFormat::kTsv) {
      if (fields.size() != 3) {
        bad("expected 3 tab-separated fields, got " + std::to_string(fields.size()));
        continue;
      }
      s = fields[0];
      r = fields[1];
      o = fields[2];
    } else {
      if (fields.size() < 4) {
        bad("expected at least 4 tab-separated fields, got " + std::to_string(fields.size()));
        continue;
      }
      auto start = detail::conceptnet_term(fields[2]);
      auto end = detail::conceptnet_term(fields[3]);
      if (!start || !end) continue;  // non-English edge, not an error
      std::string_view rel = fields[1];
      if (rel.substr(0, 3) == "/r/") rel.remove_prefix(3);
      cs = std::move(*start);
      co = std::move(*end);
      cr = std::string(rel);
      s = cs;
      r = cr;
      o = co;
    }

    if (text::canonicalize(s).empty() || text::canonicalize(r).empty() ||
        text::canonicalize(o).empty()) {
      bad("empty subject, relation or object");
      continue;
    }
    builder.add(s, r, o);
  }

  if (builder.triple_count() == 0) throw DataError(source + ": knowledge graph is empty");
  return {std::move(builder).build(), std::move(warnings)};
}

inline KgLoadResult load_kg(const std::string& path, KgFormat format = KgFormat::kTsv,
                            ParseMode mode = ParseMode::kStrict) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open knowledge graph file: " + path);
  return parse_kg(in, path, format, mode);
}

// Depth-first, subject-rooted triple extraction. Starting at each seed (in
// order) the walk emits every outgoing triple of a node it stands on and
// follows the object edge while fewer than `max_hops` edges have been
// walked. Triples that only point *into* a seed are never emitted. A node is
// re-expanded when reached again at a shallower depth, so the result is the
// set of triples whose subject lies within max_hops - 1 edges of a seed.
// Output is deduplicated and ordered by first emission.
inline std::vector<Triple> extract_triples(const KnowledgeGraph& kg, std::span<const EntityId> seeds,
                                           std::size_t max_hops) {
  if (max_hops == 0) throw InvalidArgument("max_hops must be >= 1");

  std::vector<Triple> out;
  std::unordered_set<const Triple*> emitted;
  std::vector<std::size_t> best_depth(kg.entity_count(), std::numeric_limits<std::size_t>::max());

  auto visit = [&](auto&& self, EntityId node, std::size_t depth) -> void {
    auto& best = best_depth[index_of(node)];
    if (depth >= best) return;
    best = depth;
    for (const Triple& t : kg.outgoing(node)) {
      if (emitted.insert(&t).second) out.push_back(t);
      if (depth + 1 < max_hops) self(self, t.object, depth + 1);
    }
  };

  for (const EntityId seed : seeds) {
    if (!kg.contains(seed)) continue;
    visit(visit, seed, 0);
  }
  return out;
}

}  // namespace iseeq
