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

// Conceptual-flow metrics over generated vs. ground-truth questions:
// semantic relations (SR, mean pair similarity) and logical coherence (LC,
// percentage of pairs labeled entailment). Similarity scores and labels come
// from external models.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "iseeq/embed_io.hpp"
#include "iseeq/error.hpp"
#include "iseeq/losses.hpp"

namespace iseeq {

// Similarity of (generated i, reference j); row-major gen x ref.
struct PairScores {
  std::size_t gen = 0;
  std::size_t ref = 0;
  std::vector<double> scores;
};

// Mean similarity over every generated x reference pair: the supplied score
// when `external` is given, else the cosine of the embeddings.
inline double sr_score(std::span<const std::vector<float>> gen_vecs, std::span<const std::vector<float>> ref_vecs,
                       const std::optional<PairScores>& external = std::nullopt) {
  if (gen_vecs.empty() || ref_vecs.empty()) throw InvalidArgument("SR needs generated and reference questions");
  if (external) {
    if (external->gen != gen_vecs.size() || external->ref != ref_vecs.size() ||
        external->scores.size() != external->gen * external->ref) {
      throw InvalidArgument("external pair-score table shape mismatch");
    }
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < gen_vecs.size(); ++i) {
    for (std::size_t j = 0; j < ref_vecs.size(); ++j) {
      if (external) {
        sum += external->scores[i * ref_vecs.size() + j];
      } else {
        if (gen_vecs[i].size() != ref_vecs[j].size()) throw InvalidArgument("SR: embedding dimension mismatch");
        sum += cosine(gen_vecs[i], ref_vecs[j]);
      }
    }
  }
  return sum / static_cast<double>(gen_vecs.size() * ref_vecs.size());
}

// Mean of externally supplied pair scores.
inline double sr_from_scores(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("SR needs at least one pair score");
  double sum = 0.0;
  for (double s : scores) sum += s;
  return sum / static_cast<double>(scores.size());
}

// Percentage of labels equal to entailment; 0 for an empty list.
inline double lc_score(std::span<const EntailmentLabel> labels) {
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (auto l : labels) hits += l == EntailmentLabel::kEntailment;
  return 100.0 * static_cast<double>(hits) / static_cast<double>(labels.size());
}

struct QueryMetrics {
  std::string query_id;
  double sr = 0.0;
  double lc = 0.0;
  std::size_t sr_pairs = 0;
  std::size_t lc_pairs = 0;
};

struct MetricReport {
  double sr = 0.0;
  double lc_percent = 0.0;
  std::size_t n_pairs = 0;     // labeled pairs behind lc_percent
  std::size_t sr_pairs = 0;
  std::vector<QueryMetrics> per_query;
};

struct ScoredPair {
  std::string query_id;  // may be empty
  double score = 0.0;
};

struct LabeledPair {
  std::string query_id;  // may be empty
  EntailmentLabel label = EntailmentLabel::kNeutral;
};

// Aggregates pair scores and labels overall and per query id (queries in
// lexicographic order; pairs without a query id only count overall).
inline MetricReport build_metric_report(std::span<const ScoredPair> scores, std::span<const LabeledPair> labels) {
  MetricReport rep;
  std::map<std::string, std::pair<std::vector<double>, std::vector<EntailmentLabel>>> by_query;
  std::vector<double> all_scores;
  std::vector<EntailmentLabel> all_labels;
  for (const auto& s : scores) {
    all_scores.push_back(s.score);
    if (!s.query_id.empty()) by_query[s.query_id].first.push_back(s.score);
  }
  for (const auto& l : labels) {
    all_labels.push_back(l.label);
    if (!l.query_id.empty()) by_query[l.query_id].second.push_back(l.label);
  }
  rep.sr_pairs = all_scores.size();
  rep.sr = all_scores.empty() ? 0.0 : sr_from_scores(all_scores);
  rep.n_pairs = all_labels.size();
  rep.lc_percent = lc_score(all_labels);
  for (const auto& [qid, v] : by_query) {
    QueryMetrics qm{qid, v.first.empty() ? 0.0 : sr_from_scores(v.first), lc_score(v.second), v.first.size(),
                    v.second.size()};
    rep.per_query.push_back(std::move(qm));
  }
  return rep;
}

}  // namespace iseeq
