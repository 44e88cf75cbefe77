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

// Forward values of the question-generation training signals. Generation
// probabilities and entailment predictions come from external models.
//
//   reward    R   = a * LCS(g, r) / |g| + (1 - a) * soft_match(g, r)
//   CE            = -(1/b) sum_i R_i * I_i * log p_i
//   RCE           = -(1/b) sum_i R_i * (1 - I_i) * p_i
//   ERL step      = CE - P(y)        if y == entailment
//                   RCE - (1 - P(y)) otherwise
//   epoch EMA L_t = g * L_{t-1} + (1 - g) * L_batch

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iseeq/embed_io.hpp"
#include "iseeq/error.hpp"
#include "iseeq/wmd.hpp"

namespace iseeq {

class RewardConfig {
 public:
  static constexpr double kDefaultAlpha = 0.1971;
  static constexpr double kDefaultGamma = 0.12;

  RewardConfig() = default;
  RewardConfig(double alpha, double gamma) : alpha_(alpha), gamma_(gamma) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in [0, 1]");
  }

  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }

  // When set, generation probabilities below the floor are raised to it
  // instead of rejected.
  std::optional<double> prob_floor;

 private:
  double alpha_ = kDefaultAlpha;
  double gamma_ = kDefaultGamma;
};

struct QuestionPair {
  std::vector<std::string> generated;
  TokenDoc generated_doc;
  std::vector<std::string> reference;
  TokenDoc reference_doc;
  double gen_prob = 1.0;
};

enum class EntailmentLabel { kNeutral, kContradiction, kEntailment };

inline std::string_view to_string(EntailmentLabel l) {
  switch (l) {
    case EntailmentLabel::kNeutral: return "neutral";
    case EntailmentLabel::kContradiction: return "contradiction";
    case EntailmentLabel::kEntailment: return "entailment";
  }
  return "neutral";
}

inline EntailmentLabel parse_entailment_label(std::string_view s) {
  if (s == "entailment") return EntailmentLabel::kEntailment;
  if (s == "contradiction") return EntailmentLabel::kContradiction;
  if (s == "neutral") return EntailmentLabel::kNeutral;
  throw DataError("unknown entailment label: " + std::string(s));
}

struct EntailmentRecord {
  EntailmentLabel label = EntailmentLabel::kNeutral;
  double prob = 0.0;
};

// `entailments[i]` relates generated question i to question i + 1.
struct LossBatch {
  std::vector<QuestionPair> pairs;
  std::vector<EntailmentRecord> entailments;
};

inline void validate(const LossBatch& batch) {
  if (batch.pairs.empty()) throw InvalidArgument("loss batch is empty");
  if (batch.entailments.size() != batch.pairs.size() - 1) {
    throw InvalidArgument("a batch of " + std::to_string(batch.pairs.size()) + " pairs needs " +
                          std::to_string(batch.pairs.size() - 1) + " entailment records");
  }
  for (const auto& p : batch.pairs) {
    if (p.generated.empty() || p.reference.empty()) throw InvalidArgument("question token lists must be non-empty");
    if (!(p.gen_prob >= 0.0 && p.gen_prob <= 1.0)) throw InvalidArgument("gen_prob must lie in [0, 1]");
  }
  for (const auto& e : batch.entailments) {
    if (!(e.prob >= 0.0 && e.prob <= 1.0)) throw InvalidArgument("entailment probability must lie in [0, 1]");
  }
}

// Length of the longest common subsequence under token equality.
inline std::size_t lcs_len(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (const auto& x : a) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = (x == b[j - 1]) ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

inline double reward(const QuestionPair& pair, const RewardConfig& cfg) {
  if (pair.generated.empty()) throw InvalidArgument("generated question is empty");
  const double lcs_term =
      static_cast<double>(lcs_len(pair.generated, pair.reference)) / static_cast<double>(pair.generated.size());
  return cfg.alpha() * lcs_term + (1.0 - cfg.alpha()) * soft_match(pair.generated_doc, pair.reference_doc);
}

// Positional match rate: positions j < min(|a|, |b|) with a[j] == b[j],
// divided by max(|a|, |b|).
inline double indicator(std::span<const std::string> a, std::span<const std::string> b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  std::size_t same = 0;
  for (std::size_t j = 0; j < std::min(a.size(), b.size()); ++j) same += a[j] == b[j];
  return static_cast<double>(same) / static_cast<double>(longest);
}

namespace detail {

inline double checked_prob(double p, const RewardConfig& cfg) {
  if (cfg.prob_floor) p = std::max(p, *cfg.prob_floor);
  if (!(p > 0.0)) throw DataError("generation probability 0 gives an infinite loss; clamp upstream");
  return p;
}

}  // namespace detail

// Per-question terms feeding CE and RCE.
struct LossTerms {
  double reward = 0.0;
  double indicator = 0.0;
  double gen_prob = 1.0;
};

inline std::vector<LossTerms> loss_terms(const LossBatch& batch, const RewardConfig& cfg) {
  validate(batch);
  std::vector<LossTerms> out;
  out.reserve(batch.pairs.size());
  for (const auto& p : batch.pairs) out.push_back({reward(p, cfg), indicator(p.reference, p.generated), p.gen_prob});
  return out;
}

inline double ce_loss(std::span<const LossTerms> terms, const RewardConfig& cfg) {
  if (terms.empty()) throw InvalidArgument("loss batch is empty");
  double sum = 0.0;
  for (const auto& t : terms) sum += t.reward * t.indicator * std::log(detail::checked_prob(t.gen_prob, cfg));
  return -sum / static_cast<double>(terms.size());
}

// Uses the probability itself, not its log.
inline double rce_loss(std::span<const LossTerms> terms) {
  if (terms.empty()) throw InvalidArgument("loss batch is empty");
  double sum = 0.0;
  for (const auto& t : terms) sum += t.reward * (1.0 - t.indicator) * t.gen_prob;
  return -sum / static_cast<double>(terms.size());
}

inline double ce_loss(const LossBatch& batch, const RewardConfig& cfg) { return ce_loss(loss_terms(batch, cfg), cfg); }

inline double rce_loss(const LossBatch& batch, const RewardConfig& cfg) { return rce_loss(loss_terms(batch, cfg)); }

inline bool takes_entailment_branch(const EntailmentRecord& e) { return e.label == EntailmentLabel::kEntailment; }

inline double erl_step_loss(const LossBatch& batch, std::size_t i, const RewardConfig& cfg) {
  validate(batch);
  if (i >= batch.entailments.size()) {
    throw std::out_of_range("entailment index " + std::to_string(i) + " out of range");
  }
  const EntailmentRecord& e = batch.entailments[i];
  if (takes_entailment_branch(e)) return ce_loss(batch, cfg) - e.prob;
  return rce_loss(batch, cfg) - (1.0 - e.prob);
}

inline double ema_update(double prev_epoch_loss, double batch_loss, const RewardConfig& cfg) {
  return cfg.gamma() * prev_epoch_loss + (1.0 - cfg.gamma()) * batch_loss;
}

}  // namespace iseeq
