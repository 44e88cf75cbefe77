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

// Run configuration. Values resolve as defaults < config file < flags. The
// config file is plain "key = value" text; '#' starts a comment.

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iseeq/error.hpp"
#include "iseeq/kpr.hpp"
#include "iseeq/losses.hpp"
#include "iseeq/sitq_index.hpp"
#include "iseeq/sqe.hpp"

namespace iseeq {

struct RunConfig {
  double alpha = RewardConfig::kDefaultAlpha;
  double gamma = RewardConfig::kDefaultGamma;
  double nes_threshold = 0.80;
  std::size_t top_k = 20;
  std::size_t top_n = 100;
  std::size_t code_bits = 64;
  std::size_t itq_iters = 50;
  std::optional<std::size_t> probe;  // unset: 8 x top_n
  std::uint64_t seed = 42;
  double cosine_relevance = 0.70;
  std::size_t max_hops = 2;
  std::size_t max_triples_per_entity = 8;
  std::size_t threads = 1;

  std::size_t probe_or_default() const { return probe.value_or(8 * top_n); }

  RewardConfig reward() const { return RewardConfig(alpha, gamma); }
  SitqParams sitq() const { return {code_bits, itq_iters, seed}; }
  RetrieveParams retrieval() const { return {top_n, top_k, probe_or_default(), nes_threshold}; }
  ExpandOptions expansion() const { return {max_hops, max_triples_per_entity, {}}; }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw DataError("config: bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

}  // namespace detail

// Keys accepted in config files and as flag overrides.
inline const std::vector<std::string_view>& config_keys() {
  static const std::vector<std::string_view> keys = {
      "alpha", "gamma", "nes_threshold", "top_k", "top_n", "code_bits", "itq_iters", "probe",
      "seed",  "cosine_relevance", "max_hops", "max_triples_per_entity", "threads"};
  return keys;
}

inline void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  key = detail::trim(key);
  value = detail::trim(value);
  using detail::parse_number;
  if (key == "alpha") cfg.alpha = parse_number<double>(key, value);
  else if (key == "gamma") cfg.gamma = parse_number<double>(key, value);
  else if (key == "nes_threshold") cfg.nes_threshold = parse_number<double>(key, value);
  else if (key == "top_k") cfg.top_k = parse_number<std::size_t>(key, value);
  else if (key == "top_n") cfg.top_n = parse_number<std::size_t>(key, value);
  else if (key == "code_bits") cfg.code_bits = parse_number<std::size_t>(key, value);
  else if (key == "itq_iters") cfg.itq_iters = parse_number<std::size_t>(key, value);
  else if (key == "probe") cfg.probe = parse_number<std::size_t>(key, value);
  else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "cosine_relevance") cfg.cosine_relevance = parse_number<double>(key, value);
  else if (key == "max_hops") cfg.max_hops = parse_number<std::size_t>(key, value);
  else if (key == "max_triples_per_entity") cfg.max_triples_per_entity = parse_number<std::size_t>(key, value);
  else if (key == "threads") cfg.threads = parse_number<std::size_t>(key, value);
  else throw DataError("config: unknown key '" + std::string(key) + "'");
}

inline void apply_config_text(RunConfig& cfg, std::string_view text, const std::string& source = "config") {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view v = line;
    if (auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
    v = detail::trim(v);
    if (v.empty()) continue;
    const auto eq = v.find('=');
    if (eq == std::string_view::npos) throw ParseError(source, lineno, "expected key = value");
    try {
      apply_setting(cfg, v.substr(0, eq), v.substr(eq + 1));
    } catch (const ParseError&) {
      throw;
    } catch (const DataError& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
}

inline void validate(const RunConfig& cfg) {
  RewardConfig(cfg.alpha, cfg.gamma);
  if (!(cfg.nes_threshold >= 0.0 && cfg.nes_threshold < 1.0)) throw InvalidArgument("nes_threshold must lie in [0, 1)");
  if (cfg.top_k == 0 || cfg.top_n == 0) throw InvalidArgument("top_k and top_n must be positive");
  if (cfg.top_k > cfg.top_n) throw InvalidArgument("top_k must not exceed top_n");
  if (cfg.code_bits == 0 || cfg.itq_iters == 0) throw InvalidArgument("code_bits and itq_iters must be positive");
  if (cfg.probe && *cfg.probe == 0) throw InvalidArgument("probe must be positive");
  if (!(cfg.cosine_relevance >= -1.0 && cfg.cosine_relevance <= 1.0)) {
    throw InvalidArgument("cosine_relevance must lie in [-1, 1]");
  }
  if (cfg.max_hops == 0 || cfg.max_triples_per_entity == 0) {
    throw InvalidArgument("max_hops and max_triples_per_entity must be positive");
  }
  if (cfg.threads == 0) throw InvalidArgument("threads must be positive");
}

// defaults < file < flags.
inline RunConfig resolve_config(const std::optional<std::string>& file_text,
                                const std::vector<std::pair<std::string, std::string>>& overrides,
                                const std::string& source = "config") {
  RunConfig cfg;
  if (file_text) apply_config_text(cfg, *file_text, source);
  for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
  validate(cfg);
  return cfg;
}

}  // namespace iseeq
