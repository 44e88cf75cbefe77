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

// Precomputed embeddings: sentence-level vector stores and token-level
// bag-of-embeddings documents.
//
// Binary vector file layout (all integers and floats little-endian):
//   "ISEQVEC1"            8 bytes
//   dim                   u32
//   count                 u64
//   count x { id_len u16, id bytes (UTF-8), dim x f32 }
// JSONL layout: one {"id": str, "vec": [float, ...]} object per line.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "iseeq/error.hpp"

namespace iseeq {

class VectorStore {
 public:
  VectorStore() = default;

  // Validates finiteness, unique ids and the matrix shape, then caches norms.
  VectorStore(std::size_t dim, std::vector<std::string> ids, std::vector<float> matrix)
      : dim_(dim), ids_(std::move(ids)), matrix_(std::move(matrix)) {
    if (dim_ == 0) throw DataError("vector dimension must be positive");
    if (matrix_.size() != ids_.size() * dim_) {
      throw DataError("matrix has " + std::to_string(matrix_.size()) + " values, expected " +
                      std::to_string(ids_.size() * dim_));
    }
    norms_.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      if (!index_.emplace(ids_[i], i).second) throw DataError("duplicate vector id: " + ids_[i]);
      double ss = 0.0;
      for (float v : row(i)) {
        if (!std::isfinite(v)) throw DataError("non-finite value in vector " + ids_[i]);
        ss += static_cast<double>(v) * v;
      }
      norms_.push_back(std::sqrt(ss));
    }
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }

  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  const std::vector<float>& matrix() const { return matrix_; }
  const std::vector<double>& norms() const { return norms_; }
  double norm(std::size_t i) const { return norms_.at(i); }

  std::span<const float> row(std::size_t i) const { return {matrix_.data() + i * dim_, dim_}; }

  std::optional<std::size_t> find(const std::string& id) const {
    if (auto it = index_.find(id); it != index_.end()) return it->second;
    return std::nullopt;
  }

  // New store holding the given rows, in the given order.
  VectorStore subset(std::span<const std::size_t> rows) const {
    std::vector<std::string> ids;
    std::vector<float> m;
    ids.reserve(rows.size());
    m.reserve(rows.size() * dim_);
    for (std::size_t r : rows) {
      ids.push_back(ids_.at(r));
      auto v = row(r);
      m.insert(m.end(), v.begin(), v.end());
    }
    return VectorStore(dim_, std::move(ids), std::move(m));
  }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> matrix_;
  std::vector<double> norms_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline double dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

inline double l2_norm(std::span<const float> a) { return std::sqrt(dot(a, a)); }

// Cosine similarity; 0 when either side has zero norm.
inline double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw InvalidArgument("cosine: dimension mismatch");
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

namespace io {

inline constexpr char kVectorMagic[8] = {'I', 'S', 'E', 'Q', 'V', 'E', 'C', '1'};

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>(u & 0xFF);
    u = static_cast<U>(u >> 8);
  }
  out.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& in, const std::string& what) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw DataError("truncated file reading " + what);
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<decltype(u)>((u << 8) | buf[i]);
  return static_cast<T>(u);
}

inline void put_f32(std::ostream& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
inline float get_f32(std::istream& in, const std::string& what) {
  return std::bit_cast<float>(get_le<std::uint32_t>(in, what));
}
inline double get_f64(std::istream& in, const std::string& what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(in, what));
}

inline void put_string16(std::ostream& out, const std::string& s) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max()) throw DataError("id longer than 65535 bytes");
  put_le(out, static_cast<std::uint16_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string16(std::istream& in) {
  const auto len = get_le<std::uint16_t>(in, "id length");
  std::string s(len, '\0');
  if (len && !in.read(s.data(), len)) throw DataError("truncated file reading id");
  return s;
}

// Calls fn(line_number, parsed_object) for every non-blank line.
template <typename Fn>
void for_each_jsonl(std::istream& in, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(source, lineno, e.what());
    }
    try {
      fn(lineno, j);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
}

template <typename Fn>
void for_each_jsonl_file(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  for_each_jsonl(in, path, std::forward<Fn>(fn));
}

}  // namespace io

inline void write_vectors(std::ostream& out, const VectorStore& store) {
  out.write(io::kVectorMagic, sizeof(io::kVectorMagic));
  io::put_le(out, static_cast<std::uint32_t>(store.dim()));
  io::put_le(out, static_cast<std::uint64_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    io::put_string16(out, store.id(i));
    for (float v : store.row(i)) io::put_f32(out, v);
  }
}

inline void save_vectors(const std::string& path, const VectorStore& store) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write file: " + path);
  write_vectors(out, store);
  if (!out) throw DataError("write failed: " + path);
}

// Reads the binary layout; the magic must already be consumed.
inline VectorStore read_vectors_binary_body(std::istream& in) {
  const auto dim = io::get_le<std::uint32_t>(in, "dim");
  const auto count = io::get_le<std::uint64_t>(in, "count");
  if (dim == 0) throw DataError("vector file declares dim 0");
  std::vector<std::string> ids;
  std::vector<float> m;
  for (std::uint64_t r = 0; r < count; ++r) {
    ids.push_back(io::get_string16(in));
    for (std::uint32_t k = 0; k < dim; ++k) m.push_back(io::get_f32(in, "vector data"));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("trailing bytes after " + std::to_string(count) + " rows of dim " + std::to_string(dim));
  }
  return VectorStore(dim, std::move(ids), std::move(m));
}

inline VectorStore read_vectors_jsonl(std::istream& in, const std::string& source) {
  std::size_t dim = 0;
  std::vector<std::string> ids;
  std::vector<float> m;
  io::for_each_jsonl(in, source, [&](std::size_t lineno, const nlohmann::json& j) {
    const auto& vec = j.at("vec");
    if (!vec.is_array() || vec.empty()) throw ParseError(source, lineno, "\"vec\" must be a non-empty array");
    if (dim == 0) dim = vec.size();
    if (vec.size() != dim) {
      throw ParseError(source, lineno,
                       "dimension mismatch: " + std::to_string(vec.size()) + " vs " + std::to_string(dim));
    }
    ids.push_back(j.at("id").get<std::string>());
    for (const auto& v : vec) {
      if (!v.is_number()) throw ParseError(source, lineno, "non-numeric vector entry");
      m.push_back(v.get<float>());
    }
  });
  if (dim == 0) throw DataError(source + ": no vectors");
  return VectorStore(dim, std::move(ids), std::move(m));
}

// Loads either format; binary files are recognized by their magic.
inline VectorStore load_vectors(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vector file: " + path);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() == sizeof(magic) && std::memcmp(magic, io::kVectorMagic, sizeof(magic)) == 0) {
    return read_vectors_binary_body(in);
  }
  in.clear();
  in.seekg(0);
  return read_vectors_jsonl(in, path);
}

// Token-level embedding bag with normalized bag-of-words weights.
struct TokenDoc {
  std::string doc_id;
  std::vector<std::string> tokens;  // unique
  std::size_t dim = 0;
  std::vector<float> vectors;       // tokens.size() x dim, row-major
  std::vector<double> weights;      // sums to 1

  std::size_t size() const { return tokens.size(); }
  std::span<const float> row(std::size_t i) const { return {vectors.data() + i * dim, dim}; }
};

// Direct construction with explicit weights; checks every invariant.
inline TokenDoc make_token_doc(std::string doc_id, std::vector<std::string> tokens, std::size_t dim,
                               std::vector<float> vectors, std::vector<double> weights) {
  if (tokens.empty()) throw DataError("token document " + doc_id + " is empty");
  if (dim == 0 || vectors.size() != tokens.size() * dim) throw DataError("token document " + doc_id + ": bad shape");
  if (weights.size() != tokens.size()) throw DataError("token document " + doc_id + ": weight count mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("token document " + doc_id + ": bad weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw DataError("token document " + doc_id + ": weights do not sum to 1");
  for (float v : vectors) {
    if (!std::isfinite(v)) throw DataError("token document " + doc_id + ": non-finite vector");
  }
  return TokenDoc{std::move(doc_id), std::move(tokens), dim, std::move(vectors), std::move(weights)};
}

// Builds the nBOW document for a token sequence. Duplicates are merged in
// first-occurrence order with weight count / kept-total. Tokens missing from
// `lookup` are dropped (and appended to `dropped` if given) in lenient mode;
// strict mode throws.
inline TokenDoc build_token_doc(std::string doc_id, std::span<const std::string> tokens,
                                const VectorStore& lookup, ParseMode mode = ParseMode::kLenient,
                                std::vector<std::string>* dropped = nullptr) {
  std::vector<std::string> uniq;
  std::vector<std::size_t> rows;
  std::vector<double> counts;
  std::unordered_map<std::string, std::size_t> slot;
  std::size_t kept = 0;
  for (const auto& tok : tokens) {
    const auto r = lookup.find(tok);
    if (!r) {
      if (mode == ParseMode::kStrict) throw DataError("token not in vocabulary: " + tok);
      if (dropped) dropped->push_back(tok);
      continue;
    }
    ++kept;
    auto [it, fresh] = slot.emplace(tok, uniq.size());
    if (fresh) {
      uniq.push_back(tok);
      rows.push_back(*r);
      counts.push_back(0.0);
    }
    counts[it->second] += 1.0;
  }
  if (kept == 0) throw DataError("token document " + doc_id + " has no in-vocabulary tokens");

  TokenDoc doc;
  doc.doc_id = std::move(doc_id);
  doc.dim = lookup.dim();
  doc.tokens = std::move(uniq);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto v = lookup.row(rows[i]);
    doc.vectors.insert(doc.vectors.end(), v.begin(), v.end());
    doc.weights.push_back(counts[i] / static_cast<double>(kept));
  }
  return doc;
}

// Mean of the rows of `words` named by `tokens`; tokens not in the store are
// skipped. All zeros when none is found.
inline std::vector<float> mean_embedding(std::span<const std::string> tokens, const VectorStore& words) {
  std::vector<float> out(words.dim(), 0.0f);
  std::size_t hits = 0;
  for (const auto& t : tokens) {
    const auto r = words.find(t);
    if (!r) continue;
    const auto row = words.row(*r);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += row[k];
    ++hits;
  }
  if (hits) {
    for (auto& v : out) v /= static_cast<float>(hits);
  }
  return out;
}

}  // namespace iseeq
