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

// SITQ: approximate maximum-inner-product search with binary codes.
//
// Build:
//   1. Simple-LSH augmentation  P(x) = [x / M ; sqrt(1 - |x / M|^2)],  M = max |x|,
//      which puts every passage on the unit sphere so that inner product
//      order against a unit query equals cosine order.
//   2. Center the augmented rows and project onto the top `code_bits`
//      principal directions.
//   3. Iterative quantization: starting from a seeded random orthogonal R,
//      alternate B = sign(V R) and the orthogonal Procrustes update of R
//      from the SVD of B^T V. The objective |V R - B|_F^2 never increases.
//   4. Codes are the sign bits of V R packed into 64-bit words.
// Query:
//   Q(q) = [q / |q| ; 0] is encoded the same way, the `probe` codes nearest
//   in Hamming distance are collected, and those passages are ranked by the
//   exact (unaugmented) inner product.
//
// Index file layout (little-endian):
//   "ISEQIDX1" | u32 dim | u32 code_bits | u64 count | f64 max_norm |
//   f64 mean[dim+1] | f64 projection[(dim+1) x code_bits] |
//   f64 rotation[code_bits x code_bits] | u64 codes[count x words] |
//   count x { u16 id_len, id bytes }

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "iseeq/embed_io.hpp"
#include "iseeq/error.hpp"

namespace iseeq {

struct SitqParams {
  std::size_t code_bits = 64;
  std::size_t itq_iters = 50;
  std::uint64_t seed = 42;
};

struct Candidate {
  std::string passage_id;
  std::size_t hamming = 0;
  double inner_product = 0.0;
};

inline std::size_t hamming_distance(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  std::size_t d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) d += static_cast<std::size_t>(std::popcount(a[w] ^ b[w]));
  return d;
}

// Probe depth actually used for a query: never fewer candidates than results.
inline std::size_t effective_probe(std::size_t top_n, std::size_t probe) { return std::max(top_n, probe); }

class SitqIndex {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // `warnings` receives non-fatal notes (code_bits larger than dim + 1).
  static SitqIndex build(std::shared_ptr<const VectorStore> store, const SitqParams& params,
                         std::vector<std::string>* warnings = nullptr) {
    if (!store || store->empty()) throw InvalidArgument("cannot build an index over an empty store");
    if (params.code_bits == 0) throw InvalidArgument("code_bits must be positive");
    if (params.itq_iters == 0) throw InvalidArgument("itq_iters must be positive");

    SitqIndex idx;
    idx.store_ = std::move(store);
    const VectorStore& s = *idx.store_;
    const std::size_t n = s.size(), d = s.dim(), da = d + 1, c = params.code_bits;
    idx.code_bits_ = c;
    idx.words_ = (c + 63) / 64;

    double max_norm = 0.0;
    for (double nr : s.norms()) max_norm = std::max(max_norm, nr);
    idx.max_norm_ = max_norm > 0.0 ? max_norm : 1.0;

    Matrix aug(n, da);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = idx.augment_passage(s.row(i));
      for (std::size_t k = 0; k < da; ++k) aug(i, k) = row[k];
    }
    const Eigen::RowVectorXd mean = aug.colwise().mean();
    idx.mean_.assign(mean.data(), mean.data() + da);
    aug.rowwise() -= mean;

    // Top principal directions, largest eigenvalue first.
    const Matrix cov = (aug.transpose() * aug) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) throw InvariantError("eigendecomposition failed");
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    idx.projection_ = Matrix::Zero(da, c);
    const std::size_t pcs = std::min(c, da);
    for (std::size_t k = 0; k < pcs; ++k) idx.projection_.col(k) = eig.eigenvectors().col(da - 1 - k);
    if (c > da) {
      if (warnings) {
        warnings->push_back("code_bits " + std::to_string(c) + " exceeds augmented dimension " +
                            std::to_string(da) + "; extra bits use random projections");
      }
      for (std::size_t k = da; k < c; ++k) {
        Eigen::VectorXd col(da);
        for (std::size_t r = 0; r < da; ++r) col(r) = normal(rng);
        idx.projection_.col(k) = col.normalized();
      }
    }
    const Matrix v = aug * idx.projection_;

    // Seeded random orthogonal start.
    Matrix g(c, c);
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix r = qr.householderQ();

    idx.objective_.reserve(params.itq_iters);
    Matrix b(n, c);
    for (std::size_t it = 0; it < params.itq_iters; ++it) {
      const Matrix vr = v * r;
      b = vr.unaryExpr([](double x) { return x >= 0.0 ? 1.0 : -1.0; });
      const Matrix btv = b.transpose() * v;
      Eigen::JacobiSVD<Matrix> svd(btv, Eigen::ComputeFullU | Eigen::ComputeFullV);
      r = svd.matrixV() * svd.matrixU().transpose();
      idx.objective_.push_back((v * r - b).squaredNorm());
    }
    idx.rotation_ = std::move(r);
    idx.refresh_combined();

    idx.codes_.resize(n * idx.words_);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = idx.augment_passage(s.row(i));
      idx.encode_into(row, std::span<std::uint64_t>(idx.codes_.data() + i * idx.words_, idx.words_));
    }
    return idx;
  }

  std::size_t size() const { return store_ ? store_->size() : 0; }
  std::size_t dim() const { return store_ ? store_->dim() : 0; }
  std::size_t dim_aug() const { return dim() + 1; }
  std::size_t code_bits() const { return code_bits_; }
  std::size_t words_per_code() const { return words_; }
  double max_norm() const { return max_norm_; }
  const Matrix& rotation() const { return rotation_; }
  const Matrix& projection() const { return projection_; }
  const std::vector<double>& mean() const { return mean_; }
  const VectorStore& store() const { return *store_; }
  const std::vector<std::string>& ids() const { return store_->ids(); }

  // ITQ quantization error |V R - B|^2 after each iteration (empty for a
  // loaded index).
  const std::vector<double>& itq_objective() const { return objective_; }

  std::span<const std::uint64_t> code(std::size_t i) const { return {codes_.data() + i * words_, words_}; }

  std::vector<double> augment_passage(std::span<const float> x) const {
    std::vector<double> out(x.size() + 1);
    double ss = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      out[k] = static_cast<double>(x[k]) / max_norm_;
      ss += out[k] * out[k];
    }
    out[x.size()] = std::sqrt(std::max(0.0, 1.0 - ss));
    return out;
  }

  static std::vector<double> augment_query(std::span<const float> q) {
    std::vector<double> out(q.size() + 1, 0.0);
    const double nq = l2_norm(q);
    if (nq > 0.0) {
      for (std::size_t k = 0; k < q.size(); ++k) out[k] = static_cast<double>(q[k]) / nq;
    }
    return out;
  }

  // Binary code of an augmented vector.
  std::vector<std::uint64_t> encode(std::span<const double> augmented) const {
    std::vector<std::uint64_t> code(words_, 0);
    encode_into(augmented, code);
    return code;
  }

  std::vector<Candidate> query(std::span<const float> q, std::size_t top_n, std::size_t probe) const {
    if (q.size() != dim()) {
      throw InvalidArgument("query dimension " + std::to_string(q.size()) + " does not match index dimension " +
                            std::to_string(dim()));
    }
    if (top_n == 0) throw InvalidArgument("top_n must be positive");
    const std::size_t n = size();
    probe = std::min(effective_probe(top_n, probe), n);

    const auto qcode = encode(augment_query(q));
    std::vector<std::pair<std::size_t, std::size_t>> hd(n);  // (hamming, row)
    for (std::size_t i = 0; i < n; ++i) hd[i] = {hamming_distance(qcode, code(i)), i};
    if (probe < n) {
      std::nth_element(hd.begin(), hd.begin() + static_cast<std::ptrdiff_t>(probe), hd.end());
      hd.resize(probe);
    }

    std::vector<Candidate> out;
    out.reserve(hd.size());
    for (const auto& [h, row] : hd) out.push_back({store_->id(row), h, dot(q, store_->row(row))});
    std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
      if (a.inner_product != b.inner_product) return a.inner_product > b.inner_product;
      return a.passage_id < b.passage_id;
    });
    if (out.size() > top_n) out.resize(top_n);
    return out;
  }

  void write(std::ostream& out) const {
    out.write("ISEQIDX1", 8);
    io::put_le(out, static_cast<std::uint32_t>(dim()));
    io::put_le(out, static_cast<std::uint32_t>(code_bits_));
    io::put_le(out, static_cast<std::uint64_t>(size()));
    io::put_f64(out, max_norm_);
    for (double x : mean_) io::put_f64(out, x);
    for (Eigen::Index i = 0; i < projection_.rows(); ++i)
      for (Eigen::Index j = 0; j < projection_.cols(); ++j) io::put_f64(out, projection_(i, j));
    for (Eigen::Index i = 0; i < rotation_.rows(); ++i)
      for (Eigen::Index j = 0; j < rotation_.cols(); ++j) io::put_f64(out, rotation_(i, j));
    for (std::uint64_t w : codes_) io::put_le(out, w);
    for (const auto& id : ids()) io::put_string16(out, id);
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write index file: " + path);
    write(out);
    if (!out) throw DataError("write failed: " + path);
  }

  // Reads an index and attaches it to the passage vectors it was built from.
  // The store must hold the same ids in the same order.
  static SitqIndex read(std::istream& in, std::shared_ptr<const VectorStore> store) {
    if (!store) throw InvalidArgument("index needs its vector store");
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, "ISEQIDX1", 8) != 0) throw DataError("not an index file");
    SitqIndex idx;
    const auto dim = io::get_le<std::uint32_t>(in, "dim");
    idx.code_bits_ = io::get_le<std::uint32_t>(in, "code_bits");
    const auto count = io::get_le<std::uint64_t>(in, "count");
    if (dim != store->dim() || count != store->size()) {
      throw DataError("index shape (" + std::to_string(count) + " x " + std::to_string(dim) +
                      ") does not match vector store (" + std::to_string(store->size()) + " x " +
                      std::to_string(store->dim()) + ")");
    }
    if (idx.code_bits_ == 0) throw DataError("index declares zero code bits");
    idx.words_ = (idx.code_bits_ + 63) / 64;
    const std::size_t da = dim + 1, c = idx.code_bits_;
    idx.max_norm_ = io::get_f64(in, "max_norm");
    idx.mean_.resize(da);
    for (auto& x : idx.mean_) x = io::get_f64(in, "mean");
    idx.projection_.resize(da, c);
    for (std::size_t i = 0; i < da; ++i)
      for (std::size_t j = 0; j < c; ++j) idx.projection_(i, j) = io::get_f64(in, "projection");
    idx.rotation_.resize(c, c);
    for (std::size_t i = 0; i < c; ++i)
      for (std::size_t j = 0; j < c; ++j) idx.rotation_(i, j) = io::get_f64(in, "rotation");
    idx.codes_.resize(count * idx.words_);
    for (auto& w : idx.codes_) w = io::get_le<std::uint64_t>(in, "codes");
    for (std::uint64_t i = 0; i < count; ++i) {
      if (io::get_string16(in) != store->id(i)) {
        throw DataError("index id table does not match vector store at row " + std::to_string(i));
      }
    }
    const double err = (idx.rotation_.transpose() * idx.rotation_ - Matrix::Identity(c, c)).cwiseAbs().maxCoeff();
    if (!(err < 1e-4)) throw InvariantError("index rotation is not orthogonal");
    idx.store_ = std::move(store);
    idx.refresh_combined();
    return idx;
  }

  static SitqIndex load(const std::string& path, std::shared_ptr<const VectorStore> store) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open index file: " + path);
    return read(in, std::move(store));
  }

 private:
  void refresh_combined() {
    const std::size_t da = static_cast<std::size_t>(projection_.rows()), c = code_bits_;
    combined_.assign(da * c, 0.0);
    for (std::size_t i = 0; i < da; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < c; ++k) s += projection_(i, k) * rotation_(k, j);
        combined_[i * c + j] = s;
      }
  }

  // Bit j is set when the j-th rotated coordinate of (x - mean) is >= 0.
  void encode_into(std::span<const double> augmented, std::span<std::uint64_t> code) const {
    const std::size_t da = mean_.size(), c = code_bits_;
    std::fill(code.begin(), code.end(), 0);
    std::vector<double> z(c, 0.0);
    for (std::size_t i = 0; i < da; ++i) {
      const double x = augmented[i] - mean_[i];
      if (x == 0.0) continue;
      const double* w = combined_.data() + i * c;
      for (std::size_t j = 0; j < c; ++j) z[j] += x * w[j];
    }
    for (std::size_t j = 0; j < c; ++j) {
      if (z[j] >= 0.0) code[j / 64] |= (std::uint64_t{1} << (j % 64));
    }
  }

  std::shared_ptr<const VectorStore> store_;
  std::size_t code_bits_ = 0;
  std::size_t words_ = 0;
  double max_norm_ = 1.0;
  std::vector<double> mean_;
  Matrix projection_;
  Matrix rotation_;
  std::vector<double> combined_;
  std::vector<std::uint64_t> codes_;
  std::vector<double> objective_;
};

}  // namespace iseeq
