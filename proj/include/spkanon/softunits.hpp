// Copyright (c) 2026 The spkanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPKANON_SOFTUNITS_HPP_
#define SPKANON_SOFTUNITS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "spkanon/common.hpp"

namespace spkanon::softunits {

struct KMeansResult {
  Matrix centroids;  // K x F
  double inertia = 0.0;
  int iterations = 0;
};

// Lloyd's algorithm with seeded k-means++ initialization. Terminates at
// max_iters or when the relative inertia change drops below 1e-6. Empty
// clusters are reseeded with the points farthest from their centroids.
KMeansResult kmeans_fit(const Matrix& features, std::size_t k, int max_iters,
                        std::uint64_t seed);

// Index of the nearest centroid per frame (Euclidean, ties to lowest index).
std::vector<std::uint32_t> quantize(const Matrix& features, const Matrix& centroids);

// Unit-distribution head: projection into E dims plus a codebook of K unit
// embeddings scored by temperature-scaled cosine similarity.
struct SoftUnitCodebook {
  Matrix embeddings;  // K x E rows w_i
  Matrix projection;  // F x E
  double temperature = 0.1;

  std::size_t k() const { return embeddings.rows; }
  std::size_t e() const { return embeddings.cols; }
  std::size_t f() const { return projection.rows; }
};

void validate(const SoftUnitCodebook& cb);

// p_i = softmax_i(cos(z, w_i) / tau), stabilized by max subtraction.
std::vector<double> soft_distribution(std::span<const double> z,
                                      const SoftUnitCodebook& cb);

struct CeGradients {
  double loss = 0.0;
  std::vector<double> d_z;  // dL/dz
  Matrix d_w;               // dL/dW, K x E
};

// Cross-entropy -log p_target through the cosine softmax, with analytic
// gradients for both the projected vector and the codebook rows.
CeGradients ce_loss(std::span<const double> z, const SoftUnitCodebook& cb,
                    std::uint32_t target);

struct TrainConfig {
  std::size_t k = 200;
  std::size_t e = 256;
  double temperature = 0.1;
  double lr = 0.05;
  int epochs = 50;
  std::size_t batch_size = 64;  // 0 = full batch
  std::uint64_t seed = 0;
};

struct TrainResult {
  SoftUnitCodebook codebook;
  std::vector<double> loss_history;  // mean CE over the set after each epoch
};

// Mini-batch gradient descent of projection + codebook on mean CE.
// Deterministic given cfg.seed. Projection initialized seeded-uniform in
// [-1/sqrt(F), 1/sqrt(F)]; codebook warm-started from k-means centroids
// pushed through the initial projection.
TrainResult train_soft_head(const Matrix& features,
                            const std::vector<std::uint32_t>& targets,
                            const TrainConfig& cfg);

// T' x K soft distributions (or T' x E raw projections when raw == true).
Matrix extract_content(const Matrix& features, const SoftUnitCodebook& cb,
                       bool raw = false);

// FEAT container: magic "FEAT", u32 version=1, u32 rows, u32 cols,
// row-major f32 little-endian.
Matrix read_feat(const std::string& path);
void write_feat(const std::string& path, const Matrix& m);

// Unit files: one integer per line.
std::vector<std::uint32_t> read_units(const std::string& path);
void write_units(const std::string& path, const std::vector<std::uint32_t>& units);

// Codebook container: magic "SOFT", u32 version=1, u32 K, u32 E, u32 F,
// f32 temperature, projection F x E then embeddings K x E (f32 LE).
SoftUnitCodebook read_codebook(const std::string& path);
void write_codebook(const std::string& path, const SoftUnitCodebook& cb);

}  // namespace spkanon::softunits

#endif  // SPKANON_SOFTUNITS_HPP_
