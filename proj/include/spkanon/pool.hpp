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

#ifndef SPKANON_POOL_HPP_
#define SPKANON_POOL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "spkanon/common.hpp"

namespace spkanon::pool {

enum class Gender : std::uint8_t { kFemale = 0, kMale = 1 };

Gender parse_gender(const std::string& s);
std::string gender_name(Gender g);

struct SpeakerEmbedding {
  std::vector<double> vector;
  std::string speaker_id;
  Gender gender = Gender::kFemale;
};

// Immutable after load; speaker ids may repeat (multiple utterances per
// speaker), all vectors share one dimension.
struct EmbeddingPool {
  std::vector<SpeakerEmbedding> entries;
  std::size_t dim = 0;

  void add(SpeakerEmbedding e);
  std::vector<std::size_t> indices_of(Gender g) const;
};

// B1 selected far candidates by PLDA distance; this artifact implements the
// cosine variant only and keeps the extension point explicit.
enum class Distance : std::uint8_t { kCosine = 0 };

struct AnonymizationParams {
  std::size_t n_far = 200;
  std::size_t n_avg = 100;
  Distance distance = Distance::kCosine;
  std::uint64_t seed = 0;
};

// 1 - cos(a, b), in [0, 2].
double cosine_distance(std::span<const double> a, std::span<const double> b);

// Indices of the n_far same-gender pool entries farthest from src by cosine
// distance, sorted descending; ties broken by ascending pool index.
std::vector<std::size_t> select_far_candidates(const EmbeddingPool& pool,
                                               const SpeakerEmbedding& src,
                                               const AnonymizationParams& params);

// Pseudo embedding plus the provenance a test or audit needs.
struct PseudoResult {
  SpeakerEmbedding embedding;           // unit-norm mean, id "pseudo:<src>:<seed>"
  std::vector<std::size_t> sampled;     // pool indices that were averaged
  std::vector<double> pre_norm_mean;    // mean before renormalization
};

PseudoResult generate_pseudo_detailed(const EmbeddingPool& pool,
                                      const SpeakerEmbedding& src,
                                      const AnonymizationParams& params);

SpeakerEmbedding generate_pseudo_embedding(const EmbeddingPool& pool,
                                           const SpeakerEmbedding& src,
                                           const AnonymizationParams& params);

// Binary store: magic "EMBD", u32 version=1, u32 count, u32 dim, then per
// record u16 id byte-length, UTF-8 id, u8 gender (0 female / 1 male),
// dim x f32 little-endian.
EmbeddingPool read_embedding_store(const std::string& path);
void write_embedding_store(const std::string& path, const EmbeddingPool& pool);

// CSV rows: id,gender,v0,...,vD-1
EmbeddingPool read_embedding_csv(const std::string& path);
void write_embedding_csv(const std::string& path, const EmbeddingPool& pool);

}  // namespace spkanon::pool

#endif  // SPKANON_POOL_HPP_
