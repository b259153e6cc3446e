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

#include "spkanon/pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spkanon/binio.hpp"

namespace spkanon::pool {

Gender parse_gender(const std::string& s) {
  if (s == "female" || s == "f" || s == "F" || s == "0") return Gender::kFemale;
  if (s == "male" || s == "m" || s == "M" || s == "1") return Gender::kMale;
  throw DataError("unknown gender label: " + s);
}

std::string gender_name(Gender g) {
  return g == Gender::kFemale ? "female" : "male";
}

void EmbeddingPool::add(SpeakerEmbedding e) {
  require(!e.vector.empty(), "embedding vector must be non-empty");
  require(all_finite(e.vector), "embedding has non-finite entries: " + e.speaker_id);
  require(l2_norm(e.vector) > 0.0, "embedding is all-zero: " + e.speaker_id);
  if (entries.empty()) {
    dim = e.vector.size();
  } else {
    require(e.vector.size() == dim,
            "embedding dim mismatch for " + e.speaker_id + ": expected " +
                std::to_string(dim) + ", got " + std::to_string(e.vector.size()));
  }
  entries.push_back(std::move(e));
}

std::vector<std::size_t> EmbeddingPool::indices_of(Gender g) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].gender == g) out.push_back(i);
  }
  return out;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "cosine_distance: dim mismatch");
  require(!a.empty(), "cosine_distance: empty vectors");
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  require(na > 0.0 && nb > 0.0, "cosine_distance: zero vector");
  const double sim = dot(a, b) / (na * nb);
  return 1.0 - std::clamp(sim, -1.0, 1.0);
}

std::vector<std::size_t> select_far_candidates(const EmbeddingPool& pool,
                                               const SpeakerEmbedding& src,
                                               const AnonymizationParams& params) {
  require(params.n_far >= 1, "n_far must be >= 1");
  require(params.n_avg >= 1 && params.n_avg <= params.n_far,
          "need 1 <= n_avg <= n_far");
  require(!src.vector.empty() && src.vector.size() == pool.dim,
          "source embedding dim does not match pool");

  const auto same_gender = pool.indices_of(src.gender);
  require(same_gender.size() >= params.n_far,
          "pool has only " + std::to_string(same_gender.size()) + " " +
              gender_name(src.gender) + " entries, need " +
              std::to_string(params.n_far));

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(same_gender.size());
  for (std::size_t idx : same_gender)
    scored.emplace_back(cosine_distance(src.vector, pool.entries[idx].vector), idx);
  // farthest first; ties by ascending pool index
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  std::vector<std::size_t> out(params.n_far);
  for (std::size_t i = 0; i < params.n_far; ++i) out[i] = scored[i].second;
  return out;
}

PseudoResult generate_pseudo_detailed(const EmbeddingPool& pool,
                                      const SpeakerEmbedding& src,
                                      const AnonymizationParams& params) {
  auto candidates = select_far_candidates(pool, src, params);

  // partial Fisher-Yates: uniform sample of n_avg without replacement
  Rng rng(params.seed);
  for (std::size_t i = 0; i < params.n_avg; ++i) {
    const std::size_t j = i + rng.below(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(params.n_avg);

  PseudoResult result;
  result.sampled = candidates;
  result.pre_norm_mean.assign(pool.dim, 0.0);
  for (std::size_t idx : candidates) {
    const auto& v = pool.entries[idx].vector;
    for (std::size_t d = 0; d < pool.dim; ++d) result.pre_norm_mean[d] += v[d];
  }
  for (double& x : result.pre_norm_mean) x /= static_cast<double>(params.n_avg);

  const double norm = l2_norm(result.pre_norm_mean);
  require(norm > 0.0, "pseudo embedding collapsed to zero; degenerate pool");
  result.embedding.vector.resize(pool.dim);
  for (std::size_t d = 0; d < pool.dim; ++d)
    result.embedding.vector[d] = result.pre_norm_mean[d] / norm;
  result.embedding.gender = src.gender;
  result.embedding.speaker_id =
      "pseudo:" + src.speaker_id + ":" + std::to_string(params.seed);
  return result;
}

SpeakerEmbedding generate_pseudo_embedding(const EmbeddingPool& pool,
                                           const SpeakerEmbedding& src,
                                           const AnonymizationParams& params) {
  return generate_pseudo_detailed(pool, src, params).embedding;
}

EmbeddingPool read_embedding_store(const std::string& path) {
  binio::Reader in(path);
  in.expect_magic("EMBD");
  const std::uint32_t version = in.u32();
  require(version == 1, "unsupported EMBD version " + std::to_string(version) +
                            " in " + path);
  const std::uint32_t count = in.u32();
  const std::uint32_t dim = in.u32();
  require(dim > 0, "EMBD store has zero dim: " + path);
  EmbeddingPool pool;
  for (std::uint32_t i = 0; i < count; ++i) {
    SpeakerEmbedding e;
    const std::uint16_t id_len = in.u16();
    e.speaker_id = in.bytes(id_len);
    const std::uint8_t g = in.u8();
    require(g <= 1, "bad gender byte in " + path);
    e.gender = static_cast<Gender>(g);
    e.vector.resize(dim);
    for (std::uint32_t d = 0; d < dim; ++d) e.vector[d] = in.f32();
    pool.add(std::move(e));
  }
  in.expect_eof();
  return pool;
}

void write_embedding_store(const std::string& path, const EmbeddingPool& pool) {
  binio::Writer out;
  out.magic("EMBD");
  out.u32(1);
  out.u32(static_cast<std::uint32_t>(pool.entries.size()));
  out.u32(static_cast<std::uint32_t>(pool.dim));
  for (const auto& e : pool.entries) {
    require(e.speaker_id.size() <= 0xffff, "speaker id too long: " + e.speaker_id);
    out.u16(static_cast<std::uint16_t>(e.speaker_id.size()));
    out.bytes(e.speaker_id);
    out.u8(static_cast<std::uint8_t>(e.gender));
    for (double v : e.vector) out.f32(static_cast<float>(v));
  }
  out.save(path);
}

EmbeddingPool read_embedding_csv(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open CSV: " + path);
  EmbeddingPool pool;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    require(fields.size() >= 3, "CSV line " + std::to_string(line_no) +
                                    " needs id,gender,values: " + path);
    SpeakerEmbedding e;
    e.speaker_id = fields[0];
    e.gender = parse_gender(fields[1]);
    for (std::size_t i = 2; i < fields.size(); ++i) {
      try {
        e.vector.push_back(std::stod(fields[i]));
      } catch (const std::exception&) {
        throw DataError("bad number on CSV line " + std::to_string(line_no) +
                        ": " + fields[i]);
      }
    }
    pool.add(std::move(e));
  }
  return pool;
}

void write_embedding_csv(const std::string& path, const EmbeddingPool& pool) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  for (const auto& e : pool.entries) {
    out << e.speaker_id << ',' << gender_name(e.gender);
    char buf[32];
    for (double v : e.vector) {
      std::snprintf(buf, sizeof(buf), "%.9g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
  require(out.good(), "short write: " + path);
}

}  // namespace spkanon::pool
