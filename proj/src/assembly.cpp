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

#include "spkanon/assembly.hpp"

#include <algorithm>
#include <cmath>

namespace spkanon::assembly {

Matrix upsample_frames(const Matrix& seq, std::size_t factor, UpsampleMode mode) {
  require(factor >= 1, "upsample factor must be >= 1");
  require(seq.rows > 0, "upsample_frames: empty input");
  Matrix out(seq.rows * factor, seq.cols);
  if (mode == UpsampleMode::kRepeat) {
    for (std::size_t t = 0; t < out.rows; ++t) {
      const auto src = seq.row(t / factor);
      std::copy(src.begin(), src.end(), out.row(t).begin());
    }
    return out;
  }
  for (std::size_t t = 0; t < out.rows; ++t) {
    const double pos = static_cast<double>(t) / static_cast<double>(factor);
    const std::size_t i0 = static_cast<std::size_t>(pos);
    const std::size_t i1 = std::min(i0 + 1, seq.rows - 1);  // edge replication
    const double w = pos - static_cast<double>(i0);
    const auto a = seq.row(i0);
    const auto b = seq.row(i1);
    auto dst = out.row(t);
    for (std::size_t c = 0; c < seq.cols; ++c)
      dst[c] = (1.0 - w) * a[c] + w * b[c];
  }
  return out;
}

AssembledFrames assemble(const Matrix& content, const f0::F0Track& track,
                         const pool::SpeakerEmbedding& spk,
                         UpsampleMode mode) {
  require(content.rows > 0, "assemble: empty content");
  require(!track.f0_hz.empty(), "assemble: empty F0 track");
  require(track.f0_hz.size() == track.voiced.size(), "assemble: bad F0 track");
  require(!spk.vector.empty(), "assemble: empty speaker embedding");

  const std::size_t t_content = 2 * content.rows;  // 1/320 -> 1/160
  const std::size_t t_f0 = track.f0_hz.size();
  const std::size_t diff = t_content > t_f0 ? t_content - t_f0 : t_f0 - t_content;
  require(diff <= 2, "content/F0 frame counts disagree beyond tolerance: " +
                         std::to_string(t_content) + " vs " + std::to_string(t_f0));

  const Matrix up = upsample_frames(content, 2, mode);
  const std::size_t rows = std::min(t_content, t_f0);
  const std::size_t k = content.cols;
  const std::size_t d = spk.vector.size();

  AssembledFrames out;
  out.content_dim = k;
  out.speaker_dim = d;
  out.frames = Matrix(rows, k + 2 + d);
  for (std::size_t t = 0; t < rows; ++t) {
    auto dst = out.frames.row(t);
    const auto src = up.row(t);
    std::copy(src.begin(), src.end(), dst.begin());
    const bool voiced = track.voiced[t];
    check_invariant((track.f0_hz[t] == 0.0) == !voiced,
                    "assemble: f0/voiced contract violated");
    dst[k] = std::log1p(track.f0_hz[t]);
    dst[k + 1] = voiced ? 1.0 : 0.0;
    std::copy(spk.vector.begin(), spk.vector.end(), dst.begin() + k + 2);
  }
  return out;
}

}  // namespace spkanon::assembly
