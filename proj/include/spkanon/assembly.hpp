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

#ifndef SPKANON_ASSEMBLY_HPP_
#define SPKANON_ASSEMBLY_HPP_

#include "spkanon/common.hpp"
#include "spkanon/f0.hpp"
#include "spkanon/pool.hpp"

namespace spkanon::assembly {

enum class UpsampleMode { kRepeat, kLinear };

// repeat: duplicate each row `factor` times. linear: interpolate between
// consecutive rows with edge replication past the last row.
Matrix upsample_frames(const Matrix& seq, std::size_t factor, UpsampleMode mode);

// Frame layout: [content K | log1p(f0), voiced | speaker D]. Content frames
// arrive at half the F0 rate and are upsampled x2; both streams are truncated
// to the shorter one. Unvoiced frames carry a (0, 0) F0 block.
struct AssembledFrames {
  Matrix frames;
  std::size_t content_dim = 0;
  std::size_t speaker_dim = 0;
};

AssembledFrames assemble(const Matrix& content, const f0::F0Track& track,
                         const pool::SpeakerEmbedding& spk,
                         UpsampleMode mode = UpsampleMode::kRepeat);

}  // namespace spkanon::assembly

#endif  // SPKANON_ASSEMBLY_HPP_
