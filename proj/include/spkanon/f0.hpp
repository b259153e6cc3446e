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

#ifndef SPKANON_F0_HPP_
#define SPKANON_F0_HPP_

#include <string>
#include <vector>

#include "spkanon/dsp.hpp"

namespace spkanon::f0 {

// Per-frame pitch track at one frame per `hop` samples (100 Hz at 16 kHz).
// f0_hz[t] == 0 exactly when voiced[t] == false.
struct F0Track {
  std::vector<double> f0_hz;
  std::vector<bool> voiced;
  int hop = 160;
};

struct F0Config {
  double f_min = 60.0;
  double f_max = 400.0;
  int frame_len = 400;
  int hop = 160;
  double nccf_threshold = 0.3;
  double dp_transition_cost = 0.4;  // scales |log(f_t / f_{t-1})|
};

// Normalized cross-correlation for lags 0..max_lag (RAPT-style fixed
// correlation span of frame_len - max_lag samples). Values lie in [-1, 1];
// a zero-energy frame yields all zeros.
std::vector<double> nccf(std::span<const double> frame, int max_lag);

// NCCF candidate peaks + Viterbi smoothing over voiced/unvoiced states.
F0Track extract_f0(const dsp::Waveform& w, const F0Config& cfg);

// Text track format: one line per frame, "frame_index f0_hz voiced_flag".
void write_f0_track(const std::string& path, const F0Track& track);
F0Track read_f0_track(const std::string& path);

}  // namespace spkanon::f0

#endif  // SPKANON_F0_HPP_
