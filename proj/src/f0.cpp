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

#include "spkanon/f0.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace spkanon::f0 {

namespace {

// Bias against long lags so the fundamental wins over sub-octave peaks of
// equal correlation.
constexpr double kLagBias = 0.05;
// Cost of flipping between the voiced and unvoiced states.
constexpr double kSwitchCost = 0.2;

struct Candidate {
  double lag = 0.0;  // fractional samples
  double value = 0.0;
};

// Parabolic refinement of a peak at integer lag p.
double refine_peak(const std::vector<double>& v, int p) {
  if (p <= 0 || p + 1 >= static_cast<int>(v.size())) return p;
  const double a = v[p - 1], b = v[p], c = v[p + 1];
  const double denom = a - 2.0 * b + c;
  if (std::abs(denom) < 1e-18) return p;
  double delta = 0.5 * (a - c) / denom;
  delta = std::clamp(delta, -0.5, 0.5);
  return p + delta;
}

}  // namespace

std::vector<double> nccf(std::span<const double> frame, int max_lag) {
  require(max_lag >= 1, "max_lag must be >= 1");
  require(frame.size() > static_cast<std::size_t>(max_lag),
          "frame must be longer than max_lag");
  const int span = static_cast<int>(frame.size()) - max_lag;

  std::vector<double> out(max_lag + 1, 0.0);
  double e0 = 0.0;
  for (int i = 0; i < span; ++i) e0 += frame[i] * frame[i];
  if (e0 <= 0.0) return out;

  // running window energy of the shifted segment
  double em = e0;
  for (int lag = 0; lag <= max_lag; ++lag) {
    if (lag > 0) {
      em -= frame[lag - 1] * frame[lag - 1];
      em += frame[lag + span - 1] * frame[lag + span - 1];
    }
    if (em <= 0.0) continue;
    double cross = 0.0;
    for (int i = 0; i < span; ++i) cross += frame[i] * frame[i + lag];
    out[lag] = cross / std::sqrt(e0 * em);
    out[lag] = std::clamp(out[lag], -1.0, 1.0);
  }
  return out;
}

F0Track extract_f0(const dsp::Waveform& w, const F0Config& cfg) {
  require(w.sample_rate == 16000, "extract_f0 requires 16 kHz input");
  require(!w.samples.empty(), "extract_f0: empty waveform");
  require(cfg.f_min > 0.0 && cfg.f_min < cfg.f_max &&
              cfg.f_max <= w.sample_rate / 2.0,
          "f0 config requires 0 < f_min < f_max <= sample_rate/2");
  require(cfg.nccf_threshold > 0.0 && cfg.nccf_threshold < 1.0,
          "nccf_threshold must be in (0, 1)");
  require(cfg.dp_transition_cost >= 0.0, "dp_transition_cost must be >= 0");
  require(all_finite(w.samples), "extract_f0: non-finite samples");

  const double fs = w.sample_rate;
  const int min_lag = std::max(1, static_cast<int>(std::floor(fs / cfg.f_max)));
  const int max_lag = static_cast<int>(std::floor(fs / cfg.f_min));
  require(cfg.frame_len > max_lag,
          "frame_len must exceed the maximum lag fs/f_min");

  const std::size_t n = w.samples.size();
  // frames centered at t*hop; ceil(n/hop) of them keeps T''/T within one
  // frame of 1/hop
  const std::size_t n_frames = (n - 1) / cfg.hop + 1;

  // candidate generation
  std::vector<std::vector<Candidate>> cands(n_frames);
  std::vector<double> frame(cfg.frame_len);
  const int half = cfg.frame_len / 2;
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::ptrdiff_t center = static_cast<std::ptrdiff_t>(t) * cfg.hop;
    for (int i = 0; i < cfg.frame_len; ++i) {
      const std::ptrdiff_t idx = center - half + i;
      frame[i] = (idx >= 0 && idx < static_cast<std::ptrdiff_t>(n))
                     ? w.samples[static_cast<std::size_t>(idx)]
                     : 0.0;
    }
    const auto corr = nccf(frame, max_lag);
    for (int lag = std::max(min_lag, 1); lag <= max_lag; ++lag) {
      const bool is_peak = corr[lag] > cfg.nccf_threshold &&
                           corr[lag] >= corr[lag - 1] &&
                           (lag == max_lag || corr[lag] >= corr[lag + 1]);
      if (!is_peak) continue;
      Candidate c;
      c.lag = refine_peak(corr, lag);
      c.value = corr[lag];
      cands[t].push_back(c);
    }
  }

  // Viterbi over per-frame states: one unvoiced state (index 0) plus one
  // state per candidate.
  const double kInf = std::numeric_limits<double>::infinity();
  const double unvoiced_cost = 1.0 - cfg.nccf_threshold;
  std::vector<std::vector<double>> cost(n_frames);
  std::vector<std::vector<int>> back(n_frames);
  auto local_cost = [&](std::size_t t, std::size_t s) {
    if (s == 0) return unvoiced_cost;
    const Candidate& c = cands[t][s - 1];
    return (1.0 - c.value) + kLagBias * c.lag / max_lag;
  };
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::size_t n_states = cands[t].size() + 1;
    cost[t].assign(n_states, kInf);
    back[t].assign(n_states, 0);
    for (std::size_t s = 0; s < n_states; ++s) {
      if (t == 0) {
        cost[t][s] = local_cost(t, s);
        continue;
      }
      double best = kInf;
      int best_prev = 0;
      for (std::size_t sp = 0; sp < cost[t - 1].size(); ++sp) {
        double trans;
        if (s == 0 && sp == 0) {
          trans = 0.0;
        } else if (s == 0 || sp == 0) {
          trans = kSwitchCost;
        } else {
          const double f_now = fs / cands[t][s - 1].lag;
          const double f_prev = fs / cands[t - 1][sp - 1].lag;
          trans = cfg.dp_transition_cost * std::abs(std::log(f_now / f_prev));
        }
        const double total = cost[t - 1][sp] + trans;
        if (total < best) {
          best = total;
          best_prev = static_cast<int>(sp);
        }
      }
      cost[t][s] = best + local_cost(t, s);
      back[t][s] = best_prev;
    }
  }

  F0Track track;
  track.hop = cfg.hop;
  track.f0_hz.assign(n_frames, 0.0);
  track.voiced.assign(n_frames, false);

  std::size_t state = 0;
  {
    double best = kInf;
    const auto& last = cost[n_frames - 1];
    for (std::size_t s = 0; s < last.size(); ++s) {
      if (last[s] < best) {
        best = last[s];
        state = s;
      }
    }
  }
  for (std::size_t t = n_frames; t-- > 0;) {
    if (state > 0) {
      double f = fs / cands[t][state - 1].lag;
      f = std::clamp(f, cfg.f_min, cfg.f_max);
      track.f0_hz[t] = f;
      track.voiced[t] = true;
    }
    if (t > 0) state = static_cast<std::size_t>(back[t][state]);
  }
  return track;
}

void write_f0_track(const std::string& path, const F0Track& track) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  for (std::size_t t = 0; t < track.f0_hz.size(); ++t) {
    char line[64];
    std::snprintf(line, sizeof(line), "%zu %.6f %d\n", t, track.f0_hz[t],
                  track.voiced[t] ? 1 : 0);
    out << line;
  }
  require(out.good(), "short write: " + path);
}

F0Track read_f0_track(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open F0 track: " + path);
  F0Track track;
  std::string line;
  std::size_t expect = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::size_t idx;
    double f0;
    int voiced;
    require(static_cast<bool>(ss >> idx >> f0 >> voiced),
            "malformed F0 track line in " + path + ": " + line);
    require(idx == expect, "non-consecutive frame index in " + path);
    require(voiced == 0 || voiced == 1, "voiced flag must be 0/1 in " + path);
    require((f0 == 0.0) == (voiced == 0),
            "f0/voiced mismatch in " + path + ": " + line);
    track.f0_hz.push_back(f0);
    track.voiced.push_back(voiced == 1);
    ++expect;
  }
  return track;
}

}  // namespace spkanon::f0
