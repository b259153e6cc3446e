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

#ifndef SPKANON_DSP_HPP_
#define SPKANON_DSP_HPP_

#include <complex>
#include <string>
#include <vector>

#include "spkanon/common.hpp"

namespace spkanon::dsp {

struct Waveform {
  std::vector<double> samples;  // nominal range [-1, 1]
  int sample_rate = 16000;
};

// Mel-spectrogram settings. STFT uses a periodic Hann window of length `win`,
// frames zero-padded to `n_fft`, reflect padding of n_fft/2 on both ends,
// magnitude spectrum into HTK-mel triangular filters.
struct MelConfig {
  int n_fft = 1024;  // must be a power of two
  int hop = 160;
  int win = 1024;
  int n_mels = 80;
  double f_min = 0.0;
  double f_max = 8000.0;
};

struct LpcFrame {
  std::vector<double> coeffs;  // predictor a_1..a_p, x[n] ~ sum a_k x[n-k]
  double gain = 0.0;           // final prediction error, >= 0
  int order = 0;
  bool degenerate = false;     // zero-energy input frame
};

struct McAdamsConfig {
  double alpha = 0.8;
  int frame_len = 400;  // 25 ms at 16 kHz
  int hop = 160;        // 10 ms at 16 kHz
  int lpc_order = 20;
};

// PCM 16-bit mono 16 kHz WAV only; anything else is rejected.
Waveform read_wav(const std::string& path);
void write_wav(const std::string& path, const Waveform& w);

// Rows are consecutive windows of frame_len samples taken every hop samples.
// Count = floor((len - frame_len)/hop) + 1 when len >= frame_len, else 0.
Matrix frame_signal(const Waveform& w, int frame_len, int hop);

void validate(const MelConfig& cfg, int sample_rate);

// Number of STFT frames produced for `n_samples` after reflect padding.
std::size_t mel_frame_count(std::size_t n_samples, const MelConfig& cfg);

// n_mels x frames matrix of non-negative filterbank magnitudes.
Matrix mel_spectrogram(const Waveform& w, const MelConfig& cfg);

// Triangular HTK-mel filterbank, n_mels x (n_fft/2 + 1).
Matrix mel_filterbank(const MelConfig& cfg, int sample_rate);

// In-place radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& x);

// Levinson-Durbin on an autocorrelation sequence r[0..order].
LpcFrame levinson(std::span<const double> autocorr, int order);

// Autocorrelation-method LPC of one frame.
LpcFrame lpc_coeffs(std::span<const double> frame, int order);

// Roots of the monic polynomial with the given trailing coefficients:
// z^n + c[0] z^(n-1) + ... + c[n-1], via Durand-Kerner iteration.
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs);

// Poles of the whitening filter A(z) = 1 - sum a_k z^-k.
std::vector<std::complex<double>> lpc_poles(const LpcFrame& lpc);

// McAdams pole-angle warp: theta -> theta^alpha on the positive-angle branch,
// magnitudes kept then clamped to <= 0.998, conjugate pairs preserved
// exactly, real poles untouched.
std::vector<std::complex<double>> mcadams_transform_poles(
    const std::vector<std::complex<double>>& poles, double alpha);

// Predictor coefficients of the all-pole filter with the given poles.
std::vector<double> lpc_from_poles(const std::vector<std::complex<double>>& poles);

// Frame-wise LPC analysis, pole-angle warp, residual resynthesis and
// overlap-add. Output length equals input length; if the warped filters push
// the peak past full scale the output is rescaled to the input peak.
Waveform mcadams_anonymize(const Waveform& w, const McAdamsConfig& cfg);

}  // namespace spkanon::dsp

#endif  // SPKANON_DSP_HPP_
