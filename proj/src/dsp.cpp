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

#include "spkanon/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace spkanon::dsp {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16le(std::string& out, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// Periodic Hann, w[n] = 0.5 - 0.5 cos(2 pi n / N).
std::vector<double> hann_periodic(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / n);
  return w;
}

// MATLAB-style hanning without the zero endpoints; keeps every sample of an
// overlap-add frame inside the synthesis support.
std::vector<double> hann_nonzero(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * (i + 1) / (n + 1));
  return w;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

}  // namespace

Waveform read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open WAV file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  require(bytes.size() >= 44, "WAV file too short: " + path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  require(std::memcmp(p, "RIFF", 4) == 0 && std::memcmp(p + 8, "WAVE", 4) == 0,
          "not a RIFF/WAVE file: " + path);

  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data_ptr = nullptr;
  std::uint32_t data_len = 0;
  while (pos + 8 <= bytes.size()) {
    const char* id = bytes.data() + pos;
    const std::uint32_t chunk_len = read_u32le(p + pos + 4);
    pos += 8;
    if (pos + chunk_len > bytes.size())
      throw DataError("truncated WAV chunk in " + path);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      require(chunk_len >= 16, "malformed fmt chunk in " + path);
      format = read_u16le(p + pos);
      channels = read_u16le(p + pos + 2);
      rate = read_u32le(p + pos + 4);
      bits = read_u16le(p + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      data_ptr = p + pos;
      data_len = chunk_len;
    }
    pos += chunk_len + (chunk_len & 1);  // chunks are word-aligned
  }
  require(have_fmt && data_ptr != nullptr, "WAV missing fmt/data chunk: " + path);
  require(format == 1, "WAV must be PCM (format tag 1), got tag " +
                           std::to_string(format) + ": " + path);
  require(bits == 16, "WAV must be 16-bit, got " + std::to_string(bits) + ": " + path);
  require(channels == 1,
          "WAV must be mono, got " + std::to_string(channels) + " channels: " + path);
  require(rate == 16000,
          "WAV must be 16 kHz, got " + std::to_string(rate) + " Hz: " + path);

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  const std::size_t n = data_len / 2;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t s =
        static_cast<std::int16_t>(read_u16le(data_ptr + 2 * i));
    w.samples[i] = s / 32768.0;
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  require(w.sample_rate == 16000, "write_wav supports 16 kHz only");
  require(all_finite(w.samples), "write_wav: non-finite samples");
  std::string out;
  const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
  out.reserve(44 + data_len);
  out.append("RIFF");
  put_u32le(out, 36 + data_len);
  out.append("WAVE");
  out.append("fmt ");
  put_u32le(out, 16);
  put_u16le(out, 1);   // PCM
  put_u16le(out, 1);   // mono
  put_u32le(out, 16000);
  put_u32le(out, 16000 * 2);
  put_u16le(out, 2);
  put_u16le(out, 16);
  out.append("data");
  put_u32le(out, data_len);
  for (double x : w.samples) {
    const long v = std::lrint(std::clamp(x, -1.0, 1.0) * 32768.0);
    const auto s = static_cast<std::int16_t>(std::clamp<long>(v, -32768, 32767));
    put_u16le(out, static_cast<std::uint16_t>(s));
  }
  std::ofstream f(path, std::ios::binary);
  require(f.good(), "cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(f.good(), "short write: " + path);
}

Matrix frame_signal(const Waveform& w, int frame_len, int hop) {
  require(frame_len >= 1, "frame_len must be >= 1");
  require(hop >= 1, "hop must be >= 1");
  const std::size_t len = w.samples.size();
  if (len < static_cast<std::size_t>(frame_len)) return Matrix(0, frame_len);
  const std::size_t count = (len - frame_len) / hop + 1;
  Matrix frames(count, frame_len);
  for (std::size_t f = 0; f < count; ++f) {
    const double* src = w.samples.data() + f * hop;
    std::copy(src, src + frame_len, frames.row(f).begin());
  }
  return frames;
}

void validate(const MelConfig& cfg, int sample_rate) {
  require(sample_rate > 0, "sample_rate must be positive");
  require(cfg.hop > 0 && cfg.hop <= cfg.win && cfg.win <= cfg.n_fft,
          "mel config requires 0 < hop <= win <= n_fft");
  require(is_power_of_two(cfg.n_fft), "n_fft must be a power of two");
  require(cfg.n_mels > 0, "n_mels must be positive");
  require(cfg.f_min >= 0.0 && cfg.f_min < cfg.f_max &&
              cfg.f_max <= sample_rate / 2.0,
          "mel config requires 0 <= f_min < f_max <= sample_rate/2");
}

std::size_t mel_frame_count(std::size_t n_samples, const MelConfig& cfg) {
  const std::size_t padded = n_samples + static_cast<std::size_t>(cfg.n_fft);
  if (padded < static_cast<std::size_t>(cfg.win)) return 0;
  return (padded - cfg.win) / cfg.hop + 1;
}

void fft(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  check_invariant(n > 0 && (n & (n - 1)) == 0, "fft size must be a power of two");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = x[i + k];
        const std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

Matrix mel_filterbank(const MelConfig& cfg, int sample_rate) {
  validate(cfg, sample_rate);
  const int n_bins = cfg.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.f_min);
  const double mel_hi = hz_to_mel(cfg.f_max);
  std::vector<double> edges(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));

  Matrix fb(cfg.n_mels, n_bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.n_fft;
      if (f >= left && f <= center && center > left) {
        fb.at(m, k) = (f - left) / (center - left);
      } else if (f > center && f <= right && right > center) {
        fb.at(m, k) = (right - f) / (right - center);
      }
    }
  }
  return fb;
}

Matrix mel_spectrogram(const Waveform& w, const MelConfig& cfg) {
  require(!w.samples.empty(), "mel_spectrogram: empty waveform");
  validate(cfg, w.sample_rate);
  require(all_finite(w.samples), "mel_spectrogram: non-finite samples");

  // reflect-pad n_fft/2 on both sides
  const int pad = cfg.n_fft / 2;
  const std::size_t n = w.samples.size();
  std::vector<double> x(n + 2 * pad);
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(i) - pad;
    // reflect without repeating the edge sample
    while (idx < 0 || idx >= static_cast<std::ptrdiff_t>(n)) {
      if (idx < 0) idx = -idx;
      if (idx >= static_cast<std::ptrdiff_t>(n))
        idx = 2 * static_cast<std::ptrdiff_t>(n) - 2 - idx;
      if (n == 1) idx = 0;
    }
    x[i] = w.samples[static_cast<std::size_t>(idx)];
  }

  const std::size_t frames = (x.size() - cfg.win) / cfg.hop + 1;
  check_invariant(frames == mel_frame_count(n, cfg), "mel frame count mismatch");
  const auto window = hann_periodic(cfg.win);
  const auto fb = mel_filterbank(cfg, w.sample_rate);
  const int n_bins = cfg.n_fft / 2 + 1;

  Matrix mel(cfg.n_mels, frames);
  std::vector<std::complex<double>> buf(cfg.n_fft);
  std::vector<double> mag(n_bins);
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    const double* src = x.data() + f * cfg.hop;
    for (int i = 0; i < cfg.win; ++i) buf[i] = src[i] * window[i];
    fft(buf);
    for (int k = 0; k < n_bins; ++k) mag[k] = std::abs(buf[k]);
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      const auto frow = fb.row(m);
      for (int k = 0; k < n_bins; ++k) acc += frow[k] * mag[k];
      mel.at(m, f) = acc;
    }
  }
  return mel;
}

LpcFrame levinson(std::span<const double> autocorr, int order) {
  require(order >= 1, "LPC order must be >= 1");
  require(autocorr.size() >= static_cast<std::size_t>(order) + 1,
          "autocorrelation too short for requested order");
  LpcFrame out;
  out.order = order;
  out.coeffs.assign(order, 0.0);

  const double r0 = autocorr[0];
  if (r0 <= 0.0 || !std::isfinite(r0)) {
    out.gain = 0.0;
    out.degenerate = true;
    return out;
  }

  std::vector<double> a(order + 1, 0.0);  // a[0] unused
  double err = r0;
  for (int m = 1; m <= order; ++m) {
    double acc = autocorr[m];
    for (int k = 1; k < m; ++k) acc -= a[k] * autocorr[m - k];
    if (err <= 0.0) {  // numerically singular; freeze here
      err = 0.0;
      break;
    }
    const double reflection = acc / err;
    std::vector<double> prev(a.begin(), a.begin() + m);
    a[m] = reflection;
    for (int k = 1; k < m; ++k) a[k] = prev[k] - reflection * prev[m - k];
    err *= (1.0 - reflection * reflection);
    if (err < 0.0) err = 0.0;
  }
  for (int k = 1; k <= order; ++k) out.coeffs[k - 1] = a[k];
  out.gain = err;
  return out;
}

LpcFrame lpc_coeffs(std::span<const double> frame, int order) {
  require(order >= 1, "LPC order must be >= 1");
  require(frame.size() > static_cast<std::size_t>(order),
          "frame must be longer than the LPC order");
  std::vector<double> r(order + 1, 0.0);
  const std::size_t n = frame.size();
  for (int lag = 0; lag <= order; ++lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += frame[i] * frame[i + lag];
    r[lag] = acc;
  }
  return levinson(r, order);
}

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
  const int degree = static_cast<int>(coeffs.size());
  std::vector<std::complex<double>> roots;
  if (degree == 0) return roots;
  if (degree == 1) {
    roots.push_back(std::complex<double>(-coeffs[0], 0.0));
    return roots;
  }

  auto eval = [&](std::complex<double> z) {
    std::complex<double> p(1.0, 0.0);
    for (int i = 0; i < degree; ++i) p = p * z + coeffs[i];
    return p;
  };

  // Durand-Kerner with starting points spread on a circle whose radius is the
  // Cauchy coefficient bound.
  double bound = 0.0;
  for (double c : coeffs) bound = std::max(bound, std::abs(c));
  const double radius = std::min(1.0 + bound, 1e6);
  roots.resize(degree);
  for (int i = 0; i < degree; ++i) {
    const double ang = 2.0 * kPi * i / degree + 0.35;
    roots[i] = radius * std::complex<double>(std::cos(ang), std::sin(ang));
  }

  constexpr int kMaxIters = 500;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    double max_step = 0.0;
    for (int i = 0; i < degree; ++i) {
      std::complex<double> denom(1.0, 0.0);
      for (int j = 0; j < degree; ++j) {
        if (j != i) denom *= (roots[i] - roots[j]);
      }
      if (std::abs(denom) < 1e-300) continue;
      const std::complex<double> step = eval(roots[i]) / denom;
      roots[i] -= step;
      max_step = std::max(max_step, std::abs(step));
    }
    if (max_step < 1e-13) break;
  }

  for (const auto& r : roots) {
    // backward-error style residual: |p(r)| against the absolute-value
    // evaluation of the same polynomial at |r|
    const double az = std::abs(r);
    double scale = 1.0;
    for (int i = 0; i < degree; ++i) scale = scale * az + std::abs(coeffs[i]);
    check_invariant(std::abs(eval(r)) <= 1e-8 * std::max(1.0, scale),
                    "polynomial_roots: residual tolerance not met");
  }
  return roots;
}

std::vector<std::complex<double>> lpc_poles(const LpcFrame& lpc) {
  // A(z) = 1 - sum a_k z^-k  =>  z^p - a_1 z^(p-1) - ... - a_p
  std::vector<double> monic(lpc.coeffs.size());
  for (std::size_t i = 0; i < lpc.coeffs.size(); ++i) monic[i] = -lpc.coeffs[i];
  return polynomial_roots(monic);
}

std::vector<std::complex<double>> mcadams_transform_poles(
    const std::vector<std::complex<double>>& poles, double alpha) {
  require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive");
  constexpr double kImagTol = 1e-6;
  constexpr double kMaxMag = 0.998;

  // Root finding leaves noise on the imaginary parts, so classify with a
  // tolerance and re-balance: complex poles of a real polynomial must pair up.
  std::vector<std::complex<double>> pos, neg, real_poles;
  for (const auto& p : poles) {
    if (p.imag() > kImagTol) {
      pos.push_back(p);
    } else if (p.imag() < -kImagTol) {
      neg.push_back(p);
    } else {
      real_poles.emplace_back(p.real(), 0.0);
    }
  }
  auto demote_smallest = [](std::vector<std::complex<double>>& side,
                            std::vector<std::complex<double>>& reals) {
    auto it = std::min_element(side.begin(), side.end(),
                               [](const auto& a, const auto& b) {
                                 return std::abs(a.imag()) < std::abs(b.imag());
                               });
    reals.emplace_back(it->real(), 0.0);
    side.erase(it);
  };
  while (pos.size() > neg.size()) demote_smallest(pos, real_poles);
  while (neg.size() > pos.size()) demote_smallest(neg, real_poles);

  std::vector<std::complex<double>> out;
  out.reserve(poles.size());
  for (const auto& p : real_poles)
    out.emplace_back(std::clamp(p.real(), -kMaxMag, kMaxMag), 0.0);
  for (const auto& p : pos) {
    const double theta = std::arg(p);  // in (0, pi)
    const double mag = std::min(std::abs(p), kMaxMag);
    const double warped = std::min(std::pow(theta, alpha), kPi);
    const std::complex<double> q = std::polar(mag, warped);
    out.push_back(q);
    out.push_back(std::conj(q));  // exact conjugate partner
  }
  return out;
}

std::vector<double> lpc_from_poles(const std::vector<std::complex<double>>& poles) {
  // expand prod (z - p_i) and return predictor coeffs a_k = -c_k
  std::vector<std::complex<double>> c(1, std::complex<double>(1.0, 0.0));
  for (const auto& p : poles) {
    c.push_back(std::complex<double>(0.0, 0.0));
    for (std::size_t k = c.size() - 1; k >= 1; --k) c[k] -= p * c[k - 1];
  }
  std::vector<double> a(c.size() - 1);
  for (std::size_t k = 1; k < c.size(); ++k) a[k - 1] = -c[k].real();
  return a;
}

Waveform mcadams_anonymize(const Waveform& w, const McAdamsConfig& cfg) {
  require(cfg.alpha > 0.0 && std::isfinite(cfg.alpha), "alpha must be positive");
  require(cfg.frame_len > cfg.lpc_order && cfg.lpc_order >= 1,
          "frame_len must exceed lpc_order >= 1");
  require(cfg.hop >= 1 && cfg.hop <= cfg.frame_len, "need 0 < hop <= frame_len");
  require(all_finite(w.samples), "mcadams_anonymize: non-finite samples");

  const std::size_t n = w.samples.size();
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(n, 0.0);
  if (n == 0) return out;

  // zero-pad the tail so every input sample is covered by a full frame
  std::vector<double> x(w.samples);
  x.resize(n + cfg.frame_len, 0.0);
  const std::size_t n_frames = (x.size() - cfg.frame_len) / cfg.hop + 1;

  const auto window = hann_nonzero(cfg.frame_len);
  std::vector<double> acc(x.size(), 0.0);
  std::vector<double> den(x.size(), 0.0);
  std::vector<double> frame(cfg.frame_len);
  std::vector<double> residual(cfg.frame_len);
  std::vector<double> rec(cfg.frame_len);

  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t start = f * cfg.hop;
    for (int i = 0; i < cfg.frame_len; ++i) frame[i] = x[start + i] * window[i];

    const LpcFrame lpc = lpc_coeffs(frame, cfg.lpc_order);
    if (lpc.degenerate) {
      // silent frame passes through untouched
      for (int i = 0; i < cfg.frame_len; ++i) {
        acc[start + i] += frame[i];
        den[start + i] += window[i];
      }
      continue;
    }

    const auto warped = mcadams_transform_poles(lpc_poles(lpc), cfg.alpha);
    const auto a_new = lpc_from_poles(warped);

    // residual e[n] = frame[n] - sum a_k frame[n-k]
    for (int i = 0; i < cfg.frame_len; ++i) {
      double acc_r = frame[i];
      for (int k = 1; k <= cfg.lpc_order && k <= i; ++k)
        acc_r -= lpc.coeffs[k - 1] * frame[i - k];
      residual[i] = acc_r;
    }
    // resynthesis through the warped all-pole filter
    for (int i = 0; i < cfg.frame_len; ++i) {
      double acc_s = residual[i];
      for (int k = 1; k <= cfg.lpc_order && k <= i; ++k)
        acc_s += a_new[k - 1] * rec[i - k];
      rec[i] = acc_s;
    }
    for (int i = 0; i < cfg.frame_len; ++i) {
      acc[start + i] += rec[i];
      den[start + i] += window[i];
    }
  }

  constexpr double kDenEps = 1e-12;
  for (std::size_t i = 0; i < n; ++i)
    out.samples[i] = den[i] > kDenEps ? acc[i] / den[i] : w.samples[i];

  // strong warps can grow resonance gains past full scale; rescale to the
  // input peak so the result stays representable without clipping
  double in_peak = 0.0, out_peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    in_peak = std::max(in_peak, std::abs(w.samples[i]));
    out_peak = std::max(out_peak, std::abs(out.samples[i]));
  }
  if (out_peak > 1.0 && out_peak > in_peak) {
    const double scale = (in_peak > 0.0 ? in_peak : 1.0) / out_peak;
    for (double& s : out.samples) s *= scale;
  }
  return out;
}

}  // namespace spkanon::dsp
