#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "spkanon/f0.hpp"
#include "test_util.hpp"

using namespace spkanon;
using namespace spkanon::f0;

namespace {

// brute-force NCCF with the same fixed-span definition
std::vector<double> brute_nccf(const std::vector<double>& frame, int max_lag) {
  const int span = static_cast<int>(frame.size()) - max_lag;
  std::vector<double> out(max_lag + 1, 0.0);
  double e0 = 0.0;
  for (int i = 0; i < span; ++i) e0 += frame[i] * frame[i];
  if (e0 <= 0.0) return out;
  for (int lag = 0; lag <= max_lag; ++lag) {
    double cross = 0.0, em = 0.0;
    for (int i = 0; i < span; ++i) {
      cross += frame[i] * frame[i + lag];
      em += frame[i + lag] * frame[i + lag];
    }
    if (em > 0.0) out[lag] = cross / std::sqrt(e0 * em);
  }
  return out;
}

std::size_t last_true(const std::vector<bool>& v) {
  for (std::size_t i = v.size(); i-- > 0;)
    if (v[i]) return i;
  return v.size();
}

}  // namespace

TEST_SUITE_BEGIN("f0");

TEST_CASE("nccf peaks at the period of a periodic frame") {
  const auto w = testutil::make_sine(200.0, 0.05);  // period 80 samples
  std::vector<double> frame(w.samples.begin(), w.samples.begin() + 400);
  const auto corr = nccf(frame, 266);
  CHECK(corr[80] > 0.999);
  for (double v : corr) {
    CHECK(v <= 1.0);
    CHECK(v >= -1.0);
  }
}

TEST_CASE("nccf of a zero frame is all zeros") {
  std::vector<double> frame(400, 0.0);
  for (double v : nccf(frame, 266)) CHECK(v == 0.0);
}

TEST_CASE("nccf of seeded white noise stays below 0.6 off lag zero") {
  const auto w = testutil::make_noise(400, 123);
  const auto corr = nccf(w.samples, 266);
  CHECK(corr[0] == doctest::Approx(1.0));
  double peak = -1.0;
  for (int lag = 40; lag <= 266; ++lag) peak = std::max(peak, corr[lag]);
  CHECK(peak < 0.6);
}

TEST_CASE("nccf matches the brute-force oracle") {
  const auto w = testutil::make_noise(500, 9);
  const auto fast = nccf(w.samples, 200);
  const auto slow = brute_nccf(w.samples, 200);
  REQUIRE(fast.size() == slow.size());
  for (std::size_t i = 0; i < fast.size(); ++i)
    CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
}

TEST_CASE("nccf preconditions") {
  std::vector<double> frame(100, 0.1);
  CHECK_THROWS_AS(nccf(frame, 100), DataError);
  CHECK_THROWS_AS(nccf(frame, 0), DataError);
}

TEST_CASE("220 Hz sine tracks at 220 Hz on interior frames") {
  const auto w = testutil::make_sine(220.0, 1.0);
  const auto track = extract_f0(w, F0Config{});
  REQUIRE(track.f0_hz.size() >= 98);
  for (std::size_t t = 2; t + 2 < track.f0_hz.size(); ++t) {
    CHECK(track.voiced[t]);
    CHECK(std::abs(track.f0_hz[t] - 220.0) <= 3.0);
  }
}

TEST_CASE("silence is fully unvoiced") {
  const auto track = extract_f0(testutil::make_silence(1.0), F0Config{});
  for (std::size_t t = 0; t < track.f0_hz.size(); ++t) {
    CHECK_FALSE(track.voiced[t]);
    CHECK(track.f0_hz[t] == 0.0);
  }
}

TEST_CASE("voiced/unvoiced boundary lands near the signal edit point") {
  auto w = testutil::make_sine(220.0, 1.0);
  std::fill(w.samples.begin() + 8000, w.samples.end(), 0.0);
  const auto track = extract_f0(w, F0Config{});
  // frame 50 is centered on sample 8000
  const auto boundary = last_true(track.voiced);
  CHECK(boundary >= 47);
  CHECK(boundary <= 53);
  for (std::size_t t = 2; t + 1 < boundary; ++t) CHECK(track.voiced[t]);
  for (std::size_t t = boundary + 4; t < track.voiced.size(); ++t)
    CHECK_FALSE(track.voiced[t]);
}

TEST_CASE("frame count keeps the 1/160 ratio within one frame") {
  for (std::size_t len : {16000u, 16001u, 15999u, 8000u, 161u, 1234u}) {
    dsp::Waveform w;
    w.sample_rate = 16000;
    w.samples.assign(len, 0.0);
    w.samples[len / 2] = 0.5;
    const auto track = extract_f0(w, F0Config{});
    const auto expected = static_cast<std::ptrdiff_t>(len / 160);
    const auto got = static_cast<std::ptrdiff_t>(track.f0_hz.size());
    CHECK(std::abs(got - expected) <= 1);
    CHECK(track.hop == 160);
  }
}

TEST_CASE("circularly shifting by one hop shifts the track by one frame") {
  auto w = testutil::make_sine(150.0, 1.0);
  std::fill(w.samples.begin() + 9600, w.samples.end(), 0.0);
  dsp::Waveform shifted = w;
  std::rotate(shifted.samples.begin(), shifted.samples.begin() + 160,
              shifted.samples.end());

  const auto base = extract_f0(w, F0Config{});
  const auto moved = extract_f0(shifted, F0Config{});
  // interior only: away from both signal edges and the voiced boundary
  for (std::size_t t = 3; t + 4 < base.f0_hz.size(); ++t) {
    CHECK(base.voiced[t] == moved.voiced[t - 1]);
    if (base.voiced[t])
      CHECK(base.f0_hz[t] == doctest::Approx(moved.f0_hz[t - 1]).epsilon(1e-6));
  }
}

TEST_CASE("halving the amplitude changes nothing") {
  const auto w = testutil::make_sine(220.0, 0.7);
  dsp::Waveform half = w;
  for (double& s : half.samples) s *= 0.5;
  const auto a = extract_f0(w, F0Config{});
  const auto b = extract_f0(half, F0Config{});
  REQUIRE(a.f0_hz.size() == b.f0_hz.size());
  for (std::size_t t = 0; t < a.f0_hz.size(); ++t) {
    CHECK(a.voiced[t] == b.voiced[t]);
    CHECK(std::abs(a.f0_hz[t] - b.f0_hz[t]) <= 0.1);
  }
}

TEST_CASE("no octave errors on sines across the range") {
  for (double freq : {90.0, 130.0, 180.0, 260.0, 340.0, 390.0}) {
    const auto w = testutil::make_sine(freq, 0.5);
    const auto track = extract_f0(w, F0Config{});
    for (std::size_t t = 2; t + 2 < track.f0_hz.size(); ++t) {
      REQUIRE(track.voiced[t]);
      const double f = track.f0_hz[t];
      CHECK(std::abs(f - 2.0 * freq) > 0.05 * 2.0 * freq);
      CHECK(std::abs(f - 0.5 * freq) > 0.05 * 0.5 * freq);
      CHECK(std::abs(f - freq) < 0.05 * freq);
    }
  }
}

TEST_CASE("extract_f0 validates input") {
  auto w = testutil::make_sine(220.0, 0.2);
  w.sample_rate = 8000;
  CHECK_THROWS_AS(extract_f0(w, F0Config{}), DataError);

  dsp::Waveform empty;
  CHECK_THROWS_AS(extract_f0(empty, F0Config{}), DataError);

  F0Config bad;
  bad.f_min = 500.0;  // above f_max
  CHECK_THROWS_AS(extract_f0(testutil::make_sine(220.0, 0.2), bad), DataError);
}

TEST_CASE("track text io round-trips") {
  const auto w = testutil::make_sine(220.0, 0.3);
  const auto track = extract_f0(w, F0Config{});
  const auto path =
      (std::filesystem::temp_directory_path() / "spkanon_f0_test.txt").string();
  write_f0_track(path, track);
  const auto back = read_f0_track(path);
  REQUIRE(back.f0_hz.size() == track.f0_hz.size());
  for (std::size_t t = 0; t < track.f0_hz.size(); ++t) {
    CHECK(back.voiced[t] == track.voiced[t]);
    CHECK(back.f0_hz[t] == doctest::Approx(track.f0_hz[t]).epsilon(1e-6));
  }
  std::filesystem::remove(path);

  std::ofstream bad(path);
  bad << "0 120.0 1\n2 130.0 1\n";  // skipped index
  bad.close();
  CHECK_THROWS_AS(read_f0_track(path), DataError);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
