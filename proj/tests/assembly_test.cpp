#include <cmath>

#include "doctest.h"
#include "spkanon/assembly.hpp"

using namespace spkanon;
using namespace spkanon::assembly;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  return m;
}

f0::F0Track make_track(std::size_t frames, double f0 = 150.0) {
  f0::F0Track t;
  t.f0_hz.assign(frames, f0);
  t.voiced.assign(frames, f0 > 0.0);
  return t;
}

pool::SpeakerEmbedding make_spk(const std::vector<double>& v) {
  pool::SpeakerEmbedding e;
  e.vector = v;
  e.speaker_id = "spk";
  return e;
}

}  // namespace

TEST_SUITE_BEGIN("assembly");

TEST_CASE("repeat upsampling duplicates rows in order") {
  const auto up = upsample_frames(from_rows({{1.0, 2.0}, {3.0, 4.0}}), 2,
                                  UpsampleMode::kRepeat);
  REQUIRE(up.rows == 4);
  CHECK(up.at(0, 0) == 1.0);
  CHECK(up.at(1, 0) == 1.0);
  CHECK(up.at(2, 1) == 4.0);
  CHECK(up.at(3, 1) == 4.0);
}

TEST_CASE("factor one is the identity") {
  const auto src = from_rows({{1.0}, {2.0}, {3.0}});
  for (auto mode : {UpsampleMode::kRepeat, UpsampleMode::kLinear}) {
    const auto up = upsample_frames(src, 1, mode);
    CHECK(up.data == src.data);
  }
}

TEST_CASE("linear upsampling interpolates with edge replication") {
  const auto up =
      upsample_frames(from_rows({{0.0}, {2.0}}), 2, UpsampleMode::kLinear);
  REQUIRE(up.rows == 4);
  CHECK(up.at(0, 0) == doctest::Approx(0.0));
  CHECK(up.at(1, 0) == doctest::Approx(1.0));
  CHECK(up.at(2, 0) == doctest::Approx(2.0));
  CHECK(up.at(3, 0) == doctest::Approx(2.0));
}

TEST_CASE("upsample rejects bad input") {
  CHECK_THROWS_AS(upsample_frames(from_rows({{1.0}}), 0, UpsampleMode::kRepeat),
                  DataError);
  CHECK_THROWS_AS(upsample_frames(Matrix(), 2, UpsampleMode::kRepeat), DataError);
}

TEST_CASE("assemble stitches the three streams at the F0 rate") {
  const std::size_t t_content = 50, k = 4, d = 3;
  Matrix content(t_content, k);
  for (std::size_t i = 0; i < content.data.size(); ++i)
    content.data[i] = static_cast<double>(i);
  const auto track = make_track(100, 200.0);
  const auto spk = make_spk({0.1, 0.2, 0.3});

  const auto out = assemble(content, track, spk);
  CHECK(out.frames.rows == 100);
  CHECK(out.frames.cols == k + 2 + d);
  CHECK(out.content_dim == k);
  CHECK(out.speaker_dim == d);

  for (std::size_t t = 0; t < out.frames.rows; ++t) {
    // content rows repeat in pairs
    for (std::size_t c = 0; c < k; ++c)
      CHECK(out.frames.at(t, c) == content.at(t / 2, c));
    CHECK(out.frames.at(t, k) == doctest::Approx(std::log1p(200.0)));
    CHECK(out.frames.at(t, k + 1) == 1.0);
    CHECK(out.frames.at(t, k + 2) == 0.1);
    CHECK(out.frames.at(t, k + 4) == 0.3);
  }
}

TEST_CASE("unvoiced frames carry a zero F0 block") {
  Matrix content(2, 2, 1.0);
  f0::F0Track track;
  track.f0_hz = {120.0, 0.0, 130.0, 0.0};
  track.voiced = {true, false, true, false};
  const auto out = assemble(content, track, make_spk({1.0}));
  CHECK(out.frames.at(1, 2) == 0.0);
  CHECK(out.frames.at(1, 3) == 0.0);
  CHECK(out.frames.at(3, 2) == 0.0);
  CHECK(out.frames.at(3, 3) == 0.0);
  CHECK(out.frames.at(0, 2) == doctest::Approx(std::log1p(120.0)));
  CHECK(out.frames.at(0, 3) == 1.0);
}

TEST_CASE("row count is the shorter stream and tolerance is enforced") {
  Matrix content(50, 3, 0.5);
  CHECK(assemble(content, make_track(99), make_spk({1.0})).frames.rows == 99);
  CHECK(assemble(content, make_track(101), make_spk({1.0})).frames.rows == 100);
  CHECK(assemble(content, make_track(102), make_spk({1.0})).frames.rows == 100);
  CHECK_THROWS_AS(assemble(content, make_track(103), make_spk({1.0})), DataError);
  CHECK_THROWS_AS(assemble(content, make_track(90), make_spk({1.0})), DataError);
}

TEST_CASE("swapping the speaker changes only the speaker block") {
  Matrix content(10, 5);
  Rng rng(8);
  for (double& v : content.data) v = rng.gaussian();
  auto track = make_track(20, 110.0);
  track.voiced[3] = false;
  track.f0_hz[3] = 0.0;

  const auto a = assemble(content, track, make_spk({1.0, 0.0, 0.0}));
  const auto b = assemble(content, track, make_spk({0.0, 0.7, 0.7}));
  REQUIRE(a.frames.rows == b.frames.rows);
  const std::size_t k = 5;
  for (std::size_t t = 0; t < a.frames.rows; ++t) {
    for (std::size_t c = 0; c < k + 2; ++c)
      CHECK(a.frames.at(t, c) == b.frames.at(t, c));
    bool differs = false;
    for (std::size_t c = k + 2; c < a.frames.cols; ++c)
      differs = differs || (a.frames.at(t, c) != b.frames.at(t, c));
    CHECK(differs);
  }
}

TEST_SUITE_END();
