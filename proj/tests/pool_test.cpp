#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "spkanon/pool.hpp"

using namespace spkanon;
using namespace spkanon::pool;

namespace {

SpeakerEmbedding make(const std::vector<double>& v, const std::string& id,
                      Gender g = Gender::kFemale) {
  SpeakerEmbedding e;
  e.vector = v;
  e.speaker_id = id;
  e.gender = g;
  return e;
}

// random unit vector
std::vector<double> random_unit(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.gaussian();
  const double n = l2_norm(v);
  for (double& x : v) x /= n;
  return v;
}

EmbeddingPool random_pool(std::size_t count, std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingPool p;
  for (std::size_t i = 0; i < count; ++i)
    p.add(make(random_unit(rng, dim), "spk" + std::to_string(i),
               i % 2 == 0 ? Gender::kFemale : Gender::kMale));
  return p;
}

// brute-force far-candidate selection straight from the definition
std::vector<std::size_t> brute_far(const EmbeddingPool& pool,
                                   const SpeakerEmbedding& src, std::size_t n_far) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < pool.entries.size(); ++i) {
    if (pool.entries[i].gender != src.gender) continue;
    scored.emplace_back(cosine_distance(src.vector, pool.entries[i].vector), i);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_far; ++i) out.push_back(scored[i].second);
  return out;
}

// Exact 2-D hull membership for three points: solve the barycentric system
// and require non-negative weights that sum to one.
bool inside_triangle_2d(const std::vector<std::vector<double>>& pts,
                        const std::vector<double>& q) {
  REQUIRE(pts.size() == 3);
  const auto& a = pts[0];
  const auto& b = pts[1];
  const auto& c = pts[2];
  const double det =
      (b[1] - c[1]) * (a[0] - c[0]) + (c[0] - b[0]) * (a[1] - c[1]);
  if (std::abs(det) < 1e-12) {
    // collinear sample; the equal-weight mean is the only point we must admit
    const std::vector<double> mean{(a[0] + b[0] + c[0]) / 3.0,
                                   (a[1] + b[1] + c[1]) / 3.0};
    return std::abs(mean[0] - q[0]) < 1e-9 && std::abs(mean[1] - q[1]) < 1e-9;
  }
  const double w0 =
      ((b[1] - c[1]) * (q[0] - c[0]) + (c[0] - b[0]) * (q[1] - c[1])) / det;
  const double w1 =
      ((c[1] - a[1]) * (q[0] - c[0]) + (a[0] - c[0]) * (q[1] - c[1])) / det;
  const double w2 = 1.0 - w0 - w1;
  return w0 >= -1e-9 && w1 >= -1e-9 && w2 >= -1e-9;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE_BEGIN("pool");

TEST_CASE("cosine distance basics") {
  CHECK(cosine_distance(std::vector<double>{2.0, 1.0},
                        std::vector<double>{2.0, 1.0}) == doctest::Approx(0.0));
  CHECK(cosine_distance(std::vector<double>{1.0, 0.0},
                        std::vector<double>{0.0, 1.0}) == doctest::Approx(1.0));
  CHECK(cosine_distance(std::vector<double>{1.0, 0.0},
                        std::vector<double>{-1.0, 0.0}) == doctest::Approx(2.0));

  CHECK_THROWS_AS(cosine_distance(std::vector<double>{1.0, 0.0},
                                  std::vector<double>{0.0, 0.0}),
                  DataError);
  CHECK_THROWS_AS(cosine_distance(std::vector<double>{1.0},
                                  std::vector<double>{1.0, 0.0}),
                  DataError);
}

TEST_CASE("pool rejects malformed embeddings") {
  EmbeddingPool p;
  CHECK_THROWS_AS(p.add(make({}, "empty")), DataError);
  CHECK_THROWS_AS(p.add(make({0.0, 0.0}, "zero")), DataError);
  p.add(make({1.0, 0.0}, "a"));
  CHECK_THROWS_AS(p.add(make({1.0, 0.0, 0.0}, "b")), DataError);
  CHECK(p.dim == 2);
}

TEST_CASE("far candidates follow distance order") {
  // src (1,0); distances via angle: 0.2, 1.4, 0.9
  EmbeddingPool p;
  auto at_distance = [](double d) {
    const double c = 1.0 - d;
    return std::vector<double>{c, std::sqrt(1.0 - c * c)};
  };
  p.add(make(at_distance(0.2), "near"));
  p.add(make(at_distance(1.4), "farthest"));
  p.add(make(at_distance(0.9), "middle"));
  const auto src = make({1.0, 0.0}, "src");

  AnonymizationParams params;
  params.n_far = 2;
  params.n_avg = 1;
  const auto idx = select_far_candidates(p, src, params);
  REQUIRE(idx.size() == 2);
  CHECK(idx[0] == 1);
  CHECK(idx[1] == 2);

  params.n_far = 3;
  const auto all = select_far_candidates(p, src, params);
  CHECK(all == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("ties break by ascending pool index") {
  EmbeddingPool p;
  p.add(make({0.0, 1.0}, "dup0"));
  p.add(make({0.0, 1.0}, "dup1"));
  p.add(make({0.0, 1.0}, "dup2"));
  const auto src = make({1.0, 0.0}, "src");
  AnonymizationParams params;
  params.n_far = 3;
  params.n_avg = 1;
  CHECK(select_far_candidates(p, src, params) ==
        std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("insufficient same-gender candidates is an error") {
  EmbeddingPool p;
  p.add(make({1.0, 0.0}, "m0", Gender::kMale));
  const auto src = make({1.0, 0.0}, "src", Gender::kFemale);
  AnonymizationParams params;
  params.n_far = 1;
  params.n_avg = 1;
  CHECK_THROWS_WITH_AS(select_far_candidates(p, src, params),
                       doctest::Contains("female"), DataError);
}

TEST_CASE("far selection matches brute force on small pools") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = random_pool(50, 8, seed);
    Rng rng(seed + 100);
    auto src = make(random_unit(rng, 8), "src",
                    seed % 2 == 0 ? Gender::kFemale : Gender::kMale);
    AnonymizationParams params;
    params.n_far = 10;
    params.n_avg = 5;
    CHECK(select_far_candidates(p, src, params) == brute_far(p, src, 10));
  }
}

TEST_CASE("single-candidate pseudo is the normalized candidate") {
  EmbeddingPool p;
  p.add(make({3.0, 4.0}, "only"));
  const auto src = make({1.0, 0.0}, "src");
  AnonymizationParams params;
  params.n_far = 1;
  params.n_avg = 1;
  params.seed = 9;
  const auto pseudo = generate_pseudo_embedding(p, src, params);
  CHECK(pseudo.vector[0] == doctest::Approx(0.6));
  CHECK(pseudo.vector[1] == doctest::Approx(0.8));
  CHECK(pseudo.speaker_id == "pseudo:src:9");
  CHECK(pseudo.gender == Gender::kFemale);
}

TEST_CASE("two-candidate pseudo averages then renormalizes") {
  EmbeddingPool p;
  p.add(make({1.0, 0.0}, "a"));
  p.add(make({0.0, 1.0}, "b"));
  const auto src = make({-1.0, -1.0}, "src");
  AnonymizationParams params;
  params.n_far = 2;
  params.n_avg = 2;
  const auto pseudo = generate_pseudo_embedding(p, src, params);
  CHECK(pseudo.vector[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(pseudo.vector[1] == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("identical seeds give identical pseudos, fresh seeds differ") {
  const auto p = random_pool(40, 16, 5);
  Rng rng(77);
  const auto src = make(random_unit(rng, 16), "src");
  AnonymizationParams params;
  params.n_far = 12;
  params.n_avg = 4;
  params.seed = 123;
  const auto a = generate_pseudo_embedding(p, src, params);
  const auto b = generate_pseudo_embedding(p, src, params);
  CHECK(a.vector == b.vector);
  params.seed = 124;
  const auto c = generate_pseudo_embedding(p, src, params);
  CHECK(a.vector != c.vector);
}

TEST_CASE("sampled candidates never leave the far set") {
  const auto p = random_pool(60, 12, 21);
  Rng rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const auto src = make(random_unit(rng, 12), "src",
                          trial % 2 == 0 ? Gender::kFemale : Gender::kMale);
    AnonymizationParams params;
    params.n_far = 15;
    params.n_avg = 6;
    params.seed = trial;
    const auto detailed = generate_pseudo_detailed(p, src, params);
    const auto far = brute_far(p, src, params.n_far);
    const double cutoff =
        cosine_distance(src.vector, p.entries[far.back()].vector);
    const std::set<std::size_t> far_set(far.begin(), far.end());
    CHECK(detailed.sampled.size() == params.n_avg);
    for (std::size_t idx : detailed.sampled) {
      CHECK(far_set.count(idx) == 1);
      CHECK(cosine_distance(src.vector, p.entries[idx].vector) >=
            cutoff - 1e-12);
    }
    CHECK(detailed.embedding.gender == src.gender);
    CHECK(l2_norm(detailed.embedding.vector) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pre-normalization mean sits in the sampled convex hull (2-D)") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    EmbeddingPool p;
    for (int i = 0; i < 8; ++i) {
      const double ang = rng.uniform(0.0, 2.0 * 3.141592653589793);
      p.add(make({std::cos(ang), std::sin(ang)}, "p" + std::to_string(i)));
    }
    const auto src = make({1.0, 0.0}, "src");
    AnonymizationParams params;
    params.n_far = 6;
    params.n_avg = 3;
    params.seed = trial;
    const auto detailed = generate_pseudo_detailed(p, src, params);

    // the mean must equal the arithmetic mean of the sampled vectors
    std::vector<double> mean(2, 0.0);
    std::vector<std::vector<double>> sampled_points;
    for (std::size_t idx : detailed.sampled) {
      sampled_points.push_back(p.entries[idx].vector);
      for (int d = 0; d < 2; ++d) mean[d] += p.entries[idx].vector[d];
    }
    for (double& x : mean) x /= static_cast<double>(params.n_avg);
    CHECK(std::abs(mean[0] - detailed.pre_norm_mean[0]) < 1e-12);
    CHECK(std::abs(mean[1] - detailed.pre_norm_mean[1]) < 1e-12);
    CHECK(inside_triangle_2d(sampled_points, detailed.pre_norm_mean));
  }
}

TEST_CASE("embedding store round-trips") {
  const auto p = random_pool(7, 5, 3);
  const auto path = temp_path("spkanon_pool_test.embd");
  write_embedding_store(path, p);
  const auto back = read_embedding_store(path);
  REQUIRE(back.entries.size() == p.entries.size());
  CHECK(back.dim == p.dim);
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    CHECK(back.entries[i].speaker_id == p.entries[i].speaker_id);
    CHECK(back.entries[i].gender == p.entries[i].gender);
    for (std::size_t d = 0; d < p.dim; ++d)
      CHECK(back.entries[i].vector[d] ==
            doctest::Approx(p.entries[i].vector[d]).epsilon(1e-6));
  }
  std::filesystem::remove(path);
}

TEST_CASE("EMBD wire format matches the documented byte layout") {
  // one record, dim 2, id "ab", male, vector (1.0f, -2.0f), built by hand
  std::string bytes;
  bytes += "EMBD";
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  u32(1);  // version
  u32(1);  // count
  u32(2);  // dim
  bytes.push_back(2);  // u16 id length, little-endian
  bytes.push_back(0);
  bytes += "ab";
  bytes.push_back(1);  // gender male
  const float values[2] = {1.0f, -2.0f};
  for (float f : values) {
    std::uint32_t b;
    std::memcpy(&b, &f, 4);
    u32(b);
  }

  const auto path = temp_path("spkanon_pool_golden.embd");
  {
    std::ofstream out(path, std::ios::binary);
    out << bytes;
  }
  const auto p = read_embedding_store(path);
  REQUIRE(p.entries.size() == 1);
  CHECK(p.entries[0].speaker_id == "ab");
  CHECK(p.entries[0].gender == Gender::kMale);
  CHECK(p.entries[0].vector[0] == 1.0);
  CHECK(p.entries[0].vector[1] == -2.0);

  // and the writer emits exactly these bytes back
  write_embedding_store(path, p);
  std::ifstream in(path, std::ios::binary);
  const std::string back((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  CHECK(back == bytes);
  std::filesystem::remove(path);
}

TEST_CASE("store reader rejects corruption") {
  const auto path = temp_path("spkanon_pool_bad.embd");
  {
    std::ofstream f(path, std::ios::binary);
    f << "XXXX";
  }
  CHECK_THROWS_WITH_AS(read_embedding_store(path), doctest::Contains("magic"),
                       DataError);
  {
    std::ofstream f(path, std::ios::binary);
    f << "EMBD";
    const std::uint32_t version = 9;
    f.write(reinterpret_cast<const char*>(&version), 4);
  }
  CHECK_THROWS_WITH_AS(read_embedding_store(path), doctest::Contains("version"),
                       DataError);
  {
    const auto p = random_pool(3, 4, 1);
    write_embedding_store(path, p);
    std::error_code ec;
    std::filesystem::resize_file(path, 20, ec);
  }
  CHECK_THROWS_AS(read_embedding_store(path), DataError);
  std::filesystem::remove(path);
}

TEST_CASE("csv import/export round-trips") {
  const auto p = random_pool(4, 3, 8);
  const auto path = temp_path("spkanon_pool_test.csv");
  write_embedding_csv(path, p);
  const auto back = read_embedding_csv(path);
  REQUIRE(back.entries.size() == p.entries.size());
  for (std::size_t i = 0; i < p.entries.size(); ++i) {
    CHECK(back.entries[i].speaker_id == p.entries[i].speaker_id);
    CHECK(back.entries[i].gender == p.entries[i].gender);
    for (std::size_t d = 0; d < p.dim; ++d)
      CHECK(back.entries[i].vector[d] ==
            doctest::Approx(p.entries[i].vector[d]).epsilon(1e-7));
  }
  std::filesystem::remove(path);

  std::ofstream bad(path);
  bad << "id_only\n";
  bad.close();
  CHECK_THROWS_AS(read_embedding_csv(path), DataError);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
