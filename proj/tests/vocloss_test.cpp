#include <cmath>

#include "doctest.h"
#include "spkanon/vocloss.hpp"
#include "test_util.hpp"

using namespace spkanon;
using namespace spkanon::vocloss;

namespace {

VocLossConfig small_cfg() {
  VocLossConfig cfg;
  cfg.mel.n_fft = 512;
  cfg.mel.win = 400;
  cfg.mel.hop = 160;
  cfg.mel.n_mels = 64;
  return cfg;
}

DiscriminatorFeatures single(double score,
                             std::vector<std::vector<double>> layers) {
  DiscriminatorFeatures f(1);
  f[0].score = {score};
  f[0].layers = std::move(layers);
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("vocloss");

TEST_CASE("config defaults carry the published loss weights") {
  const VocLossConfig cfg;
  CHECK(cfg.lambda_fm == 2.0);
  CHECK(cfg.lambda_mel == 45.0);
}

TEST_CASE("mel loss of a signal with itself is zero") {
  const auto x = testutil::make_sine(440.0, 0.2);
  CHECK(mel_loss(x, x, small_cfg()) == 0.0);
}

TEST_CASE("mel loss is symmetric") {
  const auto a = testutil::make_sine(440.0, 0.2);
  const auto b = testutil::make_noise(a.samples.size(), 3);
  const auto cfg = small_cfg();
  CHECK(mel_loss(a, b, cfg) == doctest::Approx(mel_loss(b, a, cfg)).epsilon(1e-15));
}

TEST_CASE("mel loss against the reference implementation") {
  const auto cfg = small_cfg();
  const auto x = testutil::make_sine(440.0, 0.15);
  auto half = x;
  for (double& s : half.samples) s *= 0.5;

  const auto ref_a = testutil::ref_mel_spectrogram(x, cfg.mel);
  const auto ref_b = testutil::ref_mel_spectrogram(half, cfg.mel);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < ref_a.size(); ++m) {
    for (std::size_t f = 0; f < ref_a[m].size(); ++f) {
      acc += std::abs(ref_a[m][f] - ref_b[m][f]);
      ++count;
    }
  }
  const double expected = acc / static_cast<double>(count);
  CHECK(mel_loss(x, half, cfg) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("mel loss rejects length mismatches") {
  const auto a = testutil::make_sine(440.0, 0.2);
  const auto b = testutil::make_sine(440.0, 0.25);
  CHECK_THROWS_AS(mel_loss(a, b, small_cfg()), DataError);
}

TEST_CASE("feature matching loss worked examples") {
  CHECK(feature_matching_loss(single(0.0, {{1.0, 2.0}}),
                              single(0.0, {{2.0, 4.0}})) ==
        doctest::Approx(1.5).epsilon(1e-12));

  CHECK(feature_matching_loss(single(0.0, {{1.0}, {0.0, 0.0}}),
                              single(0.0, {{2.0}, {1.0, 1.0}})) ==
        doctest::Approx(2.0).epsilon(1e-12));

  const auto same = single(0.3, {{0.5, -0.5}, {1.0}});
  CHECK(feature_matching_loss(same, same) == 0.0);

  CHECK_THROWS_AS(feature_matching_loss(single(0.0, {{1.0, 2.0}}),
                                        single(0.0, {{1.0}})),
                  DataError);
}

TEST_CASE("adversarial loss worked examples") {
  // D(x)=1, D(x_hat)=0 for every k
  const auto zero =
      adversarial_losses({{1.0}, {1.0}, {1.0}}, {{0.0}, {0.0}, {0.0}});
  CHECK(zero.discriminator == doctest::Approx(0.0));

  const auto gen_zero = adversarial_losses({{0.2}}, {{1.0}});
  CHECK(gen_zero.generator == doctest::Approx(0.0));

  const auto half = adversarial_losses({{0.8}}, {{0.5}});
  CHECK(half.generator == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(half.discriminator == doctest::Approx(0.29).epsilon(1e-12));

  CHECK_THROWS_AS(adversarial_losses({}, {}), DataError);
  CHECK_THROWS_AS(adversarial_losses({{1.0}}, {{1.0, 0.5}}), DataError);
}

TEST_CASE("generator loss vanishes on the identity fixture") {
  const auto x = testutil::make_sine(330.0, 0.1);
  const auto feats = single(1.0, {{0.4, 0.2}, {0.9}});
  CHECK(generator_loss(x, x, feats, feats, small_cfg()) ==
        doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("zero weights reduce the composite to the adversarial part") {
  auto cfg = small_cfg();
  cfg.lambda_fm = 0.0;
  cfg.lambda_mel = 0.0;
  const auto x = testutil::make_sine(330.0, 0.1);
  const auto fake_wave = testutil::make_noise(x.samples.size(), 2);
  const auto real = single(0.9, {{1.0, 1.0}});
  const auto fake = single(0.4, {{0.0, 2.0}});
  CHECK(generator_loss(x, fake_wave, real, fake, cfg) ==
        doctest::Approx((0.4 - 1.0) * (0.4 - 1.0)).epsilon(1e-12));
}

TEST_CASE("composite equals the hand-computed fixture sum") {
  // two sub-discriminators, hand-written arithmetic
  DiscriminatorFeatures real(2), fake(2);
  real[0].score = {0.9};
  fake[0].score = {0.3};
  real[0].layers = {{1.0, -1.0}, {2.0}};
  fake[0].layers = {{0.5, -2.0}, {2.5}};
  real[1].score = {1.1};
  fake[1].score = {0.8};
  real[1].layers = {{0.0, 0.0, 3.0}};
  fake[1].layers = {{1.0, -1.0, 3.0}};

  auto cfg = small_cfg();
  const auto x = testutil::make_sine(330.0, 0.1);
  auto x_hat = x;
  for (double& s : x_hat.samples) s *= 0.25;

  // adversarial generator: (0.3-1)^2 + (0.8-1)^2
  const double adv = 0.49 + 0.04;
  // FM: k=0: (|1-0.5| + |-1+2|)/2 + |2-2.5|/1 = 0.75 + 0.5; k=1: (1+1+0)/3
  const double fm = 0.75 + 0.5 + 2.0 / 3.0;
  const double mel = mel_loss(x, x_hat, cfg);
  const double expected = adv + cfg.lambda_fm * fm + cfg.lambda_mel * mel;
  CHECK(generator_loss(x, x_hat, real, fake, cfg) ==
        doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("losses are non-negative on random fixtures") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    DiscriminatorFeatures real(3), fake(3);
    for (int k = 0; k < 3; ++k) {
      real[k].score = {rng.gaussian()};
      fake[k].score = {rng.gaussian()};
      real[k].layers = {{rng.gaussian(), rng.gaussian()}, {rng.gaussian()}};
      fake[k].layers = {{rng.gaussian(), rng.gaussian()}, {rng.gaussian()}};
    }
    std::vector<std::vector<double>> rs, fs;
    for (const auto& s : real) rs.push_back(s.score);
    for (const auto& s : fake) fs.push_back(s.score);
    const auto adv = adversarial_losses(rs, fs);
    CHECK(adv.generator >= 0.0);
    CHECK(adv.discriminator >= 0.0);
    CHECK(feature_matching_loss(real, fake) >= 0.0);
  }
}

TEST_CASE("generator loss is affine in the lambdas") {
  const auto x = testutil::make_sine(330.0, 0.1);
  auto x_hat = x;
  for (double& s : x_hat.samples) s *= 0.5;
  const auto real = single(0.9, {{1.0, 2.0}, {0.5}});
  const auto fake = single(0.2, {{0.9, 2.2}, {0.1}});

  auto at = [&](double lfm, double lmel) {
    auto cfg = small_cfg();
    cfg.lambda_fm = lfm;
    cfg.lambda_mel = lmel;
    return generator_loss(x, x_hat, real, fake, cfg);
  };
  const double base = at(0.0, 0.0);
  const double fm_coeff = at(1.0, 0.0) - base;
  const double mel_coeff = at(0.0, 1.0) - base;
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{
           {2.0, 45.0}, {0.5, 3.0}, {7.0, 0.25}}) {
    CHECK(at(a, b) ==
          doctest::Approx(base + a * fm_coeff + b * mel_coeff).epsilon(1e-9));
  }
}

TEST_CASE("linear discriminators are deterministic per seed") {
  const auto a = LinearDiscriminator(16, {8, 4}, 99);
  const auto b = LinearDiscriminator(16, {8, 4}, 99);
  const auto c = LinearDiscriminator(16, {8, 4}, 100);
  std::vector<double> x(16, 0.5);
  CHECK(a.apply(x).score[0] == b.apply(x).score[0]);
  CHECK(a.apply(x).score[0] != c.apply(x).score[0]);
  CHECK(a.apply(x).layers.size() == 2);
  CHECK(a.apply(x).layers[0].size() == 8);
}

TEST_CASE("analytic adv+fm gradient matches finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const std::size_t dim = 12;
    const LinearDiscriminator disc(dim, {10, 6}, seed * 31);
    std::vector<double> x_real(dim), x_fake(dim);
    for (double& v : x_real) v = rng.gaussian();
    for (double& v : x_fake) v = rng.gaussian();
    const double lambda_fm = 2.0;

    auto loss = [&](const std::vector<double>& xf) {
      const auto rf = disc.apply(x_real);
      const auto ff = disc.apply(xf);
      const double adv = (ff.score[0] - 1.0) * (ff.score[0] - 1.0);
      return adv +
             lambda_fm * feature_matching_loss({rf}, {ff});
    };

    const auto grad = disc.adv_fm_gradient(x_real, x_fake, lambda_fm);
    const double h = 1e-6;
    for (std::size_t d = 0; d < dim; ++d) {
      auto plus = x_fake, minus = x_fake;
      plus[d] += h;
      minus[d] -= h;
      const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
      CHECK(std::abs(grad[d] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_SUITE_END();
