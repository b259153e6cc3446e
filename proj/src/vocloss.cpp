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

#include "spkanon/vocloss.hpp"

#include <cmath>

namespace spkanon::vocloss {

double mel_loss(const dsp::Waveform& x, const dsp::Waveform& x_hat,
                const VocLossConfig& cfg) {
  require(x.sample_rate == x_hat.sample_rate, "mel_loss: sample rate mismatch");
  require(x.samples.size() == x_hat.samples.size(),
          "mel_loss: length mismatch: " + std::to_string(x.samples.size()) +
              " vs " + std::to_string(x_hat.samples.size()));
  const Matrix a = dsp::mel_spectrogram(x, cfg.mel);
  const Matrix b = dsp::mel_spectrogram(x_hat, cfg.mel);
  check_invariant(a.rows == b.rows && a.cols == b.cols,
                  "mel_loss: spectrogram shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    acc += std::abs(a.data[i] - b.data[i]);
  return acc / static_cast<double>(a.data.size());
}

double feature_matching_loss(const DiscriminatorFeatures& real,
                             const DiscriminatorFeatures& fake) {
  require(real.size() == fake.size(),
          "feature_matching_loss: sub-discriminator count mismatch");
  require(!real.empty(), "feature_matching_loss: no sub-discriminators");
  double total = 0.0;
  for (std::size_t k = 0; k < real.size(); ++k) {
    const auto& r = real[k].layers;
    const auto& f = fake[k].layers;
    require(r.size() == f.size() && !r.empty(),
            "feature_matching_loss: layer count mismatch in sub-discriminator " +
                std::to_string(k));
    for (std::size_t i = 0; i < r.size(); ++i) {
      require(r[i].size() == f[i].size() && !r[i].empty(),
              "feature_matching_loss: layer " + std::to_string(i) +
                  " shape mismatch in sub-discriminator " + std::to_string(k));
      double l1 = 0.0;
      for (std::size_t j = 0; j < r[i].size(); ++j)
        l1 += std::abs(r[i][j] - f[i][j]);
      total += l1 / static_cast<double>(r[i].size());
    }
  }
  return total;
}

AdversarialLosses adversarial_losses(
    const std::vector<std::vector<double>>& real_scores,
    const std::vector<std::vector<double>>& fake_scores) {
  require(real_scores.size() == fake_scores.size(),
          "adversarial_losses: sub-discriminator count mismatch");
  require(!real_scores.empty(), "adversarial_losses: empty score lists");
  AdversarialLosses out;
  for (std::size_t k = 0; k < real_scores.size(); ++k) {
    const auto& r = real_scores[k];
    const auto& f = fake_scores[k];
    require(!r.empty() && r.size() == f.size(),
            "adversarial_losses: score map mismatch in sub-discriminator " +
                std::to_string(k));
    double g = 0.0, d = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) {
      g += (f[j] - 1.0) * (f[j] - 1.0);
      d += (r[j] - 1.0) * (r[j] - 1.0) + f[j] * f[j];
    }
    out.generator += g / static_cast<double>(f.size());
    out.discriminator += d / static_cast<double>(r.size());
  }
  return out;
}

double generator_loss(const dsp::Waveform& x, const dsp::Waveform& x_hat,
                      const DiscriminatorFeatures& real,
                      const DiscriminatorFeatures& fake,
                      const VocLossConfig& cfg) {
  require(cfg.lambda_fm >= 0.0 && cfg.lambda_mel >= 0.0,
          "loss weights must be >= 0");
  std::vector<std::vector<double>> real_scores, fake_scores;
  real_scores.reserve(real.size());
  fake_scores.reserve(fake.size());
  for (const auto& s : real) real_scores.push_back(s.score);
  for (const auto& s : fake) fake_scores.push_back(s.score);
  const auto adv = adversarial_losses(real_scores, fake_scores);
  const double fm = feature_matching_loss(real, fake);
  const double mel = mel_loss(x, x_hat, cfg);
  return adv.generator + cfg.lambda_fm * fm + cfg.lambda_mel * mel;
}

LinearDiscriminator::LinearDiscriminator(std::size_t input_dim,
                                         std::vector<std::size_t> layer_dims,
                                         std::uint64_t seed)
    : input_dim_(input_dim) {
  require(input_dim >= 1, "discriminator input_dim must be >= 1");
  require(!layer_dims.empty(), "discriminator needs at least one layer");
  Rng rng(seed);
  std::size_t prev = input_dim;
  for (std::size_t dim : layer_dims) {
    require(dim >= 1, "layer dim must be >= 1");
    Matrix w(dim, prev);
    const double scale = 1.0 / std::sqrt(static_cast<double>(prev));
    for (double& v : w.data) v = rng.uniform(-scale, scale);
    weights_.push_back(std::move(w));
    prev = dim;
  }
  score_weights_.resize(prev);
  const double scale = 1.0 / std::sqrt(static_cast<double>(prev));
  for (double& v : score_weights_) v = rng.uniform(-scale, scale);
}

SubDiscriminatorOutput LinearDiscriminator::apply(std::span<const double> x) const {
  require(x.size() == input_dim_, "discriminator input dim mismatch");
  SubDiscriminatorOutput out;
  std::vector<double> h(x.begin(), x.end());
  for (const auto& w : weights_) {
    std::vector<double> next(w.rows, 0.0);
    for (std::size_t r = 0; r < w.rows; ++r) next[r] = dot(w.row(r), h);
    h = std::move(next);
    out.layers.push_back(h);
  }
  out.score.assign(1, dot(score_weights_, h));
  return out;
}

std::vector<double> LinearDiscriminator::adv_fm_gradient(
    std::span<const double> x_real, std::span<const double> x_fake,
    double lambda_fm) const {
  const auto real = apply(x_real);
  const auto fake = apply(x_fake);
  const std::size_t n_layers = weights_.size();

  // g = dL/dh_i(fake), built from the top layer down
  const double s = fake.score[0];
  std::vector<double> g(weights_.back().rows, 0.0);
  for (std::size_t j = 0; j < g.size(); ++j)
    g[j] = 2.0 * (s - 1.0) * score_weights_[j];

  for (std::size_t i = n_layers; i-- > 0;) {
    const auto& r = real.layers[i];
    const auto& f = fake.layers[i];
    const double inv_n = 1.0 / static_cast<double>(f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double diff = f[j] - r[j];
      if (diff != 0.0) g[j] += lambda_fm * inv_n * (diff > 0.0 ? 1.0 : -1.0);
    }
    // push through W_i: g_prev = W_i^T g
    const auto& w = weights_[i];
    std::vector<double> prev(w.cols, 0.0);
    for (std::size_t rr = 0; rr < w.rows; ++rr) {
      const auto wrow = w.row(rr);
      for (std::size_t c = 0; c < w.cols; ++c) prev[c] += wrow[c] * g[rr];
    }
    g = std::move(prev);
  }
  return g;
}

std::vector<LinearDiscriminator> make_discriminator_bank(
    std::size_t input_dim, std::size_t k_d, std::size_t layers,
    std::uint64_t seed) {
  require(k_d >= 1 && layers >= 1, "need k_d >= 1 and layers >= 1");
  std::vector<LinearDiscriminator> bank;
  bank.reserve(k_d);
  for (std::size_t k = 0; k < k_d; ++k) {
    // shrinking layer widths, floor 4
    std::vector<std::size_t> dims;
    std::size_t dim = std::max<std::size_t>(4, input_dim / 2);
    for (std::size_t i = 0; i < layers; ++i) {
      dims.push_back(std::max<std::size_t>(4, dim));
      dim /= 2;
    }
    bank.emplace_back(input_dim, dims, derive_seed(seed, "discriminator", k));
  }
  return bank;
}

DiscriminatorFeatures apply_bank(const std::vector<LinearDiscriminator>& bank,
                                 std::span<const double> x) {
  DiscriminatorFeatures out;
  out.reserve(bank.size());
  for (const auto& d : bank) out.push_back(d.apply(x));
  return out;
}

}  // namespace spkanon::vocloss
