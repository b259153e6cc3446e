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

#ifndef SPKANON_VOCLOSS_HPP_
#define SPKANON_VOCLOSS_HPP_

#include <cstdint>
#include <vector>

#include "spkanon/dsp.hpp"

namespace spkanon::vocloss {

// Output of one sub-discriminator: its score map plus every intermediate
// layer feature map.
struct SubDiscriminatorOutput {
  std::vector<double> score;               // usually one element
  std::vector<std::vector<double>> layers; // feature maps D^i, i = 1..L
};

// Per sub-discriminator k = 1..K_d.
using DiscriminatorFeatures = std::vector<SubDiscriminatorOutput>;

// HiFi-GAN trains with the least-squares adversarial objective; the single
// member keeps that choice visible in the config.
enum class AdversarialForm : std::uint8_t { kLeastSquares = 0 };

struct VocLossConfig {
  double lambda_fm = 2.0;
  double lambda_mel = 45.0;
  AdversarialForm adversarial_form = AdversarialForm::kLeastSquares;
  dsp::MelConfig mel;
};

// Mean absolute mel-magnitude difference over all bins and frames.
double mel_loss(const dsp::Waveform& x, const dsp::Waveform& x_hat,
                const VocLossConfig& cfg);

// sum_k sum_i |D_k^i(x) - D_k^i(x_hat)|_1 / N_i
double feature_matching_loss(const DiscriminatorFeatures& real,
                             const DiscriminatorFeatures& fake);

struct AdversarialLosses {
  double generator = 0.0;      // sum_k mean[(D_k(x_hat) - 1)^2]
  double discriminator = 0.0;  // sum_k mean[(D_k(x) - 1)^2 + D_k(x_hat)^2]
};

// Least-squares GAN objectives over per-sub-discriminator score maps.
AdversarialLosses adversarial_losses(
    const std::vector<std::vector<double>>& real_scores,
    const std::vector<std::vector<double>>& fake_scores);

// sum_k [L_adv_G,k + lambda_fm * L_FM,k] + lambda_mel * L_mel
double generator_loss(const dsp::Waveform& x, const dsp::Waveform& x_hat,
                      const DiscriminatorFeatures& real,
                      const DiscriminatorFeatures& fake,
                      const VocLossConfig& cfg);

// Deterministic seeded linear stand-in for one MPD/MSD sub-discriminator:
// h_i = W_i h_{i-1}, feature maps are the h_i, score = w_s . h_L.
class LinearDiscriminator {
 public:
  LinearDiscriminator(std::size_t input_dim, std::vector<std::size_t> layer_dims,
                      std::uint64_t seed);

  SubDiscriminatorOutput apply(std::span<const double> x) const;

  // d(L_adv_G + lambda_fm * L_FM)/dx_fake for this sub-discriminator.
  std::vector<double> adv_fm_gradient(std::span<const double> x_real,
                                      std::span<const double> x_fake,
                                      double lambda_fm) const;

  std::size_t input_dim() const { return input_dim_; }

 private:
  std::size_t input_dim_;
  std::vector<Matrix> weights_;       // layer i: dims[i] x dims[i-1]
  std::vector<double> score_weights_; // final linear readout
};

// K_d seeded sub-discriminators (default 8, the MPD(5)+MSD(3) convention).
std::vector<LinearDiscriminator> make_discriminator_bank(
    std::size_t input_dim, std::size_t k_d, std::size_t layers,
    std::uint64_t seed);

DiscriminatorFeatures apply_bank(const std::vector<LinearDiscriminator>& bank,
                                 std::span<const double> x);

}  // namespace spkanon::vocloss

#endif  // SPKANON_VOCLOSS_HPP_
