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

#include "spkanon/softunits.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "spkanon/binio.hpp"

namespace spkanon::softunits {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

// nearest centroid; ties to lowest index
std::size_t nearest(std::span<const double> x, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    const double d = sq_dist(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeansResult kmeans_fit(const Matrix& features, std::size_t k, int max_iters,
                        std::uint64_t seed) {
  const std::size_t n = features.rows;
  const std::size_t dim = features.cols;
  require(k >= 1, "k must be >= 1");
  require(n >= k, "kmeans needs at least k points, got " + std::to_string(n));
  require(max_iters >= 0, "max_iters must be >= 0");

  Rng rng(seed);
  KMeansResult result;
  result.centroids = Matrix(k, dim);

  // k-means++ seeding; d2 holds the running min distance to the chosen set
  std::vector<std::size_t> chosen;
  chosen.push_back(rng.below(n));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const auto last = features.row(chosen.back());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(features.row(i), last));
      total += d2[i];
    }
    std::size_t pick;
    if (total <= 0.0) {
      pick = rng.below(n);  // all points coincide with a centroid
    } else {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc >= r) {
          pick = i;
          break;
        }
      }
    }
    chosen.push_back(pick);
  }
  for (std::size_t c = 0; c < k; ++c)
    std::copy(features.row(chosen[c]).begin(), features.row(chosen[c]).end(),
              result.centroids.row(c).begin());

  std::vector<std::size_t> assign(n, 0);
  double prev_inertia = std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < max_iters; ++iter) {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = nearest(features.row(i), result.centroids);
      inertia += sq_dist(features.row(i), result.centroids.row(assign[i]));
    }

    Matrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = sums.row(assign[i]);
      const auto src = features.row(i);
      for (std::size_t d = 0; d < dim; ++d) dst[d] += src[d];
      ++counts[assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      auto row = sums.row(c);
      for (std::size_t d = 0; d < dim; ++d)
        result.centroids.at(c, d) = row[d] / static_cast<double>(counts[c]);
    }
    // reseed empty clusters with the farthest points
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far_i = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = sq_dist(features.row(i), result.centroids.row(assign[i]));
        if (d > far_d) {
          far_d = d;
          far_i = i;
        }
      }
      std::copy(features.row(far_i).begin(), features.row(far_i).end(),
                result.centroids.row(c).begin());
      assign[far_i] = c;
    }

    result.iterations = iter + 1;
    result.inertia = inertia;
    if (prev_inertia < std::numeric_limits<double>::infinity()) {
      const double rel = std::abs(prev_inertia - inertia) /
                         std::max(prev_inertia, 1e-300);
      if (rel < 1e-6) break;
    }
    prev_inertia = inertia;
  }

  // final inertia against the final centroids
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    inertia += sq_dist(features.row(i),
                       result.centroids.row(nearest(features.row(i), result.centroids)));
  result.inertia = inertia;
  return result;
}

std::vector<std::uint32_t> quantize(const Matrix& features, const Matrix& centroids) {
  require(features.cols == centroids.cols,
          "quantize: feature dim " + std::to_string(features.cols) +
              " != centroid dim " + std::to_string(centroids.cols));
  require(centroids.rows >= 1, "quantize: empty codebook");
  std::vector<std::uint32_t> units(features.rows);
  for (std::size_t i = 0; i < features.rows; ++i)
    units[i] = static_cast<std::uint32_t>(nearest(features.row(i), centroids));
  return units;
}

void validate(const SoftUnitCodebook& cb) {
  require(cb.k() >= 2, "codebook needs K >= 2");
  require(cb.temperature > 0.0, "temperature must be > 0");
  require(cb.projection.cols == cb.embeddings.cols,
          "projection/codebook E mismatch");
  for (std::size_t i = 0; i < cb.k(); ++i)
    require(l2_norm(cb.embeddings.row(i)) > 0.0,
            "codebook row " + std::to_string(i) + " is all-zero");
}

namespace {

// similarities s_i = cos(z, w_i)/tau and the stabilized softmax
struct SoftmaxParts {
  std::vector<double> cos;    // cos(z, w_i)
  std::vector<double> probs;  // softmax of cos/tau
  double z_norm = 0.0;
};

SoftmaxParts softmax_parts(std::span<const double> z, const SoftUnitCodebook& cb) {
  require(z.size() == cb.e(), "soft_distribution: dim mismatch");
  SoftmaxParts parts;
  parts.z_norm = l2_norm(z);
  require(parts.z_norm > 0.0, "soft_distribution: zero input vector");

  const std::size_t k = cb.k();
  parts.cos.resize(k);
  parts.probs.resize(k);
  double max_s = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < k; ++i) {
    const auto w = cb.embeddings.row(i);
    parts.cos[i] = dot(z, w) / (parts.z_norm * l2_norm(w));
    max_s = std::max(max_s, parts.cos[i] / cb.temperature);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    parts.probs[i] = std::exp(parts.cos[i] / cb.temperature - max_s);
    total += parts.probs[i];
  }
  for (double& p : parts.probs) p /= total;
  return parts;
}

}  // namespace

std::vector<double> soft_distribution(std::span<const double> z,
                                      const SoftUnitCodebook& cb) {
  validate(cb);
  return softmax_parts(z, cb).probs;
}

namespace {

// Loss plus gradients; d_z is overwritten, d_w_accum (when given) is added
// into so batch loops avoid a K x E allocation per frame.
double ce_loss_into(std::span<const double> z, const SoftUnitCodebook& cb,
                    std::uint32_t target, std::span<double> d_z,
                    Matrix* d_w_accum) {
  require(target < cb.k(), "target unit out of range");
  const auto parts = softmax_parts(z, cb);
  const double loss = -std::log(std::max(parts.probs[target], 1e-300));

  std::fill(d_z.begin(), d_z.end(), 0.0);
  // dL/ds_i = p_i - [i == target]; s_i = cos_i / tau
  for (std::size_t i = 0; i < cb.k(); ++i) {
    const double ds = (parts.probs[i] - (i == target ? 1.0 : 0.0)) / cb.temperature;
    const auto w = cb.embeddings.row(i);
    const double w_norm = l2_norm(w);
    for (std::size_t d = 0; d < z.size(); ++d) {
      // d cos/dz = (w_hat - cos * z_hat)/|z|, d cos/dw analogous
      const double z_hat = z[d] / parts.z_norm;
      const double w_hat = w[d] / w_norm;
      d_z[d] += ds * (w_hat - parts.cos[i] * z_hat) / parts.z_norm;
      if (d_w_accum != nullptr)
        d_w_accum->at(i, d) += ds * (z_hat - parts.cos[i] * w_hat) / w_norm;
    }
  }
  return loss;
}

}  // namespace

CeGradients ce_loss(std::span<const double> z, const SoftUnitCodebook& cb,
                    std::uint32_t target) {
  validate(cb);
  CeGradients out;
  out.d_z.assign(z.size(), 0.0);
  out.d_w = Matrix(cb.k(), cb.e());
  out.loss = ce_loss_into(z, cb, target, out.d_z, &out.d_w);
  return out;
}

TrainResult train_soft_head(const Matrix& features,
                            const std::vector<std::uint32_t>& targets,
                            const TrainConfig& cfg) {
  const std::size_t n = features.rows;
  const std::size_t f_dim = features.cols;
  require(n > 0, "train_soft_head: empty feature set");
  require(targets.size() == n, "features/targets length mismatch: " +
                                   std::to_string(n) + " vs " +
                                   std::to_string(targets.size()));
  require(cfg.k >= 2 && cfg.e >= 1, "need K >= 2 and E >= 1");
  require(cfg.temperature > 0.0 && cfg.lr > 0.0, "temperature and lr must be > 0");
  require(cfg.epochs >= 0, "epochs must be >= 0");
  for (std::uint32_t t : targets)
    require(t < cfg.k, "target unit " + std::to_string(t) + " out of range");

  TrainResult result;
  SoftUnitCodebook& cb = result.codebook;
  cb.temperature = cfg.temperature;

  // seeded init: projection uniform(-1/sqrt(F), 1/sqrt(F))
  Rng rng(cfg.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(f_dim));
  cb.projection = Matrix(f_dim, cfg.e);
  for (double& v : cb.projection.data) v = rng.uniform(-bound, bound);

  // codebook warm start: k-means centroids through the initial projection
  cb.embeddings = Matrix(cfg.k, cfg.e);
  bool warm = n >= cfg.k;
  if (warm) {
    const auto km = kmeans_fit(features, cfg.k, 50, cfg.seed);
    for (std::size_t i = 0; i < cfg.k; ++i) {
      const auto c = km.centroids.row(i);
      auto row = cb.embeddings.row(i);
      for (std::size_t e = 0; e < cfg.e; ++e) {
        double acc = 0.0;
        for (std::size_t d = 0; d < f_dim; ++d) acc += c[d] * cb.projection.at(d, e);
        row[e] = acc;
      }
      if (l2_norm(row) <= 1e-12) warm = false;
    }
  }
  if (!warm) {
    for (double& v : cb.embeddings.data) v = rng.gaussian();
  }

  validate(cb);
  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> z(cfg.e);
  std::vector<double> d_z(cfg.e);

  auto project = [&](std::size_t i, std::vector<double>& out_z) {
    const auto x = features.row(i);
    for (std::size_t e = 0; e < cfg.e; ++e) {
      double acc = 0.0;
      for (std::size_t d = 0; d < f_dim; ++d) acc += x[d] * cb.projection.at(d, e);
      out_z[e] = acc;
    }
  };

  auto mean_loss = [&] {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      project(i, z);
      total += ce_loss_into(z, cb, targets[i], d_z, nullptr);
    }
    return total / static_cast<double>(n);
  };

  Matrix grad_w(cfg.k, cfg.e);
  Matrix grad_p(f_dim, cfg.e);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // seeded shuffle
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = rng.below(i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(start + batch, n);
      const double scale = cfg.lr / static_cast<double>(end - start);
      std::fill(grad_w.data.begin(), grad_w.data.end(), 0.0);
      std::fill(grad_p.data.begin(), grad_p.data.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        project(i, z);
        ce_loss_into(z, cb, targets[i], d_z, &grad_w);
        // dL/dP = x^T (dL/dz)
        const auto x = features.row(i);
        for (std::size_t d = 0; d < f_dim; ++d) {
          auto prow = grad_p.row(d);
          for (std::size_t e = 0; e < cfg.e; ++e) prow[e] += x[d] * d_z[e];
        }
      }
      for (std::size_t idx = 0; idx < cb.embeddings.data.size(); ++idx)
        cb.embeddings.data[idx] -= scale * grad_w.data[idx];
      for (std::size_t idx = 0; idx < cb.projection.data.size(); ++idx)
        cb.projection.data[idx] -= scale * grad_p.data[idx];
    }
    result.loss_history.push_back(mean_loss());
  }
  return result;
}

Matrix extract_content(const Matrix& features, const SoftUnitCodebook& cb,
                       bool raw) {
  validate(cb);
  require(features.cols == cb.f(), "extract_content: feature dim mismatch");
  std::vector<double> z(cb.e());
  Matrix out(features.rows, raw ? cb.e() : cb.k());
  for (std::size_t i = 0; i < features.rows; ++i) {
    const auto x = features.row(i);
    for (std::size_t e = 0; e < cb.e(); ++e) {
      double acc = 0.0;
      for (std::size_t d = 0; d < cb.f(); ++d) acc += x[d] * cb.projection.at(d, e);
      z[e] = acc;
    }
    if (raw) {
      std::copy(z.begin(), z.end(), out.row(i).begin());
    } else {
      const auto p = soft_distribution(z, cb);
      std::copy(p.begin(), p.end(), out.row(i).begin());
    }
  }
  return out;
}

Matrix read_feat(const std::string& path) {
  binio::Reader in(path);
  in.expect_magic("FEAT");
  const std::uint32_t version = in.u32();
  require(version == 1, "unsupported FEAT version in " + path);
  const std::uint32_t rows = in.u32();
  const std::uint32_t cols = in.u32();
  require(cols > 0, "FEAT file has zero columns: " + path);
  Matrix m(rows, cols);
  for (double& v : m.data) v = in.f32();
  in.expect_eof();
  require(all_finite(m.data), "non-finite values in " + path);
  return m;
}

void write_feat(const std::string& path, const Matrix& m) {
  binio::Writer out;
  out.magic("FEAT");
  out.u32(1);
  out.u32(static_cast<std::uint32_t>(m.rows));
  out.u32(static_cast<std::uint32_t>(m.cols));
  for (double v : m.data) out.f32(static_cast<float>(v));
  out.save(path);
}

std::vector<std::uint32_t> read_units(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open units file: " + path);
  std::vector<std::uint32_t> units;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    long long v;
    require(static_cast<bool>(ss >> v) && v >= 0,
            "malformed unit line in " + path + ": " + line);
    units.push_back(static_cast<std::uint32_t>(v));
  }
  return units;
}

void write_units(const std::string& path, const std::vector<std::uint32_t>& units) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  for (std::uint32_t u : units) out << u << '\n';
  require(out.good(), "short write: " + path);
}

SoftUnitCodebook read_codebook(const std::string& path) {
  binio::Reader in(path);
  in.expect_magic("SOFT");
  const std::uint32_t version = in.u32();
  require(version == 1, "unsupported SOFT version in " + path);
  const std::uint32_t k = in.u32();
  const std::uint32_t e = in.u32();
  const std::uint32_t f = in.u32();
  SoftUnitCodebook cb;
  cb.temperature = in.f32();
  cb.projection = Matrix(f, e);
  for (double& v : cb.projection.data) v = in.f32();
  cb.embeddings = Matrix(k, e);
  for (double& v : cb.embeddings.data) v = in.f32();
  in.expect_eof();
  validate(cb);
  return cb;
}

void write_codebook(const std::string& path, const SoftUnitCodebook& cb) {
  binio::Writer out;
  out.magic("SOFT");
  out.u32(1);
  out.u32(static_cast<std::uint32_t>(cb.k()));
  out.u32(static_cast<std::uint32_t>(cb.e()));
  out.u32(static_cast<std::uint32_t>(cb.f()));
  out.f32(static_cast<float>(cb.temperature));
  for (double v : cb.projection.data) out.f32(static_cast<float>(v));
  for (double v : cb.embeddings.data) out.f32(static_cast<float>(v));
  out.save(path);
}

}  // namespace spkanon::softunits
