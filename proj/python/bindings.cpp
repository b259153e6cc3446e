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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spkanon/assembly.hpp"
#include "spkanon/dsp.hpp"
#include "spkanon/eval.hpp"
#include "spkanon/f0.hpp"
#include "spkanon/pool.hpp"
#include "spkanon/softunits.hpp"
#include "spkanon/vocloss.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace spkanon;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw DataError("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + m.data.size(), m.data.begin());
  return m;
}

py::array_t<double> from_matrix(const Matrix& m) {
  py::array_t<double> a({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), a.mutable_data());
  return a;
}

std::vector<double> to_vector(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 1) throw DataError("expected a 1-D array");
  return std::vector<double>(a.data(), a.data() + a.shape(0));
}

py::array_t<double> from_vector(const std::vector<double>& v) {
  py::array_t<double> a(v.size());
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

dsp::MelConfig mel_config(int n_fft, int hop, int win, int n_mels, double f_min,
                          double f_max) {
  dsp::MelConfig cfg;
  cfg.n_fft = n_fft;
  cfg.hop = hop;
  cfg.win = win;
  cfg.n_mels = n_mels;
  cfg.f_min = f_min;
  cfg.f_max = f_max;
  return cfg;
}

std::vector<eval::TrialScore> to_trial_scores(const std::vector<double>& scores,
                                              const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DataError("scores/labels length mismatch");
  std::vector<eval::TrialScore> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i].score = scores[i];
    out[i].label = labels[i] != 0 ? eval::TrialLabel::kTarget
                                  : eval::TrialLabel::kNontarget;
  }
  return out;
}

vocloss::DiscriminatorFeatures to_features(
    const std::vector<std::vector<double>>& scores,
    const std::vector<std::vector<std::vector<double>>>& layers) {
  if (scores.size() != layers.size())
    throw DataError("scores/layers sub-discriminator count mismatch");
  vocloss::DiscriminatorFeatures out(scores.size());
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k].score = scores[k];
    out[k].layers = layers[k];
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "speaker anonymization toolkit core";

  py::register_exception<DataError>(m, "DataError");
  py::register_exception<InvariantError>(m, "InvariantError");

  // dsp
  m.def(
      "mel_spectrogram",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples,
         int sample_rate, int n_fft, int hop, int win, int n_mels, double f_min,
         double f_max) {
        dsp::Waveform w{to_vector(samples), sample_rate};
        return from_matrix(
            dsp::mel_spectrogram(w, mel_config(n_fft, hop, win, n_mels, f_min, f_max)));
      },
      "samples"_a, "sample_rate"_a = 16000, "n_fft"_a = 1024, "hop"_a = 160,
      "win"_a = 1024, "n_mels"_a = 80, "f_min"_a = 0.0, "f_max"_a = 8000.0,
      "n_mels x frames mel-magnitude spectrogram");

  m.def(
      "mcadams_anonymize",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples,
         double alpha, int frame_len, int hop, int order) {
        dsp::Waveform w{to_vector(samples), 16000};
        dsp::McAdamsConfig cfg;
        cfg.alpha = alpha;
        cfg.frame_len = frame_len;
        cfg.hop = hop;
        cfg.lpc_order = order;
        return from_vector(dsp::mcadams_anonymize(w, cfg).samples);
      },
      "samples"_a, "alpha"_a = 0.8, "frame_len"_a = 400, "hop"_a = 160,
      "order"_a = 20, "McAdams pole-angle formant shifting (16 kHz input)");

  m.def(
      "lpc",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> frame,
         int order) {
        const auto r = dsp::lpc_coeffs(to_vector(frame), order);
        return py::make_tuple(from_vector(r.coeffs), r.gain, r.degenerate);
      },
      "frame"_a, "order"_a, "autocorrelation-method LPC: (coeffs, gain, degenerate)");

  m.def("read_wav", [](const std::string& path) {
    const auto w = dsp::read_wav(path);
    return py::make_tuple(from_vector(w.samples), w.sample_rate);
  });
  m.def("write_wav",
        [](const std::string& path,
           py::array_t<double, py::array::c_style | py::array::forcecast> samples) {
          dsp::write_wav(path, dsp::Waveform{to_vector(samples), 16000});
        });

  // f0
  m.def(
      "extract_f0",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> samples,
         double f_min, double f_max, int frame_len, int hop, double threshold,
         double transition_cost) {
        f0::F0Config cfg;
        cfg.f_min = f_min;
        cfg.f_max = f_max;
        cfg.frame_len = frame_len;
        cfg.hop = hop;
        cfg.nccf_threshold = threshold;
        cfg.dp_transition_cost = transition_cost;
        const auto track = f0::extract_f0(dsp::Waveform{to_vector(samples), 16000}, cfg);
        py::array_t<bool> voiced(track.voiced.size());
        for (std::size_t i = 0; i < track.voiced.size(); ++i)
          voiced.mutable_data()[i] = track.voiced[i];
        return py::make_tuple(from_vector(track.f0_hz), voiced);
      },
      "samples"_a, "f_min"_a = 60.0, "f_max"_a = 400.0, "frame_len"_a = 400,
      "hop"_a = 160, "threshold"_a = 0.3, "transition_cost"_a = 0.4,
      "(f0_hz, voiced) at one frame per hop");

  m.def("nccf",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> frame,
           int max_lag) { return from_vector(f0::nccf(to_vector(frame), max_lag)); });

  // pool
  py::enum_<pool::Gender>(m, "Gender")
      .value("FEMALE", pool::Gender::kFemale)
      .value("MALE", pool::Gender::kMale);

  py::class_<pool::SpeakerEmbedding>(m, "SpeakerEmbedding")
      .def(py::init([](py::array_t<double, py::array::c_style | py::array::forcecast> v,
                       const std::string& speaker_id, const std::string& gender) {
             pool::SpeakerEmbedding e;
             e.vector = to_vector(v);
             e.speaker_id = speaker_id;
             e.gender = pool::parse_gender(gender);
             return e;
           }),
           "vector"_a, "speaker_id"_a, "gender"_a)
      .def_property_readonly("vector",
                             [](const pool::SpeakerEmbedding& e) {
                               return from_vector(e.vector);
                             })
      .def_readonly("speaker_id", &pool::SpeakerEmbedding::speaker_id)
      .def_property_readonly("gender", [](const pool::SpeakerEmbedding& e) {
        return pool::gender_name(e.gender);
      });

  py::class_<pool::EmbeddingPool>(m, "EmbeddingPool")
      .def(py::init<>())
      .def("add", [](pool::EmbeddingPool& p, const pool::SpeakerEmbedding& e) { p.add(e); })
      .def("__len__", [](const pool::EmbeddingPool& p) { return p.entries.size(); })
      .def_property_readonly("dim", [](const pool::EmbeddingPool& p) { return p.dim; })
      .def("entry", [](const pool::EmbeddingPool& p, std::size_t i) {
        if (i >= p.entries.size()) throw py::index_error();
        return p.entries[i];
      });

  m.def("read_embedding_store", &pool::read_embedding_store);
  m.def("write_embedding_store", &pool::write_embedding_store);

  m.def("cosine_distance",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> a,
           py::array_t<double, py::array::c_style | py::array::forcecast> b) {
          return pool::cosine_distance(to_vector(a), to_vector(b));
        });

  m.def(
      "select_far_candidates",
      [](const pool::EmbeddingPool& p, const pool::SpeakerEmbedding& src,
         std::size_t n_far) {
        pool::AnonymizationParams params;
        params.n_far = n_far;
        params.n_avg = n_far;
        return pool::select_far_candidates(p, src, params);
      },
      "pool"_a, "src"_a, "n_far"_a);

  m.def(
      "generate_pseudo_embedding",
      [](const pool::EmbeddingPool& p, const pool::SpeakerEmbedding& src,
         std::size_t n_far, std::size_t n_avg, std::uint64_t seed) {
        pool::AnonymizationParams params;
        params.n_far = n_far;
        params.n_avg = n_avg;
        params.seed = seed;
        return pool::generate_pseudo_embedding(p, src, params);
      },
      "pool"_a, "src"_a, "n_far"_a = 200, "n_avg"_a = 100, "seed"_a = 0);

  // softunits
  py::class_<softunits::SoftUnitCodebook>(m, "SoftUnitCodebook")
      .def(py::init([](py::array_t<double, py::array::c_style | py::array::forcecast> embeddings,
                       py::array_t<double, py::array::c_style | py::array::forcecast> projection,
                       double temperature) {
             softunits::SoftUnitCodebook cb;
             cb.embeddings = to_matrix(embeddings);
             cb.projection = to_matrix(projection);
             cb.temperature = temperature;
             softunits::validate(cb);
             return cb;
           }),
           "embeddings"_a, "projection"_a, "temperature"_a = 0.1)
      .def_property_readonly("embeddings",
                             [](const softunits::SoftUnitCodebook& cb) {
                               return from_matrix(cb.embeddings);
                             })
      .def_property_readonly("projection",
                             [](const softunits::SoftUnitCodebook& cb) {
                               return from_matrix(cb.projection);
                             })
      .def_readonly("temperature", &softunits::SoftUnitCodebook::temperature);

  m.def(
      "kmeans_fit",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> features,
         std::size_t k, int max_iters, std::uint64_t seed) {
        const auto r = softunits::kmeans_fit(to_matrix(features), k, max_iters, seed);
        return py::make_tuple(from_matrix(r.centroids), r.inertia, r.iterations);
      },
      "features"_a, "k"_a, "max_iters"_a = 100, "seed"_a = 0);

  m.def("quantize",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> features,
           py::array_t<double, py::array::c_style | py::array::forcecast> centroids) {
          return softunits::quantize(to_matrix(features), to_matrix(centroids));
        });

  m.def(
      "soft_distribution",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> z,
         const softunits::SoftUnitCodebook& cb) {
        return from_vector(softunits::soft_distribution(to_vector(z), cb));
      },
      "z"_a, "codebook"_a, "unit distribution from a projected vector");

  m.def(
      "ce_loss",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> z,
         const softunits::SoftUnitCodebook& cb, std::uint32_t target) {
        const auto g = softunits::ce_loss(to_vector(z), cb, target);
        return py::make_tuple(g.loss, from_vector(g.d_z), from_matrix(g.d_w));
      },
      "z"_a, "codebook"_a, "target"_a,
      "(loss, dL/dz, dL/dW) of -log p_target");

  m.def(
      "train_soft_head",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> features,
         const std::vector<std::uint32_t>& targets, std::size_t k, std::size_t e,
         double tau, double lr, int epochs, std::size_t batch_size,
         std::uint64_t seed) {
        softunits::TrainConfig cfg;
        cfg.k = k;
        cfg.e = e;
        cfg.temperature = tau;
        cfg.lr = lr;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        auto r = softunits::train_soft_head(to_matrix(features), targets, cfg);
        return py::make_tuple(std::move(r.codebook), r.loss_history);
      },
      "features"_a, "targets"_a, "k"_a = 200, "e"_a = 256, "tau"_a = 0.1,
      "lr"_a = 0.05, "epochs"_a = 50, "batch_size"_a = 64, "seed"_a = 0);

  m.def("extract_content",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> features,
           const softunits::SoftUnitCodebook& cb, bool raw) {
          return from_matrix(softunits::extract_content(to_matrix(features), cb, raw));
        },
        "features"_a, "codebook"_a, "raw"_a = false);

  m.def("read_feat", [](const std::string& p) { return from_matrix(softunits::read_feat(p)); });
  m.def("write_feat",
        [](const std::string& p,
           py::array_t<double, py::array::c_style | py::array::forcecast> m) {
          softunits::write_feat(p, to_matrix(m));
        });

  // assembly
  m.def(
      "upsample_frames",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> seq,
         std::size_t factor, const std::string& mode) {
        const auto up = assembly::upsample_frames(
            to_matrix(seq), factor,
            mode == "linear" ? assembly::UpsampleMode::kLinear
                             : assembly::UpsampleMode::kRepeat);
        return from_matrix(up);
      },
      "seq"_a, "factor"_a, "mode"_a = "repeat");

  m.def(
      "assemble",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> content,
         py::array_t<double, py::array::c_style | py::array::forcecast> f0_hz,
         const std::vector<bool>& voiced, const pool::SpeakerEmbedding& spk,
         const std::string& mode) {
        f0::F0Track track;
        track.f0_hz = to_vector(f0_hz);
        track.voiced = voiced;
        const auto out = assembly::assemble(
            to_matrix(content), track, spk,
            mode == "linear" ? assembly::UpsampleMode::kLinear
                             : assembly::UpsampleMode::kRepeat);
        return from_matrix(out.frames);
      },
      "content"_a, "f0_hz"_a, "voiced"_a, "speaker"_a, "mode"_a = "repeat");

  // vocloss
  m.def(
      "mel_loss",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         py::array_t<double, py::array::c_style | py::array::forcecast> x_hat,
         int sample_rate, int n_fft, int hop, int win, int n_mels, double f_min,
         double f_max) {
        vocloss::VocLossConfig cfg;
        cfg.mel = mel_config(n_fft, hop, win, n_mels, f_min, f_max);
        return vocloss::mel_loss(dsp::Waveform{to_vector(x), sample_rate},
                                 dsp::Waveform{to_vector(x_hat), sample_rate}, cfg);
      },
      "x"_a, "x_hat"_a, "sample_rate"_a = 16000, "n_fft"_a = 1024, "hop"_a = 160,
      "win"_a = 1024, "n_mels"_a = 80, "f_min"_a = 0.0, "f_max"_a = 8000.0);

  m.def("feature_matching_loss",
        [](const std::vector<std::vector<std::vector<double>>>& real_layers,
           const std::vector<std::vector<std::vector<double>>>& fake_layers) {
          std::vector<std::vector<double>> dummy(real_layers.size(), {0.0});
          return vocloss::feature_matching_loss(to_features(dummy, real_layers),
                                                to_features(dummy, fake_layers));
        });

  m.def("adversarial_losses",
        [](const std::vector<std::vector<double>>& real_scores,
           const std::vector<std::vector<double>>& fake_scores) {
          const auto r = vocloss::adversarial_losses(real_scores, fake_scores);
          return py::make_tuple(r.generator, r.discriminator);
        });

  m.def(
      "generator_loss",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> x,
         py::array_t<double, py::array::c_style | py::array::forcecast> x_hat,
         const std::vector<std::vector<double>>& real_scores,
         const std::vector<std::vector<std::vector<double>>>& real_layers,
         const std::vector<std::vector<double>>& fake_scores,
         const std::vector<std::vector<std::vector<double>>>& fake_layers,
         double lambda_fm, double lambda_mel, int sample_rate, int n_fft, int hop,
         int win, int n_mels, double f_min, double f_max) {
        vocloss::VocLossConfig cfg;
        cfg.lambda_fm = lambda_fm;
        cfg.lambda_mel = lambda_mel;
        cfg.mel = mel_config(n_fft, hop, win, n_mels, f_min, f_max);
        return vocloss::generator_loss(
            dsp::Waveform{to_vector(x), sample_rate},
            dsp::Waveform{to_vector(x_hat), sample_rate},
            to_features(real_scores, real_layers),
            to_features(fake_scores, fake_layers), cfg);
      },
      "x"_a, "x_hat"_a, "real_scores"_a, "real_layers"_a, "fake_scores"_a,
      "fake_layers"_a, "lambda_fm"_a = 2.0, "lambda_mel"_a = 45.0,
      "sample_rate"_a = 16000, "n_fft"_a = 1024, "hop"_a = 160, "win"_a = 1024,
      "n_mels"_a = 80, "f_min"_a = 0.0, "f_max"_a = 8000.0);

  // eval
  m.def(
      "compute_eer",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        const auto r = eval::compute_eer(to_trial_scores(scores, labels));
        return py::make_tuple(r.eer_percent, r.threshold);
      },
      "scores"_a, "labels"_a, "(eer_percent, threshold); labels: 1 target, 0 nontarget");

  m.def(
      "compute_min_dcf",
      [](const std::vector<double>& scores, const std::vector<int>& labels,
         double c_fa, double c_miss, double p_target) {
        eval::MetricParams params;
        params.c_fa = c_fa;
        params.c_miss = c_miss;
        params.p_target = p_target;
        return eval::compute_min_dcf(to_trial_scores(scores, labels), params);
      },
      "scores"_a, "labels"_a, "c_fa"_a = 1.0, "c_miss"_a = 1.0, "p_target"_a = 0.01);

  m.def(
      "error_rate",
      [](const std::string& ref, const std::string& hyp, const std::string& unit) {
        const auto u = unit == "char" ? eval::ErrorUnit::kChar : eval::ErrorUnit::kWord;
        return eval::error_rate(eval::tokenize(ref, u), eval::tokenize(hyp, u));
      },
      "ref"_a, "hyp"_a, "unit"_a = "word");

  m.def(
      "run_scenario",
      [](const pool::EmbeddingPool& enroll, const pool::EmbeddingPool& test,
         const std::vector<std::tuple<std::string, std::string, bool>>& trials,
         const std::string& scenario, const pool::EmbeddingPool* ext_pool,
         std::size_t n_far, std::size_t n_avg, std::uint64_t seed,
         const std::string& policy) {
        std::vector<eval::Trial> ts;
        for (const auto& [e, t, target] : trials)
          ts.push_back({e, t, target ? eval::TrialLabel::kTarget
                                     : eval::TrialLabel::kNontarget});
        eval::ScenarioConfig cfg;
        cfg.scenario = eval::parse_scenario(scenario);
        cfg.policy = policy == "per-speaker"
                         ? eval::AnonymizationPolicy::kPerSpeaker
                         : eval::AnonymizationPolicy::kPerUtterance;
        cfg.seed = seed;
        eval::Anonymizer anonymizer = eval::Anonymizer::identity();
        const eval::Anonymizer* anon_ptr = nullptr;
        if (cfg.scenario == eval::Scenario::kOA ||
            cfg.scenario == eval::Scenario::kAA) {
          if (ext_pool == nullptr)
            throw DataError("scenario " + scenario + " requires a pool");
          anonymizer = eval::Anonymizer::pool_based(*ext_pool, n_far, n_avg);
          anon_ptr = &anonymizer;
        } else if (cfg.scenario == eval::Scenario::kOR) {
          anon_ptr = &anonymizer;
        }
        const auto r = eval::run_scenario(enroll, test, ts, anon_ptr, cfg);
        py::dict d;
        d["scenario"] = eval::scenario_name(r.scenario);
        d["eer_percent"] = r.eer_percent;
        d["eer_threshold"] = r.eer_threshold;
        d["min_dcf"] = r.min_dcf;
        d["trials"] = r.counts.trials;
        return d;
      },
      "enroll"_a, "test"_a, "trials"_a, "scenario"_a = "OO",
      "pool"_a = nullptr, "n_far"_a = 200, "n_avg"_a = 100, "seed"_a = 0,
      "policy"_a = "per-utterance");

  m.attr("__version__") = "0.1.0";
}
