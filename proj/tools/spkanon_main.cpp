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

#include <cstdio>
#include <filesystem>
#include <numeric>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spkanon/assembly.hpp"
#include "spkanon/dsp.hpp"
#include "spkanon/eval.hpp"
#include "spkanon/f0.hpp"
#include "spkanon/pool.hpp"
#include "spkanon/softunits.hpp"
#include "spkanon/vocloss.hpp"

namespace {

using namespace spkanon;

// exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

// 0 = quiet, 1 = normal, 2+ = verbose
int g_verbosity = 1;

template <typename... Args>
void info(const char* fmt, Args... args) {
  if (g_verbosity >= 1) std::printf(fmt, args...);
}

template <typename... Args>
void detail(const char* fmt, Args... args) {
  if (g_verbosity >= 2) std::printf(fmt, args...);
}

struct ConfigPaths {
  std::string config;
  std::string dump;
};

void setup_config(CLI::App* sub, ConfigPaths& paths) {
  sub->fallthrough();  // global -q/-v may follow the subcommand
  sub->add_option("--config", paths.config,
                  "key=value config file; explicit flags win");
  sub->add_option("--dump-config", paths.dump,
                  "write the effective configuration to this file");
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// Line-oriented key=value config. A key maps to the long option of the same
// name; values from the file apply only when the flag was not given on the
// command line.
void apply_config_file(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open config file: " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = trim(line);
    if (text.empty() || text[0] == '#') continue;
    const auto eq = text.find('=');
    require(eq != std::string::npos,
            "config line " + std::to_string(line_no) + " is not key=value: " + line);
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    require(!key.empty(), "empty key on config line " + std::to_string(line_no));
    require(key != "config" && key != "dump-config",
            "config files cannot nest: " + key);
    entries.emplace_back(key, value);
  }

  // flags given on the command line shadow the whole key
  std::map<std::string, CLI::Option*> to_apply;
  for (const auto& [key, value] : entries) {
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    require(opt != nullptr,
            "unknown config key '" + key + "' for subcommand " + sub->get_name());
    if (opt->count() == 0 || to_apply.count(key) != 0) to_apply[key] = opt;
  }
  try {
    std::set<std::string> seen;
    for (const auto& [key, value] : entries) {
      const auto it = to_apply.find(key);
      if (it == to_apply.end()) continue;
      it->second->add_result(value);
      seen.insert(key);
    }
    for (const auto& key : seen) to_apply.at(key)->run_callback();
  } catch (const CLI::Error& e) {
    throw DataError("config file " + path + ": " + e.what());
  }
}

// Effective configuration after flags and config application; feeding the
// dump back through --config reproduces the run.
void dump_config_file(CLI::App* sub, const std::string& path) {
  std::ostringstream out;
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "config" || name == "dump-config" || name == "help") continue;
    if (opt->get_expected_min() == 0) {  // flag
      out << name << '=' << (opt->count() > 0 ? "true" : "false") << '\n';
      continue;
    }
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) out << name << '=' << r << '\n';
    } else if (!opt->get_default_str().empty()) {
      out << name << '=' << opt->get_default_str() << '\n';
    }
  }
  std::ofstream f(path);
  require(f.good(), "cannot open for writing: " + path);
  f << out.str();
  require(f.good(), "short write: " + path);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Embedding stores are EMBD binaries; .csv paths use the CSV interop format.
pool::EmbeddingPool load_store(const std::string& path) {
  return has_suffix(path, ".csv") ? pool::read_embedding_csv(path)
                                  : pool::read_embedding_store(path);
}

void save_store(const std::string& path, const pool::EmbeddingPool& p) {
  if (has_suffix(path, ".csv")) {
    pool::write_embedding_csv(path, p);
  } else {
    pool::write_embedding_store(path, p);
  }
}

struct AnonPoolArgs {
  std::string pool_path, input_path, output_path;
  std::size_t n_far = 200, n_avg = 100;
  std::uint64_t seed = 0;
  std::string policy = "per-utterance";
  unsigned threads = 0;
};

int run_anon_pool(const AnonPoolArgs& a) {
  const auto ext_pool = load_store(a.pool_path);
  const auto sources = load_store(a.input_path);
  require(ext_pool.dim == sources.dim, "pool/input dim mismatch: " +
                                           std::to_string(ext_pool.dim) + " vs " +
                                           std::to_string(sources.dim));

  // work items ordered by input id so the output never depends on worker
  // completion order
  std::vector<std::size_t> order(sources.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return sources.entries[x].speaker_id < sources.entries[y].speaker_id;
  });

  pool::EmbeddingPool out;
  if (a.policy == "per-utterance") {
    std::vector<pool::SpeakerEmbedding> results(order.size());
    parallel_for(order.size(), a.threads, [&](std::size_t slot) {
      const std::size_t i = order[slot];
      const auto& src = sources.entries[i];
      pool::AnonymizationParams params;
      params.n_far = a.n_far;
      params.n_avg = a.n_avg;
      params.seed = derive_seed(a.seed, "anon-pool:" + src.speaker_id, i);
      results[slot] = pool::generate_pseudo_embedding(ext_pool, src, params);
    });
    for (auto& e : results) out.add(std::move(e));
  } else {
    const auto anonymizer =
        eval::Anonymizer::pool_based(ext_pool, a.n_far, a.n_avg);
    // one pseudo per speaker id; anonymize_pool keeps ids, re-label here
    auto relabeled = eval::anonymize_pool(
        sources, anonymizer, eval::AnonymizationPolicy::kPerSpeaker, a.seed,
        "anon-pool", a.threads);
    for (std::size_t i : order) {
      auto e = relabeled.entries[i];
      e.speaker_id = "pseudo:" + sources.entries[i].speaker_id + ":" +
                     std::to_string(a.seed);
      out.add(std::move(e));
    }
  }
  save_store(a.output_path, out);
  info("wrote %zu pseudo embeddings to %s\n", out.entries.size(),
              a.output_path.c_str());
  return kExitOk;
}

struct McAdamsArgs {
  std::string input_path, output_path;
  dsp::McAdamsConfig cfg;
};

int run_mcadams(const McAdamsArgs& a) {
  const auto in = dsp::read_wav(a.input_path);
  const auto out = dsp::mcadams_anonymize(in, a.cfg);
  dsp::write_wav(a.output_path, out);
  info("mcadams alpha=%.3f: %zu samples -> %s\n", a.cfg.alpha,
              out.samples.size(), a.output_path.c_str());
  return kExitOk;
}

struct F0Args {
  std::string input_path, output_path;
  f0::F0Config cfg;
};

int run_f0(const F0Args& a) {
  const auto w = dsp::read_wav(a.input_path);
  const auto track = f0::extract_f0(w, a.cfg);
  f0::write_f0_track(a.output_path, track);
  std::size_t voiced = 0;
  for (bool v : track.voiced) voiced += v ? 1 : 0;
  info("f0: %zu frames (%zu voiced) -> %s\n", track.f0_hz.size(), voiced,
              a.output_path.c_str());
  return kExitOk;
}

struct SoftTrainArgs {
  std::vector<std::string> feature_paths;
  std::vector<std::string> unit_paths;
  std::string output_path;
  std::string dump_units_dir;
  softunits::TrainConfig cfg;
  int kmeans_iters = 100;
};

int run_soft_train(const SoftTrainArgs& a) {
  require(!a.feature_paths.empty(), "need at least one --features file");
  std::vector<Matrix> feats;
  std::size_t total_rows = 0;
  for (const auto& p : a.feature_paths) {
    feats.push_back(softunits::read_feat(p));
    require(feats.back().cols == feats.front().cols,
            "feature dim mismatch in " + p);
    total_rows += feats.back().rows;
  }
  Matrix all(total_rows, feats.front().cols);
  std::size_t row = 0;
  for (const auto& m : feats) {
    std::copy(m.data.begin(), m.data.end(), all.data.begin() + row * all.cols);
    row += m.rows;
  }

  std::vector<std::vector<std::uint32_t>> unit_sets;
  if (!a.unit_paths.empty()) {
    require(a.unit_paths.size() == a.feature_paths.size(),
            "--units count must match --features count");
    for (std::size_t i = 0; i < a.unit_paths.size(); ++i) {
      unit_sets.push_back(softunits::read_units(a.unit_paths[i]));
      require(unit_sets.back().size() == feats[i].rows,
              "unit/frame count mismatch for " + a.unit_paths[i]);
    }
  } else {
    // derive targets with seeded k-means over all features
    const auto km = softunits::kmeans_fit(all, a.cfg.k, a.kmeans_iters, a.cfg.seed);
    info("kmeans: inertia=%.6f iterations=%d\n", km.inertia, km.iterations);
    for (const auto& m : feats)
      unit_sets.push_back(softunits::quantize(m, km.centroids));
  }

  if (!a.dump_units_dir.empty()) {
    std::filesystem::create_directories(a.dump_units_dir);
    for (std::size_t i = 0; i < a.feature_paths.size(); ++i) {
      const auto stem = std::filesystem::path(a.feature_paths[i]).stem().string();
      softunits::write_units(a.dump_units_dir + "/" + stem + ".units",
                             unit_sets[i]);
    }
  }

  std::vector<std::uint32_t> targets;
  targets.reserve(total_rows);
  for (const auto& u : unit_sets) targets.insert(targets.end(), u.begin(), u.end());

  const auto result = softunits::train_soft_head(all, targets, a.cfg);
  for (std::size_t e = 0; e < result.loss_history.size(); ++e)
    detail("epoch=%zu loss=%.6f\n", e, result.loss_history[e]);
  softunits::write_codebook(a.output_path, result.codebook);
  info("wrote codebook (K=%zu E=%zu F=%zu) to %s\n",
              result.codebook.k(), result.codebook.e(), result.codebook.f(),
              a.output_path.c_str());
  return kExitOk;
}

struct SoftExtractArgs {
  std::string codebook_path, features_path, output_path;
  bool raw = false;
};

int run_soft_extract(const SoftExtractArgs& a) {
  const auto cb = softunits::read_codebook(a.codebook_path);
  const auto feats = softunits::read_feat(a.features_path);
  const auto content = softunits::extract_content(feats, cb, a.raw);
  softunits::write_feat(a.output_path, content);
  info("extracted %zux%zu %s content -> %s\n", content.rows, content.cols,
              a.raw ? "raw" : "soft", a.output_path.c_str());
  return kExitOk;
}

struct AssembleArgs {
  std::string content_path, f0_path, embeddings_path, speaker_id, output_path;
  std::string mode = "repeat";
};

int run_assemble(const AssembleArgs& a) {
  const auto content = softunits::read_feat(a.content_path);
  const auto track = f0::read_f0_track(a.f0_path);
  const auto store = load_store(a.embeddings_path);
  const pool::SpeakerEmbedding* spk = nullptr;
  if (a.speaker_id.empty()) {
    require(store.entries.size() == 1,
            "--speaker-id required when the store has multiple entries");
    spk = &store.entries.front();
  } else {
    for (const auto& e : store.entries) {
      if (e.speaker_id == a.speaker_id) {
        spk = &e;
        break;
      }
    }
    require(spk != nullptr, "speaker id not found in store: " + a.speaker_id);
  }
  const auto mode = a.mode == "linear" ? assembly::UpsampleMode::kLinear
                                       : assembly::UpsampleMode::kRepeat;
  const auto assembled = assembly::assemble(content, track, *spk, mode);
  softunits::write_feat(a.output_path, assembled.frames);
  info("assembled %zux%zu frames (K=%zu D=%zu) -> %s\n",
              assembled.frames.rows, assembled.frames.cols,
              assembled.content_dim, assembled.speaker_dim,
              a.output_path.c_str());
  return kExitOk;
}

struct LossesArgs {
  std::string real_path, fake_path, report_path;
  vocloss::VocLossConfig cfg;
  std::size_t k_d = 8;
  std::size_t layers = 3;
  std::size_t disc_dim = 512;
  std::uint64_t disc_seed = 7;
};

int run_losses(const LossesArgs& a) {
  const auto real = dsp::read_wav(a.real_path);
  const auto fake = dsp::read_wav(a.fake_path);
  require(real.samples.size() == fake.samples.size(),
          "losses: real/fake length mismatch");

  // fixture discriminators see a fixed-size window of the waveform
  auto window = [&](const dsp::Waveform& w) {
    std::vector<double> x(a.disc_dim, 0.0);
    const std::size_t n = std::min<std::size_t>(a.disc_dim, w.samples.size());
    std::copy(w.samples.begin(), w.samples.begin() + n, x.begin());
    return x;
  };
  const auto bank =
      vocloss::make_discriminator_bank(a.disc_dim, a.k_d, a.layers, a.disc_seed);
  const auto real_feats = vocloss::apply_bank(bank, window(real));
  const auto fake_feats = vocloss::apply_bank(bank, window(fake));

  std::vector<std::vector<double>> real_scores, fake_scores;
  for (const auto& s : real_feats) real_scores.push_back(s.score);
  for (const auto& s : fake_feats) fake_scores.push_back(s.score);

  const double mel = vocloss::mel_loss(real, fake, a.cfg);
  const double fm = vocloss::feature_matching_loss(real_feats, fake_feats);
  const auto adv = vocloss::adversarial_losses(real_scores, fake_scores);
  const double gen = vocloss::generator_loss(real, fake, real_feats, fake_feats, a.cfg);

  std::string text;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "lambda_fm=%.6f\nlambda_mel=%.6f\n",
                a.cfg.lambda_fm, a.cfg.lambda_mel);
  text += buf;
  std::snprintf(buf, sizeof(buf),
                "mel_loss=%.9f\nfm_loss=%.9f\nadv_g=%.9f\nadv_d=%.9f\n"
                "generator_loss=%.9f\n",
                mel, fm, adv.generator, adv.discriminator, gen);
  text += buf;
  info("%s", text.c_str());
  if (!a.report_path.empty()) {
    std::ofstream out(a.report_path);
    require(out.good(), "cannot open for writing: " + a.report_path);
    out << text;
    require(out.good(), "short write: " + a.report_path);
  }
  return kExitOk;
}

struct EvalArgs {
  std::string scenario = "OO";
  std::string enroll_path, test_path, trials_path;
  std::string pool_path;
  std::string ref_path, hyp_path;
  std::string report_path, json_path, scores_path;
  std::string policy = "per-utterance";
  std::string unit = "word";
  std::size_t n_far = 200, n_avg = 100;
  std::uint64_t seed = 0;
  eval::MetricParams metrics;
  unsigned threads = 0;
};

int run_eval(const EvalArgs& a) {
  eval::ScenarioConfig cfg;
  cfg.scenario = eval::parse_scenario(a.scenario);
  cfg.policy = a.policy == "per-speaker"
                   ? eval::AnonymizationPolicy::kPerSpeaker
                   : eval::AnonymizationPolicy::kPerUtterance;
  cfg.seed = a.seed;
  cfg.metrics = a.metrics;
  cfg.unit = a.unit == "char" ? eval::ErrorUnit::kChar : eval::ErrorUnit::kWord;
  cfg.threads = a.threads;

  const auto enroll = load_store(a.enroll_path);
  const auto test = load_store(a.test_path);
  const auto trials = eval::read_trials(a.trials_path);

  std::optional<pool::EmbeddingPool> ext_pool;
  eval::Anonymizer anonymizer = eval::Anonymizer::identity();
  const eval::Anonymizer* anon_ptr = nullptr;
  if (cfg.scenario == eval::Scenario::kOA || cfg.scenario == eval::Scenario::kAA) {
    require(!a.pool_path.empty(), "scenario " + a.scenario +
                                      " requires --pool for pseudo-speaker "
                                      "generation");
    ext_pool = load_store(a.pool_path);
    anonymizer = eval::Anonymizer::pool_based(*ext_pool, a.n_far, a.n_avg);
    anon_ptr = &anonymizer;
  } else if (cfg.scenario == eval::Scenario::kOR) {
    anon_ptr = &anonymizer;  // resynthesis passes the speaker vector through
  }

  std::optional<std::map<std::string, std::string>> refs, hyps;
  require(a.ref_path.empty() == a.hyp_path.empty(),
          "--ref and --hyp must be given together");
  if (!a.ref_path.empty()) {
    refs = eval::read_transcripts(a.ref_path);
    hyps = eval::read_transcripts(a.hyp_path);
  }

  const auto report = eval::run_scenario(
      enroll, test, trials, anon_ptr, cfg, refs ? &*refs : nullptr,
      hyps ? &*hyps : nullptr);

  if (!a.scores_path.empty()) eval::write_scores(a.scores_path, report.scores);
  if (!a.report_path.empty()) eval::write_report_text(a.report_path, report);
  if (!a.json_path.empty()) eval::write_report_json(a.json_path, report);

  info("scenario=%s\neer_percent=%.6f\nmin_dcf=%.6f\n",
              eval::scenario_name(report.scenario).c_str(), report.eer_percent,
              report.min_dcf);
  if (report.wer_or_cer.has_value())
    info("error_rate_percent=%.6f\n", *report.wer_or_cer);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spkanon: speaker anonymization toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default(true);
  bool quiet = false;
  int verbose = 0;
  app.add_flag("-v,--verbose", verbose, "more output (per-epoch losses)");
  app.add_flag("-q,--quiet", quiet, "suppress informational output");

  AnonPoolArgs anon_args;
  McAdamsArgs mcadams_args;
  F0Args f0_args;
  SoftTrainArgs soft_train_args;
  SoftExtractArgs soft_extract_args;
  AssembleArgs assemble_args;
  LossesArgs losses_args;
  EvalArgs eval_args;
  ConfigPaths config_paths[8];

  auto* anon = app.add_subcommand(
      "anon-pool", "generate pseudo-speaker embeddings from a pool");
  anon->add_option("--pool", anon_args.pool_path, "external embedding store")
      ->required();
  anon->add_option("--input", anon_args.input_path, "source embedding store")
      ->required();
  anon->add_option("--output", anon_args.output_path, "output embedding store")
      ->required();
  anon->add_option("--n-far", anon_args.n_far, "far candidate count");
  anon->add_option("--n-avg", anon_args.n_avg, "averaged candidate count");
  anon->add_option("--seed", anon_args.seed, "global seed");
  anon->add_option("--policy", anon_args.policy, "pseudo-speaker reuse policy")
      ->check(CLI::IsMember({"per-utterance", "per-speaker"}));
  anon->add_option("--threads", anon_args.threads, "worker threads (0 = auto)");
  setup_config(anon, config_paths[0]);

  auto* mca = app.add_subcommand("mcadams",
                                 "signal-processing baseline anonymizer");
  mca->add_option("--input", mcadams_args.input_path, "input WAV")->required();
  mca->add_option("--output", mcadams_args.output_path, "output WAV")->required();
  mca->add_option("--alpha", mcadams_args.cfg.alpha, "pole-angle exponent");
  mca->add_option("--frame-len", mcadams_args.cfg.frame_len, "frame length, samples");
  mca->add_option("--hop", mcadams_args.cfg.hop, "hop, samples");
  mca->add_option("--order", mcadams_args.cfg.lpc_order, "LPC order");
  setup_config(mca, config_paths[1]);

  auto* f0cmd = app.add_subcommand("f0", "extract an F0 track");
  f0cmd->add_option("--input", f0_args.input_path, "input WAV")->required();
  f0cmd->add_option("--output", f0_args.output_path, "output track text")
      ->required();
  f0cmd->add_option("--f-min", f0_args.cfg.f_min, "minimum F0, Hz");
  f0cmd->add_option("--f-max", f0_args.cfg.f_max, "maximum F0, Hz");
  f0cmd->add_option("--frame-len", f0_args.cfg.frame_len, "frame length, samples");
  f0cmd->add_option("--hop", f0_args.cfg.hop, "hop, samples");
  f0cmd->add_option("--threshold", f0_args.cfg.nccf_threshold, "NCCF voicing threshold");
  f0cmd->add_option("--transition-cost", f0_args.cfg.dp_transition_cost,
                    "DP octave/transition penalty weight");
  setup_config(f0cmd, config_paths[2]);

  auto* st = app.add_subcommand("soft-train",
                                "train the soft content head on features");
  st->add_option("--features", soft_train_args.feature_paths, "FEAT files")
      ->required();
  st->add_option("--units", soft_train_args.unit_paths,
                 "target unit files (else derived by k-means)");
  st->add_option("--output", soft_train_args.output_path, "output codebook")
      ->required();
  st->add_option("--k", soft_train_args.cfg.k, "codebook size");
  st->add_option("--e", soft_train_args.cfg.e, "projected dimension");
  st->add_option("--tau", soft_train_args.cfg.temperature, "softmax temperature");
  st->add_option("--lr", soft_train_args.cfg.lr, "learning rate");
  st->add_option("--epochs", soft_train_args.cfg.epochs, "training epochs");
  st->add_option("--batch", soft_train_args.cfg.batch_size,
                 "mini-batch size (0 = full batch)");
  st->add_option("--seed", soft_train_args.cfg.seed, "seed");
  st->add_option("--kmeans-iters", soft_train_args.kmeans_iters,
                 "k-means iterations when deriving units");
  st->add_option("--dump-units", soft_train_args.dump_units_dir,
                 "write derived unit files to this directory");
  setup_config(st, config_paths[3]);

  auto* se = app.add_subcommand("soft-extract",
                                "extract soft content features");
  se->add_option("--codebook", soft_extract_args.codebook_path, "codebook file")
      ->required();
  se->add_option("--features", soft_extract_args.features_path, "input FEAT")
      ->required();
  se->add_option("--output", soft_extract_args.output_path, "output FEAT")
      ->required();
  se->add_flag("--raw", soft_extract_args.raw,
               "emit projected vectors instead of unit distributions");
  setup_config(se, config_paths[4]);

  auto* asm_cmd = app.add_subcommand(
      "assemble", "concatenate content, F0 and speaker streams");
  asm_cmd->add_option("--content", assemble_args.content_path, "content FEAT")
      ->required();
  asm_cmd->add_option("--f0", assemble_args.f0_path, "F0 track text")->required();
  asm_cmd->add_option("--embeddings", assemble_args.embeddings_path,
                      "embedding store")
      ->required();
  asm_cmd->add_option("--speaker-id", assemble_args.speaker_id,
                      "record to use from the store");
  asm_cmd->add_option("--output", assemble_args.output_path, "output FEAT")
      ->required();
  asm_cmd->add_option("--mode", assemble_args.mode, "content upsampling mode")
      ->check(CLI::IsMember({"repeat", "linear"}));
  setup_config(asm_cmd, config_paths[5]);

  auto* losses = app.add_subcommand(
      "losses", "evaluate vocoder losses on a waveform pair");
  losses->add_option("--real", losses_args.real_path, "reference WAV")->required();
  losses->add_option("--fake", losses_args.fake_path, "generated WAV")->required();
  losses->add_option("--lambda-fm", losses_args.cfg.lambda_fm,
                     "feature-matching weight");
  losses->add_option("--lambda-mel", losses_args.cfg.lambda_mel, "mel weight");
  losses->add_option("--n-fft", losses_args.cfg.mel.n_fft, "mel FFT size");
  losses->add_option("--hop", losses_args.cfg.mel.hop, "mel hop");
  losses->add_option("--win", losses_args.cfg.mel.win, "mel window");
  losses->add_option("--n-mels", losses_args.cfg.mel.n_mels, "mel bands");
  losses->add_option("--f-min", losses_args.cfg.mel.f_min, "mel low cutoff");
  losses->add_option("--f-max", losses_args.cfg.mel.f_max, "mel high cutoff");
  losses->add_option("--kd", losses_args.k_d, "sub-discriminator count");
  losses->add_option("--layers", losses_args.layers, "layers per sub-discriminator");
  losses->add_option("--disc-dim", losses_args.disc_dim,
                     "fixture discriminator input window, samples");
  losses->add_option("--disc-seed", losses_args.disc_seed,
                     "fixture discriminator seed");
  losses->add_option("--report", losses_args.report_path, "write key=value report");
  setup_config(losses, config_paths[6]);

  auto* ev = app.add_subcommand("eval", "run a privacy/utility scenario");
  ev->add_option("--scenario", eval_args.scenario, "OO, OA, AA or OR")
      ->check(CLI::IsMember({"OO", "OA", "AA", "OR"}));
  ev->add_option("--enroll", eval_args.enroll_path, "enrollment store")->required();
  ev->add_option("--test", eval_args.test_path, "test store")->required();
  ev->add_option("--trials", eval_args.trials_path, "trial list")->required();
  ev->add_option("--pool", eval_args.pool_path, "external pool (OA/AA)");
  ev->add_option("--n-far", eval_args.n_far, "far candidate count");
  ev->add_option("--n-avg", eval_args.n_avg, "averaged candidate count");
  ev->add_option("--seed", eval_args.seed, "global seed");
  ev->add_option("--policy", eval_args.policy, "pseudo-speaker reuse policy")
      ->check(CLI::IsMember({"per-utterance", "per-speaker"}));
  ev->add_option("--ref", eval_args.ref_path, "reference transcripts");
  ev->add_option("--hyp", eval_args.hyp_path, "hypothesis transcripts");
  ev->add_option("--unit", eval_args.unit, "error-rate unit")
      ->check(CLI::IsMember({"word", "char"}));
  ev->add_option("--c-fa", eval_args.metrics.c_fa, "false-alarm cost");
  ev->add_option("--c-miss", eval_args.metrics.c_miss, "miss cost");
  ev->add_option("--p-target", eval_args.metrics.p_target, "target prior");
  ev->add_option("--report", eval_args.report_path, "write key=value report");
  ev->add_option("--json", eval_args.json_path, "write JSON report");
  ev->add_option("--scores", eval_args.scores_path, "write trial scores");
  ev->add_option("--threads", eval_args.threads, "worker threads (0 = auto)");
  setup_config(ev, config_paths[7]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::vector<std::pair<CLI::App*, std::function<int()>>> runners{
      {anon, [&] { return run_anon_pool(anon_args); }},
      {mca, [&] { return run_mcadams(mcadams_args); }},
      {f0cmd, [&] { return run_f0(f0_args); }},
      {st, [&] { return run_soft_train(soft_train_args); }},
      {se, [&] { return run_soft_extract(soft_extract_args); }},
      {asm_cmd, [&] { return run_assemble(assemble_args); }},
      {losses, [&] { return run_losses(losses_args); }},
      {ev, [&] { return run_eval(eval_args); }},
  };

  g_verbosity = quiet ? 0 : 1 + verbose;

  try {
    for (std::size_t i = 0; i < runners.size(); ++i) {
      if (!runners[i].first->parsed()) continue;
      if (!config_paths[i].config.empty())
        apply_config_file(runners[i].first, config_paths[i].config);
      if (!config_paths[i].dump.empty())
        dump_config_file(runners[i].first, config_paths[i].dump);
      return runners[i].second();
    }
    std::fprintf(stderr, "no subcommand selected\n");
    return kExitUsage;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const InvariantError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
}
