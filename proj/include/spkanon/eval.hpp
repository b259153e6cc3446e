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

#ifndef SPKANON_EVAL_HPP_
#define SPKANON_EVAL_HPP_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spkanon/pool.hpp"

namespace spkanon::eval {

enum class TrialLabel { kTarget, kNontarget };

struct Trial {
  std::string enroll_id;
  std::string test_id;
  TrialLabel label = TrialLabel::kNontarget;
};

struct TrialScore {
  std::string enroll_id;
  std::string test_id;
  double score = 0.0;
  TrialLabel label = TrialLabel::kNontarget;
};

struct MetricParams {
  double c_fa = 1.0;
  double c_miss = 1.0;
  double p_target = 0.01;
};

using EmbeddingMap = std::map<std::string, std::vector<double>>;

// Mean-then-renormalize per speaker id (multi-utterance enrollment).
EmbeddingMap build_enrollment_models(const pool::EmbeddingPool& pool);

// One record per utterance; duplicate ids are rejected.
EmbeddingMap build_test_map(const pool::EmbeddingPool& pool);

// Cosine similarity in [-1, 1] per trial.
std::vector<TrialScore> score_trials(const EmbeddingMap& enroll,
                                     const EmbeddingMap& test,
                                     const std::vector<Trial>& trials);

struct EerResult {
  double eer_percent = 0.0;
  double threshold = 0.0;
};

// Threshold sweep over all distinct scores plus a reject-all sentinel;
// decision rule: accept if score >= threshold. EER is the midpoint of
// (P_miss, P_fa) at the |P_miss - P_fa|-minimizing threshold, ties to the
// lower threshold.
EerResult compute_eer(const std::vector<TrialScore>& scores);

// min over the same sweep of c_miss*p_t*P_miss + c_fa*(1-p_t)*P_fa,
// normalized by min(c_miss*p_t, c_fa*(1-p_t)).
double compute_min_dcf(const std::vector<TrialScore>& scores,
                       const MetricParams& params);

enum class ErrorUnit { kWord, kChar };

std::vector<std::string> tokenize(const std::string& text, ErrorUnit unit);

// Uniform-cost Levenshtein distance on token sequences.
std::size_t edit_distance(const std::vector<std::string>& ref,
                          const std::vector<std::string>& hyp);

// 100 * (S + D + I) / len(ref); ref must be non-empty.
double error_rate(const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp);

// Pooled over utterances: 100 * sum(dist) / sum(ref_len).
double corpus_error_rate(const std::map<std::string, std::string>& refs,
                         const std::map<std::string, std::string>& hyps,
                         const std::vector<std::string>& ids, ErrorUnit unit);

enum class Scenario { kOO, kOA, kAA, kOR };

Scenario parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);

enum class AnonymizationPolicy { kPerUtterance, kPerSpeaker };

// Embedding-level anonymizer used by the scenario runner. Pool-based pseudo
// substitution is the production path; custom transforms exist for tests.
struct Anonymizer {
  enum class Kind { kIdentity, kPool, kCustom };
  Kind kind = Kind::kIdentity;
  const pool::EmbeddingPool* pool = nullptr;
  std::size_t n_far = 200;
  std::size_t n_avg = 100;
  std::function<pool::SpeakerEmbedding(const pool::SpeakerEmbedding&,
                                       std::uint64_t)> custom;

  pool::SpeakerEmbedding apply(const pool::SpeakerEmbedding& src,
                               std::uint64_t item_seed) const;

  static Anonymizer identity();
  static Anonymizer pool_based(const pool::EmbeddingPool& pool,
                               std::size_t n_far, std::size_t n_avg);
  static Anonymizer custom_fn(
      std::function<pool::SpeakerEmbedding(const pool::SpeakerEmbedding&,
                                           std::uint64_t)> fn);
};

// Anonymize every utterance of one side. Per-speaker policy derives one
// pseudo identity per speaker id (from the normalized mean utterance) and
// reuses it; per-utterance re-draws per record. Output records keep the
// input speaker ids so trial lists stay resolvable.
pool::EmbeddingPool anonymize_pool(const pool::EmbeddingPool& side,
                                   const Anonymizer& anonymizer,
                                   AnonymizationPolicy policy,
                                   std::uint64_t seed, const std::string& tag,
                                   unsigned threads);

struct ScenarioConfig {
  Scenario scenario = Scenario::kOO;
  AnonymizationPolicy policy = AnonymizationPolicy::kPerUtterance;
  std::uint64_t seed = 0;
  MetricParams metrics;
  ErrorUnit unit = ErrorUnit::kWord;
  unsigned threads = 1;
};

struct ScenarioCounts {
  std::size_t trials = 0;
  std::size_t target = 0;
  std::size_t nontarget = 0;
  std::size_t enroll_models = 0;
  std::size_t test_utterances = 0;
};

struct ScenarioReport {
  Scenario scenario = Scenario::kOO;
  double eer_percent = 0.0;
  double eer_threshold = 0.0;
  double min_dcf = 0.0;
  std::optional<double> wer_or_cer;
  ScenarioCounts counts;
  MetricParams metrics;
  std::vector<TrialScore> scores;
};

// Applies pseudo-speaker substitution to the side(s) the scenario dictates
// (OA: test; AA: both, with independent seed streams; OR: test side passes
// the original speaker vector through), scores the trials, and computes
// EER/minDCF plus the error rate when transcripts are supplied.
ScenarioReport run_scenario(const pool::EmbeddingPool& enroll,
                            const pool::EmbeddingPool& test,
                            const std::vector<Trial>& trials,
                            const Anonymizer* anonymizer,
                            const ScenarioConfig& cfg,
                            const std::map<std::string, std::string>* refs = nullptr,
                            const std::map<std::string, std::string>* hyps = nullptr);

// Trial list lines: "enroll_id test_id target|nontarget".
std::vector<Trial> read_trials(const std::string& path);
void write_trials(const std::string& path, const std::vector<Trial>& trials);

// Score file lines: "enroll_id test_id score".
void write_scores(const std::string& path, const std::vector<TrialScore>& scores);

// Transcript lines: "utt_id<TAB>text".
std::map<std::string, std::string> read_transcripts(const std::string& path);

// key=value report plus a JSON mirror of the same fields.
void write_report_text(const std::string& path, const ScenarioReport& report);
std::string report_to_json(const ScenarioReport& report);
void write_report_json(const std::string& path, const ScenarioReport& report);

}  // namespace spkanon::eval

#endif  // SPKANON_EVAL_HPP_
