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

#include "spkanon/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace spkanon::eval {

namespace {

std::vector<double> renormalize(std::vector<double> v) {
  const double n = l2_norm(v);
  require(n > 0.0, "embedding mean collapsed to zero");
  for (double& x : v) x /= n;
  return v;
}

// Miss/false-alarm rates swept over candidate thresholds ascending, with a
// reject-all sentinel past the top score.
struct RateSweep {
  std::vector<double> thresholds;
  std::vector<double> p_miss;
  std::vector<double> p_fa;
};

RateSweep sweep_rates(const std::vector<TrialScore>& scores) {
  std::vector<double> targets, nontargets, all;
  for (const auto& s : scores) {
    require(std::isfinite(s.score), "non-finite trial score for " + s.enroll_id +
                                        " vs " + s.test_id);
    (s.label == TrialLabel::kTarget ? targets : nontargets).push_back(s.score);
    all.push_back(s.score);
  }
  require(!targets.empty() && !nontargets.empty(),
          "need at least one target and one nontarget trial");
  std::sort(targets.begin(), targets.end());
  std::sort(nontargets.begin(), nontargets.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  all.push_back(all.back() + 1.0);  // reject-all operating point

  RateSweep sweep;
  sweep.thresholds = all;
  const double nt = static_cast<double>(targets.size());
  const double nn = static_cast<double>(nontargets.size());
  double prev_miss = -1.0, prev_fa = 2.0;
  for (double t : all) {
    // accept if score >= t
    const auto miss_count =
        std::lower_bound(targets.begin(), targets.end(), t) - targets.begin();
    const auto reject_count =
        std::lower_bound(nontargets.begin(), nontargets.end(), t) -
        nontargets.begin();
    const double p_miss = static_cast<double>(miss_count) / nt;
    const double p_fa = (nn - static_cast<double>(reject_count)) / nn;
    check_invariant(p_miss >= prev_miss, "P_miss must be non-decreasing in t");
    check_invariant(p_fa <= prev_fa, "P_fa must be non-increasing in t");
    prev_miss = p_miss;
    prev_fa = p_fa;
    sweep.p_miss.push_back(p_miss);
    sweep.p_fa.push_back(p_fa);
  }
  return sweep;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

EmbeddingMap build_enrollment_models(const pool::EmbeddingPool& pool) {
  require(!pool.entries.empty(), "empty enrollment pool");
  std::map<std::string, std::pair<std::vector<double>, std::size_t>> sums;
  for (const auto& e : pool.entries) {
    auto& slot = sums[e.speaker_id];
    if (slot.first.empty()) slot.first.assign(pool.dim, 0.0);
    for (std::size_t d = 0; d < pool.dim; ++d) slot.first[d] += e.vector[d];
    ++slot.second;
  }
  EmbeddingMap out;
  for (auto& [id, slot] : sums) {
    for (double& x : slot.first) x /= static_cast<double>(slot.second);
    out[id] = renormalize(std::move(slot.first));
  }
  return out;
}

EmbeddingMap build_test_map(const pool::EmbeddingPool& pool) {
  require(!pool.entries.empty(), "empty test pool");
  EmbeddingMap out;
  for (const auto& e : pool.entries) {
    const bool inserted = out.emplace(e.speaker_id, e.vector).second;
    require(inserted, "duplicate test utterance id: " + e.speaker_id);
  }
  return out;
}

std::vector<TrialScore> score_trials(const EmbeddingMap& enroll,
                                     const EmbeddingMap& test,
                                     const std::vector<Trial>& trials) {
  std::vector<TrialScore> out;
  out.reserve(trials.size());
  for (const auto& t : trials) {
    const auto e = enroll.find(t.enroll_id);
    require(e != enroll.end(), "unresolved enrollment id: " + t.enroll_id);
    const auto x = test.find(t.test_id);
    require(x != test.end(), "unresolved test id: " + t.test_id);
    TrialScore s;
    s.enroll_id = t.enroll_id;
    s.test_id = t.test_id;
    s.label = t.label;
    s.score = 1.0 - pool::cosine_distance(e->second, x->second);
    out.push_back(std::move(s));
  }
  return out;
}

EerResult compute_eer(const std::vector<TrialScore>& scores) {
  const RateSweep sweep = sweep_rates(scores);
  std::size_t best = 0;
  double best_diff = std::abs(sweep.p_miss[0] - sweep.p_fa[0]);
  for (std::size_t i = 1; i < sweep.thresholds.size(); ++i) {
    const double diff = std::abs(sweep.p_miss[i] - sweep.p_fa[i]);
    if (diff < best_diff) {  // strict: ties keep the lower threshold
      best_diff = diff;
      best = i;
    }
  }
  EerResult r;
  r.eer_percent = 50.0 * (sweep.p_miss[best] + sweep.p_fa[best]);
  r.threshold = sweep.thresholds[best];
  return r;
}

double compute_min_dcf(const std::vector<TrialScore>& scores,
                       const MetricParams& params) {
  require(params.c_fa > 0.0 && params.c_miss > 0.0, "costs must be positive");
  require(params.p_target > 0.0 && params.p_target < 1.0,
          "p_target must be in (0, 1)");
  const RateSweep sweep = sweep_rates(scores);
  const double w_miss = params.c_miss * params.p_target;
  const double w_fa = params.c_fa * (1.0 - params.p_target);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sweep.thresholds.size(); ++i)
    best = std::min(best, w_miss * sweep.p_miss[i] + w_fa * sweep.p_fa[i]);
  return best / std::min(w_miss, w_fa);
}

std::vector<std::string> tokenize(const std::string& text, ErrorUnit unit) {
  std::vector<std::string> tokens;
  if (unit == ErrorUnit::kWord) {
    std::string cur;
    for (char c : text) {
      if (is_space(c)) {
        if (!cur.empty()) tokens.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
  }
  // UTF-8 code points; whitespace is skipped so "a b" and "ab" compare equal
  // in character mode, matching CER practice for unsegmented scripts.
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_space(static_cast<char>(c))) {
      ++i;
      continue;
    }
    std::size_t len = 1;
    if ((c & 0x80) == 0x00) len = 1;
    else if ((c & 0xe0) == 0xc0) len = 2;
    else if ((c & 0xf0) == 0xe0) len = 3;
    else if ((c & 0xf8) == 0xf0) len = 4;
    len = std::min(len, text.size() - i);
    tokens.push_back(text.substr(i, len));
    i += len;
  }
  return tokens;
}

std::size_t edit_distance(const std::vector<std::string>& ref,
                          const std::vector<std::string>& hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double error_rate(const std::vector<std::string>& ref,
                  const std::vector<std::string>& hyp) {
  require(!ref.empty(), "error_rate: empty reference");
  return 100.0 * static_cast<double>(edit_distance(ref, hyp)) /
         static_cast<double>(ref.size());
}

double corpus_error_rate(const std::map<std::string, std::string>& refs,
                         const std::map<std::string, std::string>& hyps,
                         const std::vector<std::string>& ids, ErrorUnit unit) {
  require(!ids.empty(), "corpus_error_rate: no utterance ids");
  std::size_t total_ops = 0, total_ref = 0;
  for (const auto& id : ids) {
    const auto r = refs.find(id);
    require(r != refs.end(), "missing reference transcript for " + id);
    const auto h = hyps.find(id);
    require(h != hyps.end(), "missing hypothesis transcript for " + id);
    const auto ref_tokens = tokenize(r->second, unit);
    require(!ref_tokens.empty(), "empty reference transcript for " + id);
    total_ops += edit_distance(ref_tokens, tokenize(h->second, unit));
    total_ref += ref_tokens.size();
  }
  return 100.0 * static_cast<double>(total_ops) / static_cast<double>(total_ref);
}

Scenario parse_scenario(const std::string& name) {
  if (name == "OO" || name == "oo") return Scenario::kOO;
  if (name == "OA" || name == "oa") return Scenario::kOA;
  if (name == "AA" || name == "aa") return Scenario::kAA;
  if (name == "OR" || name == "or") return Scenario::kOR;
  throw DataError("unknown scenario: " + name + " (expected OO, OA, AA or OR)");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kOO: return "OO";
    case Scenario::kOA: return "OA";
    case Scenario::kAA: return "AA";
    case Scenario::kOR: return "OR";
  }
  throw InvariantError("bad scenario enum");
}

pool::SpeakerEmbedding Anonymizer::apply(const pool::SpeakerEmbedding& src,
                                         std::uint64_t item_seed) const {
  switch (kind) {
    case Kind::kIdentity:
      return src;
    case Kind::kPool: {
      pool::AnonymizationParams params;
      params.n_far = n_far;
      params.n_avg = n_avg;
      params.seed = item_seed;
      return pool::generate_pseudo_embedding(*pool, src, params);
    }
    case Kind::kCustom:
      return custom(src, item_seed);
  }
  throw InvariantError("bad anonymizer kind");
}

Anonymizer Anonymizer::identity() { return Anonymizer{}; }

Anonymizer Anonymizer::pool_based(const pool::EmbeddingPool& pool,
                                  std::size_t n_far, std::size_t n_avg) {
  Anonymizer a;
  a.kind = Kind::kPool;
  a.pool = &pool;
  a.n_far = n_far;
  a.n_avg = n_avg;
  return a;
}

Anonymizer Anonymizer::custom_fn(
    std::function<pool::SpeakerEmbedding(const pool::SpeakerEmbedding&,
                                         std::uint64_t)> fn) {
  Anonymizer a;
  a.kind = Kind::kCustom;
  a.custom = std::move(fn);
  return a;
}

pool::EmbeddingPool anonymize_pool(const pool::EmbeddingPool& side,
                                   const Anonymizer& anon,
                                   AnonymizationPolicy policy,
                                   std::uint64_t seed, const std::string& tag,
                                   unsigned threads) {
  pool::EmbeddingPool out;
  if (policy == AnonymizationPolicy::kPerUtterance) {
    std::vector<pool::SpeakerEmbedding> results(side.entries.size());
    parallel_for(side.entries.size(), threads, [&](std::size_t i) {
      const auto& src = side.entries[i];
      const std::uint64_t item_seed =
          derive_seed(seed, tag + ":" + src.speaker_id, i);
      auto e = anon.apply(src, item_seed);
      e.speaker_id = src.speaker_id;  // keep trial ids resolvable
      results[i] = std::move(e);
    });
    for (auto& e : results) out.add(std::move(e));
    return out;
  }

  // per-speaker: one pseudo per speaker id
  std::map<std::string, pool::SpeakerEmbedding> reps;
  std::map<std::string, std::size_t> counts;
  for (const auto& e : side.entries) {
    auto [it, fresh] = reps.try_emplace(e.speaker_id, e);
    if (fresh) {
      counts[e.speaker_id] = 1;
      continue;
    }
    require(it->second.gender == e.gender,
            "inconsistent gender for speaker " + e.speaker_id);
    for (std::size_t d = 0; d < e.vector.size(); ++d)
      it->second.vector[d] += e.vector[d];
    ++counts[e.speaker_id];
  }
  std::map<std::string, pool::SpeakerEmbedding> pseudo;
  for (auto& [id, rep] : reps) {
    for (double& x : rep.vector) x /= static_cast<double>(counts[id]);
    rep.vector = renormalize(std::move(rep.vector));
    pseudo[id] = anon.apply(rep, derive_seed(seed, tag + ":" + id, 0));
  }
  for (const auto& e : side.entries) {
    auto anon_e = pseudo[e.speaker_id];
    anon_e.speaker_id = e.speaker_id;
    out.add(std::move(anon_e));
  }
  return out;
}

ScenarioReport run_scenario(const pool::EmbeddingPool& enroll,
                            const pool::EmbeddingPool& test,
                            const std::vector<Trial>& trials,
                            const Anonymizer* anonymizer,
                            const ScenarioConfig& cfg,
                            const std::map<std::string, std::string>* refs,
                            const std::map<std::string, std::string>* hyps) {
  require(!trials.empty(), "no trials given");
  const bool is_protected = cfg.scenario != Scenario::kOO;
  require(!is_protected || anonymizer != nullptr,
          "scenario " + scenario_name(cfg.scenario) + " requires an anonymizer");

  pool::EmbeddingPool enroll_side = enroll;
  pool::EmbeddingPool test_side = test;
  switch (cfg.scenario) {
    case Scenario::kOO:
      break;
    case Scenario::kOA:
      test_side = anonymize_pool(test, *anonymizer, cfg.policy, cfg.seed,
                                 "test", cfg.threads);
      break;
    case Scenario::kAA:
      // independent seed streams per side: the attacker's pseudo speakers
      // differ from the user's
      enroll_side = anonymize_pool(enroll, *anonymizer, cfg.policy, cfg.seed,
                                   "enroll", cfg.threads);
      test_side = anonymize_pool(test, *anonymizer, cfg.policy, cfg.seed,
                                 "test", cfg.threads);
      break;
    case Scenario::kOR: {
      // resynthesis keeps the original speaker vector
      const Anonymizer id = Anonymizer::identity();
      test_side = anonymize_pool(test, id, cfg.policy, cfg.seed, "test",
                                 cfg.threads);
      break;
    }
  }

  const EmbeddingMap enroll_models = build_enrollment_models(enroll_side);
  const EmbeddingMap test_map = build_test_map(test_side);

  ScenarioReport report;
  report.scenario = cfg.scenario;
  report.metrics = cfg.metrics;
  report.scores = score_trials(enroll_models, test_map, trials);
  const EerResult eer = compute_eer(report.scores);
  report.eer_percent = eer.eer_percent;
  report.eer_threshold = eer.threshold;
  report.min_dcf = compute_min_dcf(report.scores, cfg.metrics);

  report.counts.trials = trials.size();
  for (const auto& t : trials)
    ++(t.label == TrialLabel::kTarget ? report.counts.target
                                      : report.counts.nontarget);
  report.counts.enroll_models = enroll_models.size();
  report.counts.test_utterances = test_map.size();

  if (refs != nullptr && hyps != nullptr) {
    std::set<std::string> unique_ids;
    for (const auto& t : trials) unique_ids.insert(t.test_id);
    report.wer_or_cer = corpus_error_rate(
        *refs, *hyps,
        std::vector<std::string>(unique_ids.begin(), unique_ids.end()),
        cfg.unit);
  }
  return report;
}

std::vector<Trial> read_trials(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open trials file: " + path);
  std::vector<Trial> trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Trial t;
    std::string label;
    require(static_cast<bool>(ss >> t.enroll_id >> t.test_id >> label),
            "malformed trial on line " + std::to_string(line_no) + ": " + line);
    if (label == "target") {
      t.label = TrialLabel::kTarget;
    } else if (label == "nontarget") {
      t.label = TrialLabel::kNontarget;
    } else {
      throw DataError("trial label must be target|nontarget on line " +
                      std::to_string(line_no) + ": " + label);
    }
    trials.push_back(std::move(t));
  }
  return trials;
}

void write_trials(const std::string& path, const std::vector<Trial>& trials) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  for (const auto& t : trials)
    out << t.enroll_id << ' ' << t.test_id << ' '
        << (t.label == TrialLabel::kTarget ? "target" : "nontarget") << '\n';
  require(out.good(), "short write: " + path);
}

void write_scores(const std::string& path, const std::vector<TrialScore>& scores) {
  std::ofstream out(path);
  require(out.good(), "cannot open for writing: " + path);
  char buf[64];
  for (const auto& s : scores) {
    std::snprintf(buf, sizeof(buf), "%.6f", s.score);
    out << s.enroll_id << ' ' << s.test_id << ' ' << buf << '\n';
  }
  require(out.good(), "short write: " + path);
}

std::map<std::string, std::string> read_transcripts(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open transcript file: " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    require(tab != std::string::npos, "transcript line " +
                                          std::to_string(line_no) +
                                          " needs utt_id<TAB>text: " + path);
    const std::string id = line.substr(0, tab);
    require(!id.empty(), "empty utterance id on line " + std::to_string(line_no));
    const bool inserted = out.emplace(id, line.substr(tab + 1)).second;
    require(inserted, "duplicate transcript id: " + id);
  }
  return out;
}

namespace {

nlohmann::json report_json(const ScenarioReport& r) {
  nlohmann::json j;
  j["scenario"] = scenario_name(r.scenario);
  j["eer_percent"] = r.eer_percent;
  j["eer_threshold"] = r.eer_threshold;
  j["min_dcf"] = r.min_dcf;
  if (r.wer_or_cer.has_value()) j["error_rate_percent"] = *r.wer_or_cer;
  j["counts"] = {{"trials", r.counts.trials},
                 {"target", r.counts.target},
                 {"nontarget", r.counts.nontarget},
                 {"enroll_models", r.counts.enroll_models},
                 {"test_utterances", r.counts.test_utterances}};
  j["metric_params"] = {{"c_fa", r.metrics.c_fa},
                        {"c_miss", r.metrics.c_miss},
                        {"p_target", r.metrics.p_target}};
  return j;
}

}  // namespace

void write_report_text(const std::string& path, const ScenarioReport& r) {
  std::ostringstream out;
  char buf[64];
  out << "scenario=" << scenario_name(r.scenario) << '\n';
  std::snprintf(buf, sizeof(buf), "%.6f", r.eer_percent);
  out << "eer_percent=" << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.6f", r.eer_threshold);
  out << "eer_threshold=" << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.6f", r.min_dcf);
  out << "min_dcf=" << buf << '\n';
  if (r.wer_or_cer.has_value()) {
    std::snprintf(buf, sizeof(buf), "%.6f", *r.wer_or_cer);
    out << "error_rate_percent=" << buf << '\n';
  }
  out << "trials=" << r.counts.trials << '\n';
  out << "target_trials=" << r.counts.target << '\n';
  out << "nontarget_trials=" << r.counts.nontarget << '\n';
  out << "enroll_models=" << r.counts.enroll_models << '\n';
  out << "test_utterances=" << r.counts.test_utterances << '\n';
  std::ofstream f(path);
  require(f.good(), "cannot open for writing: " + path);
  f << out.str();
  require(f.good(), "short write: " + path);
}

std::string report_to_json(const ScenarioReport& r) {
  return report_json(r).dump(2);
}

void write_report_json(const std::string& path, const ScenarioReport& r) {
  std::ofstream f(path);
  require(f.good(), "cannot open for writing: " + path);
  f << report_to_json(r) << '\n';
  require(f.good(), "short write: " + path);
}

}  // namespace spkanon::eval
