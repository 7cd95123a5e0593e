#pragma once

// Pipeline stages behind the CLI verbs. Each stage reads and writes the
// manifest/prediction/report formats so it can be driven from files or
// from tests.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dysflux/align.hpp"
#include "dysflux/annotation.hpp"
#include "dysflux/error.hpp"
#include "dysflux/manifest.hpp"
#include "dysflux/metrics.hpp"
#include "dysflux/phoneme.hpp"
#include "dysflux/simulator.hpp"
#include "dysflux/tokenizer.hpp"

namespace dysflux {

struct HarnessConfig {
  SimulationConfig simulation;
  DetectorConfig detector;
  std::string transcripts_path;
  std::string dictionary_path;
  std::string manifest_path;
  std::string predictions_path;
  std::string report_path;
  std::optional<double> train_fraction;  // --split
  unsigned workers = 1;
};

namespace detail {

template <typename T>
Range<T> range_from_json(const Json& j, const char* key) {
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorCode::InvalidConfig, std::string(key) + " must be [min, max]");
  }
  return Range<T>{j[0].get<T>(), j[1].get<T>()};
}

}  // namespace detail

/// Overlays the keys present in a JSON config object onto `config`.
inline void apply_config_json(const Json& j, HarnessConfig& config) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  auto& sim = config.simulation;
  try {
    if (auto it = j.find("level"); it != j.end()) {
      const auto level = parse_level_name(it->get<std::string>());
      if (!level) throw Error(ErrorCode::InvalidConfig, "unknown level");
      sim.level = *level;
    }
    if (auto it = j.find("enabled_types"); it != j.end()) {
      sim.enabled_types.clear();
      for (const auto& t : *it) {
        const auto kind = parse_type_name(t.get<std::string>());
        if (!kind) throw Error(ErrorCode::InvalidConfig, "unknown type " + t.dump());
        sim.enabled_types.push_back(*kind);
      }
    }
    if (auto it = j.find("type_weights"); it != j.end()) {
      sim.type_weights.clear();
      for (const auto& [name, w] : it->items()) {
        const auto kind = parse_type_name(name);
        if (!kind) throw Error(ErrorCode::InvalidConfig, "unknown type " + name);
        sim.type_weights[*kind] = w.get<double>();
      }
    }
    if (auto it = j.find("events_per_utterance"); it != j.end()) {
      sim.events_per_utterance = detail::range_from_json<int>(*it, "events_per_utterance");
    }
    if (auto it = j.find("repetition_count_range"); it != j.end()) {
      sim.repetition_count = detail::range_from_json<int>(*it, "repetition_count_range");
    }
    if (auto it = j.find("prolongation_length_mark_count"); it != j.end()) {
      sim.prolongation_length_marks = detail::range_from_json<int>(*it, "prolongation_length_mark_count");
    }
    if (auto it = j.find("pause_duration_s"); it != j.end()) {
      sim.pause_duration_s = detail::range_from_json<double>(*it, "pause_duration_s");
    }
    if (auto it = j.find("filler_inventory"); it != j.end()) {
      sim.fillers = it->get<std::vector<std::string>>();
    }
    if (auto it = j.find("fluent_fraction"); it != j.end()) sim.fluent_fraction = it->get<double>();
    if (auto it = j.find("seed"); it != j.end()) sim.seed = it->get<std::uint64_t>();
    if (auto it = j.find("detector"); it != j.end()) {
      config.detector.pause_min_s = it->value("pause_min_s", config.detector.pause_min_s);
      config.detector.prolongation_factor =
          it->value("prolongation_factor", config.detector.prolongation_factor);
    }
    if (auto it = j.find("transcripts"); it != j.end()) config.transcripts_path = it->get<std::string>();
    if (auto it = j.find("dictionary"); it != j.end()) config.dictionary_path = it->get<std::string>();
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::InvalidConfig, ex.what());
  }
}

inline std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
  }
  return lines;
}

/// Deterministic train/test tag from the record id.
inline std::string split_tag(std::uint64_t seed, const std::string& utterance_id, double train_fraction) {
  const double u = static_cast<double>(record_seed(seed ^ 0x5euLL, utterance_id) >> 11) * 0x1.0p-53;
  return u < train_fraction ? "train" : "test";
}

struct GenerateSummary {
  std::size_t records = 0;
  std::size_t skipped_oov = 0;
  std::size_t skipped_short = 0;
  std::map<DysfluencyType, std::size_t> type_counts;
};

inline GenerateSummary run_generate(const std::vector<std::string>& transcripts,
                                    const HarnessConfig& config, const PronunciationDict& dict,
                                    std::ostream& manifest) {
  auto corpus = simulate_corpus(transcripts, config.simulation, dict, config.workers);
  if (config.train_fraction) {
    for (auto& r : corpus.records) {
      r.metadata["split"] = split_tag(config.simulation.seed, r.utterance_id, *config.train_fraction);
    }
  }
  write_jsonl(manifest, corpus.records);
  return GenerateSummary{corpus.records.size(), corpus.skipped_oov, corpus.skipped_short,
                         corpus.type_counts};
}

inline void write_summary(std::ostream& out, const GenerateSummary& s) {
  out << "records: " << s.records << "\n";
  out << "skipped (out of vocabulary): " << s.skipped_oov << "\n";
  out << "skipped (too short): " << s.skipped_short << "\n";
  for (auto t : kAllTypes) {
    auto it = s.type_counts.find(t);
    if (it != s.type_counts.end()) out << to_string(t) << ": " << it->second << "\n";
  }
}

/// Canonical reference units of a record at its level.
inline std::vector<std::string> reference_units(const ManifestRecord& r, const PronunciationDict* dict) {
  const auto words = normalize_transcript(r.reference_text);
  if (r.level == AnnotationLevel::Word) return words;
  if (!dict) throw Error(ErrorCode::OutOfVocabulary, "phoneme-level detection needs a dictionary");
  return g2p_words(words, *dict);
}

/// Runs the oracle detector over every record. Failures become per-record
/// error entries. When `alignment_dir` is given, "<dir>/<utterance_id>.txt"
/// (if present) replaces the record's realized units as the observation.
inline std::vector<PredictionRecord> run_detect(const std::vector<ManifestRecord>& records,
                                                const PronunciationDict* dict,
                                                const DetectorConfig& detector,
                                                const std::optional<std::string>& alignment_dir = {}) {
  std::vector<PredictionRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    PredictionRecord p;
    p.utterance_id = r.utterance_id;
    p.level = r.level;
    try {
      std::vector<TimedUnit> observed = r.realized_units;
      if (alignment_dir) {
        const auto path = std::filesystem::path(*alignment_dir) / (r.utterance_id + ".txt");
        if (std::filesystem::exists(path)) {
          std::ifstream in(path);
          observed = read_alignment(in);
        }
      }
      if (observed.empty()) throw Error(ErrorCode::EmptyObserved, "missing realized_units");
      const auto annotated = detect_oracle(reference_units(r, dict), observed, r.level, detector);
      p.annotated_text = render_annotated(annotated);
      p.events = token_to_time(annotated, observed);
    } catch (const Error& ex) {
      p.error = ex.what();
    }
    out.push_back(std::move(p));
  }
  return out;
}

namespace detail {

inline bool same_loci(const std::vector<DysfluencyEvent>& a, const std::vector<DysfluencyEvent>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!a[k].same_locus(b[k])) return false;
  }
  return true;
}

inline std::optional<AnnotatedSequence> try_parse(const std::string& text, AnnotationLevel level) {
  try {
    return parse_annotated(text, level);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace detail

/// Joins manifest and predictions by id and scores them, one report per
/// level present (word first). Stored events are used when they agree with
/// the annotated text; otherwise the events derived from the text are.
inline std::vector<EvalReport> run_evaluate(const std::vector<ManifestRecord>& records,
                                            const std::vector<PredictionRecord>& predictions) {
  std::map<std::string, const PredictionRecord*> by_id;
  for (const auto& p : predictions) by_id[p.utterance_id] = &p;
  std::set<std::string> manifest_ids;
  std::vector<std::string> missing;
  for (const auto& r : records) {
    manifest_ids.insert(r.utterance_id);
    if (!by_id.count(r.utterance_id)) missing.push_back(r.utterance_id);
  }
  std::vector<std::string> extra;
  for (const auto& [id, p] : by_id) {
    if (!manifest_ids.count(id)) extra.push_back(id);
  }
  if (!missing.empty() || !extra.empty()) {
    throw Error(ErrorCode::IdMismatch, "missing predictions: [" + join(missing, ", ") +
                                           "] extra predictions: [" + join(extra, ", ") + "]");
  }
  if (records.empty()) throw Error(ErrorCode::EmptyEvalSet, "empty manifest");

  std::set<std::string> words;
  for (const auto& r : records) {
    if (r.level == AnnotationLevel::Word) {
      for (auto& w : normalize_transcript(r.reference_text)) words.insert(std::move(w));
    }
  }
  const auto word_vocab = build_word_vocab({words.begin(), words.end()});
  const auto phone_vocab = build_phoneme_vocab();

  std::map<AnnotationLevel, std::vector<UtteranceEval>> by_level;
  for (const auto& r : records) {
    const auto& vocab = r.level == AnnotationLevel::Word ? word_vocab : phone_vocab;
    const auto truth = parse_annotated(r.annotated_text, r.level);
    UtteranceEval e;
    const auto derived = events_of(truth);
    e.true_events = detail::same_loci(r.events, derived) ? r.events : derived;
    e.reference_length = truth.reference_length();
    try {
      e.true_tokens = encode_content(truth, vocab);
    } catch (const Error& ex) {
      throw Error(ErrorCode::MalformedManifest, r.utterance_id + ": " + ex.what());
    }
    const auto* p = by_id.at(r.utterance_id);
    if (!p->error && p->level == r.level) {
      if (auto pred = detail::try_parse(p->annotated_text, r.level)) {
        const auto pred_derived = events_of(*pred);
        e.predicted_events = detail::same_loci(p->events, pred_derived) ? p->events : pred_derived;
        try {
          e.predicted_tokens = encode_content(*pred, vocab);
        } catch (const Error&) {
          e.predicted_tokens.clear();
        }
      }
    }
    by_level[r.level].push_back(std::move(e));
  }

  std::vector<EvalReport> reports;
  for (auto& [level, evals] : by_level) {
    reports.push_back(build_report(level, group_by_type(evals), &evals));
  }
  return reports;
}

inline void write_reports(std::ostream& table, std::ostream* jsonl, const std::vector<EvalReport>& reports) {
  for (std::size_t k = 0; k < reports.size(); ++k) {
    if (k) table << '\n';
    write_report_table(table, reports[k]);
    if (jsonl) write_report_jsonl(*jsonl, reports[k]);
  }
}

}  // namespace dysflux
