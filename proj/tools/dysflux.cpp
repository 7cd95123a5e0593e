// dysflux: simulate, detect and score token-annotated dysfluent transcripts.
//
//   dysflux generate --transcripts t.txt --dict cmudict.dict --out m.jsonl
//   dysflux detect   --manifest m.jsonl --out p.jsonl
//   dysflux evaluate --manifest m.jsonl --predictions p.jsonl --report r.txt
//   dysflux features --wav a.wav --out a.lmel
//   dysflux vocab    --out vocab.txt [--manifest m.jsonl]
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dysflux/dysflux.hpp"

namespace {

using namespace dysflux;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct Options {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::string level;
  std::string dict_path;

  // generate
  std::string transcripts;
  std::string out;
  std::vector<std::string> types;
  std::string events_range;
  double fluent_fraction = -1.0;
  std::optional<double> split;
  unsigned jobs = 1;

  // detect / evaluate / features / vocab
  std::string manifest;
  std::string predictions;
  std::string report;
  std::string report_jsonl;
  std::string alignments;
  std::string wav;
  std::string out_dir;
};

std::string resolve_dict(const Options& o, const HarnessConfig& config) {
  if (!o.dict_path.empty()) return o.dict_path;
  if (!config.dictionary_path.empty()) return config.dictionary_path;
  if (const char* env = std::getenv("DYSFLUX_DICT")) return env;
#ifdef DYSFLUX_DATA_DIR
  const auto bundled = std::filesystem::path(DYSFLUX_DATA_DIR) / "cmudict.dict";
  if (std::filesystem::exists(bundled)) return bundled.string();
#endif
  return {};
}

HarnessConfig load_config(const Options& o) {
  HarnessConfig config;
  if (!o.config_path.empty()) {
    auto in = open_input(o.config_path);
    Json j;
    try {
      j = Json::parse(in);
    } catch (const Json::exception& ex) {
      throw Error(ErrorCode::InvalidConfig, o.config_path + ": " + ex.what());
    }
    apply_config_json(j, config);
  }
  if (o.seed) config.simulation.seed = *o.seed;
  if (!o.level.empty()) {
    const auto level = parse_level_name(o.level);
    if (!level) throw CLI::ValidationError("--level", "expected word or phoneme");
    config.simulation.level = *level;
  }
  return config;
}

int cmd_generate(const Options& o) {
  auto config = load_config(o);
  auto& sim = config.simulation;
  if (!o.types.empty()) {
    sim.enabled_types.clear();
    for (const auto& name : o.types) {
      const auto kind = parse_type_name(name);
      if (!kind) throw CLI::ValidationError("--types", "unknown dysfluency type '" + name + "'");
      sim.enabled_types.push_back(*kind);
    }
  }
  if (!o.events_range.empty()) {
    const auto dash = o.events_range.find('-');
    try {
      const int lo = std::stoi(o.events_range.substr(0, dash));
      const int hi = dash == std::string::npos ? lo : std::stoi(o.events_range.substr(dash + 1));
      sim.events_per_utterance = {lo, hi};
    } catch (const std::logic_error&) {
      throw CLI::ValidationError("--events", "expected N or MIN-MAX");
    }
  }
  if (o.fluent_fraction >= 0.0) sim.fluent_fraction = o.fluent_fraction;
  config.train_fraction = o.split;
  config.workers = o.jobs;
  const std::string transcripts = o.transcripts.empty() ? config.transcripts_path : o.transcripts;
  if (transcripts.empty()) throw CLI::RequiredError("--transcripts");
  const auto dict_path = resolve_dict(o, config);
  if (dict_path.empty()) throw CLI::RequiredError("--dict (or DYSFLUX_DICT)");

  auto in = open_input(transcripts);
  const auto lines = read_lines(in);
  if (lines.empty()) throw Error(ErrorCode::EmptyInput, "transcript file '" + transcripts + "' is empty");
  const auto dict = PronunciationDict::load_file(dict_path);
  auto out = open_output(o.out);
  const auto summary = run_generate(lines, config, dict, out);
  write_summary(std::cerr, summary);
  return 0;
}

std::vector<ManifestRecord> load_manifest(const std::string& path) {
  auto in = open_input(path);
  return read_manifest(in);
}

int cmd_detect(const Options& o) {
  const auto config = load_config(o);
  const auto records = load_manifest(o.manifest);
  std::optional<PronunciationDict> dict;
  const auto dict_path = resolve_dict(o, config);
  const bool needs_dict = std::any_of(records.begin(), records.end(), [](const ManifestRecord& r) {
    return r.level == AnnotationLevel::Phoneme;
  });
  if (needs_dict && !dict_path.empty()) dict = PronunciationDict::load_file(dict_path);
  std::optional<std::string> alignments;
  if (!o.alignments.empty()) alignments = o.alignments;
  const auto predictions = run_detect(records, dict ? &*dict : nullptr, config.detector, alignments);
  auto out = open_output(o.out);
  write_jsonl(out, predictions);
  std::size_t errors = 0;
  for (const auto& p : predictions) {
    if (p.error) {
      ++errors;
      std::cerr << p.utterance_id << ": " << *p.error << "\n";
    }
  }
  std::cerr << "predictions: " << predictions.size() << " (" << errors << " errors)\n";
  return 0;
}

int cmd_evaluate(const Options& o) {
  const auto records = load_manifest(o.manifest);
  auto pin = open_input(o.predictions);
  const auto predictions = read_predictions(pin);
  const auto reports = run_evaluate(records, predictions);
  std::optional<std::ofstream> jsonl;
  if (!o.report_jsonl.empty()) jsonl = open_output(o.report_jsonl);
  if (o.report.empty()) {
    write_reports(std::cout, jsonl ? &*jsonl : nullptr, reports);
  } else {
    auto table = open_output(o.report);
    write_reports(table, jsonl ? &*jsonl : nullptr, reports);
  }
  return 0;
}

int cmd_features(const Options& o) {
  if (!o.wav.empty()) {
    if (o.out.empty()) throw CLI::RequiredError("--out");
    const auto frames = log_mel(read_wav_file(o.wav));
    auto out = open_output(o.out);
    write_frames(out, frames);
    std::cerr << o.wav << ": " << frames.frames << " x " << frames.bands << "\n";
    return 0;
  }
  if (o.manifest.empty() || o.out_dir.empty()) {
    throw CLI::ValidationError("features", "give --wav/--out or --manifest/--out-dir");
  }
  std::filesystem::create_directories(o.out_dir);
  std::size_t done = 0;
  for (const auto& r : load_manifest(o.manifest)) {
    if (!r.audio_path) continue;
    const auto frames = log_mel(read_wav_file(*r.audio_path));
    auto out = open_output((std::filesystem::path(o.out_dir) / (r.utterance_id + ".lmel")).string());
    write_frames(out, frames);
    ++done;
  }
  std::cerr << "features: " << done << " files\n";
  return 0;
}

int cmd_vocab(const Options& o) {
  const auto config = load_config(o);
  Vocabulary vocab;
  if (config.simulation.level == AnnotationLevel::Phoneme) {
    vocab = build_phoneme_vocab();
  } else {
    std::set<std::string> words;
    if (!o.manifest.empty()) {
      for (const auto& r : load_manifest(o.manifest)) {
        for (auto& w : normalize_transcript(r.reference_text)) words.insert(std::move(w));
      }
    } else if (!o.transcripts.empty()) {
      auto in = open_input(o.transcripts);
      for (const auto& line : read_lines(in)) {
        for (auto& w : normalize_transcript(line)) words.insert(std::move(w));
      }
    }
    vocab = build_word_vocab({words.begin(), words.end()});
  }
  auto out = open_output(o.out);
  vocab.save(out);
  std::cerr << "vocabulary: " << vocab.size() << " symbols\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dysfluency token simulation, detection and evaluation"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--seed", o.seed, "Global RNG seed");
  app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--level", o.level, "Annotation level: word or phoneme");

  auto* gen = app.add_subcommand("generate", "Simulate an annotated manifest from transcripts");
  gen->add_option("--transcripts", o.transcripts, "One utterance per line");
  gen->add_option("--dict", o.dict_path, "CMU pronouncing dictionary");
  gen->add_option("--out", o.out, "Output manifest (JSONL)")->required();
  gen->add_option("--types", o.types, "Enabled dysfluency types")->delimiter(',');
  gen->add_option("--events", o.events_range, "Events per utterance, N or MIN-MAX");
  gen->add_option("--fluent-fraction", o.fluent_fraction, "Share of records left fluent");
  gen->add_option("--split", o.split, "Train fraction; tags records train/test")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);

  auto* det = app.add_subcommand("detect", "Run the oracle detector over a manifest");
  det->add_option("--manifest", o.manifest)->required();
  det->add_option("--out", o.out, "Output predictions (JSONL)")->required();
  det->add_option("--dict", o.dict_path, "CMU dictionary (phoneme level)");
  det->add_option("--alignments", o.alignments, "Directory of <utterance_id>.txt forced alignments");

  auto* eval = app.add_subcommand("evaluate", "Score predictions against a manifest");
  eval->add_option("--manifest", o.manifest)->required();
  eval->add_option("--predictions", o.predictions)->required();
  eval->add_option("--report", o.report, "Text table (default stdout)");
  eval->add_option("--report-jsonl", o.report_jsonl, "One JSON object per row");

  auto* feat = app.add_subcommand("features", "Log-mel features from 16 kHz WAV");
  feat->add_option("--wav", o.wav);
  feat->add_option("--out", o.out);
  feat->add_option("--manifest", o.manifest);
  feat->add_option("--out-dir", o.out_dir);

  auto* voc = app.add_subcommand("vocab", "Write a vocabulary file");
  voc->add_option("--out", o.out)->required();
  voc->add_option("--manifest", o.manifest, "Collect word-level base words from a manifest");
  voc->add_option("--transcripts", o.transcripts, "Collect base words from transcripts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*det) return cmd_detect(o);
    if (*eval) return cmd_evaluate(o);
    if (*feat) return cmd_features(o);
    if (*voc) return cmd_vocab(o);
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}
