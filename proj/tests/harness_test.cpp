#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "dysflux/audio.hpp"
#include "dysflux/harness.hpp"
#include "test_support.hpp"

namespace {

using namespace dysflux;
using T = DysfluencyType;
using L = AnnotationLevel;
using test_support::dict;

HarnessConfig config_for(L level, std::uint64_t seed = 7) {
  HarnessConfig c;
  c.simulation.level = level;
  c.simulation.seed = seed;
  return c;
}

std::vector<ManifestRecord> generate(const HarnessConfig& c, std::vector<std::string> lines = {}) {
  if (lines.empty()) lines = test_support::transcripts();
  std::stringstream manifest;
  run_generate(lines, c, dict(), manifest);
  return read_manifest(manifest);
}

std::vector<PredictionRecord> truth_as_predictions(const std::vector<ManifestRecord>& records) {
  std::vector<PredictionRecord> out;
  for (const auto& r : records) {
    PredictionRecord p;
    p.utterance_id = r.utterance_id;
    p.level = r.level;
    p.annotated_text = r.annotated_text;
    p.events = r.events;
    out.push_back(p);
  }
  return out;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dysflux_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(Manifest, RecordRoundTripKeepsAudioPathAndMetadata) {
  auto records = generate(config_for(L::Word), {"please call stella", "ask her to bring these things"});
  ASSERT_EQ(records.size(), 2u);
  records[0].audio_path = "wav/utt000001.wav";
  records[0].metadata["speaker"] = "synthetic-1";
  std::stringstream buf;
  write_jsonl(buf, records);
  EXPECT_NE(buf.str().find("\"audio_path\":\"wav/utt000001.wav\""), std::string::npos);
  const auto back = read_manifest(buf);
  EXPECT_EQ(back, records);
  EXPECT_FALSE(back[1].audio_path.has_value());
}

TEST(Manifest, MalformedLinesReportTheirLineNumber) {
  std::istringstream bad("\n{\"utterance_id\": \"a\"}\n");
  try {
    read_manifest(bad);
    FAIL() << "expected an error";
  } catch (const Error& ex) {
    EXPECT_EQ(ex.code(), ErrorCode::MalformedManifest);
    EXPECT_NE(std::string(ex.what()).find("line 2"), std::string::npos) << ex.what();
  }
  std::istringstream junk("{not json\n");
  EXPECT_DYSFLUX_ERROR(read_manifest(junk), ErrorCode::MalformedManifest);
}

TEST(Generate, SameSeedSameBytes) {
  const auto c = config_for(L::Phoneme);
  std::stringstream a;
  std::stringstream b;
  run_generate(test_support::transcripts(), c, dict(), a);
  run_generate(test_support::transcripts(), c, dict(), b);
  EXPECT_EQ(a.str(), b.str());
}

TEST(Generate, SplitTagsAreDeterministicAndCoverBothSides) {
  auto c = config_for(L::Word);
  c.train_fraction = 0.8;
  const auto records = generate(c);
  std::size_t train = 0;
  for (const auto& r : records) {
    const auto tag = r.metadata.at("split").get<std::string>();
    ASSERT_TRUE(tag == "train" || tag == "test");
    EXPECT_EQ(tag, split_tag(7, r.utterance_id, 0.8));
    train += tag == "train";
  }
  EXPECT_GT(train, 60u);
  EXPECT_LT(train, 95u);
  EXPECT_EQ(split_tag(7, "utt000003", 1.0), "train");
  EXPECT_EQ(split_tag(7, "utt000003", 0.0), "test");
}

TEST(Generate, SummaryListsCounts) {
  std::stringstream manifest;
  const auto s = run_generate({"please call stella", "zzqx call", "hi"}, config_for(L::Word), dict(), manifest);
  std::ostringstream out;
  write_summary(out, s);
  EXPECT_NE(out.str().find("records: 1"), std::string::npos);
  EXPECT_NE(out.str().find("skipped (out of vocabulary): 1"), std::string::npos);
  EXPECT_NE(out.str().find("skipped (too short): 1"), std::string::npos);
}

TEST(Detect, MissingObservationBecomesAnErrorEntryAndTheRunContinues) {
  auto records = generate(config_for(L::Word), {"please call stella", "ask her to bring these things"});
  records[0].realized_units.clear();
  const auto preds = run_detect(records, &dict(), DetectorConfig{});
  ASSERT_EQ(preds.size(), 2u);
  EXPECT_TRUE(preds[0].error.has_value());
  EXPECT_FALSE(preds[1].error.has_value());
  EXPECT_EQ(preds[1].annotated_text, records[1].annotated_text);
  EXPECT_NO_THROW(run_evaluate(records, preds));
}

TEST(Detect, FluentManifestGivesNoMarkers) {
  auto c = config_for(L::Phoneme);
  c.simulation.fluent_fraction = 1.0;
  const auto records = generate(c);
  for (const auto& p : run_detect(records, &dict(), c.detector)) {
    ASSERT_FALSE(p.error) << *p.error;
    EXPECT_TRUE(p.events.empty()) << p.annotated_text;
  }
}

TEST(Detect, AlignmentFilesOverrideRealizedUnits) {
  const auto records = generate(config_for(L::Word), {"please call stella"});
  const auto dir = scratch_dir("align");
  {
    std::ofstream f(dir / (records[0].utterance_id + ".txt"));
    f << "# unit start end\nplease 0.0 0.3\ncall 0.3 0.6\ncall 0.6 0.9\nstella 0.9 1.3\n";
  }
  const auto preds = run_detect(records, &dict(), DetectorConfig{}, dir.string());
  ASSERT_FALSE(preds[0].error);
  EXPECT_EQ(preds[0].annotated_text, "please call [REP] stella");
  ASSERT_EQ(preds[0].events.size(), 1u);
  EXPECT_NEAR(preds[0].events[0].bounds->start, 0.3, 1e-12);
  EXPECT_NEAR(preds[0].events[0].bounds->end, 0.6, 1e-12);
}

TEST(Evaluate, PerfectPredictionsScorePerfectly) {
  for (auto level : {L::Word, L::Phoneme}) {
    const auto records = generate(config_for(level));
    const auto reports = run_evaluate(records, truth_as_predictions(records));
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_TRUE(reports[0].has_bound_loss);
    for (const auto& row : reports[0].rows) {
      EXPECT_EQ(row.ter_pct, 0.0) << row.label();
      EXPECT_EQ(row.eacc_pct, 100.0) << row.label();
      EXPECT_EQ(row.cacc_pct, 100.0) << row.label();
      EXPECT_EQ(row.td_e3, 0.0) << row.label();
      EXPECT_EQ(row.bl_ms, 0.0) << row.label();
    }
  }
}

TEST(Evaluate, PredictingFluencyEverywhereScoresTheFluentShare) {
  auto c = config_for(L::Word);
  c.simulation.fluent_fraction = 0.3;
  const auto records = generate(c, test_support::cycle(test_support::transcripts(), 400));
  std::size_t fluent = 0;
  auto preds = truth_as_predictions(records);
  for (std::size_t k = 0; k < records.size(); ++k) {
    fluent += records[k].events.empty();
    preds[k].annotated_text = records[k].reference_text;
    preds[k].events.clear();
  }
  const auto reports = run_evaluate(records, preds);
  const auto& all = reports[0].rows.back();
  ASSERT_FALSE(all.type.has_value());
  EXPECT_NEAR(*all.eacc_pct, 100.0 * static_cast<double>(fluent) / static_cast<double>(records.size()), 1e-9);
  EXPECT_EQ(all.cacc_pct, 0.0);
  EXPECT_GT(all.ter_pct, 0.0);
}

TEST(Evaluate, OneFrameShiftCostsTwentyMilliseconds) {
  auto c = config_for(L::Word);
  c.simulation.enabled_types = {T::Repetition, T::Insertion, T::Pause};
  const auto records = generate(c);
  auto preds = truth_as_predictions(records);
  for (auto& p : preds) {
    for (auto& e : p.events) e.bounds = TimeBound{e.bounds->start + 0.02, e.bounds->end + 0.02};
  }
  const auto reports = run_evaluate(records, preds);
  for (const auto& row : reports[0].rows) {
    ASSERT_TRUE(row.bl_ms.has_value()) << row.label();
    EXPECT_NEAR(*row.bl_ms, 20.0, 1e-9) << row.label();
    EXPECT_EQ(row.td_e3, 0.0);
  }
}

TEST(Evaluate, IdMismatchNamesTheOffenders) {
  const auto records = generate(config_for(L::Word), {"please call stella", "ask her to bring these things"});
  auto preds = truth_as_predictions(records);
  preds.pop_back();
  try {
    run_evaluate(records, preds);
    FAIL() << "expected an error";
  } catch (const Error& ex) {
    EXPECT_EQ(ex.code(), ErrorCode::IdMismatch);
    EXPECT_NE(std::string(ex.what()).find("utt000002"), std::string::npos) << ex.what();
  }
  EXPECT_DYSFLUX_ERROR(run_evaluate({}, {}), ErrorCode::EmptyEvalSet);
}

TEST(Evaluate, ReportsComeOutAsTableAndJsonLines) {
  const auto records = generate(config_for(L::Word));
  std::ostringstream table;
  std::ostringstream jsonl;
  write_reports(table, &jsonl, run_evaluate(records, truth_as_predictions(records)));
  EXPECT_NE(table.str().find("TER(%)"), std::string::npos);
  std::istringstream lines(jsonl.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    const auto j = Json::parse(line);
    for (const char* key : {"ter_pct", "eacc_pct", "cacc_pct", "td_e3", "bl_ms"}) EXPECT_TRUE(j.contains(key)) << key;
    ++rows;
  }
  EXPECT_EQ(rows, 5u);
}

TEST(Config, JsonKeysOverlayTheDefaults) {
  HarnessConfig c;
  apply_config_json(Json::parse(R"({
    "level": "phoneme", "enabled_types": ["Prolongation", "Substitution"],
    "events_per_utterance": [1, 2], "repetition_count_range": [1, 4],
    "prolongation_length_mark_count": [1, 3], "pause_duration_s": [0.4, 0.9],
    "filler_inventory": ["um"], "fluent_fraction": 0.25, "seed": 99,
    "type_weights": {"Prolongation": 3.0},
    "detector": {"pause_min_s": 0.3}, "dictionary": "d.dict", "transcripts": "t.txt"})"),
                    c);
  EXPECT_EQ(c.simulation.level, L::Phoneme);
  EXPECT_EQ(c.simulation.enabled_types, (std::vector<T>{T::Prolongation, T::Substitution}));
  EXPECT_EQ(c.simulation.events_per_utterance.max, 2);
  EXPECT_EQ(c.simulation.repetition_count.max, 4);
  EXPECT_EQ(c.simulation.prolongation_length_marks.max, 3);
  EXPECT_EQ(c.simulation.pause_duration_s.min, 0.4);
  EXPECT_EQ(c.simulation.fillers, (std::vector<std::string>{"um"}));
  EXPECT_EQ(c.simulation.fluent_fraction, 0.25);
  EXPECT_EQ(c.simulation.seed, 99u);
  EXPECT_EQ(c.simulation.type_weights.at(T::Prolongation), 3.0);
  EXPECT_EQ(c.detector.pause_min_s, 0.3);
  EXPECT_EQ(c.detector.prolongation_factor, DetectorConfig{}.prolongation_factor);
  EXPECT_EQ(c.dictionary_path, "d.dict");
  EXPECT_EQ(c.transcripts_path, "t.txt");

  EXPECT_DYSFLUX_ERROR(apply_config_json(Json::parse(R"({"level": "syllable"})"), c), ErrorCode::InvalidConfig);
  EXPECT_DYSFLUX_ERROR(apply_config_json(Json::parse(R"({"seed": "seven"})"), c), ErrorCode::InvalidConfig);
  EXPECT_DYSFLUX_ERROR(apply_config_json(Json::parse(R"({"pause_duration_s": [1]})"), c), ErrorCode::InvalidConfig);
  EXPECT_DYSFLUX_ERROR(apply_config_json(Json::array(), c), ErrorCode::InvalidConfig);
}

// The synthesis side fills audio_path; features are read back through it.
TEST(AudioPath, ManifestWavsFeedTheFeatureExtractor) {
  const auto dir = scratch_dir("audio");
  auto records = generate(config_for(L::Word), {"please call stella"});
  const auto wav = dir / "utt000001.wav";
  {
    Waveform w{std::vector<float>(16000, 0.0f), kSampleRate};
    for (std::size_t k = 0; k < w.samples.size(); ++k) w.samples[k] = (k % 40 < 20) ? 0.25f : -0.25f;
    std::ofstream f(wav, std::ios::binary);
    write_wav_pcm16(f, w);
  }
  records[0].audio_path = wav.string();
  std::stringstream buf;
  write_jsonl(buf, records);
  const auto back = read_manifest(buf);
  ASSERT_TRUE(back[0].audio_path);
  const auto frames = log_mel(read_wav_file(*back[0].audio_path));
  EXPECT_EQ(frames.frames, 101u);

  Waveform slow{std::vector<float>(22050, 0.0f), 22050};
  const auto bad = dir / "slow.wav";
  {
    std::ofstream f(bad, std::ios::binary);
    write_wav_pcm16(f, slow);
  }
  EXPECT_DYSFLUX_ERROR(log_mel(read_wav_file(bad.string())), ErrorCode::WrongSampleRate);
}

}  // namespace
