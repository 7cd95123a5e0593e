#pragma once

// Text-space dysfluency injection: turns a reference transcript into
// (annotated text, realized units, IPA, ground-truth events).

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "dysflux/annotation.hpp"
#include "dysflux/error.hpp"
#include "dysflux/manifest.hpp"
#include "dysflux/phoneme.hpp"
#include "dysflux/timing.hpp"

namespace dysflux {

template <typename T>
struct Range {
  T min{};
  T max{};

  bool valid() const { return min <= max; }
  friend bool operator==(const Range&, const Range&) = default;
};

struct SimulationConfig {
  AnnotationLevel level = AnnotationLevel::Word;
  std::vector<DysfluencyType> enabled_types;  // empty means all four legal types
  std::map<DysfluencyType, double> type_weights;  // empty means uniform
  Range<int> events_per_utterance{1, 1};
  Range<int> repetition_count{1, 3};
  Range<int> prolongation_length_marks{1, 2};
  Range<double> pause_duration_s{0.5, 2.0};
  std::vector<std::string> fillers{"uh", "um"};
  double fluent_fraction = 0.0;
  std::uint64_t seed = 0;
  double phoneme_duration_s = 0.08;
  double word_duration_s = 0.32;

  std::vector<DysfluencyType> types() const {
    if (!enabled_types.empty()) return enabled_types;
    const auto all = level_types(level);
    return {all.begin(), all.end()};
  }

  double nominal_duration() const {
    return level == AnnotationLevel::Phoneme ? phoneme_duration_s : word_duration_s;
  }

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    for (auto t : types()) {
      if (!is_legal(t, level)) {
        throw Error(ErrorCode::IllegalKindForLevel,
                    std::string(to_string(t)) + " at " + std::string(to_string(level)) + " level");
      }
    }
    for (const auto& [t, w] : type_weights) {
      if (!(w >= 0.0)) fail("type weights must be non-negative");
      (void)t;
    }
    if (!events_per_utterance.valid() || events_per_utterance.min < 1) {
      fail("events_per_utterance must be a non-empty range with min >= 1");
    }
    if (!repetition_count.valid() || repetition_count.min < 1) fail("bad repetition_count range");
    if (!prolongation_length_marks.valid() || prolongation_length_marks.min < 1) {
      fail("bad prolongation_length_marks range");
    }
    if (!pause_duration_s.valid() || !(pause_duration_s.min > 0.0)) fail("bad pause_duration_s range");
    if (fillers.empty()) fail("filler inventory is empty");
    if (fluent_fraction < 0.0 || fluent_fraction > 1.0) fail("fluent_fraction outside [0,1]");
    if (!(phoneme_duration_s > 0.0) || !(word_duration_s > 0.0)) fail("unit durations must be > 0");
  }
};

/// Same-manner-or-place confusions for phoneme substitution.
inline const std::map<std::string, std::vector<std::string>, std::less<>>& confusability_table() {
  static const std::map<std::string, std::vector<std::string>, std::less<>> table = {
      {"AA", {"AO", "AH", "AE", "AW"}}, {"AE", {"EH", "AA", "AH"}},
      {"AH", {"AA", "AO", "UH", "ER", "EH"}}, {"AO", {"AA", "OW", "UH", "AH"}},
      {"AW", {"AA", "OW", "AO"}},       {"AY", {"AA", "EY", "OY"}},
      {"EH", {"IH", "AE", "AH", "AA", "EY"}}, {"ER", {"AH", "R", "UH"}},
      {"EY", {"EH", "IY", "AY"}},       {"IH", {"IY", "EH", "UH"}},
      {"IY", {"IH", "EY", "Y"}},        {"OW", {"AO", "UW", "AW"}},
      {"OY", {"AY", "AO", "OW"}},       {"UH", {"UW", "AH", "IH"}},
      {"UW", {"UH", "OW", "W"}},        {"B", {"P", "D", "G", "V", "M"}},
      {"CH", {"SH", "JH", "T"}},        {"D", {"T", "B", "G", "DH", "N"}},
      {"DH", {"TH", "D", "Z", "V"}},    {"F", {"V", "TH", "P", "S"}},
      {"G", {"K", "D", "B", "NG"}},     {"HH", {"F", "TH"}},
      {"JH", {"CH", "ZH", "D"}},        {"K", {"G", "T", "P"}},
      {"L", {"R", "W", "N"}},           {"M", {"N", "NG", "B"}},
      {"N", {"M", "NG", "D", "L"}},     {"NG", {"N", "M", "G"}},
      {"P", {"B", "T", "K", "F"}},      {"R", {"L", "W", "ER"}},
      {"S", {"Z", "SH", "F", "TH"}},    {"SH", {"S", "ZH", "CH"}},
      {"T", {"D", "P", "K", "CH"}},     {"TH", {"F", "DH", "S"}},
      {"V", {"F", "B", "DH"}},          {"W", {"V", "R", "UW"}},
      {"Y", {"IY", "L"}},               {"Z", {"S", "ZH", "DH"}},
      {"ZH", {"SH", "Z", "JH"}},
  };
  return table;
}

/// Fully specified injection. Fields irrelevant to `kind` are ignored.
struct EventSpec {
  DysfluencyType kind = DysfluencyType::Repetition;
  std::size_t anchor = 0;
  int repeat_count = 1;
  std::string payload;  // substitute phoneme or inserted filler
  double pause_s = 1.0;
  int length_marks = 1;
};

struct RealizedUnit {
  std::string symbol;
  double duration_s = 0.0;
  int length_marks = 0;

  friend bool operator==(const RealizedUnit&, const RealizedUnit&) = default;
};

struct RealizedSequence {
  AnnotationLevel level = AnnotationLevel::Word;
  std::vector<RealizedUnit> units;

  std::vector<std::string> symbols() const {
    std::vector<std::string> out;
    out.reserve(units.size());
    for (const auto& u : units) out.push_back(u.symbol);
    return out;
  }

  std::vector<TimedUnit> timed() const {
    std::vector<TimedUnit> out;
    out.reserve(units.size());
    double t = 0.0;
    for (const auto& u : units) {
      out.push_back(TimedUnit{u.symbol, TimeBound{t, t + u.duration_s}});
      t += u.duration_s;
    }
    return out;
  }

  friend bool operator==(const RealizedSequence&, const RealizedSequence&) = default;
};

struct SimulatedRecord {
  std::vector<std::string> reference_units;
  AnnotatedSequence annotated;
  RealizedSequence realized;
  IpaString ipa;
  std::vector<DysfluencyEvent> events;
};

/// Applies `specs` to `reference` in reference order. Ground-truth bounds
/// come straight from the construction: repetition copies, the silence, the
/// filler, the replaced or lengthened unit, or one frame at a deletion gap.
inline SimulatedRecord realize(const std::vector<std::string>& reference, AnnotationLevel level,
                               const std::vector<EventSpec>& specs,
                               const SimulationConfig& config) {
  const std::size_t n = reference.size();
  for (const auto& s : specs) {
    if (!is_legal(s.kind, level)) {
      throw Error(ErrorCode::IllegalKindForLevel,
                  std::string(to_string(s.kind)) + " at " + std::string(to_string(level)) + " level");
    }
    const bool gap = s.kind == DysfluencyType::Pause || s.kind == DysfluencyType::Insertion;
    if (s.anchor > n || (s.anchor == n && !gap)) {
      throw Error(ErrorCode::AnchorOutOfRange, "anchor " + std::to_string(s.anchor));
    }
    if (s.kind == DysfluencyType::Substitution && (s.payload.empty() || s.payload == reference[s.anchor])) {
      throw Error(ErrorCode::InvalidConfig, "substitution payload must differ from the original unit");
    }
  }
  auto find = [&](DysfluencyType kind, std::size_t anchor) -> const EventSpec* {
    for (const auto& s : specs) {
      if (s.kind == kind && s.anchor == anchor) return &s;
    }
    return nullptr;
  };

  const double nominal = config.nominal_duration();
  SimulatedRecord rec;
  rec.reference_units = reference;
  rec.realized.level = level;
  double t = 0.0;
  auto push = [&](std::string symbol, double duration, int marks = 0) {
    rec.realized.units.push_back(RealizedUnit{std::move(symbol), duration, marks});
    const TimeBound b{t, t + duration};
    t += duration;
    return b;
  };
  auto event = [&](DysfluencyType kind, std::size_t anchor, std::vector<std::string> payload,
                   TimeBound bound) {
    rec.events.push_back(DysfluencyEvent{kind, level, anchor, std::move(payload), bound});
  };

  for (std::size_t i = 0; i <= n; ++i) {
    if (const auto* s = find(DysfluencyType::Pause, i)) {
      event(s->kind, i, {}, push(std::string(kSilence), s->pause_s));
    }
    if (const auto* s = find(DysfluencyType::Insertion, i)) {
      event(s->kind, i, {s->payload}, push(s->payload, config.word_duration_s));
    }
    if (i == n) break;
    if (const auto* s = find(DysfluencyType::Deletion, i)) {
      event(s->kind, i, {}, frame_bound_at(t));
      continue;
    }
    const auto* rep = find(DysfluencyType::Repetition, i);
    const auto* sub = find(DysfluencyType::Substitution, i);
    const auto* pro = find(DysfluencyType::Prolongation, i);
    const std::string& spoken = sub ? sub->payload : reference[i];
    std::optional<TimeBound> copies;
    if (rep) {
      for (int k = 0; k < rep->repeat_count; ++k) {
        const auto b = push(spoken, nominal);
        copies = copies ? copies->merged(b) : b;
      }
    }
    const int marks = pro ? pro->length_marks : 0;
    const auto own = push(spoken, nominal * (1.0 + 2.0 * marks), marks);
    if (rep) {
      event(rep->kind, i, std::vector<std::string>(static_cast<std::size_t>(rep->repeat_count), spoken),
            *copies);
    }
    if (sub) event(sub->kind, i, {sub->payload}, own);
    if (pro) event(pro->kind, i, {}, own);
  }
  rec.annotated = annotate(reference, level, rec.events);
  return rec;
}

namespace detail {

inline bool differs_from_neighbours(const std::vector<std::string>& ref, std::size_t i,
                                    std::string_view symbol) {
  if (i > 0 && ref[i - 1] == symbol) return false;
  if (i + 1 < ref.size() && ref[i + 1] == symbol) return false;
  return true;
}

inline std::vector<std::string> substitutes_for(const std::vector<std::string>& ref, std::size_t i) {
  std::vector<std::string> out;
  const auto& table = confusability_table();
  auto it = table.find(ref[i]);
  if (it == table.end()) return out;
  for (const auto& c : it->second) {
    if (c != ref[i] && differs_from_neighbours(ref, i, c)) out.push_back(c);
  }
  return out;
}

inline std::vector<std::string> fillers_for(const std::vector<std::string>& ref, std::size_t slot,
                                            const std::vector<std::string>& fillers) {
  std::vector<std::string> out;
  for (const auto& f : fillers) {
    const bool clash = (slot > 0 && ref[slot - 1] == f) || (slot < ref.size() && ref[slot] == f);
    if (!clash) out.push_back(f);
  }
  return out;
}

}  // namespace detail

/// Positions where `kind` can be injected so that the realization still
/// identifies a unique event, skipping anchors within one position of any
/// entry in `taken`.
inline std::vector<std::size_t> legal_anchors(const std::vector<std::string>& ref,
                                              DysfluencyType kind, const SimulationConfig& config,
                                              const std::vector<std::size_t>& taken = {}) {
  std::vector<std::size_t> out;
  const std::size_t n = ref.size();
  auto free = [&](std::size_t a) {
    return std::none_of(taken.begin(), taken.end(), [a](std::size_t b) {
      return (a > b ? a - b : b - a) < 2;
    });
  };
  switch (kind) {
    case DysfluencyType::Repetition:
    case DysfluencyType::Deletion:
      // A unit next to an identical unit gives the same realization whichever
      // copy is repeated or dropped.
      for (std::size_t i = 0; i < n; ++i) {
        if (free(i) && detail::differs_from_neighbours(ref, i, ref[i])) out.push_back(i);
      }
      break;
    case DysfluencyType::Substitution:
      for (std::size_t i = 0; i < n; ++i) {
        if (free(i) && !detail::substitutes_for(ref, i).empty()) out.push_back(i);
      }
      break;
    case DysfluencyType::Prolongation:
      for (std::size_t i = 0; i < n; ++i) {
        if (free(i)) out.push_back(i);
      }
      break;
    case DysfluencyType::Pause:
      for (std::size_t s = 1; s < n; ++s) {
        if (free(s)) out.push_back(s);
      }
      break;
    case DysfluencyType::Insertion:
      for (std::size_t s = 1; s < n; ++s) {
        if (free(s) && !detail::fillers_for(ref, s, config.fillers).empty()) out.push_back(s);
      }
      break;
  }
  return out;
}

template <typename Rng>
std::size_t pick_index(std::size_t size, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, size - 1)(rng);
}

/// Draws the kind-specific parameters for an event at `anchor`.
template <typename Rng>
EventSpec draw_event(const std::vector<std::string>& ref, DysfluencyType kind, std::size_t anchor,
                     const SimulationConfig& config, Rng& rng) {
  EventSpec spec;
  spec.kind = kind;
  spec.anchor = anchor;
  switch (kind) {
    case DysfluencyType::Repetition:
      spec.repeat_count = std::uniform_int_distribution<int>(config.repetition_count.min,
                                                             config.repetition_count.max)(rng);
      break;
    case DysfluencyType::Substitution: {
      const auto subs = detail::substitutes_for(ref, anchor);
      if (subs.empty()) throw Error(ErrorCode::NoLegalAnchor, "no substitute for " + ref[anchor]);
      spec.payload = subs[pick_index(subs.size(), rng)];
      break;
    }
    case DysfluencyType::Insertion: {
      const auto fills = detail::fillers_for(ref, anchor, config.fillers);
      if (fills.empty()) throw Error(ErrorCode::NoLegalAnchor, "every filler clashes with a neighbour");
      spec.payload = fills[pick_index(fills.size(), rng)];
      break;
    }
    case DysfluencyType::Pause:
      spec.pause_s = std::uniform_real_distribution<double>(config.pause_duration_s.min,
                                                            config.pause_duration_s.max)(rng);
      break;
    case DysfluencyType::Prolongation:
      spec.length_marks = std::uniform_int_distribution<int>(
          config.prolongation_length_marks.min, config.prolongation_length_marks.max)(rng);
      break;
    case DysfluencyType::Deletion: break;
  }
  return spec;
}

/// Injects exactly one `kind` event at a uniformly drawn legal anchor.
template <typename Rng>
SimulatedRecord inject(const std::vector<std::string>& reference, DysfluencyType kind,
                       const SimulationConfig& config, Rng& rng) {
  config.validate();
  if (!is_legal(kind, config.level)) {
    throw Error(ErrorCode::IllegalKindForLevel, std::string(to_string(kind)) + " at " +
                                                    std::string(to_string(config.level)) + " level");
  }
  const auto enabled = config.types();
  if (std::find(enabled.begin(), enabled.end(), kind) == enabled.end()) {
    throw Error(ErrorCode::InvalidConfig, std::string(to_string(kind)) + " is not enabled");
  }
  if (reference.size() < 2) throw Error(ErrorCode::ReferenceTooShort, "need at least 2 units");
  const auto anchors = legal_anchors(reference, kind, config);
  if (anchors.empty()) throw Error(ErrorCode::NoLegalAnchor, std::string(to_string(kind)));
  const auto anchor = anchors[pick_index(anchors.size(), rng)];
  return realize(reference, config.level, {draw_event(reference, kind, anchor, config, rng)}, config);
}

/// Draws the event set for one utterance: a count from
/// events_per_utterance, then for each event a type and a free anchor.
template <typename Rng>
std::vector<EventSpec> sample_events(const std::vector<std::string>& reference,
                                     const SimulationConfig& config, Rng& rng) {
  std::vector<EventSpec> specs;
  if (config.fluent_fraction > 0.0 &&
      std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config.fluent_fraction) {
    return specs;
  }
  const auto types = config.types();
  std::vector<double> weights;
  for (auto t : types) {
    auto it = config.type_weights.find(t);
    weights.push_back(it == config.type_weights.end() ? 1.0 : it->second);
  }
  std::discrete_distribution<std::size_t> type_dist(weights.begin(), weights.end());
  const int count = std::uniform_int_distribution<int>(config.events_per_utterance.min,
                                                       config.events_per_utterance.max)(rng);
  std::vector<std::size_t> taken;
  for (int e = 0; e < count; ++e) {
    // A draw whose type has no free anchor is retried with a fresh type.
    for (int attempt = 0; attempt < 8; ++attempt) {
      const auto kind = types[type_dist(rng)];
      const auto anchors = legal_anchors(reference, kind, config, taken);
      if (anchors.empty()) continue;
      const auto anchor = anchors[pick_index(anchors.size(), rng)];
      specs.push_back(draw_event(reference, kind, anchor, config, rng));
      taken.push_back(anchor);
      break;
    }
  }
  return specs;
}

inline IpaString derive_ipa(const SimulatedRecord& record, const PronunciationDict* dict = nullptr) {
  IpaString out;
  for (const auto& u : record.realized.units) {
    if (u.symbol == kSilence) {
      out.emplace_back(kIpaSilence);
      continue;
    }
    if (record.realized.level == AnnotationLevel::Phoneme) {
      std::string seg(ipa_of(u.symbol));
      for (int k = 0; k < u.length_marks; ++k) seg.append(kIpaLengthMark);
      out.push_back(std::move(seg));
      continue;
    }
    if (!dict) throw Error(ErrorCode::OutOfVocabulary, "word-level IPA needs a dictionary");
    for (const auto& seg : cmu_to_ipa(g2p(u.symbol, *dict))) out.push_back(seg);
  }
  return out;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t record_seed(std::uint64_t global_seed, std::string_view utterance_id) {
  return splitmix64(global_seed ^ splitmix64(fnv1a64(utterance_id)));
}

inline std::string utterance_id_for(std::size_t index) {
  std::string digits = std::to_string(index + 1);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return "utt" + digits;
}

struct CorpusResult {
  std::vector<ManifestRecord> records;
  std::size_t skipped_oov = 0;
  std::size_t skipped_short = 0;
  std::map<DysfluencyType, std::size_t> type_counts;
};

inline ManifestRecord to_manifest_record(std::string utterance_id, std::string reference_text,
                                         const SimulatedRecord& rec) {
  ManifestRecord m;
  m.utterance_id = std::move(utterance_id);
  m.level = rec.annotated.level;
  m.reference_text = std::move(reference_text);
  m.annotated_text = render_annotated(rec.annotated);
  m.realized_units = rec.realized.timed();
  m.ipa = join(rec.ipa);
  m.events = rec.events;
  return m;
}

/// Simulates one record per usable transcript. Records are independent
/// (each has its own RNG seeded from the global seed and its id), so the
/// work is split across `workers` threads without changing the output.
inline CorpusResult simulate_corpus(const std::vector<std::string>& transcripts,
                                    const SimulationConfig& config, const PronunciationDict& dict,
                                    unsigned workers = 1) {
  config.validate();
  if (transcripts.empty()) throw Error(ErrorCode::EmptyInput, "no transcripts");

  enum class Outcome { Kept, Oov, Short };
  struct Slot {
    Outcome outcome = Outcome::Oov;
    ManifestRecord record;
  };
  std::vector<Slot> slots(transcripts.size());

  auto work = [&](std::size_t index) {
    Slot& slot = slots[index];
    const auto words = normalize_transcript(transcripts[index]);
    if (words.empty()) {
      slot.outcome = Outcome::Short;
      return;
    }
    for (const auto& w : words) {
      if (!dict.contains(w)) {
        slot.outcome = Outcome::Oov;
        return;
      }
    }
    const auto reference =
        config.level == AnnotationLevel::Phoneme ? g2p_words(words, dict) : words;
    if (reference.size() < 2) {
      slot.outcome = Outcome::Short;
      return;
    }
    const std::string id = utterance_id_for(index);
    std::mt19937_64 rng(record_seed(config.seed, id));
    auto rec = realize(reference, config.level, sample_events(reference, config, rng), config);
    rec.ipa = derive_ipa(rec, &dict);
    slot.record = to_manifest_record(id, join(words), rec);
    slot.record.metadata["seed"] = config.seed;
    slot.outcome = Outcome::Kept;
  };

  workers = std::max(1u, workers);
  if (workers == 1 || transcripts.size() < 2 * workers) {
    for (std::size_t i = 0; i < transcripts.size(); ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < transcripts.size(); i += workers) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  CorpusResult result;
  for (auto& slot : slots) {
    switch (slot.outcome) {
      case Outcome::Kept:
        for (const auto& e : slot.record.events) ++result.type_counts[e.kind];
        result.records.push_back(std::move(slot.record));
        break;
      case Outcome::Oov: ++result.skipped_oov; break;
      case Outcome::Short: ++result.skipped_short; break;
    }
  }
  if (result.records.empty() && result.skipped_oov > 0) {
    throw Error(ErrorCode::AllTranscriptsOOV,
                std::to_string(result.skipped_oov) + " transcripts, none in the dictionary");
  }
  return result;
}

}  // namespace dysflux
