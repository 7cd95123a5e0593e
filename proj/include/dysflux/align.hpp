#pragma once

// Longest-common-subsequence alignment and everything built on it:
// per-word pre-segmentation, the rule-based oracle detector, and the
// conversion of annotated tokens back to time bounds.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dysflux/annotation.hpp"
#include "dysflux/error.hpp"
#include "dysflux/phoneme.hpp"
#include "dysflux/timing.hpp"

namespace dysflux {

struct AlignedPair {
  std::size_t a = 0;
  std::size_t b = 0;

  friend bool operator==(const AlignedPair&, const AlignedPair&) = default;
};

struct Alignment {
  std::vector<AlignedPair> pairs;  // strictly increasing in both coordinates
  std::vector<std::size_t> unmatched_a;
  std::vector<std::size_t> unmatched_b;

  std::size_t length() const { return pairs.size(); }
};

/// Standard O(|a||b|) table; the backtrace from the end takes a match when
/// the symbols agree, otherwise moves up (drops a[i]) when that keeps the
/// optimum, otherwise left. This overload reuses `out` and `table` so hot
/// loops do not allocate.
template <typename T, typename Eq = std::equal_to<T>>
void lcs(const std::vector<T>& a, const std::vector<T>& b, Alignment& out,
         std::vector<std::uint32_t>& table, Eq eq = {}) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t width = m + 1;
  table.assign((n + 1) * width, 0);
  std::uint32_t* dp = table.data();
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      dp[i * width + j] = eq(a[i - 1], b[j - 1])
                              ? dp[(i - 1) * width + j - 1] + 1
                              : std::max(dp[(i - 1) * width + j], dp[i * width + j - 1]);
    }
  }
  out.pairs.clear();
  out.unmatched_a.clear();
  out.unmatched_b.clear();
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 && j > 0) {
    if (eq(a[i - 1], b[j - 1])) {
      out.pairs.push_back({i - 1, j - 1});
      --i;
      --j;
    } else if (dp[(i - 1) * width + j] >= dp[i * width + j - 1]) {
      --i;
    } else {
      --j;
    }
  }
  std::reverse(out.pairs.begin(), out.pairs.end());
  std::size_t pa = 0;
  std::size_t pb = 0;
  for (const auto& p : out.pairs) {
    for (; pa < p.a; ++pa) out.unmatched_a.push_back(pa);
    for (; pb < p.b; ++pb) out.unmatched_b.push_back(pb);
    pa = p.a + 1;
    pb = p.b + 1;
  }
  for (; pa < n; ++pa) out.unmatched_a.push_back(pa);
  for (; pb < m; ++pb) out.unmatched_b.push_back(pb);
}

template <typename T, typename Eq = std::equal_to<T>>
Alignment lcs(const std::vector<T>& a, const std::vector<T>& b, Eq eq = {}) {
  Alignment out;
  std::vector<std::uint32_t> table;
  lcs(a, b, out, table, eq);
  return out;
}

struct WordSpan {
  std::size_t word_index = 0;
  std::size_t begin = 0;  // [begin, end) into the observed sequence
  std::size_t end = 0;
  std::optional<TimeBound> bound;

  friend bool operator==(const WordSpan&, const WordSpan&) = default;
};

/// Assigns every observed unit to a reference word: matched units to the
/// word owning their reference phoneme, unmatched units to the word of the
/// next matched unit, trailing unmatched units to the last word.
inline std::vector<WordSpan> presegment(const std::vector<std::string>& reference_words,
                                        const std::vector<TimedUnit>& observed,
                                        const PronunciationDict& dict) {
  if (observed.empty()) throw Error(ErrorCode::EmptyObserved, "nothing to segment");
  if (reference_words.empty()) throw Error(ErrorCode::EmptyInput, "no reference words");
  std::vector<std::string> phones;
  std::vector<std::size_t> owner;
  for (std::size_t w = 0; w < reference_words.size(); ++w) {
    for (auto& p : g2p(reference_words[w], dict)) {
      phones.push_back(std::move(p));
      owner.push_back(w);
    }
  }
  const auto obs = unit_symbols(observed);
  const auto al = lcs(phones, obs);

  const std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> word_of(obs.size(), none);
  for (const auto& p : al.pairs) word_of[p.b] = owner[p.a];
  std::size_t next = reference_words.size() - 1;
  for (std::size_t k = obs.size(); k-- > 0;) {
    if (word_of[k] == none) {
      word_of[k] = next;
    } else {
      next = word_of[k];
    }
  }

  std::vector<WordSpan> spans;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (spans.empty() || spans.back().word_index != word_of[k]) {
      spans.push_back(WordSpan{word_of[k], k, k + 1, observed[k].bound});
    } else {
      spans.back().end = k + 1;
      spans.back().bound = spans.back().bound->merged(observed[k].bound);
    }
  }
  return spans;
}

struct DetectorConfig {
  double pause_min_s = 0.25;
  double prolongation_factor = 2.5;
};

namespace detail {

inline bool level_units_ok(const std::vector<std::string>& units, AnnotationLevel level,
                           bool allow_silence) {
  if (level != AnnotationLevel::Phoneme) return true;
  return std::all_of(units.begin(), units.end(), [&](const std::string& u) {
    return is_phoneme(u) || (allow_silence && u == kSilence);
  });
}

inline double lower_median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const auto mid = values.begin() + static_cast<long>((values.size() - 1) / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace detail

/// Rule-based detector: aligns the reference against the observed units
/// (silence excluded from matching) and classifies each gap between
/// consecutive matches.
///
/// - unmatched observed unit equal to the reference unit right after or
///   right before the gap: [REP] on that unit
/// - one unmatched reference and one unmatched observed unit (phoneme
///   level): [SUB]; remaining pairs at phoneme level are also [SUB]
/// - leftover unmatched reference units: [DEL]
/// - leftover unmatched observed units (word level): [INS]
/// - word-level silence of at least pause_min_s: [PAU]
/// - phoneme-level matched unit lasting prolongation_factor times the
///   lower median matched duration or more: [PRO]
inline AnnotatedSequence detect_oracle(const std::vector<std::string>& reference,
                                       const std::vector<TimedUnit>& observed,
                                       AnnotationLevel level, const DetectorConfig& config = {}) {
  const auto obs_all = unit_symbols(observed);
  if (!detail::level_units_ok(reference, level, false) ||
      !detail::level_units_ok(obs_all, level, true)) {
    throw Error(ErrorCode::LevelMismatch, "non-phoneme units at phoneme level");
  }

  // Speech-only view of the observation.
  std::vector<std::size_t> speech_index;
  std::vector<std::string> speech;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    if (observed[k].unit != kSilence) {
      speech_index.push_back(k);
      speech.push_back(observed[k].unit);
    }
  }
  const auto al = lcs(reference, speech);

  std::vector<DysfluencyEvent> events;
  auto add = [&](DysfluencyType kind, std::size_t anchor, std::vector<std::string> payload = {}) {
    for (const auto& e : events) {
      if (e.kind == kind && e.anchor == anchor) return;
    }
    events.push_back(DysfluencyEvent{kind, level, anchor, std::move(payload), std::nullopt});
  };

  const std::size_t n = reference.size();
  // Gap g lies between pair g-1 and pair g, with virtual pairs at both ends.
  const std::size_t gaps = al.pairs.size() + 1;
  for (std::size_t g = 0; g < gaps; ++g) {
    const bool has_prev = g > 0;
    const bool has_next = g < al.pairs.size();
    const std::size_t ref_lo = has_prev ? al.pairs[g - 1].a + 1 : 0;
    const std::size_t ref_hi = has_next ? al.pairs[g].a : n;
    const std::size_t sp_lo = has_prev ? al.pairs[g - 1].b + 1 : 0;
    const std::size_t sp_hi = has_next ? al.pairs[g].b : speech.size();
    const std::size_t obs_lo = has_prev ? speech_index[sp_lo - 1] + 1 : 0;
    const std::size_t obs_hi = has_next ? speech_index[sp_hi] : observed.size();

    if (level == AnnotationLevel::Word) {
      for (std::size_t k = obs_lo; k < obs_hi; ++k) {
        if (observed[k].unit == kSilence && observed[k].bound.duration() >= config.pause_min_s) {
          add(DysfluencyType::Pause, ref_lo);
        }
      }
    }

    std::vector<std::size_t> ref_gap;
    for (std::size_t i = ref_lo; i < ref_hi; ++i) ref_gap.push_back(i);
    std::vector<std::string> obs_gap(speech.begin() + static_cast<long>(sp_lo),
                                     speech.begin() + static_cast<long>(sp_hi));

    if (level == AnnotationLevel::Phoneme && ref_gap.size() == 1 && obs_gap.size() == 1) {
      add(DysfluencyType::Substitution, ref_gap[0], {obs_gap[0]});
      continue;
    }

    std::vector<std::string> leftover_obs;
    for (const auto& u : obs_gap) {
      if (has_next && u == reference[al.pairs[g].a]) {
        add(DysfluencyType::Repetition, al.pairs[g].a);
      } else if (has_prev && u == reference[al.pairs[g - 1].a]) {
        add(DysfluencyType::Repetition, al.pairs[g - 1].a);
      } else {
        leftover_obs.push_back(u);
      }
    }
    std::size_t r = 0;
    if (level == AnnotationLevel::Phoneme) {
      for (; r < ref_gap.size() && r < leftover_obs.size(); ++r) {
        add(DysfluencyType::Substitution, ref_gap[r], {leftover_obs[r]});
      }
    } else if (!leftover_obs.empty()) {
      add(DysfluencyType::Insertion, ref_lo, leftover_obs);
    }
    for (; r < ref_gap.size(); ++r) add(DysfluencyType::Deletion, ref_gap[r]);
  }

  if (level == AnnotationLevel::Phoneme && !al.pairs.empty()) {
    std::vector<double> durations;
    for (const auto& p : al.pairs) durations.push_back(observed[speech_index[p.b]].bound.duration());
    const double median = detail::lower_median(durations);
    for (const auto& p : al.pairs) {
      if (observed[speech_index[p.b]].bound.duration() >= config.prolongation_factor * median) {
        add(DysfluencyType::Prolongation, p.a);
      }
    }
  }
  return annotate(reference, level, events);
}

/// Attaches time bounds to every marker of `annotated`, reading them off
/// the observed units: repetition copies, the silence of a pause, the
/// inserted material, the unit replaced or lengthened, or one frame at the
/// midpoint of a deletion gap.
inline std::vector<DysfluencyEvent> token_to_time(const AnnotatedSequence& annotated,
                                                  const std::vector<TimedUnit>& observed) {
  auto located = located_events(annotated);
  if (located.empty()) return {};

  const auto& units = annotated.units;
  std::vector<std::size_t> speech_index;
  std::vector<std::string> speech;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    if (observed[k].unit != kSilence) {
      speech_index.push_back(k);
      speech.push_back(observed[k].unit);
    }
  }
  const auto al = lcs(units, speech);
  const std::size_t none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> obs_of(units.size(), none);  // surface unit -> observed index
  std::vector<bool> obs_matched(observed.size(), false);
  for (const auto& p : al.pairs) {
    obs_of[p.a] = speech_index[p.b];
    obs_matched[speech_index[p.b]] = true;
  }

  // Observed range strictly between the matched neighbours of surface
  // position `slot` (a gap before unit `slot`) or of unit `u` itself.
  auto prev_matched_end = [&](std::size_t before) -> std::size_t {
    for (std::size_t u = before; u-- > 0;) {
      if (obs_of[u] != none) return obs_of[u] + 1;
    }
    return 0;
  };
  auto next_matched_begin = [&](std::size_t from) -> std::size_t {
    for (std::size_t u = from; u < units.size(); ++u) {
      if (obs_of[u] != none) return obs_of[u];
    }
    return observed.size();
  };
  auto gap_midpoint = [&](std::size_t lo, std::size_t hi) {
    const double left = lo > 0 ? observed[lo - 1].bound.end : 0.0;
    const double right = hi < observed.size() ? observed[hi].bound.start : left;
    return frame_bound_at((left + right) / 2.0);
  };
  auto union_of = [&](std::size_t lo, std::size_t hi, auto keep) -> std::optional<TimeBound> {
    std::optional<TimeBound> out;
    for (std::size_t k = lo; k < hi; ++k) {
      if (!keep(k)) continue;
      out = out ? out->merged(observed[k].bound) : observed[k].bound;
    }
    return out;
  };

  std::vector<DysfluencyEvent> out;
  for (auto& le : located) {
    auto ev = std::move(le.event);
    const std::size_t slot = le.slot;
    if (is_gap_marker(ev.kind)) {
      if (slot > units.size()) throw Error(ErrorCode::AnchorOutOfRange, "marker slot past end");
      const std::size_t lo = prev_matched_end(slot);
      const std::size_t hi = std::max(lo, next_matched_begin(slot));
      std::optional<TimeBound> b;
      if (ev.kind == DysfluencyType::Pause) {
        b = union_of(lo, hi, [&](std::size_t k) { return observed[k].unit == kSilence; });
      } else if (ev.kind == DysfluencyType::Insertion) {
        b = union_of(lo, hi, [&](std::size_t k) { return observed[k].unit != kSilence; });
      }
      ev.bounds = b ? *b : gap_midpoint(lo, hi);
    } else {
      if (slot == 0 || slot > units.size()) throw Error(ErrorCode::AnchorOutOfRange, "marker before first unit");
      const std::size_t u = slot - 1;
      if (obs_of[u] == none) {
        // Unit not heard as itself (e.g. substituted): take what was said
        // between its matched neighbours.
        const std::size_t lo = prev_matched_end(u);
        const std::size_t hi = std::max(lo, next_matched_begin(u + 1));
        const auto b = union_of(lo, hi, [&](std::size_t k) { return observed[k].unit != kSilence; });
        ev.bounds = b ? *b : gap_midpoint(lo, hi);
      } else if (ev.kind == DysfluencyType::Repetition) {
        const std::size_t j = obs_of[u];
        std::size_t lo = j;
        while (lo > 0 && !obs_matched[lo - 1] && observed[lo - 1].unit == units[u]) --lo;
        std::size_t hi = j + 1;
        while (hi < observed.size() && !obs_matched[hi] && observed[hi].unit == units[u]) ++hi;
        std::optional<TimeBound> b;
        for (std::size_t k = lo; k < hi; ++k) {
          if (k == j) continue;
          b = b ? b->merged(observed[k].bound) : observed[k].bound;
        }
        ev.bounds = b ? *b : observed[j].bound;
      } else {
        ev.bounds = observed[obs_of[u]].bound;
      }
    }
    out.push_back(std::move(ev));
  }
  return out;
}

/// Span-based variant for word-level annotation over pre-segmented
/// observations: unit markers take their word's span, gap markers one frame
/// at the boundary between the neighbouring spans.
inline std::vector<DysfluencyEvent> token_to_time(const AnnotatedSequence& annotated,
                                                  const std::vector<WordSpan>& spans) {
  std::vector<DysfluencyEvent> out;
  auto span_of = [&](std::size_t word) -> const WordSpan* {
    for (const auto& s : spans) {
      if (s.word_index == word) return &s;
    }
    return nullptr;
  };
  for (auto& ev : events_of(annotated)) {
    if (!is_gap_marker(ev.kind)) {
      const auto* s = span_of(ev.anchor);
      if (!s || !s->bound) throw Error(ErrorCode::AnchorOutOfRange, "no span for word " + std::to_string(ev.anchor));
      ev.bounds = *s->bound;
    } else {
      const WordSpan* before = nullptr;
      const WordSpan* after = nullptr;
      for (const auto& s : spans) {
        if (s.word_index < ev.anchor) before = &s;
        if (s.word_index >= ev.anchor && !after) after = &s;
      }
      if (!before && !after) throw Error(ErrorCode::AnchorOutOfRange, "no spans");
      const double left = before && before->bound ? before->bound->end : 0.0;
      const double right = after && after->bound ? after->bound->start : left;
      if (ev.kind != DysfluencyType::Deletion && after && after->bound && after->word_index == ev.anchor) {
        ev.bounds = *after->bound;
      } else {
        ev.bounds = frame_bound_at((left + right) / 2.0);
      }
    }
    out.push_back(std::move(ev));
  }
  return out;
}

/// Forced-alignment text: one "unit start end" triple per line, seconds.
/// Blank lines and lines starting with '#' are ignored.
inline std::vector<TimedUnit> read_alignment(std::istream& in) {
  std::vector<TimedUnit> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = split_whitespace(line);
    if (fields.empty() || fields[0][0] == '#') continue;
    auto fail = [&](const std::string& why) {
      throw Error(ErrorCode::MalformedAlignment, "line " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != 3) fail("expected 'unit start end'");
    double start = 0.0;
    double end = 0.0;
    try {
      std::size_t used = 0;
      start = std::stod(fields[1], &used);
      if (used != fields[1].size()) fail("bad start time");
      end = std::stod(fields[2], &used);
      if (used != fields[2].size()) fail("bad end time");
    } catch (const std::logic_error&) {
      fail("bad time value");
    }
    if (!(start >= 0.0) || !(end > start)) fail("need 0 <= start < end");
    out.push_back(TimedUnit{fields[0], TimeBound{start, end}});
  }
  if (!is_monotone(out)) throw Error(ErrorCode::MalformedAlignment, "units overlap or go backwards");
  return out;
}

}  // namespace dysflux
