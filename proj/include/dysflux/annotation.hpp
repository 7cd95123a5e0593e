#pragma once

// Dysfluency event model and the token-annotated transcript grammar.
//
// An annotated transcript is the canonical reference with bracketed marker
// tokens interleaved. A marker follows the unit it affects. [DEL] replaces
// the removed unit, [PAU] and [INS] sit in the gap where silence or
// material was added. Event anchors are indices into the canonical
// reference, so a [DEL] still counts as one reference position.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dysflux/error.hpp"

namespace dysflux {

// Declaration order is the report row order.
enum class DysfluencyType { Repetition, Deletion, Insertion, Pause, Substitution, Prolongation };

inline constexpr std::array<DysfluencyType, 6> kAllTypes = {
    DysfluencyType::Repetition, DysfluencyType::Deletion,     DysfluencyType::Insertion,
    DysfluencyType::Pause,      DysfluencyType::Substitution, DysfluencyType::Prolongation};

enum class AnnotationLevel { Word, Phoneme };

constexpr std::string_view to_string(DysfluencyType t) {
  switch (t) {
    case DysfluencyType::Repetition: return "Repetition";
    case DysfluencyType::Deletion: return "Deletion";
    case DysfluencyType::Insertion: return "Insertion";
    case DysfluencyType::Pause: return "Pause";
    case DysfluencyType::Substitution: return "Substitution";
    case DysfluencyType::Prolongation: return "Prolongation";
  }
  return "?";
}

constexpr std::string_view to_string(AnnotationLevel l) {
  return l == AnnotationLevel::Word ? "Word" : "Phoneme";
}

constexpr std::string_view marker_text(DysfluencyType t) {
  switch (t) {
    case DysfluencyType::Repetition: return "[REP]";
    case DysfluencyType::Deletion: return "[DEL]";
    case DysfluencyType::Insertion: return "[INS]";
    case DysfluencyType::Pause: return "[PAU]";
    case DysfluencyType::Substitution: return "[SUB]";
    case DysfluencyType::Prolongation: return "[PRO]";
  }
  return "";
}

inline std::optional<DysfluencyType> marker_type(std::string_view token) {
  for (auto t : kAllTypes) {
    if (marker_text(t) == token) return t;
  }
  return std::nullopt;
}

inline std::optional<DysfluencyType> parse_type_name(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
  };
  const std::string want = lower(name);
  for (auto t : kAllTypes) {
    if (lower(to_string(t)) == want) return t;
    // Accept the three-letter marker stem as well ("rep", "pau", ...).
    if (lower(marker_text(t).substr(1, 3)) == want) return t;
  }
  return std::nullopt;
}

inline std::optional<AnnotationLevel> parse_level_name(std::string_view name) {
  std::string s(name);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "word") return AnnotationLevel::Word;
  if (s == "phoneme") return AnnotationLevel::Phoneme;
  return std::nullopt;
}

/// [INS] and [PAU] are word-only, [SUB] and [PRO] phoneme-only.
constexpr bool is_legal(DysfluencyType t, AnnotationLevel level) {
  switch (t) {
    case DysfluencyType::Repetition:
    case DysfluencyType::Deletion: return true;
    case DysfluencyType::Insertion:
    case DysfluencyType::Pause: return level == AnnotationLevel::Word;
    case DysfluencyType::Substitution:
    case DysfluencyType::Prolongation: return level == AnnotationLevel::Phoneme;
  }
  return false;
}

/// The four marker types legal at `level`, in vocabulary order.
inline std::array<DysfluencyType, 4> level_types(AnnotationLevel level) {
  if (level == AnnotationLevel::Word) {
    return {DysfluencyType::Repetition, DysfluencyType::Deletion, DysfluencyType::Insertion,
            DysfluencyType::Pause};
  }
  return {DysfluencyType::Repetition, DysfluencyType::Deletion, DysfluencyType::Substitution,
          DysfluencyType::Prolongation};
}

/// Markers that sit between units rather than after one.
constexpr bool is_gap_marker(DysfluencyType t) {
  return t == DysfluencyType::Deletion || t == DysfluencyType::Pause ||
         t == DysfluencyType::Insertion;
}

struct TimeBound {
  double start = 0.0;
  double end = 0.0;

  static TimeBound make(double start, double end) {
    if (!std::isfinite(start) || !std::isfinite(end) || start < 0.0 || !(end > start)) {
      throw Error(ErrorCode::InvalidConfig, "time bound requires 0 <= start < end");
    }
    return TimeBound{start, end};
  }

  double duration() const { return end - start; }

  TimeBound merged(const TimeBound& other) const {
    return TimeBound{std::min(start, other.start), std::max(end, other.end)};
  }

  friend bool operator==(const TimeBound&, const TimeBound&) = default;
};

struct DysfluencyEvent {
  DysfluencyType kind = DysfluencyType::Repetition;
  AnnotationLevel level = AnnotationLevel::Word;
  std::size_t anchor = 0;
  std::vector<std::string> payload;
  std::optional<TimeBound> bounds;

  friend bool operator==(const DysfluencyEvent&, const DysfluencyEvent&) = default;

  bool same_locus(const DysfluencyEvent& other) const {
    return kind == other.kind && anchor == other.anchor;
  }
};

struct MarkerSlot {
  DysfluencyType kind = DysfluencyType::Repetition;
  std::size_t slot = 0;  // number of units preceding the marker

  friend bool operator==(const MarkerSlot&, const MarkerSlot&) = default;
};

struct AnnotatedSequence {
  AnnotationLevel level = AnnotationLevel::Word;
  std::vector<std::string> units;
  std::vector<MarkerSlot> markers;  // slot-ordered; order within a slot is surface order

  friend bool operator==(const AnnotatedSequence&, const AnnotatedSequence&) = default;

  bool fluent() const { return markers.empty(); }

  /// Length of the canonical reference: surviving units plus one per [DEL].
  std::size_t reference_length() const {
    return units.size() + static_cast<std::size_t>(std::count_if(
                              markers.begin(), markers.end(), [](const MarkerSlot& m) {
                                return m.kind == DysfluencyType::Deletion;
                              }));
  }

  /// Number of surface tokens (units + markers).
  std::size_t token_count() const { return units.size() + markers.size(); }
};

inline bool is_bracketed(std::string_view token) {
  return !token.empty() && (token.front() == '[' || token.back() == ']');
}

inline std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

inline AnnotatedSequence parse_annotated(std::string_view text, AnnotationLevel level) {
  const auto tokens = split_whitespace(text);
  if (tokens.empty()) throw Error(ErrorCode::EmptyInput, "annotated text has no tokens");

  AnnotatedSequence seq;
  seq.level = level;
  for (const auto& tok : tokens) {
    if (!is_bracketed(tok)) {
      seq.units.push_back(tok);
      continue;
    }
    const auto kind = marker_type(tok);
    if (!kind) throw Error(ErrorCode::UnknownMarker, "'" + tok + "'");
    if (!is_legal(*kind, level)) {
      throw Error(ErrorCode::IllegalMarkerForLevel,
                  tok + " at " + std::string(to_string(level)) + " level");
    }
    if (!is_gap_marker(*kind) && seq.units.empty()) {
      throw Error(ErrorCode::MisplacedMarker, tok + " must follow a unit");
    }
    seq.markers.push_back(MarkerSlot{*kind, seq.units.size()});
  }
  return seq;
}

inline std::string render_annotated(const AnnotatedSequence& seq) {
  std::string out;
  auto append = [&out](std::string_view tok) {
    if (!out.empty()) out.push_back(' ');
    out.append(tok);
  };
  std::size_t m = 0;
  for (std::size_t slot = 0; slot <= seq.units.size(); ++slot) {
    while (m < seq.markers.size() && seq.markers[m].slot == slot) {
      append(marker_text(seq.markers[m].kind));
      ++m;
    }
    if (slot < seq.units.size()) append(seq.units[slot]);
  }
  return out;
}

/// An event together with the surface slot of the marker that produced it.
struct LocatedEvent {
  DysfluencyEvent event;
  std::size_t slot = 0;
};

inline std::vector<LocatedEvent> located_events(const AnnotatedSequence& seq) {
  std::vector<LocatedEvent> out;
  out.reserve(seq.markers.size());
  std::size_t dels_before = 0;
  std::size_t units_seen = 0;
  std::size_t m = 0;
  for (std::size_t slot = 0; slot <= seq.units.size(); ++slot) {
    // Reference index of the unit at surface position slot - 1.
    const std::size_t prev_ref = units_seen == 0 ? 0 : units_seen - 1 + dels_before;
    // Deletions at this slot come before the previous unit's own markers in
    // reference order; count them as they are met.
    std::size_t dels_here = 0;
    while (m < seq.markers.size() && seq.markers[m].slot == slot) {
      const auto kind = seq.markers[m].kind;
      DysfluencyEvent ev;
      ev.kind = kind;
      ev.level = seq.level;
      if (is_gap_marker(kind)) {
        ev.anchor = slot + dels_before + dels_here;
        if (kind == DysfluencyType::Deletion) ++dels_here;
      } else {
        ev.anchor = prev_ref;
      }
      out.push_back(LocatedEvent{std::move(ev), slot});
      ++m;
    }
    dels_before += dels_here;
    if (slot < seq.units.size()) ++units_seen;
  }
  return out;
}

inline std::vector<DysfluencyEvent> events_of(const AnnotatedSequence& seq) {
  std::vector<DysfluencyEvent> out;
  for (auto& le : located_events(seq)) out.push_back(std::move(le.event));
  return out;
}

/// Builds the annotated form of `reference` carrying `events` (anchors in
/// reference coordinates). Gap markers anchored at i precede the marker
/// for unit i; a unit's own markers follow it in the order REP, SUB, PRO.
inline AnnotatedSequence annotate(const std::vector<std::string>& reference,
                                  AnnotationLevel level,
                                  const std::vector<DysfluencyEvent>& events) {
  AnnotatedSequence seq;
  seq.level = level;
  const std::size_t n = reference.size();
  auto has = [&](DysfluencyType kind, std::size_t anchor) {
    return std::any_of(events.begin(), events.end(), [&](const DysfluencyEvent& e) {
      return e.kind == kind && e.anchor == anchor;
    });
  };
  for (const auto& e : events) {
    const bool gap_end_ok = e.kind == DysfluencyType::Pause || e.kind == DysfluencyType::Insertion;
    if (e.anchor > n || (e.anchor == n && !gap_end_ok)) {
      throw Error(ErrorCode::AnchorOutOfRange, "anchor " + std::to_string(e.anchor) +
                                                   " for reference of length " +
                                                   std::to_string(n));
    }
    if (!is_legal(e.kind, level)) {
      throw Error(ErrorCode::IllegalKindForLevel, std::string(to_string(e.kind)));
    }
  }
  for (std::size_t i = 0; i <= n; ++i) {
    for (auto kind : {DysfluencyType::Pause, DysfluencyType::Insertion}) {
      if (has(kind, i)) seq.markers.push_back(MarkerSlot{kind, seq.units.size()});
    }
    if (i == n) break;
    if (has(DysfluencyType::Deletion, i)) {
      seq.markers.push_back(MarkerSlot{DysfluencyType::Deletion, seq.units.size()});
      continue;
    }
    seq.units.push_back(reference[i]);
    for (auto kind :
         {DysfluencyType::Repetition, DysfluencyType::Substitution, DysfluencyType::Prolongation}) {
      if (has(kind, i)) seq.markers.push_back(MarkerSlot{kind, seq.units.size()});
    }
  }
  return seq;
}

}  // namespace dysflux
