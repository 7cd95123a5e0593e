#pragma once

// Token- and time-based scoring: TER, EAcc, CAcc, token distance and
// bound loss, aggregated into per-type report rows.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dysflux/annotation.hpp"
#include "dysflux/error.hpp"
#include "dysflux/timing.hpp"
#include "dysflux/tokenizer.hpp"

namespace dysflux {

/// Unit-cost Levenshtein distance, two-row table.
template <typename T>
std::size_t edit_distance(const std::vector<T>& ref, const std::vector<T>& hyp) {
  std::vector<std::size_t> prev(hyp.size() + 1);
  std::vector<std::size_t> cur(hyp.size() + 1);
  for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= hyp.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[hyp.size()];
}

inline double ter(const std::vector<TokenId>& reference, const std::vector<TokenId>& hypothesis) {
  if (reference.empty()) throw Error(ErrorCode::EmptyReference, "TER needs a non-empty reference");
  return static_cast<double>(edit_distance(reference, hypothesis)) /
         static_cast<double>(reference.size());
}

struct UtteranceEval {
  std::vector<DysfluencyEvent> true_events;
  std::vector<DysfluencyEvent> predicted_events;
  std::size_t reference_length = 1;  // canonical units, normalizes token distance
  std::vector<TokenId> true_tokens;
  std::vector<TokenId> predicted_tokens;
};

struct EventMatch {
  std::size_t truth = 0;
  std::size_t predicted = 0;
};

/// Greedy nearest-anchor pairing; equal distances go to the earlier true
/// event, then the earlier prediction.
inline std::vector<EventMatch> match_events(const std::vector<DysfluencyEvent>& truth,
                                            const std::vector<DysfluencyEvent>& predicted) {
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> candidates;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      const auto a = truth[t].anchor;
      const auto b = predicted[p].anchor;
      candidates.emplace_back(a > b ? a - b : b - a, t, p);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<bool> used_t(truth.size(), false);
  std::vector<bool> used_p(predicted.size(), false);
  std::vector<EventMatch> out;
  for (const auto& [d, t, p] : candidates) {
    if (used_t[t] || used_p[p]) continue;
    used_t[t] = used_p[p] = true;
    out.push_back({t, p});
  }
  std::sort(out.begin(), out.end(), [](const EventMatch& x, const EventMatch& y) { return x.truth < y.truth; });
  return out;
}

inline double eacc(const std::vector<UtteranceEval>& evals) {
  if (evals.empty()) throw Error(ErrorCode::EmptyEvalSet, "EAcc over no utterances");
  std::size_t correct = 0;
  for (const auto& e : evals) {
    if (e.true_events.empty() == e.predicted_events.empty()) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(evals.size());
}

/// Per-instance class accuracy; `only` restricts to true instances of one type.
inline double cacc(const std::vector<UtteranceEval>& evals,
                   std::optional<DysfluencyType> only = std::nullopt) {
  std::size_t instances = 0;
  std::size_t correct = 0;
  for (const auto& e : evals) {
    const auto matches = match_events(e.true_events, e.predicted_events);
    for (std::size_t t = 0; t < e.true_events.size(); ++t) {
      if (only && e.true_events[t].kind != *only) continue;
      ++instances;
      for (const auto& m : matches) {
        if (m.truth == t && e.predicted_events[m.predicted].kind == e.true_events[t].kind) ++correct;
      }
    }
  }
  if (instances == 0) throw Error(ErrorCode::NoDysfluentInstances, "CAcc needs a dysfluent instance");
  return static_cast<double>(correct) / static_cast<double>(instances);
}

/// Mean |predicted anchor - true anchor| / reference length over matched pairs.
inline double token_distance(const std::vector<UtteranceEval>& evals,
                             std::optional<DysfluencyType> only = std::nullopt) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (const auto& e : evals) {
    const double len = static_cast<double>(std::max<std::size_t>(1, e.reference_length));
    for (const auto& m : match_events(e.true_events, e.predicted_events)) {
      const auto& t = e.true_events[m.truth];
      if (only && t.kind != *only) continue;
      const auto a = t.anchor;
      const auto b = e.predicted_events[m.predicted].anchor;
      total += static_cast<double>(a > b ? a - b : b - a) / len;
      ++pairs;
    }
  }
  if (pairs == 0) throw Error(ErrorCode::NoMatchedPairs, "token distance needs matched events");
  return total / static_cast<double>(pairs);
}

/// Boundary time -> 20 ms frame index, rounding halves up. The epsilon keeps
/// values like 0.09 (4.4999... frames in binary) on the intended side.
inline long long to_frame(double seconds) {
  return static_cast<long long>(std::floor(seconds / kFrameSeconds + 0.5 + 1e-9));
}

/// RMS boundary error in milliseconds over all start/end points, after
/// quantizing to 20 ms frames.
inline double bound_loss(const std::vector<TimeBound>& predicted, const std::vector<TimeBound>& truth) {
  if (predicted.size() != truth.size() || predicted.empty()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predicted.size()) + " predicted vs " +
                                               std::to_string(truth.size()) + " true bounds");
  }
  double sq = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double ds = static_cast<double>(to_frame(predicted[k].start) - to_frame(truth[k].start));
    const double de = static_cast<double>(to_frame(predicted[k].end) - to_frame(truth[k].end));
    sq += ds * ds + de * de;
  }
  return std::sqrt(sq / static_cast<double>(2 * truth.size())) * kFrameSeconds * 1000.0;
}

/// Bound pairs for matched events that carry bounds on both sides.
inline std::pair<std::vector<TimeBound>, std::vector<TimeBound>> matched_bounds(
    const std::vector<UtteranceEval>& evals, std::optional<DysfluencyType> only = std::nullopt) {
  std::vector<TimeBound> pred;
  std::vector<TimeBound> truth;
  for (const auto& e : evals) {
    for (const auto& m : match_events(e.true_events, e.predicted_events)) {
      const auto& t = e.true_events[m.truth];
      const auto& p = e.predicted_events[m.predicted];
      if (only && t.kind != *only) continue;
      if (t.bounds && p.bounds) {
        truth.push_back(*t.bounds);
        pred.push_back(*p.bounds);
      }
    }
  }
  return {std::move(pred), std::move(truth)};
}

struct EvalRow {
  std::optional<DysfluencyType> type;  // nullopt = aggregate row
  std::size_t utterances = 0;
  std::size_t instances = 0;
  double ter_pct = 0.0;
  std::optional<double> eacc_pct;
  std::optional<double> cacc_pct;
  std::optional<double> td_e3;
  std::optional<double> bl_ms;

  std::string label() const { return type ? std::string(to_string(*type)) : std::string("All"); }
};

struct EvalReport {
  AnnotationLevel level = AnnotationLevel::Word;
  std::vector<EvalRow> rows;
  bool has_bound_loss = false;
};

using GroupedEvals = std::map<DysfluencyType, std::vector<UtteranceEval>>;

/// Groups utterances by the types of their true events; an utterance with
/// two types lands in both groups, a fluent one in none.
inline GroupedEvals group_by_type(const std::vector<UtteranceEval>& evals) {
  GroupedEvals groups;
  for (const auto& e : evals) {
    std::vector<DysfluencyType> seen;
    for (const auto& t : e.true_events) {
      if (std::find(seen.begin(), seen.end(), t.kind) == seen.end()) seen.push_back(t.kind);
    }
    for (auto k : seen) groups[k].push_back(e);
  }
  return groups;
}

namespace detail {

template <typename F>
std::optional<double> try_metric(F f) {
  try {
    return f();
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline EvalRow make_row(std::optional<DysfluencyType> type, const std::vector<UtteranceEval>& evals) {
  EvalRow row;
  row.type = type;
  row.utterances = evals.size();
  std::size_t edits = 0;
  std::size_t ref_tokens = 0;
  for (const auto& e : evals) {
    edits += edit_distance(e.true_tokens, e.predicted_tokens);
    ref_tokens += e.true_tokens.size();
    for (const auto& t : e.true_events) {
      if (!type || t.kind == *type) ++row.instances;
    }
  }
  row.ter_pct = ref_tokens ? 100.0 * static_cast<double>(edits) / static_cast<double>(ref_tokens) : 0.0;
  row.eacc_pct = try_metric([&] { return 100.0 * eacc(evals); });
  row.cacc_pct = try_metric([&] { return 100.0 * cacc(evals, type); });
  row.td_e3 = try_metric([&] { return 1000.0 * token_distance(evals, type); });
  const auto [pred, truth] = matched_bounds(evals, type);
  if (!truth.empty()) row.bl_ms = bound_loss(pred, truth);
  return row;
}

}  // namespace detail

/// One row per group in type order, then an aggregate row over `all` when
/// given. The bound-loss column is present only when some row has bounds.
inline EvalReport build_report(AnnotationLevel level, const GroupedEvals& groups,
                               const std::vector<UtteranceEval>* all = nullptr) {
  if (groups.empty() && (!all || all->empty())) throw Error(ErrorCode::EmptyGroup, "no groups");
  EvalReport report;
  report.level = level;
  for (auto t : kAllTypes) {
    auto it = groups.find(t);
    if (it == groups.end()) continue;
    if (it->second.empty()) throw Error(ErrorCode::EmptyGroup, std::string(to_string(t)));
    report.rows.push_back(detail::make_row(t, it->second));
  }
  if (all && !all->empty()) report.rows.push_back(detail::make_row(std::nullopt, *all));
  report.has_bound_loss = std::any_of(report.rows.begin(), report.rows.end(),
                                      [](const EvalRow& r) { return r.bl_ms.has_value(); });
  return report;
}

namespace detail {

inline std::string fixed(std::optional<double> v, int precision) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, *v);
  return buf;
}

inline std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

inline std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

}  // namespace detail

inline void write_report_table(std::ostream& out, const EvalReport& report) {
  using detail::fixed;
  using detail::pad_left;
  using detail::pad_right;
  out << pad_right("Level", 9) << pad_right("Type", 14) << pad_left("Utts", 7) << pad_left("Inst", 7)
      << pad_left("TER(%)", 9) << pad_left("EAcc(%)", 9) << pad_left("CAcc(%)", 9)
      << pad_left("TD(e-3)", 9);
  if (report.has_bound_loss) out << pad_left("BL(ms)", 9);
  out << '\n';
  for (const auto& r : report.rows) {
    out << pad_right(std::string(to_string(report.level)), 9) << pad_right(r.label(), 14)
        << pad_left(std::to_string(r.utterances), 7) << pad_left(std::to_string(r.instances), 7)
        << pad_left(fixed(r.ter_pct, 3), 9) << pad_left(fixed(r.eacc_pct, 2), 9)
        << pad_left(fixed(r.cacc_pct, 2), 9) << pad_left(fixed(r.td_e3, 2), 9);
    if (report.has_bound_loss) out << pad_left(fixed(r.bl_ms, 1), 9);
    out << '\n';
  }
}

inline nlohmann::json to_json(const EvalRow& r, AnnotationLevel level, bool with_bl) {
  auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j = nlohmann::json::object();
  j["level"] = std::string(to_string(level));
  j["type"] = r.label();
  j["utterances"] = r.utterances;
  j["instances"] = r.instances;
  j["ter_pct"] = r.ter_pct;
  j["eacc_pct"] = opt(r.eacc_pct);
  j["cacc_pct"] = opt(r.cacc_pct);
  j["td_e3"] = opt(r.td_e3);
  if (with_bl) j["bl_ms"] = opt(r.bl_ms);
  return j;
}

inline void write_report_jsonl(std::ostream& out, const EvalReport& report) {
  for (const auto& r : report.rows) out << to_json(r, report.level, report.has_bound_loss).dump() << '\n';
}

}  // namespace dysflux
