#pragma once

// Line-delimited JSON manifests and prediction files.

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dysflux/annotation.hpp"
#include "dysflux/error.hpp"
#include "dysflux/timing.hpp"

namespace dysflux {

using Json = nlohmann::json;

struct ManifestRecord {
  std::string utterance_id;
  AnnotationLevel level = AnnotationLevel::Word;
  std::string reference_text;
  std::string annotated_text;
  std::vector<TimedUnit> realized_units;
  std::string ipa;  // space-separated IPA segments
  std::vector<DysfluencyEvent> events;
  std::optional<std::string> audio_path;
  Json metadata = Json::object();

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// One detector output line. `error` is set instead of the prediction when
/// the record could not be processed.
struct PredictionRecord {
  std::string utterance_id;
  AnnotationLevel level = AnnotationLevel::Word;
  std::string annotated_text;
  std::vector<DysfluencyEvent> events;
  std::optional<std::string> error;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

namespace detail {

inline Json bound_to_json(const TimeBound& b) { return Json::array({b.start, b.end}); }

inline TimeBound bound_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorCode::MalformedManifest, "bounds must be [start, end]");
  }
  return TimeBound::make(j[0].get<double>(), j[1].get<double>());
}

inline const Json& require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::MalformedManifest, std::string("missing field '") + key + "'");
  return *it;
}

inline AnnotationLevel level_from_json(const Json& j) {
  if (!j.is_string()) throw Error(ErrorCode::MalformedManifest, "level must be a string");
  const auto level = parse_level_name(j.get<std::string>());
  if (!level) throw Error(ErrorCode::MalformedManifest, "unknown level '" + j.get<std::string>() + "'");
  return *level;
}

}  // namespace detail

inline Json to_json(const DysfluencyEvent& e) {
  Json j = Json::object();
  j["type"] = std::string(to_string(e.kind));
  j["level"] = std::string(to_string(e.level));
  j["anchor"] = e.anchor;
  if (!e.payload.empty()) j["payload"] = e.payload;
  if (e.bounds) j["bounds"] = detail::bound_to_json(*e.bounds);
  return j;
}

inline DysfluencyEvent event_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedManifest, "event must be an object");
  DysfluencyEvent e;
  const auto& type = detail::require(j, "type");
  const auto kind = type.is_string() ? parse_type_name(type.get<std::string>()) : std::nullopt;
  if (!kind) throw Error(ErrorCode::MalformedManifest, "unknown event type");
  e.kind = *kind;
  e.level = detail::level_from_json(detail::require(j, "level"));
  const auto& anchor = detail::require(j, "anchor");
  if (!anchor.is_number_unsigned()) throw Error(ErrorCode::MalformedManifest, "anchor must be unsigned");
  e.anchor = anchor.get<std::size_t>();
  if (auto it = j.find("payload"); it != j.end()) {
    e.payload = it->get<std::vector<std::string>>();
  }
  if (auto it = j.find("bounds"); it != j.end() && !it->is_null()) {
    e.bounds = detail::bound_from_json(*it);
  }
  return e;
}

inline Json to_json(const TimedUnit& u) {
  return Json{{"unit", u.unit}, {"start", u.bound.start}, {"end", u.bound.end}};
}

inline Json to_json(const ManifestRecord& r) {
  Json j = Json::object();
  j["utterance_id"] = r.utterance_id;
  j["level"] = std::string(to_string(r.level));
  j["reference_text"] = r.reference_text;
  j["annotated_text"] = r.annotated_text;
  Json units = Json::array();
  for (const auto& u : r.realized_units) units.push_back(to_json(u));
  j["realized_units"] = std::move(units);
  j["ipa"] = r.ipa;
  Json events = Json::array();
  for (const auto& e : r.events) events.push_back(to_json(e));
  j["events"] = std::move(events);
  if (r.audio_path) j["audio_path"] = *r.audio_path;
  j["metadata"] = r.metadata;
  return j;
}

/// Parses one manifest object. `realized_units` may be absent; callers that
/// need it check `realized_units.empty()`.
inline ManifestRecord manifest_record_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedManifest, "record must be an object");
  ManifestRecord r;
  try {
    r.utterance_id = detail::require(j, "utterance_id").get<std::string>();
    r.level = detail::level_from_json(detail::require(j, "level"));
    r.reference_text = detail::require(j, "reference_text").get<std::string>();
    r.annotated_text = detail::require(j, "annotated_text").get<std::string>();
    if (auto it = j.find("realized_units"); it != j.end()) {
      for (const auto& u : *it) {
        r.realized_units.push_back(TimedUnit{
            detail::require(u, "unit").get<std::string>(),
            TimeBound::make(detail::require(u, "start").get<double>(),
                            detail::require(u, "end").get<double>())});
      }
    }
    if (auto it = j.find("ipa"); it != j.end()) r.ipa = it->get<std::string>();
    if (auto it = j.find("events"); it != j.end()) {
      for (const auto& e : *it) r.events.push_back(event_from_json(e));
    }
    if (auto it = j.find("audio_path"); it != j.end() && !it->is_null()) {
      r.audio_path = it->get<std::string>();
    }
    if (auto it = j.find("metadata"); it != j.end()) r.metadata = *it;
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::MalformedManifest, ex.what());
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::MalformedManifest) throw;
    throw Error(ErrorCode::MalformedManifest, ex.what());
  }
  return r;
}

inline Json to_json(const PredictionRecord& p) {
  Json j = Json::object();
  j["utterance_id"] = p.utterance_id;
  j["level"] = std::string(to_string(p.level));
  if (p.error) {
    j["error"] = *p.error;
    return j;
  }
  j["annotated_text"] = p.annotated_text;
  Json events = Json::array();
  for (const auto& e : p.events) events.push_back(to_json(e));
  j["events"] = std::move(events);
  return j;
}

inline PredictionRecord prediction_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::MalformedManifest, "prediction must be an object");
  PredictionRecord p;
  try {
    p.utterance_id = detail::require(j, "utterance_id").get<std::string>();
    p.level = detail::level_from_json(detail::require(j, "level"));
    if (auto it = j.find("error"); it != j.end() && !it->is_null()) {
      p.error = it->get<std::string>();
      return p;
    }
    p.annotated_text = detail::require(j, "annotated_text").get<std::string>();
    if (auto it = j.find("events"); it != j.end()) {
      for (const auto& e : *it) p.events.push_back(event_from_json(e));
    }
  } catch (const Json::exception& ex) {
    throw Error(ErrorCode::MalformedManifest, ex.what());
  }
  return p;
}

/// Reads newline-delimited objects; blank lines are skipped. Parse failures
/// carry the 1-based line number.
template <typename Record, typename Parse>
std::vector<Record> read_jsonl(std::istream& in, Parse parse) {
  std::vector<Record> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(Json::parse(line)));
    } catch (const Json::exception& ex) {
      throw Error(ErrorCode::MalformedManifest, "line " + std::to_string(line_no) + ": " + ex.what());
    } catch (const Error& ex) {
      throw Error(ErrorCode::MalformedManifest, "line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

inline std::vector<ManifestRecord> read_manifest(std::istream& in) {
  return read_jsonl<ManifestRecord>(in, manifest_record_from_json);
}

inline std::vector<PredictionRecord> read_predictions(std::istream& in) {
  return read_jsonl<PredictionRecord>(in, prediction_from_json);
}

template <typename Record>
void write_jsonl(std::ostream& out, const std::vector<Record>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  return out;
}

}  // namespace dysflux
