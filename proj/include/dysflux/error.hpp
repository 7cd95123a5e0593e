#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dysflux {

enum class ErrorCode {
  EmptyInput,
  UnknownMarker,
  IllegalMarkerForLevel,
  MisplacedMarker,
  UnknownPhoneme,
  OutOfVocabulary,
  IllegalKindForLevel,
  ReferenceTooShort,
  NoLegalAnchor,
  AllTranscriptsOOV,
  InvalidConfig,
  DuplicateWord,
  ReservedSymbolInBase,
  LevelMismatch,
  IdOutOfRange,
  EmptyObserved,
  AnchorOutOfRange,
  EmptyReference,
  EmptyEvalSet,
  NoDysfluentInstances,
  NoMatchedPairs,
  LengthMismatch,
  EmptyGroup,
  TooShort,
  WrongSampleRate,
  MalformedWav,
  MalformedManifest,
  MalformedAlignment,
  IdMismatch,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::UnknownMarker: return "UnknownMarker";
    case ErrorCode::IllegalMarkerForLevel: return "IllegalMarkerForLevel";
    case ErrorCode::MisplacedMarker: return "MisplacedMarker";
    case ErrorCode::UnknownPhoneme: return "UnknownPhoneme";
    case ErrorCode::OutOfVocabulary: return "OutOfVocabulary";
    case ErrorCode::IllegalKindForLevel: return "IllegalKindForLevel";
    case ErrorCode::ReferenceTooShort: return "ReferenceTooShort";
    case ErrorCode::NoLegalAnchor: return "NoLegalAnchor";
    case ErrorCode::AllTranscriptsOOV: return "AllTranscriptsOOV";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DuplicateWord: return "DuplicateWord";
    case ErrorCode::ReservedSymbolInBase: return "ReservedSymbolInBase";
    case ErrorCode::LevelMismatch: return "LevelMismatch";
    case ErrorCode::IdOutOfRange: return "IdOutOfRange";
    case ErrorCode::EmptyObserved: return "EmptyObserved";
    case ErrorCode::AnchorOutOfRange: return "AnchorOutOfRange";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::NoDysfluentInstances: return "NoDysfluentInstances";
    case ErrorCode::NoMatchedPairs: return "NoMatchedPairs";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::WrongSampleRate: return "WrongSampleRate";
    case ErrorCode::MalformedWav: return "MalformedWav";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::MalformedAlignment: return "MalformedAlignment";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure in the library is reported as an `Error` carrying a code
/// that callers (and tests) can switch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dysflux
