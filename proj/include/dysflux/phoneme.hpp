#pragma once

// CMU phoneme inventory, pronouncing-dictionary lookup and the CMU->IPA
// table used when rendering simulator output for synthesis.

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dysflux/annotation.hpp"
#include "dysflux/error.hpp"

namespace dysflux {

using PhonemeSequence = std::vector<std::string>;

/// The 39 stress-free CMU symbols in alphabetical order.
inline constexpr std::array<std::string_view, 39> kPhonemeInventory = {
    "AA", "AE", "AH", "AO", "AW", "AY", "B",  "CH", "D",  "DH", "EH", "ER", "EY",
    "F",  "G",  "HH", "IH", "IY", "JH", "K",  "L",  "M",  "N",  "NG", "OW", "OY",
    "P",  "R",  "S",  "SH", "T",  "TH", "UH", "UW", "V",  "W",  "Y",  "Z",  "ZH"};

inline constexpr std::string_view kSilence = "sil";
inline constexpr std::string_view kIpaLengthMark = "ː";
inline constexpr std::string_view kIpaSilence = "‖";

inline std::optional<std::size_t> phoneme_index(std::string_view symbol) {
  auto it = std::lower_bound(kPhonemeInventory.begin(), kPhonemeInventory.end(), symbol);
  if (it == kPhonemeInventory.end() || *it != symbol) return std::nullopt;
  return static_cast<std::size_t>(it - kPhonemeInventory.begin());
}

inline bool is_phoneme(std::string_view symbol) { return phoneme_index(symbol).has_value(); }

inline std::string strip_stress(std::string_view raw) {
  std::string_view base = raw;
  if (!base.empty() && base.back() >= '0' && base.back() <= '2') base.remove_suffix(1);
  if (!is_phoneme(base)) throw Error(ErrorCode::UnknownPhoneme, "'" + std::string(raw) + "'");
  return std::string(base);
}

// Indexed like kPhonemeInventory.
inline constexpr std::array<std::string_view, 39> kIpaTable = {
    "ɑ", "æ", "ʌ", "ɔ", "aʊ", "aɪ", "b", "tʃ", "d", "ð", "ɛ", "ɝ", "eɪ",
    "f", "ɡ", "h", "ɪ", "iː", "dʒ", "k", "l", "m", "n", "ŋ", "oʊ", "ɔɪ",
    "p", "ɹ", "s", "ʃ", "t", "θ", "ʊ", "uː", "v", "w", "j", "z", "ʒ"};

using IpaString = std::vector<std::string>;

inline std::string_view ipa_of(std::string_view phoneme) {
  const auto idx = phoneme_index(phoneme);
  if (!idx) throw Error(ErrorCode::UnknownPhoneme, "'" + std::string(phoneme) + "'");
  return kIpaTable[*idx];
}

inline IpaString cmu_to_ipa(const PhonemeSequence& seq) {
  IpaString out;
  out.reserve(seq.size());
  for (const auto& p : seq) out.emplace_back(ipa_of(p));
  return out;
}

/// A segment is a table value optionally followed by extra length marks, or
/// the silence marker.
inline bool is_valid_ipa_segment(std::string_view seg) {
  if (seg == kIpaSilence) return true;
  for (auto base : kIpaTable) {
    if (seg.substr(0, base.size()) != base) continue;
    std::string_view rest = seg.substr(base.size());
    while (rest.substr(0, kIpaLengthMark.size()) == kIpaLengthMark) {
      rest.remove_prefix(kIpaLengthMark.size());
    }
    if (rest.empty()) return true;
  }
  return false;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string to_upper_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

/// Lowercases and strips punctuation other than word-internal apostrophes
/// and hyphens, then splits on whitespace.
inline std::vector<std::string> normalize_transcript(std::string_view line) {
  std::string cleaned;
  cleaned.reserve(line.size());
  for (std::size_t i = 0; i < line.size(); ++i) {
    const auto c = static_cast<unsigned char>(line[i]);
    if (std::isalnum(c)) {
      cleaned.push_back(static_cast<char>(std::tolower(c)));
    } else if ((c == '\'' || c == '-') && i > 0 && i + 1 < line.size() &&
               std::isalnum(static_cast<unsigned char>(line[i - 1])) &&
               std::isalnum(static_cast<unsigned char>(line[i + 1]))) {
      cleaned.push_back(static_cast<char>(c));
    } else if (c >= 0x80) {
      cleaned.push_back(static_cast<char>(c));
    } else {
      cleaned.push_back(' ');
    }
  }
  return split_whitespace(cleaned);
}

/// Word -> primary stress-free pronunciation. Accepts both the classic
/// "WORD  PH1 PH2" layout with ";;;" comments and the lowercase
/// "word ph1 ph2 # note" layout; numbered variants "(2)" are ignored.
class PronunciationDict {
 public:
  PronunciationDict() = default;

  static PronunciationDict load(std::istream& in) {
    PronunciationDict dict;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.rfind(";;;", 0) == 0) continue;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      auto fields = split_whitespace(line);
      if (fields.size() < 2) continue;
      std::string word = to_lower_ascii(fields[0]);
      if (word.size() > 3 && word.back() == ')') {
        // Variant pronunciation: first entry wins.
        if (auto open = word.rfind('('); open != std::string::npos) continue;
      }
      if (dict.entries_.count(word)) continue;
      PhonemeSequence pron;
      pron.reserve(fields.size() - 1);
      bool ok = true;
      for (std::size_t i = 1; i < fields.size(); ++i) {
        const auto idx = phoneme_index(stress_free_view(to_upper_ascii(fields[i])));
        if (!idx) {
          ok = false;
          break;
        }
        pron.emplace_back(kPhonemeInventory[*idx]);
      }
      if (ok && !pron.empty()) dict.entries_.emplace(std::move(word), std::move(pron));
    }
    return dict;
  }

  static PronunciationDict load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open dictionary '" + path + "'");
    return load(in);
  }

  void insert(std::string word, PhonemeSequence pron) {
    entries_[to_lower_ascii(word)] = std::move(pron);
  }

  bool contains(std::string_view word) const {
    return entries_.count(to_lower_ascii(word)) > 0;
  }

  const PhonemeSequence* find(std::string_view word) const {
    auto it = entries_.find(to_lower_ascii(word));
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }

  const std::unordered_map<std::string, PhonemeSequence>& entries() const { return entries_; }

 private:
  static std::string_view stress_free_view(std::string_view raw) {
    if (!raw.empty() && raw.back() >= '0' && raw.back() <= '2') raw.remove_suffix(1);
    return raw;
  }

  std::unordered_map<std::string, PhonemeSequence> entries_;
};

inline PhonemeSequence g2p(std::string_view word, const PronunciationDict& dict) {
  if (word.empty()) throw Error(ErrorCode::EmptyInput, "empty word");
  const auto* pron = dict.find(word);
  if (!pron) throw Error(ErrorCode::OutOfVocabulary, "'" + std::string(word) + "'");
  return *pron;
}

inline PhonemeSequence g2p_words(const std::vector<std::string>& words,
                                 const PronunciationDict& dict) {
  PhonemeSequence out;
  for (const auto& w : words) {
    const auto pron = g2p(w, dict);
    out.insert(out.end(), pron.begin(), pron.end());
  }
  return out;
}

}  // namespace dysflux
