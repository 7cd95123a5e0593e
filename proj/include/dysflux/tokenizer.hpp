#pragma once

// Word- and phoneme-level vocabularies over annotated text. Layout is
// base symbols, then the specials, then the four level-legal markers, so
// the marker ids are always the four largest.

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dysflux/annotation.hpp"
#include "dysflux/error.hpp"
#include "dysflux/phoneme.hpp"

namespace dysflux {

using TokenId = std::uint32_t;

inline constexpr std::array<std::string_view, 4> kSpecialTokens = {"<pad>", "<bos>", "<eos>",
                                                                   "<unk>"};

/// Size of the subword vocabulary used by the neural word-level detector.
/// Kept for parity checks only; word tokenization here is whole-word.
inline constexpr std::size_t kWhisperBaseVocabSize = 50258;

class Vocabulary {
 public:
  Vocabulary() = default;

  AnnotationLevel level() const { return level_; }
  std::size_t size() const { return symbols_.size(); }
  std::size_t base_size() const { return base_size_; }

  TokenId pad() const { return special(0); }
  TokenId bos() const { return special(1); }
  TokenId eos() const { return special(2); }
  TokenId unk() const { return special(3); }

  std::optional<TokenId> find(std::string_view symbol) const {
    auto it = ids_.find(std::string(symbol));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  TokenId id(std::string_view symbol) const {
    auto found = find(symbol);
    if (!found) throw Error(ErrorCode::OutOfVocabulary, "'" + std::string(symbol) + "'");
    return *found;
  }

  const std::string& symbol(TokenId id) const {
    if (id >= symbols_.size()) {
      throw Error(ErrorCode::IdOutOfRange, std::to_string(id) + " >= " + std::to_string(size()));
    }
    return symbols_[id];
  }

  TokenId marker_id(DysfluencyType kind) const { return id(marker_text(kind)); }

  bool is_special(TokenId id) const { return id >= base_size_ && id < base_size_ + 4; }
  bool is_marker(TokenId id) const { return id >= base_size_ + 4 && id < size(); }

  const std::vector<std::string>& symbols() const { return symbols_; }

  void save(std::ostream& out) const {
    for (const auto& s : symbols_) out << s << '\n';
  }

  /// Reads one symbol per line (line number = id) and checks the layout.
  static Vocabulary load(std::istream& in, AnnotationLevel level) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
    if (lines.size() < 8) throw Error(ErrorCode::InvalidConfig, "vocabulary shorter than 8 entries");
    const std::size_t base = lines.size() - 8;
    std::vector<std::string> base_symbols(lines.begin(), lines.begin() + static_cast<long>(base));
    Vocabulary v = assemble(std::move(base_symbols), level);
    if (v.symbols_ != lines) {
      throw Error(ErrorCode::InvalidConfig, "vocabulary file does not follow the base/special/marker layout");
    }
    return v;
  }

  static Vocabulary load_file(const std::string& path, AnnotationLevel level) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open vocabulary '" + path + "'");
    return load(in, level);
  }

  friend Vocabulary build_phoneme_vocab();
  friend Vocabulary build_word_vocab(const std::vector<std::string>& base_words);

 private:
  TokenId special(std::size_t k) const { return static_cast<TokenId>(base_size_ + k); }

  static Vocabulary assemble(std::vector<std::string> base, AnnotationLevel level) {
    Vocabulary v;
    v.level_ = level;
    v.base_size_ = base.size();
    v.symbols_ = std::move(base);
    for (auto s : kSpecialTokens) v.symbols_.emplace_back(s);
    for (auto t : level_types(level)) v.symbols_.emplace_back(marker_text(t));
    for (std::size_t i = 0; i < v.symbols_.size(); ++i) {
      const auto [it, inserted] = v.ids_.emplace(v.symbols_[i], static_cast<TokenId>(i));
      if (!inserted) {
        const bool reserved = i >= v.base_size_;
        throw Error(reserved ? ErrorCode::ReservedSymbolInBase : ErrorCode::DuplicateWord,
                    "'" + v.symbols_[i] + "'");
      }
    }
    return v;
  }

  AnnotationLevel level_ = AnnotationLevel::Word;
  std::size_t base_size_ = 0;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, TokenId> ids_;
};

/// 39 phonemes (ids 0-38), specials (39-42), [REP] [DEL] [SUB] [PRO] (43-46).
inline Vocabulary build_phoneme_vocab() {
  std::vector<std::string> base(kPhonemeInventory.begin(), kPhonemeInventory.end());
  return Vocabulary::assemble(std::move(base), AnnotationLevel::Phoneme);
}

inline Vocabulary build_word_vocab(const std::vector<std::string>& base_words) {
  for (const auto& w : base_words) {
    if (is_bracketed(w)) throw Error(ErrorCode::ReservedSymbolInBase, "'" + w + "'");
    for (auto s : kSpecialTokens) {
      if (w == s) throw Error(ErrorCode::ReservedSymbolInBase, "'" + w + "'");
    }
  }
  return Vocabulary::assemble(base_words, AnnotationLevel::Word);
}

inline std::vector<TokenId> encode(const AnnotatedSequence& seq, const Vocabulary& vocab) {
  if (seq.level != vocab.level()) {
    throw Error(ErrorCode::LevelMismatch, "sequence is " + std::string(to_string(seq.level)) +
                                              ", vocabulary is " + std::string(to_string(vocab.level())));
  }
  std::vector<TokenId> ids;
  ids.reserve(seq.token_count() + 2);
  ids.push_back(vocab.bos());
  std::size_t m = 0;
  for (std::size_t slot = 0; slot <= seq.units.size(); ++slot) {
    while (m < seq.markers.size() && seq.markers[m].slot == slot) {
      ids.push_back(vocab.marker_id(seq.markers[m].kind));
      ++m;
    }
    if (slot == seq.units.size()) break;
    const auto& unit = seq.units[slot];
    auto found = vocab.find(unit);
    if (found && !vocab.is_special(*found) && !vocab.is_marker(*found)) {
      ids.push_back(*found);
    } else if (seq.level == AnnotationLevel::Phoneme) {
      throw Error(ErrorCode::UnknownPhoneme, "'" + unit + "'");
    } else {
      ids.push_back(vocab.unk());
    }
  }
  ids.push_back(vocab.eos());
  return ids;
}

/// Drops PAD/BOS/EOS. UNK decodes to the literal "<unk>" unit so that unit
/// positions survive.
inline AnnotatedSequence decode(const std::vector<TokenId>& ids, const Vocabulary& vocab) {
  AnnotatedSequence seq;
  seq.level = vocab.level();
  for (auto id : ids) {
    const auto& sym = vocab.symbol(id);
    if (vocab.is_marker(id)) {
      seq.markers.push_back(MarkerSlot{*marker_type(sym), seq.units.size()});
    } else if (id == vocab.unk() || !vocab.is_special(id)) {
      seq.units.push_back(sym);
    }
  }
  return seq;
}

/// Content tokens only (no BOS/EOS), as compared by the token error rate.
inline std::vector<TokenId> encode_content(const AnnotatedSequence& seq, const Vocabulary& vocab) {
  auto ids = encode(seq, vocab);
  return {ids.begin() + 1, ids.end() - 1};
}

}  // namespace dysflux
