#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mtlab/corpus.hpp"

namespace mtlab {

/// Word-initial marker, U+2581 LOWER ONE EIGHTH BLOCK.
inline constexpr char32_t kWordMarker = U'▁';
inline constexpr std::string_view kWordMarkerUtf8 = "\xE2\x96\x81";
/// Surface used when decoding an UNK id.
inline constexpr std::string_view kUnknownSurface = "\xE2\x81\x87";

struct MergeRule {
  std::string left;
  std::string right;
  int rank = 0;

  bool operator==(const MergeRule&) const = default;
};

struct TokenizedSentence {
  std::vector<int> ids;
  /// Surface pieces. An UNK id keeps the character it replaced.
  std::vector<std::string> pieces;
};

/// Ordered subword inventory plus ranked merge rules. Ids 0..3 are the
/// specials (PAD, BOS, EOS, UNK); the base pieces (each training character,
/// its marker-prefixed form and the bare marker) follow, then merged pieces in
/// the order they were learned. Immutable once built.
class SubwordVocabulary {
 public:
  SubwordVocabulary(std::vector<std::string> pieces, std::vector<MergeRule> merges);

  std::size_t size() const noexcept { return pieces_.size(); }
  const std::string& piece(int id) const;
  std::optional<int> find(std::string_view piece) const;
  std::optional<int> merge_rank(std::string_view left, std::string_view right) const;
  const std::vector<std::string>& pieces() const noexcept { return pieces_; }
  const std::vector<MergeRule>& merges() const noexcept { return merges_; }

  /// Non-special pieces holding at most one non-marker character.
  std::size_t base_piece_count() const;
  std::size_t longest_piece_length() const;

  std::string serialize() const;
  static SubwordVocabulary parse(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static SubwordVocabulary load(const std::filesystem::path& path);

  /// Hash of serialize(); identifies the vocabulary a checkpoint was trained with.
  std::string fingerprint() const;

  bool operator==(const SubwordVocabulary& other) const {
    return pieces_ == other.pieces_ && merges_ == other.merges_;
  }

 private:
  std::vector<std::string> pieces_;
  std::vector<MergeRule> merges_;
  std::unordered_map<std::string, int> index_;
  std::unordered_map<std::string, int> ranks_;
};

/// Greedy pair-merge training over the marker-prefixed words of both sides.
/// The most frequent adjacent pair is merged first; ties go to the
/// lexicographically smallest merged string. Stops at `vocab_size` pieces or
/// when no pair occurs twice.
SubwordVocabulary train_vocab(const ParallelCorpus& corpus, std::size_t vocab_size);

TokenizedSentence encode(const SubwordVocabulary& vocab, std::string_view text);
std::string decode(const SubwordVocabulary& vocab, std::span<const int> ids);
std::string decode(const SubwordVocabulary& vocab, const TokenizedSentence& tokens);

/// Concatenates surface pieces, turns markers into spaces and trims.
std::string join_pieces(const std::vector<std::string>& pieces);

struct TokenizationStats {
  std::size_t sentences = 0;
  double avg_sentence_length_source = 0.0;
  double avg_sentence_length_target = 0.0;
  double avg_token_length_source = 0.0;
  double avg_token_length_target = 0.0;
};

/// Token statistics after removing specials and the word marker. Average token
/// length is total characters over total tokens (token-weighted).
TokenizationStats tokenization_stats(const ParallelCorpus& corpus, const SubwordVocabulary& vocab);

/// Pieces of `tokens` with the marker removed; pieces that were only a marker
/// are dropped.
std::vector<std::u32string> cleaned_tokens(const TokenizedSentence& tokens);

}  // namespace mtlab
