#include "mtlab/subword.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "mtlab/error.hpp"
#include "mtlab/hashing.hpp"
#include "mtlab/special_tokens.hpp"
#include "mtlab/utf8.hpp"

namespace mtlab {
namespace {

constexpr std::string_view kHeader = "subword-vocab v1 ";
constexpr std::string_view kMergesLine = "#merges";
const std::string kSpecialSurfaces[kNumSpecials] = {"<pad>", "<s>", "</s>", "<unk>"};

std::string rank_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key += left;
  key += '\t';
  key += right;
  return key;
}

std::string marked(char32_t c) { return std::string(kWordMarkerUtf8) + utf8::encode(c); }

// Words of a sentence as code-point strings. A literal marker in the input
// acts as a separator, the same as whitespace.
std::vector<std::u32string> split_words(std::string_view text) {
  std::vector<std::u32string> words;
  std::u32string current;
  for (char32_t c : utf8::decode(text)) {
    if (utf8::is_space(c) || c == kWordMarker) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

// Incremental pair statistics for merge training. Symbols are interned
// strings; a word is a sequence of symbol ids with a corpus frequency.
class MergeTrainer {
 public:
  using Pair = std::pair<int, int>;

  int intern(const std::string& s) {
    auto [it, inserted] = ids_.try_emplace(s, static_cast<int>(strings_.size()));
    if (inserted) strings_.push_back(s);
    return it->second;
  }

  void add_word(std::vector<int> symbols, long long freq) {
    const int w = static_cast<int>(words_.size());
    words_.push_back({std::move(symbols), freq});
    count_pairs(w, +1);
  }

  // Best pair by (count desc, merged asc, left asc, right asc).
  std::optional<std::pair<Pair, long long>> best() const {
    if (queue_.empty()) return std::nullopt;
    const Candidate& c = *queue_.begin();
    return std::make_pair(c.pair, c.count);
  }

  const std::string& str(int id) const { return strings_[id]; }

  void merge(Pair pair, int merged_id) {
    auto it = occurrences_.find(pair);
    if (it == occurrences_.end()) return;
    const std::set<int> affected = it->second;
    for (int w : affected) {
      count_pairs(w, -1);
      auto& sym = words_[w].symbols;
      std::vector<int> out;
      out.reserve(sym.size());
      for (std::size_t i = 0; i < sym.size(); ++i) {
        if (i + 1 < sym.size() && sym[i] == pair.first && sym[i + 1] == pair.second) {
          out.push_back(merged_id);
          ++i;
        } else {
          out.push_back(sym[i]);
        }
      }
      sym = std::move(out);
      count_pairs(w, +1);
    }
  }

 private:
  struct Word {
    std::vector<int> symbols;
    long long freq;
  };
  struct Candidate {
    long long count;
    std::string merged;
    std::string left;
    std::string right;
    Pair pair;
  };
  struct CandidateLess {
    bool operator()(const Candidate& a, const Candidate& b) const {
      if (a.count != b.count) return a.count > b.count;
      return std::tie(a.merged, a.left, a.right) < std::tie(b.merged, b.left, b.right);
    }
  };

  Candidate candidate(Pair p, long long count) const {
    return {count, strings_[p.first] + strings_[p.second], strings_[p.first], strings_[p.second], p};
  }

  void adjust(Pair p, long long delta, int word) {
    long long& count = counts_[p];
    if (count > 0) queue_.erase(candidate(p, count));
    count += delta;
    if (count > 0) {
      queue_.insert(candidate(p, count));
    } else {
      counts_.erase(p);
    }
    if (delta > 0) {
      occurrences_[p].insert(word);
    }
  }

  void count_pairs(int w, int sign) {
    const auto& sym = words_[w].symbols;
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      adjust({sym[i], sym[i + 1]}, sign * words_[w].freq, w);
    }
    if (sign < 0) {
      for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
        auto it = occurrences_.find({sym[i], sym[i + 1]});
        if (it != occurrences_.end()) {
          it->second.erase(w);
          if (it->second.empty()) occurrences_.erase(it);
        }
      }
    }
  }

  std::vector<std::string> strings_;
  std::unordered_map<std::string, int> ids_;
  std::vector<Word> words_;
  std::map<Pair, long long> counts_;
  std::map<Pair, std::set<int>> occurrences_;
  std::set<Candidate, CandidateLess> queue_;
};

}  // namespace

SubwordVocabulary::SubwordVocabulary(std::vector<std::string> pieces, std::vector<MergeRule> merges)
    : pieces_(std::move(pieces)), merges_(std::move(merges)) {
  if (pieces_.size() < static_cast<std::size_t>(kNumSpecials)) {
    throw Error(ErrorCode::kVocabTooSmall, "vocabulary lacks the special tokens");
  }
  for (std::size_t id = kNumSpecials; id < pieces_.size(); ++id) {
    const auto& p = pieces_[id];
    if (p.empty()) throw Error(ErrorCode::kFormat, "empty piece at id " + std::to_string(id));
    const std::u32string cps = utf8::decode(p);
    for (std::size_t i = 0; i < cps.size(); ++i) {
      if (cps[i] == kWordMarker && i != 0) {
        throw Error(ErrorCode::kFormat, "word marker inside piece " + p);
      }
      if (utf8::is_space(cps[i])) throw Error(ErrorCode::kFormat, "whitespace in piece");
    }
    if (!index_.emplace(p, static_cast<int>(id)).second) {
      throw Error(ErrorCode::kFormat, "duplicate piece " + p);
    }
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& m = merges_[r];
    if (m.rank != static_cast<int>(r)) throw Error(ErrorCode::kFormat, "merge ranks must be dense");
    if (!index_.count(m.left + m.right)) {
      throw Error(ErrorCode::kFormat, "merge result " + m.left + m.right + " is not a piece");
    }
    ranks_.emplace(rank_key(m.left, m.right), m.rank);
  }
}

const std::string& SubwordVocabulary::piece(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size()) {
    throw Error(ErrorCode::kUnknownId, std::to_string(id));
  }
  return pieces_[id];
}

std::optional<int> SubwordVocabulary::find(std::string_view piece) const {
  auto it = index_.find(std::string(piece));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> SubwordVocabulary::merge_rank(std::string_view left, std::string_view right) const {
  auto it = ranks_.find(rank_key(left, right));
  if (it == ranks_.end()) return std::nullopt;
  return it->second;
}

std::size_t SubwordVocabulary::base_piece_count() const {
  std::size_t n = 0;
  for (std::size_t id = kNumSpecials; id < pieces_.size(); ++id) {
    std::u32string cps = utf8::decode(pieces_[id]);
    const std::size_t plain = cps.size() - (cps.front() == kWordMarker ? 1 : 0);
    if (plain <= 1) ++n;
  }
  return n;
}

std::size_t SubwordVocabulary::longest_piece_length() const {
  std::size_t longest = 0;
  for (std::size_t id = kNumSpecials; id < pieces_.size(); ++id) {
    longest = std::max(longest, utf8::length(pieces_[id]));
  }
  return longest;
}

std::string SubwordVocabulary::serialize() const {
  std::string out;
  out += kHeader;
  out += std::to_string(pieces_.size());
  out += '\n';
  for (std::size_t id = 0; id < pieces_.size(); ++id) {
    out += pieces_[id];
    out += '\t';
    out += std::to_string(id);
    out += '\n';
  }
  out += kMergesLine;
  out += '\n';
  for (const auto& m : merges_) {
    out += m.left;
    out += '\t';
    out += m.right;
    out += '\t';
    out += std::to_string(m.rank);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

long long parse_int(std::string_view s) {
  if (s.empty() || s.size() > 18) throw Error(ErrorCode::kFormat, "bad integer");
  long long v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw Error(ErrorCode::kFormat, "bad integer '" + std::string(s) + "'");
    v = v * 10 + (c - '0');
  }
  // Canonical form only, so that serialize(parse(x)) == x.
  if (std::to_string(v) != s) throw Error(ErrorCode::kFormat, "non-canonical integer");
  return v;
}

}  // namespace

SubwordVocabulary SubwordVocabulary::parse(std::string_view text) {
  if (!utf8::is_valid(text)) throw Error(ErrorCode::kInvalidEncoding, "vocabulary file");
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) throw Error(ErrorCode::kFormat, "missing final newline");
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  if (lines.empty() || lines[0].substr(0, kHeader.size()) != kHeader) {
    throw Error(ErrorCode::kFormat, "missing 'subword-vocab v1' header");
  }
  const auto count = static_cast<std::size_t>(parse_int(lines[0].substr(kHeader.size())));
  if (lines.size() < count + 2) throw Error(ErrorCode::kFormat, "truncated vocabulary file");

  std::vector<std::string> pieces;
  pieces.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto fields = split_tabs(lines[1 + i]);
    if (fields.size() != 2 || static_cast<std::size_t>(parse_int(fields[1])) != i) {
      throw Error(ErrorCode::kFormat, "bad piece line " + std::to_string(i + 2));
    }
    pieces.emplace_back(fields[0]);
  }
  if (lines[1 + count] != kMergesLine) throw Error(ErrorCode::kFormat, "missing #merges section");
  std::vector<MergeRule> merges;
  for (std::size_t i = count + 2; i < lines.size(); ++i) {
    const auto fields = split_tabs(lines[i]);
    if (fields.size() != 3) throw Error(ErrorCode::kFormat, "bad merge line " + std::to_string(i + 1));
    merges.push_back({std::string(fields[0]), std::string(fields[1]),
                      static_cast<int>(parse_int(fields[2]))});
  }
  for (int s = 0; s < kNumSpecials; ++s) {
    if (pieces[s] != kSpecialSurfaces[s]) throw Error(ErrorCode::kFormat, "special tokens out of place");
  }
  return SubwordVocabulary(std::move(pieces), std::move(merges));
}

void SubwordVocabulary::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

SubwordVocabulary SubwordVocabulary::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

std::string SubwordVocabulary::fingerprint() const { return mtlab::fingerprint(serialize()); }

SubwordVocabulary train_vocab(const ParallelCorpus& corpus, std::size_t vocab_size) {
  corpus.validate();
  std::map<std::u32string, long long> word_freq;
  for (const auto* side : {&corpus.source, &corpus.target}) {
    for (const auto& sentence : *side) {
      for (auto& w : split_words(sentence)) ++word_freq[w];
    }
  }
  if (word_freq.empty()) throw Error(ErrorCode::kVocabTooSmall, "corpus has no words");

  std::set<char32_t> chars;
  for (const auto& [w, f] : word_freq) chars.insert(w.begin(), w.end());
  std::set<std::string> base{std::string(kWordMarkerUtf8)};
  for (char32_t c : chars) {
    base.insert(utf8::encode(c));
    base.insert(marked(c));
  }
  const std::size_t minimum = kNumSpecials + base.size();
  if (vocab_size < minimum) {
    throw Error(ErrorCode::kVocabTooSmall, "need at least " + std::to_string(minimum) +
                                               " pieces for this character inventory");
  }

  std::vector<std::string> pieces(std::begin(kSpecialSurfaces), std::end(kSpecialSurfaces));
  pieces.insert(pieces.end(), base.begin(), base.end());
  std::set<std::string> known(base.begin(), base.end());

  MergeTrainer trainer;
  for (const auto& [w, freq] : word_freq) {
    std::vector<int> symbols;
    symbols.reserve(w.size());
    symbols.push_back(trainer.intern(marked(w[0])));
    for (std::size_t i = 1; i < w.size(); ++i) symbols.push_back(trainer.intern(utf8::encode(w[i])));
    trainer.add_word(std::move(symbols), freq);
  }

  std::vector<MergeRule> merges;
  while (pieces.size() < vocab_size) {
    const auto best = trainer.best();
    if (!best || best->second < 2) break;
    const auto [pair, count] = *best;
    const std::string left = trainer.str(pair.first);
    const std::string right = trainer.str(pair.second);
    const std::string merged = left + right;
    merges.push_back({left, right, static_cast<int>(merges.size())});
    if (known.insert(merged).second) pieces.push_back(merged);
    trainer.merge(pair, trainer.intern(merged));
  }
  return SubwordVocabulary(std::move(pieces), std::move(merges));
}

TokenizedSentence encode(const SubwordVocabulary& vocab, std::string_view text) {
  TokenizedSentence out;
  struct Symbol {
    std::string text;
    bool known;
  };
  for (const auto& word : split_words(text)) {
    std::vector<Symbol> symbols;
    symbols.reserve(word.size() + 1);
    if (vocab.find(marked(word[0]))) {
      symbols.push_back({marked(word[0]), true});
    } else {
      symbols.push_back({std::string(kWordMarkerUtf8), vocab.find(kWordMarkerUtf8).has_value()});
      symbols.push_back({utf8::encode(word[0]), false});
    }
    for (std::size_t i = 1; i < word.size(); ++i) {
      std::string s = utf8::encode(word[i]);
      const bool known = vocab.find(s).has_value();
      symbols.push_back({std::move(s), known});
    }

    for (;;) {
      int best_rank = -1;
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        if (!symbols[i].known || !symbols[i + 1].known) continue;
        if (auto r = vocab.merge_rank(symbols[i].text, symbols[i + 1].text)) {
          if (best_rank < 0 || *r < best_rank) best_rank = *r;
        }
      }
      if (best_rank < 0) break;
      const MergeRule& rule = vocab.merges()[best_rank];
      std::vector<Symbol> next;
      next.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size(); ++i) {
        if (i + 1 < symbols.size() && symbols[i].known && symbols[i + 1].known &&
            symbols[i].text == rule.left && symbols[i + 1].text == rule.right) {
          next.push_back({rule.left + rule.right, true});
          ++i;
        } else {
          next.push_back(std::move(symbols[i]));
        }
      }
      symbols = std::move(next);
    }

    for (auto& s : symbols) {
      out.ids.push_back(s.known ? *vocab.find(s.text) : kUnkId);
      out.pieces.push_back(std::move(s.text));
    }
  }
  return out;
}

std::string join_pieces(const std::vector<std::string>& pieces) {
  std::string joined;
  for (const auto& p : pieces) joined += p;
  std::string out;
  out.reserve(joined.size());
  std::size_t pos = 0;
  for (;;) {
    const std::size_t m = joined.find(kWordMarkerUtf8, pos);
    out.append(joined, pos, m == std::string::npos ? std::string::npos : m - pos);
    if (m == std::string::npos) break;
    out += ' ';
    pos = m + kWordMarkerUtf8.size();
  }
  const std::size_t first = out.find_first_not_of(' ');
  if (first == std::string::npos) return {};
  const std::size_t last = out.find_last_not_of(' ');
  return out.substr(first, last - first + 1);
}

std::string decode(const SubwordVocabulary& vocab, std::span<const int> ids) {
  std::vector<std::string> pieces;
  pieces.reserve(ids.size());
  for (int id : ids) {
    const std::string& p = vocab.piece(id);
    if (id == kPadId || id == kBosId || id == kEosId) continue;
    pieces.push_back(id == kUnkId ? std::string(kUnknownSurface) : p);
  }
  return join_pieces(pieces);
}

std::string decode(const SubwordVocabulary& vocab, const TokenizedSentence& tokens) {
  return decode(vocab, std::span<const int>(tokens.ids));
}

std::vector<std::u32string> cleaned_tokens(const TokenizedSentence& tokens) {
  std::vector<std::u32string> out;
  out.reserve(tokens.pieces.size());
  for (std::size_t i = 0; i < tokens.pieces.size(); ++i) {
    const int id = tokens.ids[i];
    if (id == kPadId || id == kBosId || id == kEosId) continue;
    std::u32string cps = utf8::decode(tokens.pieces[i]);
    std::erase(cps, kWordMarker);
    if (!cps.empty()) out.push_back(std::move(cps));
  }
  return out;
}

TokenizationStats tokenization_stats(const ParallelCorpus& corpus, const SubwordVocabulary& vocab) {
  corpus.validate();
  TokenizationStats stats;
  stats.sentences = corpus.size();
  const auto side_stats = [&](const std::vector<std::string>& side, double& sent_len, double& tok_len) {
    std::size_t tokens = 0;
    std::size_t chars = 0;
    for (const auto& s : side) {
      for (const auto& t : cleaned_tokens(encode(vocab, s))) {
        ++tokens;
        chars += t.size();
      }
    }
    sent_len = side.empty() ? 0.0 : static_cast<double>(tokens) / static_cast<double>(side.size());
    tok_len = tokens == 0 ? 0.0 : static_cast<double>(chars) / static_cast<double>(tokens);
  };
  side_stats(corpus.source, stats.avg_sentence_length_source, stats.avg_token_length_source);
  side_stats(corpus.target, stats.avg_sentence_length_target, stats.avg_token_length_target);
  return stats;
}

}  // namespace mtlab
