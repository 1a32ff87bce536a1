#pragma once

#include <map>
#include <string>
#include <vector>

namespace mtlab {

/// Whitespace-word statistics of gold vs predicted sentences. Word-length
/// averages are weighted by word count.
struct LengthStats {
  std::size_t sentences = 0;
  double avg_sent_len_gold = 0.0;
  double avg_sent_len_pred = 0.0;
  double avg_word_len_gold = 0.0;
  double avg_word_len_pred = 0.0;

  std::string table() const;
  std::string tsv() const;
};

LengthStats length_stats(const std::vector<std::string>& gold, const std::vector<std::string>& pred);

struct VariantReport {
  std::string stem;
  std::size_t count = 0;
  std::map<std::string, std::size_t> matched_forms;

  std::string table() const;
  std::string tsv() const;
};

/// Counts whitespace-delimited words that start with `stem`, compared byte
/// for byte with no normalisation.
VariantReport variant_count(const std::vector<std::string>& sentences, const std::string& stem);

}  // namespace mtlab
