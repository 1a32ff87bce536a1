#pragma once

#include <string>
#include <vector>

namespace mtlab {

struct BleuResult {
  double bleu = 0.0;
  /// Per-order precisions after smoothing, orders 1..max_n.
  std::vector<double> precisions;
  std::vector<long long> matches;
  std::vector<long long> totals;
  double brevity_penalty = 0.0;
  long long hyp_len = 0;
  long long ref_len = 0;
};

/// Corpus BLEU over whitespace tokens with clipped n-gram counts summed over
/// the corpus. For n >= 2 an order with no matches is smoothed to
/// 1 / (total + 1).
BleuResult bleu(const std::vector<std::string>& references, const std::vector<std::string>& hypotheses,
                int max_n = 4);

struct ChrfSentence {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// Character n-gram F-score of one sentence pair, whitespace removed.
/// Order n takes part in the averages when the longer side has at least n
/// characters. Two empty sentences score 1.
ChrfSentence chrf_sentence(const std::string& reference, const std::string& hypothesis, int char_n = 6,
                           double beta = 2.0);

struct ChrfResult {
  double chrf = 0.0;
  std::vector<double> per_sentence;
};

/// Arithmetic mean of sentence-level chrF.
ChrfResult chrf(const std::vector<std::string>& references, const std::vector<std::string>& hypotheses,
                int char_n = 6, double beta = 2.0);

struct EvaluationReport {
  double bleu = 0.0;
  double chrf = 0.0;
  std::vector<double> per_sentence_chrf;
  std::vector<double> ngram_precisions;
  double brevity_penalty = 0.0;
  long long hyp_len = 0;
  long long ref_len = 0;

  /// `BLEU = 12.898` / `chrF = 0.3082` style lines.
  std::string human() const;
  /// `key<TAB>value` lines.
  std::string tsv() const;
};

EvaluationReport evaluate(const std::vector<std::string>& references, const std::vector<std::string>& hypotheses);

}  // namespace mtlab
