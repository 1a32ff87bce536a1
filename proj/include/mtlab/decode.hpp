#pragma once

#include <span>
#include <string>
#include <vector>

#include "mtlab/checkpoint.hpp"
#include "mtlab/subword.hpp"

namespace mtlab {

struct BeamConfig {
  int beam_size = 6;
  int max_len = 64;
  double length_norm_alpha = 0.0;

  void validate() const;
};

/// Anything that can score the next token after a batch of prefixes. Every
/// prefix starts with BOS.
class NextTokenScorer {
 public:
  virtual ~NextTokenScorer() = default;
  virtual int vocab_size() const = 0;
  /// One row of log-probabilities per prefix.
  virtual Matrix<double> log_probs(const std::vector<std::vector<int>>& prefixes) const = 0;
};

struct Hypothesis {
  /// Generated ids after BOS; ends with EOS when finished.
  std::vector<int> ids;
  /// Sum of token log-probabilities.
  double log_prob = 0.0;
  /// log_prob / length^alpha, the ranking key.
  double score = 0.0;
  bool finished = false;
};

/// Beam search from BOS. PAD and BOS are never proposed. Hypotheses ending in
/// EOS are frozen; the search stops once no active beam remains or max_len
/// tokens were generated. Candidates are ranked by score, ties going to the
/// lexicographically smaller id sequence.
Hypothesis beam_search(const NextTokenScorer& scorer, const BeamConfig& config);

/// Scores prefixes with a model for one encoded source sentence.
class ModelScorer final : public NextTokenScorer {
 public:
  ModelScorer(const TranslationModel<float>& model, std::span<const int> source);
  int vocab_size() const override { return model_.config().vocab_size; }
  Matrix<double> log_probs(const std::vector<std::vector<int>>& prefixes) const override;

 private:
  const TranslationModel<float>& model_;
  TranslationModel<float>::EncodedSource encoded_;
};

struct Translation {
  std::string text;
  Hypothesis hypothesis;
};

/// A checkpoint bound to the vocabulary it was trained with. Read-only after
/// construction, so one instance may serve concurrent callers.
class Translator {
 public:
  /// Throws Error(kVocabMismatch) if the fingerprints differ.
  Translator(const Checkpoint& checkpoint, const SubwordVocabulary& vocab);

  Translation translate(std::string_view sentence, const BeamConfig& config) const;
  std::vector<std::string> translate_all(const std::vector<std::string>& sentences,
                                         const BeamConfig& config) const;

  const TranslationModel<float>& model() const noexcept { return model_; }

 private:
  TranslationModel<float> model_;
  const SubwordVocabulary& vocab_;
};

Translation beam_search(const Checkpoint& checkpoint, std::string_view source, const SubwordVocabulary& vocab,
                        const BeamConfig& config);

/// Translations in input order. Uses num_threads() workers when above 1.
std::vector<std::string> translate_corpus(const Checkpoint& checkpoint, const std::vector<std::string>& sources,
                                          const SubwordVocabulary& vocab, const BeamConfig& config);

}  // namespace mtlab
