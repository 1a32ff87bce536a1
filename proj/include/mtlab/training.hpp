#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtlab/checkpoint.hpp"
#include "mtlab/corpus.hpp"
#include "mtlab/model.hpp"
#include "mtlab/subword.hpp"

namespace mtlab {

struct TrainConfig {
  int max_steps = 2000;
  int validate_every = 100;
  int batch_size = 15;
  double learning_rate = 5e-4;
  int warmup_steps = 400;
  double grad_clip = 1.0;
  std::uint64_t seed = 1;

  /// Throws Error(kInvalidConfig). max_steps == 0 is accepted as the
  /// degenerate "evaluate only" run.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

struct CurriculumConfig {
  TrainConfig stage1;
  ParallelCorpus stage1_train;
  ParallelCorpus stage1_dev;
  TrainConfig stage2;
  ParallelCorpus stage2_train;
  ParallelCorpus stage2_dev;

  void validate() const;
};

struct ValidationRecord {
  std::string stage;
  int step = 0;
  double train_loss = 0.0;
  double dev_loss = 0.0;

  bool operator==(const ValidationRecord&) const = default;
};

struct TrainLog {
  std::vector<ValidationRecord> records;
  std::string selected_stage;
  int selected_step = 0;

  /// `stage<TAB>step<TAB>train_loss<TAB>dev_loss` rows after a header row.
  std::string to_tsv() const;

  bool operator==(const TrainLog&) const = default;
};

struct StepReport {
  int step = 0;
  double loss = 0.0;
  double learning_rate = 0.0;
  double grad_norm = 0.0;
  double clipped_grad_norm = 0.0;
};

using StepObserver = std::function<void(const StepReport&)>;

struct TrainResult {
  Checkpoint checkpoint;
  TrainLog log;
};

struct CurriculumResult {
  Checkpoint checkpoint;
  TrainLog log;
  /// Lowest-dev-loss checkpoint of stage 1, the starting point of stage 2.
  Checkpoint stage1;
};

/// A tokenized sentence pair: source ends with EOS, target is BOS ... EOS.
struct Example {
  std::vector<int> source;
  std::vector<int> target;
};

std::vector<Example> tokenize_corpus(const ParallelCorpus& corpus, const SubwordVocabulary& vocab, int max_len);

/// Peak rate scaled by step / warmup during warmup and sqrt(warmup / step)
/// afterwards; constant when warmup_steps == 0.
double learning_rate_at(const TrainConfig& config, int step);

inline constexpr int kEvalBatchSize = 32;

/// Mean token-level cross-entropy over every example, evaluated without dropout.
double evaluate_loss(const TranslationModel<float>& model, const std::vector<Example>& examples);
double evaluate_loss(const TranslationModel<float>& model, const ParallelCorpus& corpus,
                     const SubwordVocabulary& vocab);

/// Adam (0.9, 0.98, 1e-9) with inverse-sqrt warmup, global-norm clipping and
/// seeded shuffled batches. Dev loss is measured every `validate_every`
/// steps and at the last step; the lowest one (earliest on ties) is returned.
TrainResult train(TranslationModel<float> model, const ParallelCorpus& train_corpus,
                  const ParallelCorpus& dev_corpus, const SubwordVocabulary& vocab, const TrainConfig& config,
                  const StepObserver& observer = {}, const std::string& stage = "train");

/// Continues from the parent's parameters with fresh optimizer state. The
/// child corpora must be tokenized with the parent's vocabulary.
TrainResult finetune(const Checkpoint& parent, const ParallelCorpus& child_train,
                     const ParallelCorpus& child_dev, const SubwordVocabulary& vocab, const TrainConfig& config,
                     const StepObserver& observer = {}, const std::string& stage = "finetune");

/// Stage 1 on the intermediate pair, then stage 2 on the child pair starting
/// from the best stage-1 checkpoint.
CurriculumResult curriculum_finetune(const Checkpoint& parent, const CurriculumConfig& config,
                                     const SubwordVocabulary& vocab, const StepObserver& observer = {});

}  // namespace mtlab
