#include "mtlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtlab/special_tokens.hpp"

namespace mtlab {
namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.98;
constexpr double kAdamEps = 1e-9;

// Epoch-wise reshuffled stream of example indices.
class BatchStream {
 public:
  BatchStream(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed) { reshuffle(); }

  std::vector<std::size_t> next(int batch_size) {
    std::vector<std::size_t> out;
    out.reserve(static_cast<std::size_t>(batch_size));
    while (out.size() < static_cast<std::size_t>(batch_size)) {
      if (cursor_ == order_.size()) reshuffle();
      out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    order_ = rng_.permutation(n_);
    cursor_ = 0;
  }

  std::size_t n_;
  Rng rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

class Adam {
 public:
  explicit Adam(const ParameterSet<float>& params) {
    for (const auto& [name, t] : params) {
      first_.push_back(Matrix<float>::Zero(t.value.rows(), t.value.cols()));
      second_.push_back(Matrix<float>::Zero(t.value.rows(), t.value.cols()));
    }
  }

  void step(ParameterSet<float>& params, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    const float step_size = static_cast<float>(lr / c1);
    const float inv_c2 = static_cast<float>(1.0 / c2);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& t = params.entry(i).second;
      const float b1 = static_cast<float>(kBeta1);
      const float b2 = static_cast<float>(kBeta2);
      first_[i] = b1 * first_[i] + (1.0f - b1) * t.grad;
      second_[i] = b2 * second_[i] + (1.0f - b2) * t.grad.cwiseAbs2();
      t.value.array() -= step_size * first_[i].array() /
                         ((second_[i].array() * inv_c2).sqrt() + static_cast<float>(kAdamEps));
    }
  }

 private:
  std::vector<Matrix<float>> first_;
  std::vector<Matrix<float>> second_;
  int t_ = 0;
};

Batch make_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& indices) {
  Batch batch;
  for (std::size_t i : indices) {
    batch.sources.push_back(examples[i].source);
    batch.targets.push_back(examples[i].target);
  }
  return batch;
}

Checkpoint snapshot(const TranslationModel<float>& model, int step, double dev_loss,
                    const std::string& fingerprint) {
  return Checkpoint{step, dev_loss, model.config(), model.parameters().cast<float>(), fingerprint};
}

void check_vocab(const TranslationModel<float>& model, const SubwordVocabulary& vocab) {
  if (static_cast<std::size_t>(model.config().vocab_size) != vocab.size()) {
    throw Error(ErrorCode::kVocabMismatch, "model vocab_size " + std::to_string(model.config().vocab_size) +
                                               " vs vocabulary of " + std::to_string(vocab.size()));
  }
}

}  // namespace

void TrainConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (max_steps < 0) fail("max_steps must be >= 0");
  if (validate_every < 1) fail("validate_every must be >= 1");
  if (max_steps > 0 && validate_every > max_steps) fail("validate_every must not exceed max_steps");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (warmup_steps < 0) fail("warmup_steps must be >= 0");
  if (!(grad_clip > 0.0)) fail("grad_clip must be positive");
}

void CurriculumConfig::validate() const {
  stage1.validate();
  stage2.validate();
}

std::string TrainLog::to_tsv() const {
  std::string out = "stage\tstep\ttrain_loss\tdev_loss\n";
  for (const auto& r : records) {
    out += r.stage + '\t' + std::to_string(r.step) + '\t' + format_double(r.train_loss) + '\t' +
           format_double(r.dev_loss) + '\n';
  }
  return out;
}

std::vector<Example> tokenize_corpus(const ParallelCorpus& corpus, const SubwordVocabulary& vocab, int max_len) {
  corpus.validate();
  std::vector<Example> examples;
  examples.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    Example ex;
    ex.source = encode(vocab, corpus.source[i]).ids;
    if (static_cast<int>(ex.source.size()) > max_len - 1) ex.source.resize(static_cast<std::size_t>(max_len - 1));
    ex.source.push_back(kEosId);
    ex.target.push_back(kBosId);
    const auto ids = encode(vocab, corpus.target[i]).ids;
    ex.target.insert(ex.target.end(), ids.begin(),
                     ids.begin() + std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(ids.size()), max_len - 1));
    ex.target.push_back(kEosId);
    examples.push_back(std::move(ex));
  }
  return examples;
}

double learning_rate_at(const TrainConfig& config, int step) {
  if (config.warmup_steps == 0) return config.learning_rate;
  const double s = std::max(1, step);
  const double w = config.warmup_steps;
  return config.learning_rate * std::min(s / w, std::sqrt(w / s));
}

double evaluate_loss(const TranslationModel<float>& model, const std::vector<Example>& examples) {
  if (examples.empty()) throw Error(ErrorCode::kEmptyCorpus, "nothing to evaluate");
  TranslationModel<float> frozen = model;
  double total = 0.0;
  double tokens = 0.0;
  for (std::size_t begin = 0; begin < examples.size(); begin += kEvalBatchSize) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < std::min(examples.size(), begin + kEvalBatchSize); ++i) idx.push_back(i);
    Tape<float> tape(false);
    const auto loss = frozen.forward_loss(tape, make_batch(examples, idx));
    total += static_cast<double>(loss.value.value()(0, 0)) * static_cast<double>(loss.tokens);
    tokens += static_cast<double>(loss.tokens);
  }
  return total / tokens;
}

double evaluate_loss(const TranslationModel<float>& model, const ParallelCorpus& corpus,
                     const SubwordVocabulary& vocab) {
  return evaluate_loss(model, tokenize_corpus(corpus, vocab, model.config().max_len));
}

TrainResult train(TranslationModel<float> model, const ParallelCorpus& train_corpus,
                  const ParallelCorpus& dev_corpus, const SubwordVocabulary& vocab, const TrainConfig& config,
                  const StepObserver& observer, const std::string& stage) {
  config.validate();
  check_vocab(model, vocab);
  if (train_corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "training corpus is empty");
  if (dev_corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "dev corpus is empty");
  const std::string fingerprint = vocab.fingerprint();
  const int max_len = model.config().max_len;
  const auto train_examples = tokenize_corpus(train_corpus, vocab, max_len);
  const auto dev_examples = tokenize_corpus(dev_corpus, vocab, max_len);

  TrainResult result;
  if (config.max_steps == 0) {
    const double dev = evaluate_loss(model, dev_examples);
    result.log.records.push_back({stage, 0, evaluate_loss(model, train_examples), dev});
    result.log.selected_stage = stage;
    result.log.selected_step = 0;
    result.checkpoint = snapshot(model, 0, dev, fingerprint);
    return result;
  }

  BatchStream batches(train_examples.size(), config.seed);
  Rng dropout_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  Adam optimizer(model.parameters());
  double best = std::numeric_limits<double>::infinity();
  double interval_loss = 0.0;
  double interval_tokens = 0.0;

  for (int step = 1; step <= config.max_steps; ++step) {
    const Batch batch = make_batch(train_examples, batches.next(config.batch_size));
    Tape<float> tape;
    const auto loss = model.forward_loss(tape, batch, &dropout_rng);
    const double value = loss.value.value()(0, 0);
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kDivergedLoss, "loss is " + std::to_string(value) + " at step " + std::to_string(step));
    }
    model.parameters().zero_grad();
    tape.backward(loss.value);

    double norm_sq = 0.0;
    for (const auto& [name, t] : model.parameters()) norm_sq += t.grad.cast<double>().squaredNorm();
    const double norm = std::sqrt(norm_sq);
    if (!std::isfinite(norm)) throw Error(ErrorCode::kDivergedLoss, "gradient norm is not finite");
    double clipped = norm;
    if (norm > config.grad_clip) {
      const float factor = static_cast<float>(config.grad_clip / norm);
      double clipped_sq = 0.0;
      for (auto& [name, t] : model.parameters()) {
        t.grad *= factor;
        clipped_sq += t.grad.cast<double>().squaredNorm();
      }
      clipped = std::sqrt(clipped_sq);
    }
    const double lr = learning_rate_at(config, step);
    optimizer.step(model.parameters(), lr);
    if (observer) observer({step, value, lr, norm, clipped});

    interval_loss += value * static_cast<double>(loss.tokens);
    interval_tokens += static_cast<double>(loss.tokens);
    if (step % config.validate_every == 0 || step == config.max_steps) {
      const double dev = evaluate_loss(model, dev_examples);
      if (!std::isfinite(dev)) throw Error(ErrorCode::kDivergedLoss, "dev loss is not finite");
      result.log.records.push_back({stage, step, interval_loss / interval_tokens, dev});
      interval_loss = 0.0;
      interval_tokens = 0.0;
      if (dev < best) {
        best = dev;
        result.checkpoint = snapshot(model, step, dev, fingerprint);
        result.log.selected_step = step;
      }
    }
  }
  result.log.selected_stage = stage;
  return result;
}

TrainResult finetune(const Checkpoint& parent, const ParallelCorpus& child_train, const ParallelCorpus& child_dev,
                     const SubwordVocabulary& vocab, const TrainConfig& config, const StepObserver& observer,
                     const std::string& stage) {
  if (parent.vocab_fingerprint != vocab.fingerprint()) {
    throw Error(ErrorCode::kVocabMismatch, "parent was trained with vocabulary " + parent.vocab_fingerprint +
                                               ", got " + vocab.fingerprint());
  }
  return train(parent.model(), child_train, child_dev, vocab, config, observer, stage);
}

CurriculumResult curriculum_finetune(const Checkpoint& parent, const CurriculumConfig& config,
                                     const SubwordVocabulary& vocab, const StepObserver& observer) {
  config.validate();
  TrainResult first =
      finetune(parent, config.stage1_train, config.stage1_dev, vocab, config.stage1, observer, "stage1");
  TrainResult second =
      finetune(first.checkpoint, config.stage2_train, config.stage2_dev, vocab, config.stage2, observer, "stage2");
  CurriculumResult result;
  result.log.records = first.log.records;
  result.log.records.insert(result.log.records.end(), second.log.records.begin(), second.log.records.end());
  result.log.selected_stage = second.log.selected_stage;
  result.log.selected_step = second.log.selected_step;
  result.checkpoint = std::move(second.checkpoint);
  result.stage1 = std::move(first.checkpoint);
  return result;
}

}  // namespace mtlab
