#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mtlab/model.hpp"
#include "mtlab/special_tokens.hpp"
#include "gradient_checks.hpp"

using namespace mtlab;

namespace {

ModelConfig micro_config() {
  ModelConfig c;
  c.layers = 1;
  c.heads = 2;
  c.d_model = 8;
  c.d_ff = 12;
  c.vocab_size = 11;
  c.max_len = 10;
  c.dropout = 0.0;
  c.seed = 3;
  return c;
}

std::vector<int> random_sentence(Rng& rng, int vocab, std::size_t len) {
  std::vector<int> s;
  for (std::size_t i = 0; i < len; ++i) s.push_back(kNumSpecials + static_cast<int>(rng.below(vocab - kNumSpecials)));
  return s;
}

Batch random_batch(Rng& rng, int vocab, std::size_t sentences, std::size_t max_words) {
  Batch b;
  for (std::size_t i = 0; i < sentences; ++i) {
    auto src = random_sentence(rng, vocab, 1 + rng.below(max_words));
    src.push_back(kEosId);
    auto tgt = random_sentence(rng, vocab, 1 + rng.below(max_words));
    tgt.insert(tgt.begin(), kBosId);
    tgt.push_back(kEosId);
    b.sources.push_back(src);
    b.targets.push_back(tgt);
  }
  return b;
}

template <typename Scalar>
double eval_loss(TranslationModel<Scalar>& model, const Batch& batch) {
  Tape<Scalar> tape(false);
  return static_cast<double>(model.forward_loss(tape, batch).value.value()(0, 0));
}

// Closed-form parameter count of the architecture.
std::size_t formula_count(std::size_t layers, std::size_t d, std::size_t ff, std::size_t vocab) {
  const std::size_t norm = 2 * d;
  const std::size_t attention = 4 * (d * d + d);
  const std::size_t ffn = d * ff + ff + ff * d + d;
  const std::size_t encoder_layer = 2 * norm + attention + ffn;
  const std::size_t decoder_layer = 3 * norm + 2 * attention + ffn;
  return vocab * d + layers * (encoder_layer + decoder_layer) + 2 * norm;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an mtlab::Error");
  return ErrorCode::kFormat;
}

}  // namespace

TEST_CASE("parameter count of the desk-scale config") {
  ModelConfig c;
  c.vocab_size = 1000;
  const auto model = TranslationModel<float>::init(c);
  CHECK(model.parameters().scalar_count() == formula_count(2, 128, 256, 1000));
  CHECK(model.parameters().scalar_count() == 791040);
}

TEST_CASE("init is deterministic per seed") {
  const auto c = micro_config();
  const auto a = TranslationModel<float>::init(c);
  const auto b = TranslationModel<float>::init(c);
  CHECK(a.parameters().identical(b.parameters()));
  auto other = c;
  other.seed = 4;
  CHECK_FALSE(TranslationModel<float>::init(other).parameters().identical(a.parameters()));
}

TEST_CASE("init follows the Xavier bound and unit layer-norm gains") {
  const auto model = TranslationModel<double>::init(micro_config());
  for (const auto& [name, t] : model.parameters()) {
    if (name.ends_with(".gain")) {
      CHECK(t.value == Matrix<double>::Ones(t.value.rows(), t.value.cols()));
    } else if (t.value.rows() == 1) {
      CHECK(t.value.cwiseAbs().maxCoeff() == 0.0);
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(t.value.rows() + t.value.cols()));
      CHECK(t.value.cwiseAbs().maxCoeff() <= bound);
    }
  }
  CHECK(model.parameters().all_finite());
}

TEST_CASE("invalid configs are rejected") {
  auto c = micro_config();
  c.heads = 3;
  CHECK(code_of([&] { TranslationModel<float>::init(c); }) == ErrorCode::kInvalidConfig);
  c = micro_config();
  c.vocab_size = 4;
  CHECK(code_of([&] { TranslationModel<float>::init(c); }) == ErrorCode::kInvalidConfig);
  c = micro_config();
  c.dropout = 1.0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("untrained loss is close to ln V") {
  ModelConfig c;
  c.vocab_size = 1000;
  auto model = TranslationModel<float>::init(c);
  Rng rng(8);
  const Batch batch = random_batch(rng, c.vocab_size, 8, 40);
  const double loss = eval_loss(model, batch);
  CHECK(std::abs(loss - std::log(1000.0)) / std::log(1000.0) < 0.15);
}

TEST_CASE("forward_loss errors") {
  auto model = TranslationModel<float>::init(micro_config());
  Batch all_pad{{{5, kEosId}}, {{kPadId, kPadId, kPadId}}};
  CHECK(code_of([&] { eval_loss(model, all_pad); }) == ErrorCode::kEmptyBatch);
  Batch empty;
  CHECK(code_of([&] { eval_loss(model, empty); }) == ErrorCode::kEmptyBatch);
  Batch bad{{{5, 11}}, {{kBosId, 5, kEosId}}};
  CHECK(code_of([&] { eval_loss(model, bad); }) == ErrorCode::kIdOutOfRange);
  Batch bad_target{{{5}}, {{kBosId, 50, kEosId}}};
  CHECK(code_of([&] { eval_loss(model, bad_target); }) == ErrorCode::kIdOutOfRange);
  Batch too_long{{std::vector<int>(11, 5)}, {{kBosId, 5, kEosId}}};
  CHECK(code_of([&] { eval_loss(model, too_long); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("loss is invariant to the order of sentences in a batch") {
  auto c = micro_config();
  c.d_model = 16;
  c.vocab_size = 40;
  c.max_len = 20;
  auto model = TranslationModel<float>::init(c);
  Rng rng(9);
  const Batch batch = random_batch(rng, c.vocab_size, 7, 12);
  const double base = eval_loss(model, batch);
  for (int trial = 0; trial < 5; ++trial) {
    const auto order = rng.permutation(batch.sources.size());
    Batch shuffled;
    for (auto i : order) {
      shuffled.sources.push_back(batch.sources[i]);
      shuffled.targets.push_back(batch.targets[i]);
    }
    CHECK(std::abs(eval_loss(model, shuffled) - base) < 1e-6);
  }
}

TEST_CASE("logits_step is a normalised distribution consistent with forward_loss") {
  auto c = micro_config();
  c.vocab_size = 30;
  c.max_len = 16;
  auto model = TranslationModel<float>::init(c);
  Rng rng(10);
  const Batch batch = random_batch(rng, c.vocab_size, 4, 8);

  double summed = 0.0;
  for (std::size_t b = 0; b < batch.sources.size(); ++b) {
    const auto& tgt = batch.targets[b];
    for (std::size_t i = 1; i < tgt.size(); ++i) {
      const std::vector<int> prefix(tgt.begin(), tgt.begin() + static_cast<long>(i));
      const auto lp = model.logits_step(batch.sources[b], prefix);
      CHECK(std::abs(lp.cast<double>().array().exp().sum() - 1.0) < 1e-6);
      summed -= lp(tgt[i]);
    }
  }
  Tape<float> tape(false);
  const auto loss = model.forward_loss(tape, batch);
  CHECK(std::abs(summed - loss.value.value()(0, 0) * static_cast<double>(loss.tokens)) < 1e-4);

  const std::vector<int> no_bos{5};
  CHECK(code_of([&] { model.logits_step(batch.sources[0], no_bos); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("decoder is causal") {
  auto c = micro_config();
  c.vocab_size = 25;
  auto model = TranslationModel<double>::init(c);
  Rng rng(11);
  Batch batch = random_batch(rng, c.vocab_size, 1, 6);
  batch.targets[0] = {kBosId, 5, 6, 7, 8, 9, kEosId};
  Tape<double> t1(false);
  const Matrix<double> base = model.forward_logits(t1, batch).value();
  for (std::size_t j = 1; j < batch.targets[0].size() - 1; ++j) {
    Batch changed = batch;
    changed.targets[0][j] = 20;
    Tape<double> t2(false);
    const Matrix<double> after = model.forward_logits(t2, changed).value();
    // input position j feeds logits row j; rows before it must not move
    for (Index r = 0; r < static_cast<Index>(j); ++r) CHECK(after.row(r) == base.row(r));
    CHECK(after.row(static_cast<Index>(j)) != base.row(static_cast<Index>(j)));
  }
}

TEST_CASE("appending PAD to a source leaves the loss unchanged") {
  auto c = micro_config();
  c.vocab_size = 25;
  auto model = TranslationModel<float>::init(c);
  Rng rng(12);
  const Batch batch = random_batch(rng, c.vocab_size, 3, 5);
  const double base = eval_loss(model, batch);
  Batch padded = batch;
  padded.sources[1].push_back(kPadId);
  padded.sources[1].push_back(kPadId);
  CHECK(std::abs(eval_loss(model, padded) - base) < 1e-5);

  const auto lp = model.logits_step(batch.sources[0], std::vector<int>{kBosId});
  auto src = batch.sources[0];
  src.push_back(kPadId);
  const auto lp_padded = model.logits_step(src, std::vector<int>{kBosId});
  CHECK((lp - lp_padded).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("end-to-end gradient matches finite differences") { CHECK(gradcheck::end_to_end_error() < 1e-3); }

TEST_CASE("cast to double keeps the outputs") {
  auto c = micro_config();
  c.vocab_size = 20;
  auto model = TranslationModel<float>::init(c);
  auto dmodel = model.cast<double>();
  Rng rng(13);
  const Batch batch = random_batch(rng, c.vocab_size, 2, 5);
  CHECK(std::abs(eval_loss(model, batch) - eval_loss(dmodel, batch)) < 1e-5);
}
