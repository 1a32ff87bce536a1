#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mtlab/checkpoint.hpp"
#include "mtlab/decode.hpp"
#include "mtlab/parallel.hpp"
#include "mtlab/special_tokens.hpp"
#include "mtlab/synthetic.hpp"
#include "decode_fixtures.hpp"

using namespace mtlab;

using namespace decodefx;

TEST_CASE("beam size 1 is greedy decoding") {
  const auto& f = fixture();
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ckpt = micro_checkpoint(100 + trial, static_cast<int>(f.vocab.size()), f.vocab.fingerprint());
    const std::string& sentence = f.corpus.source[rng.below(f.corpus.size())];
    const auto model = ckpt.model();
    auto source = encode(f.vocab, sentence).ids;
    source.push_back(kEosId);
    const ModelScorer scorer(model, source);
    const auto expected = greedy(scorer, 12);
    const auto got = beam_search(ckpt, sentence, f.vocab, beam(1, 12));
    CHECK(got.hypothesis.ids == expected);
    CHECK(got.text == decode(f.vocab, std::span<const int>(expected)));
  }
}

TEST_CASE("beam size 1 is greedy on table scorers") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const TableScorer s(7, seed);
    CHECK(beam_search(s, beam(1, 6)).ids == greedy(s, 6));
  }
}

TEST_CASE("a saturating beam finds the exhaustive optimum") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const TableScorer s(6, seed, 2.0);
    for (int max_len : {2, 3}) {
      Best best;
      std::vector<int> ids;
      enumerate(s, ids, 0.0, max_len, best);
      const int width = max_len == 2 ? 36 : 216;
      const auto h = beam_search(s, beam(width, max_len));
      CHECK(h.ids == best.ids);
      CHECK(std::abs(h.log_prob - best.score) < 1e-12);
    }
  }
}

TEST_CASE("beam search is not monotone in width for every scorer") {
  // Width 2 keeps two prefixes that both outscore the greedy continuation at
  // step two, so the greedy sequence is pruned and both survivors end lower.
  const TableScorer s(8, 63);
  const auto narrow = beam_search(s, beam(1, 5));
  const auto wide = beam_search(s, beam(2, 5));
  CHECK(narrow.ids == std::vector<int>{5, 7, kEosId});
  CHECK(wide.ids == std::vector<int>{6, 6, kUnkId, kEosId});
  CHECK(wide.score < narrow.score);

  int violations = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const TableScorer t(8, seed);
    const double greedy_score = beam_search(t, beam(1, 5)).score;
    for (int b = 2; b <= 8; ++b) {
      if (beam_search(t, beam(b, 5)).score < greedy_score) ++violations;
    }
  }
  CHECK(violations == 1);
}

TEST_CASE("returned hypotheses hold no PAD, BOS or interior EOS") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const TableScorer s(6, seed, 1.0);
    const auto h = beam_search(s, beam(4, 7));
    for (std::size_t i = 0; i < h.ids.size(); ++i) {
      CHECK(h.ids[i] != kPadId);
      CHECK(h.ids[i] != kBosId);
      if (i + 1 < h.ids.size()) CHECK(h.ids[i] != kEosId);
    }
  }
}

TEST_CASE("length normalisation divides by length^alpha") {
  const TableScorer s(6, 3);
  BeamConfig c = beam(3, 4);
  c.length_norm_alpha = 1.0;
  const auto h = beam_search(s, c);
  CHECK(std::abs(h.score - h.log_prob / static_cast<double>(h.ids.size())) < 1e-12);
  c.length_norm_alpha = 1.5;
  CHECK_THROWS_AS(beam_search(s, c), Error);
  CHECK_THROWS_AS(beam_search(s, beam(0, 4)), Error);
}

TEST_CASE("translate_corpus keeps order and matches single calls") {
  const auto& f = fixture();
  const auto ckpt = micro_checkpoint(7, static_cast<int>(f.vocab.size()), f.vocab.fingerprint());
  std::vector<std::string> inputs(f.corpus.source.begin(), f.corpus.source.begin() + 12);
  Rng rng(5);
  rng.shuffle(inputs);
  const auto cfg = beam(3, 10);
  const auto out = translate_corpus(ckpt, inputs, f.vocab, cfg);
  REQUIRE(out.size() == inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) CHECK(out[i] == beam_search(ckpt, inputs[i], f.vocab, cfg).text);

  set_num_threads(3);
  const auto threaded = translate_corpus(ckpt, inputs, f.vocab, cfg);
  set_num_threads(1);
  CHECK(threaded == out);

  CHECK(translate_corpus(ckpt, {}, f.vocab, cfg).empty());
  CHECK(translate_corpus(ckpt, inputs, f.vocab, cfg) == out);
}

TEST_CASE("decoding with another vocabulary is refused") {
  const auto& f = fixture();
  const auto ckpt = micro_checkpoint(7, static_cast<int>(f.vocab.size()), "0000000000000000");
  try {
    beam_search(ckpt, "kalu", f.vocab, beam(2, 5));
    FAIL("expected VocabMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kVocabMismatch);
  }
}
