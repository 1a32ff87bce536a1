#include <doctest.h>

#include <chrono>
#include <cmath>

#include "mtlab/error.hpp"
#include "mtlab/metrics.hpp"
#include "mtlab/random.hpp"
#include "mtlab/utf8.hpp"
#include "metric_fixtures.hpp"
#include "oracles.hpp"

using namespace mtlab;

namespace {

using Corpus = std::vector<std::string>;
using oracle::fixtures;

std::u32string u32(const std::string& s) { return utf8::decode(s); }

}  // namespace

TEST_CASE("BLEU hand example") {
  const auto r = bleu({"the cat sat on the mat"}, {"the cat on the mat"});
  REQUIRE(r.precisions.size() == 4);
  CHECK(r.precisions[0] == 1.0);
  CHECK(r.precisions[1] == 0.75);
  CHECK(std::abs(r.precisions[2] - 1.0 / 3.0) < 1e-15);
  CHECK(std::abs(r.precisions[3] - 1.0 / 3.0) < 1e-15);
  CHECK(r.matches[3] == 0);
  CHECK(r.totals[3] == 2);
  CHECK(std::abs(r.brevity_penalty - std::exp(1.0 - 6.0 / 5.0)) < 1e-15);
  CHECK(std::abs(r.bleu - 43.98917247584221) < 1e-9);
  CHECK(r.hyp_len == 5);
  CHECK(r.ref_len == 6);
}

TEST_CASE("BLEU identity and disjoint cases") {
  const Corpus x{"uno dos tres", "cuatro cinco", "seis"};
  CHECK(bleu(x, x).bleu == 100.0);
  CHECK(bleu({"a b c"}, {"d e f"}).bleu == 0.0);
  CHECK(bleu({"a b c"}, {""}).bleu == 0.0);
}

TEST_CASE("BLEU errors") {
  CHECK_THROWS_AS(bleu({"a"}, {"a", "b"}), Error);
  try {
    bleu({}, {});
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kEmptyInput);
  }
  try {
    chrf({"a"}, {});
    FAIL("expected LengthMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLengthMismatch);
  }
}

TEST_CASE("chrF examples") {
  CHECK(chrf_sentence("abc", "abc").f == 1.0);
  CHECK(chrf_sentence("aaa", "bbb").f == 0.0);
  const auto s = chrf_sentence("abcd", "abc");
  CHECK(std::abs(s.precision - 0.75) < 1e-15);
  CHECK(std::abs(s.recall - 0.47916666666666663) < 1e-15);
  CHECK(std::abs(s.f - 0.5164670658682634) < 1e-12);
  CHECK(std::abs(chrf_sentence("abc", "abcd").f - 0.673828125) < 1e-12);
  CHECK(chrf_sentence("", "").f == 1.0);
  CHECK(chrf_sentence("abc", "").f == 0.0);
  CHECK(chrf_sentence("a b c", "abc").f == 1.0);
}

TEST_CASE("metrics match the brute-force oracles") {
  for (const auto& fx : fixtures()) {
    CHECK(std::abs(bleu(fx.refs, fx.hyps).bleu - oracle::bleu(fx.refs, fx.hyps)) < 1e-9);
    double mean = 0.0;
    for (std::size_t i = 0; i < fx.refs.size(); ++i) {
      const auto o = oracle::chrf_sentence(u32(fx.refs[i]), u32(fx.hyps[i]));
      const auto got = chrf_sentence(fx.refs[i], fx.hyps[i]);
      CHECK(std::abs(got.precision - o.p) < 1e-9);
      CHECK(std::abs(got.recall - o.r) < 1e-9);
      CHECK(std::abs(got.f - o.f) < 1e-9);
      mean += o.f;
    }
    CHECK(std::abs(chrf(fx.refs, fx.hyps).chrf - mean / static_cast<double>(fx.refs.size())) < 1e-9);
  }
}

TEST_CASE("orthographic variants: word BLEU 0, chrF above one half") {
  CHECK(bleu({"ukhamarac"}, {"ukhamarak"}).bleu == 0.0);
  const double f = chrf({"ukhamarac"}, {"ukhamarak"}).chrf;
  CHECK(std::abs(f - 0.8340608465608467) < 1e-12);
  CHECK(f > 0.5);
}

TEST_CASE("identity gives 100 and 1 on random corpora") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    Corpus x;
    for (std::size_t i = 0, n = 1 + rng.below(6); i < n; ++i) {
      std::string s;
      for (std::size_t w = 0, m = 1 + rng.below(8); w < m; ++w) {
        if (w) s += ' ';
        s += static_cast<char>('a' + rng.below(5));
        s += static_cast<char>('a' + rng.below(5));
      }
      x.push_back(s);
    }
    CHECK(bleu(x, x).bleu == 100.0);
    CHECK(chrf(x, x).chrf == 1.0);
  }
}

TEST_CASE("permutation equivariance") {
  const auto fx = fixtures()[7];
  Corpus r = fx.refs, h = fx.hyps;
  std::swap(r[0], r[2]);
  std::swap(h[0], h[2]);
  CHECK(std::abs(bleu(r, h).bleu - bleu(fx.refs, fx.hyps).bleu) < 1e-12);
  CHECK(std::abs(chrf(r, h).chrf - chrf(fx.refs, fx.hyps).chrf) < 1e-12);
}

TEST_CASE("chrF with beta 1 is the harmonic mean") {
  for (const auto& fx : fixtures()) {
    for (std::size_t i = 0; i < fx.refs.size(); ++i) {
      const auto s = chrf_sentence(fx.refs[i], fx.hyps[i], 6, 1.0);
      const double hm = s.precision + s.recall == 0 ? 0.0 : 2 * s.precision * s.recall / (s.precision + s.recall);
      CHECK(s.f == hm);
    }
  }
}

TEST_CASE("appending a wrong pair never raises corpus chrF") {
  for (const auto& fx : fixtures()) {
    Corpus r = fx.refs, h = fx.hyps;
    const double before = chrf(r, h).chrf;
    r.push_back("zzzz");
    h.push_back("qqqq");
    CHECK(chrf(r, h).chrf <= before);
  }
}

TEST_CASE("report formats") {
  const auto rep = evaluate({"a b c d"}, {"a b c d"});
  CHECK(rep.tsv().rfind("BLEU\t100.0000\nchrF\t1.0000\n", 0) == 0);
  CHECK(rep.human().rfind("BLEU = 100.000 (", 0) == 0);
  CHECK(rep.human().find("chrF = 1.0000") != std::string::npos);
  CHECK(rep.per_sentence_chrf.size() == 1);
}

TEST_CASE("metric fixtures run quickly") {
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 10; ++i) {
    for (const auto& fx : fixtures()) evaluate(fx.refs, fx.hyps);
  }
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 1.0);
}
