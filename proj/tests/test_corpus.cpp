#include <doctest.h>

#include <algorithm>

#include "mtlab/corpus.hpp"
#include "mtlab/error.hpp"
#include "mtlab/hashing.hpp"
#include "test_util.hpp"

using namespace mtlab;

namespace {

ParallelCorpus numbered(const std::string& tag, std::size_t n) {
  ParallelCorpus c{"es-xx", {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    c.source.push_back(tag + " src " + std::to_string(i));
    c.target.push_back(tag + " tgt " + std::to_string(i));
  }
  return c;
}

std::vector<std::pair<std::string, std::string>> sorted_union(const ParallelCorpus& a, const ParallelCorpus& b) {
  auto out = a.pairs();
  auto more = b.pairs();
  out.insert(out.end(), more.begin(), more.end());
  std::sort(out.begin(), out.end());
  return out;
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

TEST_CASE("load_parallel pairs lines by index") {
  ScratchDir dir("corpus");
  write_file(dir / "s.txt", "hola\n");
  write_file(dir / "t.txt", "aliw\n");
  const auto c = load_parallel(dir / "s.txt", dir / "t.txt", "es-quy");
  CHECK(c.size() == 1);
  CHECK(c.pair_id == "es-quy");
  CHECK(c.source[0] == "hola");
  CHECK(c.target[0] == "aliw");
}

TEST_CASE("load_parallel strips trailing whitespace and keeps interior empty lines") {
  ScratchDir dir("corpus");
  write_file(dir / "s.txt", "uno  \r\n\ntres\t\n");
  write_file(dir / "t.txt", "one\n\nthree");
  const auto c = load_parallel(dir / "s.txt", dir / "t.txt", "es-xx");
  REQUIRE(c.size() == 3);
  CHECK(c.source == std::vector<std::string>{"uno", "", "tres"});
  CHECK(c.target == std::vector<std::string>{"one", "", "three"});
}

TEST_CASE("load_parallel errors") {
  ScratchDir dir("corpus");
  write_file(dir / "three.txt", "a\nb\nc\n");
  write_file(dir / "two.txt", "a\nb\n");
  CHECK(code_of([&] { load_parallel(dir / "three.txt", dir / "two.txt", "x"); }) == ErrorCode::kLineCountMismatch);

  write_file(dir / "bad.txt", std::string("ok\n\xC3\x28\n"));
  CHECK(code_of([&] { load_parallel(dir / "bad.txt", dir / "two.txt", "x"); }) == ErrorCode::kInvalidEncoding);

  CHECK(code_of([&] { load_parallel(dir / "missing.txt", dir / "two.txt", "x"); }) == ErrorCode::kIo);
}

TEST_CASE("load, save, load round trip") {
  ScratchDir dir("corpus");
  ParallelCorpus c{"es-aym", {"Buenos días", "", "¿qué tal?"}, {"Suma uru", "", "kamisaki?"}};
  save_corpus_dir(c, dir / "a");
  const auto once = load_corpus_dir(dir / "a", "es-aym");
  CHECK(once == c);
  save_corpus_dir(once, dir / "b");
  CHECK(load_corpus_dir(dir / "b", "es-aym") == c);
  CHECK(read_file(dir / "a" / kSourceFile) == read_file(dir / "b" / kSourceFile));
}

TEST_CASE("Track One moved counts") {
  CHECK(track_one_moved_count(10, 0.9) == 9);
  CHECK(track_one_moved_count(996, 0.9) == 896);
  CHECK(track_one_moved_count(100, 0.29) == 29);
  CHECK(track_one_moved_count(7, 0.0) == 0);
  CHECK(track_one_moved_count(7, 1.0) == 7);
  CHECK(code_of([] { track_one_moved_count(7, 1.5); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("make_track_one moves floor(f * n) dev pairs") {
  const auto train = numbered("train", 20);
  const auto dev = numbered("dev", 10);
  const auto [t, d] = make_track_one(train, dev, 0.9, 7);
  CHECK(t.size() == 29);
  CHECK(d.size() == 1);

  const auto big_dev = numbered("dev", 996);
  const auto [t2, d2] = make_track_one(train, big_dev, 0.9, 3);
  CHECK(t2.size() == 20 + 896);
  CHECK(d2.size() == 100);
}

TEST_CASE("make_track_one with fraction 0 is the identity") {
  const auto train = numbered("train", 5);
  const auto dev = numbered("dev", 4);
  const auto [t, d] = make_track_one(train, dev, 0.0, 11);
  CHECK(t == train);
  CHECK(d == dev);
  const auto [t2, d2] = make_track_two(train, dev);
  CHECK(t2 == t);
  CHECK(d2 == d);
}

TEST_CASE("make_track_two is the identity") {
  const auto train = numbered("train", 100);
  const auto dev = numbered("dev", 10);
  const auto [t, d] = make_track_two(train, dev);
  CHECK(t.size() == 100);
  CHECK(d.size() == 10);
  CHECK(t == train);
  CHECK(d == dev);
}

TEST_CASE("make_track_one preserves the pair multiset for every seed") {
  auto train = numbered("train", 13);
  auto dev = numbered("dev", 31);
  // duplicates must survive as duplicates
  dev.source[3] = dev.source[4];
  dev.target[3] = dev.target[4];
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto [t, d] = make_track_one(train, dev, 0.9, seed);
    CHECK(sorted_union(t, d) == sorted_union(train, dev));
    // train prefix is untouched
    CHECK(std::equal(train.source.begin(), train.source.end(), t.source.begin()));
  }
}

TEST_CASE("make_track_one is deterministic and seed-dependent") {
  const auto train = numbered("train", 3);
  const auto dev = numbered("dev", 50);
  const auto a = make_track_one(train, dev, 0.5, 42);
  const auto b = make_track_one(train, dev, 0.5, 42);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  const auto c = make_track_one(train, dev, 0.5, 43);
  CHECK(c.second != a.second);
}

TEST_CASE("outputs are disjoint line sets") {
  const auto train = numbered("train", 8);
  const auto dev = numbered("dev", 40);
  const auto [t, d] = make_track_one(train, dev, 0.9, 5);
  for (const auto& p : d.pairs()) {
    const auto tp = t.pairs();
    CHECK(std::find(tp.begin(), tp.end(), p) == tp.end());
  }
}
