#include "mtlab/synthetic.hpp"

#include <algorithm>

#include "mtlab/random.hpp"
#include "mtlab/utf8.hpp"

namespace mtlab {
namespace {

constexpr std::string_view kAlphabet = "aeiklmnorstu";

std::string random_word(Rng& rng) {
  const std::size_t len = 2 + rng.below(4);
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w.push_back(kAlphabet[rng.below(kAlphabet.size())]);
  return w;
}

std::string substitute(const std::string& text, const std::string& mapping) {
  std::string out = text;
  for (char& c : out) {
    const auto pos = kAlphabet.find(c);
    if (pos != std::string_view::npos) c = mapping[pos];
  }
  return out;
}

ParallelCorpus sample(Rng& rng, const std::vector<std::string>& lexicon, const std::string& mapping,
                      std::size_t n, const std::string& pair_id) {
  ParallelCorpus corpus{pair_id, {}, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t words = 2 + rng.below(4);
    std::string sentence;
    for (std::size_t w = 0; w < words; ++w) {
      if (w) sentence += ' ';
      sentence += lexicon[rng.below(lexicon.size())];
    }
    corpus.source.push_back(sentence);
    corpus.target.push_back(substitute(sentence, mapping));
  }
  return corpus;
}

std::string random_mapping(Rng& rng) {
  std::string mapping(kAlphabet);
  std::vector<char> letters(mapping.begin(), mapping.end());
  rng.shuffle(letters);
  return std::string(letters.begin(), letters.end());
}

}  // namespace

TransferFixture make_transfer_fixture(std::uint64_t seed, const SyntheticOptions& options) {
  Rng rng(seed);
  std::vector<std::string> lexicon;
  while (lexicon.size() < options.lexicon_size) {
    std::string w = random_word(rng);
    if (std::find(lexicon.begin(), lexicon.end(), w) == lexicon.end()) lexicon.push_back(std::move(w));
  }
  const std::string parent_map = random_mapping(rng);
  std::string child_map = random_mapping(rng);
  while (child_map == parent_map) child_map = random_mapping(rng);

  TransferFixture f;
  f.parent_train = sample(rng, lexicon, parent_map, options.parent_train, "src-par");
  f.parent_dev = sample(rng, lexicon, parent_map, options.parent_dev, "src-par");
  f.intermediate_train = sample(rng, lexicon, parent_map, options.intermediate_train, "src-par");
  f.intermediate_dev = sample(rng, lexicon, parent_map, options.intermediate_dev, "src-par");
  f.child_train = sample(rng, lexicon, child_map, options.child_train, "src-chi");
  f.child_dev = sample(rng, lexicon, child_map, options.child_dev, "src-chi");
  f.child_test = sample(rng, lexicon, child_map, options.child_test, "src-chi");
  return f;
}

void save_transfer_fixture(const TransferFixture& f, const std::filesystem::path& dir) {
  save_corpus_dir(f.parent_train, dir / "parent" / "train");
  save_corpus_dir(f.parent_dev, dir / "parent" / "dev");
  save_corpus_dir(f.intermediate_train, dir / "intermediate" / "train");
  save_corpus_dir(f.intermediate_dev, dir / "intermediate" / "dev");
  save_corpus_dir(f.child_train, dir / "child" / "train");
  save_corpus_dir(f.child_dev, dir / "child" / "dev");
  save_corpus_dir(f.child_test, dir / "child" / "test");
}

}  // namespace mtlab
