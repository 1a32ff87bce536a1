#include "mtlab/corpus.hpp"

#include <algorithm>
#include <cmath>

#include "mtlab/error.hpp"
#include "mtlab/hashing.hpp"
#include "mtlab/random.hpp"
#include "mtlab/utf8.hpp"

namespace mtlab {

void ParallelCorpus::validate() const {
  if (source.size() != target.size()) {
    throw Error(ErrorCode::kLineCountMismatch, pair_id + ": " + std::to_string(source.size()) +
                                                   " source vs " + std::to_string(target.size()) +
                                                   " target sentences");
  }
  for (const auto* side : {&source, &target}) {
    for (const auto& s : *side) {
      if (s.find_first_of("\n") != std::string::npos) {
        throw Error(ErrorCode::kFormat, pair_id + ": sentence contains a line break");
      }
      if (!utf8::is_valid(s)) throw Error(ErrorCode::kInvalidEncoding, pair_id);
    }
  }
}

std::vector<std::pair<std::string, std::string>> ParallelCorpus::pairs() const {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) out.emplace_back(source[i], target[i]);
  return out;
}

std::vector<std::string> load_lines(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (!utf8::is_valid(bytes)) {
    throw Error(ErrorCode::kInvalidEncoding, path.string() + " is not valid UTF-8");
  }
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= bytes.size()) {
    const std::size_t end = bytes.find('\n', start);
    if (end == std::string::npos) {
      if (start < bytes.size()) lines.push_back(utf8::rstrip(bytes.substr(start)));
      break;
    }
    lines.push_back(utf8::rstrip(std::string_view(bytes).substr(start, end - start)));
    start = end + 1;
  }
  return lines;
}

void save_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::string bytes;
  for (const auto& line : lines) {
    bytes += line;
    bytes += '\n';
  }
  write_file(path, bytes);
}

ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path, std::string pair_id) {
  ParallelCorpus corpus{std::move(pair_id), load_lines(source_path), load_lines(target_path)};
  corpus.validate();
  return corpus;
}

void save_parallel(const ParallelCorpus& corpus, const std::filesystem::path& source_path,
                   const std::filesystem::path& target_path) {
  corpus.validate();
  save_lines(source_path, corpus.source);
  save_lines(target_path, corpus.target);
}

ParallelCorpus load_corpus_dir(const std::filesystem::path& dir, std::string pair_id) {
  return load_parallel(dir / kSourceFile, dir / kTargetFile, std::move(pair_id));
}

void save_corpus_dir(const ParallelCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_parallel(corpus, dir / kSourceFile, dir / kTargetFile);
}

std::size_t track_one_moved_count(std::size_t dev_size, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "fraction must lie in [0, 1]");
  }
  // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
  const double product = fraction * static_cast<double>(dev_size);
  return std::min(dev_size, static_cast<std::size_t>(std::floor(product + 1e-9)));
}

std::pair<ParallelCorpus, ParallelCorpus> make_track_one(const ParallelCorpus& train,
                                                         const ParallelCorpus& dev,
                                                         double fraction, std::uint64_t seed) {
  train.validate();
  dev.validate();
  const std::size_t moved = track_one_moved_count(dev.size(), fraction);

  Rng rng(seed);
  std::vector<std::size_t> order = rng.permutation(dev.size());
  std::vector<bool> take(dev.size(), false);
  for (std::size_t i = 0; i < moved; ++i) take[order[i]] = true;

  ParallelCorpus new_train = train;
  ParallelCorpus new_dev{dev.pair_id, {}, {}};
  for (std::size_t i = 0; i < dev.size(); ++i) {
    ParallelCorpus& dst = take[i] ? new_train : new_dev;
    dst.source.push_back(dev.source[i]);
    dst.target.push_back(dev.target[i]);
  }
  return {std::move(new_train), std::move(new_dev)};
}

std::pair<ParallelCorpus, ParallelCorpus> make_track_two(const ParallelCorpus& train,
                                                         const ParallelCorpus& dev) {
  train.validate();
  dev.validate();
  return {train, dev};
}

}  // namespace mtlab
