#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace mtlab {

/// Line-aligned source/target sentence pairs for one language pair.
struct ParallelCorpus {
  std::string pair_id;
  std::vector<std::string> source;
  std::vector<std::string> target;

  std::size_t size() const noexcept { return source.size(); }
  bool empty() const noexcept { return source.empty(); }

  /// Throws Error(kLineCountMismatch / kInvalidEncoding / kFormat) when an
  /// invariant is broken.
  void validate() const;

  std::vector<std::pair<std::string, std::string>> pairs() const;

  bool operator==(const ParallelCorpus&) const = default;
};

enum class Track { kOne, kTwo };

struct SplitSet {
  ParallelCorpus train;
  ParallelCorpus dev;
  ParallelCorpus test;
  Track track = Track::kOne;
};

/// Reads one sentence per line. Trailing whitespace is stripped and the empty
/// field after a final newline is dropped; interior empty lines are kept.
std::vector<std::string> load_lines(const std::filesystem::path& path);
void save_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);

ParallelCorpus load_parallel(const std::filesystem::path& source_path,
                             const std::filesystem::path& target_path, std::string pair_id);
void save_parallel(const ParallelCorpus& corpus, const std::filesystem::path& source_path,
                   const std::filesystem::path& target_path);

// A corpus directory holds source.txt and target.txt.
inline constexpr const char* kSourceFile = "source.txt";
inline constexpr const char* kTargetFile = "target.txt";

ParallelCorpus load_corpus_dir(const std::filesystem::path& dir, std::string pair_id = "es-xx");
void save_corpus_dir(const ParallelCorpus& corpus, const std::filesystem::path& dir);

inline constexpr double kTrackOneFraction = 0.9;

/// Moves floor(fraction * |dev|) dev pairs, picked by a seeded shuffle, into
/// train. Both outputs keep the original relative order of their pairs.
std::pair<ParallelCorpus, ParallelCorpus> make_track_one(const ParallelCorpus& train,
                                                         const ParallelCorpus& dev,
                                                         double fraction = kTrackOneFraction,
                                                         std::uint64_t seed = 0);

std::pair<ParallelCorpus, ParallelCorpus> make_track_two(const ParallelCorpus& train,
                                                         const ParallelCorpus& dev);

/// Number of dev pairs make_track_one moves for the given sizes.
std::size_t track_one_moved_count(std::size_t dev_size, double fraction);

}  // namespace mtlab
