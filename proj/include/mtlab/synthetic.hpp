#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mtlab/corpus.hpp"

namespace mtlab {

struct SyntheticOptions {
  std::size_t lexicon_size = 60;
  std::size_t parent_train = 1000;
  std::size_t parent_dev = 50;
  std::size_t intermediate_train = 300;
  std::size_t intermediate_dev = 30;
  std::size_t child_train = 64;
  std::size_t child_dev = 16;
  std::size_t child_test = 32;
};

/// Character-substitution translation tasks over one shared source language.
/// The parent and intermediate pairs use one letter mapping, the child pair a
/// different permutation of the same alphabet.
struct TransferFixture {
  ParallelCorpus parent_train;
  ParallelCorpus parent_dev;
  ParallelCorpus intermediate_train;
  ParallelCorpus intermediate_dev;
  ParallelCorpus child_train;
  ParallelCorpus child_dev;
  ParallelCorpus child_test;
};

TransferFixture make_transfer_fixture(std::uint64_t seed, const SyntheticOptions& options = {});

/// Writes parent/, intermediate/ and child/ split directories.
void save_transfer_fixture(const TransferFixture& fixture, const std::filesystem::path& dir);

}  // namespace mtlab
