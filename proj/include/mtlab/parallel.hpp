#pragma once

#include <algorithm>
#include <thread>
#include <vector>

#include "mtlab/tensor.hpp"

namespace mtlab {

/// Worker count for the data-parallel matrix product. 1 selects the
/// single-threaded reference path.
int num_threads();
void set_num_threads(int n);

/// Reads MTLAB_THREADS (defaults to 1) and applies it.
int configure_threads_from_env();

/// out = lhs * rhs. With more than one worker the rows of `lhs` are split in
/// contiguous blocks; each block is an ordinary single-threaded product.
template <typename Scalar, typename Lhs, typename Rhs>
Matrix<Scalar> product(const Lhs& lhs, const Rhs& rhs) {
  Matrix<Scalar> out(lhs.rows(), rhs.cols());
  const int workers = num_threads();
  const Index rows = lhs.rows();
  const double work = static_cast<double>(rows) * lhs.cols() * rhs.cols();
  if (workers <= 1 || rows < 2 * workers || work < 1 << 16) {
    out.noalias() = lhs * rhs;
    return out;
  }
  std::vector<std::thread> pool;
  const Index chunk = (rows + workers - 1) / workers;
  for (Index begin = 0; begin < rows; begin += chunk) {
    const Index count = std::min(chunk, rows - begin);
    pool.emplace_back([&, begin, count] {
      out.middleRows(begin, count).noalias() = lhs.middleRows(begin, count) * rhs;
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace mtlab
