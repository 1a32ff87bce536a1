#pragma once

// Differentiable primitives. Each op evaluates eagerly and, when its tape is
// recording and an input needs a gradient, records a backward rule.

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mtlab/parallel.hpp"
#include "mtlab/random.hpp"
#include "mtlab/tensor.hpp"

namespace mtlab {

inline constexpr double kLayerNormEps = 1e-5;

namespace detail {

template <typename Scalar>
Tape<Scalar>& same_tape(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw Error(ErrorCode::kNoTape, "operands live on different tapes");
  }
  return *a.tape();
}

template <typename Scalar>
Tape<Scalar>& tape_of(const Var<Scalar>& a) {
  if (a.tape() == nullptr) throw Error(ErrorCode::kNoTape, "operand is not on a tape");
  return *a.tape();
}

inline std::string shape_str(Index r, Index c) {
  return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
}

[[noreturn]] inline void shape_error(const char* op, Index ar, Index ac, Index br, Index bc) {
  throw Error(ErrorCode::kShapeMismatch,
              std::string(op) + " " + shape_str(ar, ac) + " vs " + shape_str(br, bc));
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& tape = detail::same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows()) detail::shape_error("matmul", av.rows(), av.cols(), bv.rows(), bv.cols());
  return tape.push(product<Scalar>(av, bv), {a, b}, [a, b](Tape<Scalar>& t, int self) {
    const auto& g = t.grad(self);
    if (t.needs_grad(a)) t.grad(a.id()) += product<Scalar>(g, t.value(b.id()).transpose());
    if (t.needs_grad(b)) t.grad(b.id()) += product<Scalar>(t.value(a.id()).transpose(), g);
  });
}

template <typename Scalar>
Var<Scalar> transpose(const Var<Scalar>& a) {
  auto& tape = detail::tape_of(a);
  Matrix<Scalar> out = a.value().transpose();
  return tape.push(std::move(out), {a}, [a](Tape<Scalar>& t, int self) {
    t.grad(a.id()) += t.grad(self).transpose();
  });
}

/// Elementwise a + b. `b` may also be a 1 x cols row, broadcast over rows.
template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& tape = detail::same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() == bv.rows() && av.cols() == bv.cols()) {
    return tape.push(av + bv, {a, b}, [a, b](Tape<Scalar>& t, int self) {
      const Matrix<Scalar>& g = t.grad(self);
      if (t.needs_grad(a)) t.grad(a.id()) += g;
      if (t.needs_grad(b)) t.grad(b.id()) += g;
    });
  }
  if (bv.rows() == 1 && bv.cols() == av.cols()) {
    Matrix<Scalar> out = av.rowwise() + bv.row(0);
    return tape.push(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, int self) {
      const Matrix<Scalar>& g = t.grad(self);
      if (t.needs_grad(a)) t.grad(a.id()) += g;
      if (t.needs_grad(b)) t.grad(b.id()) += g.colwise().sum();
    });
  }
  detail::shape_error("add", av.rows(), av.cols(), bv.rows(), bv.cols());
}

/// Elementwise (Hadamard) product of equal-shape operands.
template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  auto& tape = detail::same_tape(a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) {
    detail::shape_error("mul", av.rows(), av.cols(), bv.rows(), bv.cols());
  }
  Matrix<Scalar> out = av.cwiseProduct(bv);
  return tape.push(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, int self) {
    const Matrix<Scalar>& g = t.grad(self);
    if (t.needs_grad(a)) t.grad(a.id()) += g.cwiseProduct(t.value(b.id()));
    if (t.needs_grad(b)) t.grad(b.id()) += g.cwiseProduct(t.value(a.id()));
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar factor) {
  auto& tape = detail::tape_of(a);
  return tape.push(a.value() * factor, {a}, [a, factor](Tape<Scalar>& t, int self) {
    t.grad(a.id()) += t.grad(self) * factor;
  });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  auto& tape = detail::tape_of(a);
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return tape.push(std::move(out), {a}, [a](Tape<Scalar>& t, int self) {
    t.grad(a.id()).array() += t.grad(self)(0, 0);
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  auto& tape = detail::tape_of(a);
  Matrix<Scalar> out = a.value().cwiseMax(Scalar(0));
  return tape.push(std::move(out), {a}, [a](Tape<Scalar>& t, int self) {
    t.grad(a.id()) += (t.value(a.id()).array() > Scalar(0)).select(t.grad(self), Scalar(0));
  });
}

/// Row-wise softmax.
template <typename Scalar>
Var<Scalar> softmax(const Var<Scalar>& a) {
  auto& tape = detail::tape_of(a);
  const auto& x = a.value();
  Matrix<Scalar> y(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    const Scalar m = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - m).exp();
    y.row(r) /= y.row(r).sum();
  }
  return tape.push(std::move(y), {a}, [a](Tape<Scalar>& t, int self) {
    const auto& yv = t.value(self);
    const auto& g = t.grad(self);
    Matrix<Scalar> dot = g.cwiseProduct(yv).rowwise().sum();
    t.grad(a.id()).array() += yv.array() * (g.array().colwise() - dot.col(0).array());
  });
}

/// Row-wise layer normalisation with per-column gain and bias (both 1 x cols).
template <typename Scalar>
Var<Scalar> layer_norm(const Var<Scalar>& x, const Var<Scalar>& gain, const Var<Scalar>& bias,
                       double eps = kLayerNormEps) {
  auto& tape = detail::same_tape(x, gain);
  detail::same_tape(x, bias);
  const auto& xv = x.value();
  const Index n = xv.cols();
  if (gain.rows() != 1 || gain.cols() != n || bias.rows() != 1 || bias.cols() != n) {
    detail::shape_error("layer_norm", xv.rows(), n, gain.rows(), gain.cols());
  }
  auto normalized = std::make_shared<Matrix<Scalar>>(xv.rows(), n);
  auto inv_std = std::make_shared<std::vector<Scalar>>(xv.rows());
  for (Index r = 0; r < xv.rows(); ++r) {
    const Scalar mean = xv.row(r).mean();
    const Scalar var = (xv.row(r).array() - mean).square().mean();
    const Scalar inv = Scalar(1) / std::sqrt(var + static_cast<Scalar>(eps));
    (*inv_std)[r] = inv;
    normalized->row(r) = (xv.row(r).array() - mean) * inv;
  }
  Matrix<Scalar> y = (normalized->array().rowwise() * gain.value().row(0).array()).rowwise() +
                     bias.value().row(0).array();
  return tape.push(std::move(y), {x, gain, bias},
                   [x, gain, bias, normalized, inv_std](Tape<Scalar>& t, int self) {
                     const Matrix<Scalar>& g = t.grad(self);
                     const Matrix<Scalar>& xhat = *normalized;
                     if (t.needs_grad(gain)) t.grad(gain.id()) += g.cwiseProduct(xhat).colwise().sum();
                     if (t.needs_grad(bias)) t.grad(bias.id()) += g.colwise().sum();
                     if (t.needs_grad(x)) {
                       const Index n = xhat.cols();
                       Matrix<Scalar> dxhat = g.array().rowwise() * t.value(gain.id()).row(0).array();
                       auto& dx = t.grad(x.id());
                       for (Index r = 0; r < xhat.rows(); ++r) {
                         const Scalar s1 = dxhat.row(r).sum();
                         const Scalar s2 = dxhat.row(r).dot(xhat.row(r));
                         dx.row(r).array() += ((*inv_std)[r] / Scalar(n)) *
                                              (Scalar(n) * dxhat.row(r).array() - s1 - xhat.row(r).array() * s2);
                       }
                     }
                   });
}

/// Gathers rows of `table` (vocab x width) for each id.
template <typename Scalar>
Var<Scalar> embedding_lookup(const Var<Scalar>& table, std::span<const int> ids) {
  auto& tape = detail::tape_of(table);
  const auto& tv = table.value();
  Matrix<Scalar> out(static_cast<Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) {
      throw Error(ErrorCode::kIdOutOfRange, "id " + std::to_string(ids[i]) + " outside table of " +
                                                std::to_string(tv.rows()));
    }
    out.row(static_cast<Index>(i)) = tv.row(ids[i]);
  }
  auto saved = std::make_shared<std::vector<int>>(ids.begin(), ids.end());
  return tape.push(std::move(out), {table}, [table, saved](Tape<Scalar>& t, int self) {
    const Matrix<Scalar>& g = t.grad(self);
    auto& dt = t.grad(table.id());
    for (std::size_t i = 0; i < saved->size(); ++i) dt.row((*saved)[i]) += g.row(static_cast<Index>(i));
  });
}

/// Mean token cross-entropy of row-wise logits against `targets`; rows whose
/// target equals `ignore_id` are skipped. With label smoothing e the target
/// distribution is (1 - e) one-hot + e uniform.
template <typename Scalar>
Var<Scalar> cross_entropy(const Var<Scalar>& logits, std::span<const int> targets, int ignore_id,
                          double label_smoothing = 0.0) {
  auto& tape = detail::tape_of(logits);
  const auto& z = logits.value();
  if (static_cast<Index>(targets.size()) != z.rows()) {
    detail::shape_error("cross_entropy", z.rows(), z.cols(), static_cast<Index>(targets.size()), 1);
  }
  const Index vocab = z.cols();
  auto probs = std::make_shared<Matrix<Scalar>>(z.rows(), vocab);
  double total = 0.0;
  Index count = 0;
  for (Index r = 0; r < z.rows(); ++r) {
    const int y = targets[r];
    if (y == ignore_id) continue;
    if (y < 0 || y >= vocab) throw Error(ErrorCode::kIdOutOfRange, "target " + std::to_string(y));
    const Scalar m = z.row(r).maxCoeff();
    const Scalar lse = m + std::log((z.row(r).array() - m).exp().sum());
    probs->row(r) = (z.row(r).array() - lse).exp();
    double row_loss = -(1.0 - label_smoothing) * static_cast<double>(z(r, y) - lse);
    if (label_smoothing > 0.0) {
      row_loss -= label_smoothing * static_cast<double>((z.row(r).array() - lse).mean());
    }
    total += row_loss;
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::kEmptyBatch, "every target position is ignored");
  Matrix<Scalar> out(1, 1);
  out(0, 0) = static_cast<Scalar>(total / static_cast<double>(count));
  auto saved = std::make_shared<std::vector<int>>(targets.begin(), targets.end());
  return tape.push(std::move(out), {logits},
                   [logits, probs, saved, ignore_id, count, label_smoothing](Tape<Scalar>& t, int self) {
                     const Scalar g = t.grad(self)(0, 0) / static_cast<Scalar>(count);
                     auto& dz = t.grad(logits.id());
                     const Index vocab = dz.cols();
                     const Scalar uniform = static_cast<Scalar>(label_smoothing) / static_cast<Scalar>(vocab);
                     for (Index r = 0; r < dz.rows(); ++r) {
                       const int y = (*saved)[r];
                       if (y == ignore_id) continue;
                       dz.row(r).array() += g * (probs->row(r).array() - uniform);
                       dz(r, y) -= g * static_cast<Scalar>(1.0 - label_smoothing);
                     }
                   });
}

/// Inverted dropout; identity when p == 0.
template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, double p, Rng& rng) {
  if (p <= 0.0) return x;
  auto& tape = detail::tape_of(x);
  Matrix<Scalar> mask(x.rows(), x.cols());
  const Scalar keep = static_cast<Scalar>(1.0 / (1.0 - p));
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < p ? Scalar(0) : keep;
  return mul(x, tape.constant(std::move(mask)));
}

/// Layout of a batched multi-head attention call. Queries are stacked as
/// (batch * query_len) rows and keys/values as (batch * key_len) rows.
struct AttentionSpec {
  Index batch = 1;
  Index heads = 1;
  Index query_len = 0;
  Index key_len = 0;
  /// batch * key_len flags; empty means every key is visible.
  std::vector<std::uint8_t> key_valid;
  /// Query i may only see keys j <= i.
  bool causal = false;

  bool visible(Index b, Index i, Index j) const {
    if (causal && j > i) return false;
    return key_valid.empty() || key_valid[static_cast<std::size_t>(b * key_len + j)] != 0;
  }
};

/// Scaled dot-product attention over `spec.heads` column groups, with the
/// heads concatenated back into the output. Fused so that the backward pass
/// reuses the stored attention weights.
template <typename Scalar>
Var<Scalar> multi_head_attention(const Var<Scalar>& q, const Var<Scalar>& k, const Var<Scalar>& v,
                                 const AttentionSpec& spec) {
  auto& tape = detail::same_tape(q, k);
  detail::same_tape(q, v);
  const auto& qv = q.value();
  const auto& kv = k.value();
  const auto& vv = v.value();
  const Index d = qv.cols();
  if (qv.rows() != spec.batch * spec.query_len || kv.rows() != spec.batch * spec.key_len ||
      vv.rows() != kv.rows() || kv.cols() != d || vv.cols() != d || spec.heads <= 0 ||
      d % spec.heads != 0) {
    detail::shape_error("multi_head_attention", qv.rows(), qv.cols(), kv.rows(), kv.cols());
  }
  if (!spec.key_valid.empty() && static_cast<Index>(spec.key_valid.size()) != spec.batch * spec.key_len) {
    throw Error(ErrorCode::kShapeMismatch, "key mask size");
  }
  const Index dk = d / spec.heads;
  const Scalar inv_sqrt = Scalar(1) / std::sqrt(static_cast<Scalar>(dk));
  auto weights = std::make_shared<std::vector<Matrix<Scalar>>>();
  weights->reserve(static_cast<std::size_t>(spec.batch * spec.heads));
  Matrix<Scalar> out = Matrix<Scalar>::Zero(qv.rows(), d);

  for (Index b = 0; b < spec.batch; ++b) {
    for (Index h = 0; h < spec.heads; ++h) {
      const auto qb = qv.block(b * spec.query_len, h * dk, spec.query_len, dk);
      const auto kb = kv.block(b * spec.key_len, h * dk, spec.key_len, dk);
      const auto vb = vv.block(b * spec.key_len, h * dk, spec.key_len, dk);
      Matrix<Scalar> p = (qb * kb.transpose()) * inv_sqrt;
      for (Index i = 0; i < spec.query_len; ++i) {
        Scalar m = -std::numeric_limits<Scalar>::infinity();
        for (Index j = 0; j < spec.key_len; ++j) {
          if (spec.visible(b, i, j)) m = std::max(m, p(i, j));
        }
        Scalar z = 0;
        for (Index j = 0; j < spec.key_len; ++j) {
          if (spec.visible(b, i, j)) {
            p(i, j) = std::exp(p(i, j) - m);
            z += p(i, j);
          } else {
            p(i, j) = 0;
          }
        }
        if (z > 0) p.row(i) /= z;
      }
      out.block(b * spec.query_len, h * dk, spec.query_len, dk).noalias() = p * vb;
      weights->push_back(std::move(p));
    }
  }

  const Index batch = spec.batch;
  const Index heads = spec.heads;
  const Index lq = spec.query_len;
  const Index lk = spec.key_len;
  return tape.push(std::move(out), {q, k, v},
                   [q, k, v, weights, batch, heads, lq, lk, dk, inv_sqrt](Tape<Scalar>& t, int self) {
                     const Matrix<Scalar>& g = t.grad(self);
                     const auto& qv = t.value(q.id());
                     const auto& kv = t.value(k.id());
                     const auto& vv = t.value(v.id());
                     const bool need_q = t.needs_grad(q);
                     const bool need_k = t.needs_grad(k);
                     const bool need_v = t.needs_grad(v);
                     Matrix<Scalar>* dq = need_q ? &t.grad(q.id()) : nullptr;
                     Matrix<Scalar>* dkm = need_k ? &t.grad(k.id()) : nullptr;
                     Matrix<Scalar>* dv = need_v ? &t.grad(v.id()) : nullptr;
                     for (Index b = 0; b < batch; ++b) {
                       for (Index h = 0; h < heads; ++h) {
                         const Matrix<Scalar>& p = (*weights)[static_cast<std::size_t>(b * heads + h)];
                         const auto gb = g.block(b * lq, h * dk, lq, dk);
                         const auto vb = vv.block(b * lk, h * dk, lk, dk);
                         if (need_v) dv->block(b * lk, h * dk, lk, dk).noalias() += p.transpose() * gb;
                         if (!need_q && !need_k) continue;
                         Matrix<Scalar> dp = gb * vb.transpose();
                         Matrix<Scalar> dot = dp.cwiseProduct(p).rowwise().sum();
                         Matrix<Scalar> ds = p.array() * (dp.array().colwise() - dot.col(0).array());
                         ds *= inv_sqrt;
                         if (need_q) {
                           dq->block(b * lq, h * dk, lq, dk).noalias() += ds * kv.block(b * lk, h * dk, lk, dk);
                         }
                         if (need_k) {
                           dkm->block(b * lk, h * dk, lk, dk).noalias() +=
                               ds.transpose() * qv.block(b * lq, h * dk, lq, dk);
                         }
                       }
                     }
                   });
}

}  // namespace mtlab
