#pragma once

#include <Eigen/Dense>
#include <functional>
#include <initializer_list>
#include <vector>

#include "mtlab/error.hpp"

namespace mtlab {

using Index = Eigen::Index;

/// Row-major dense matrix; every tensor in the library is rank 2.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// A leaf value that outlives any single tape, e.g. a model parameter.
/// `grad` stays empty until a backward pass reaches the tensor.
template <typename Scalar>
struct Tensor {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool requires_grad = true;

  Tensor() = default;
  explicit Tensor(Matrix<Scalar> v, bool needs_grad = true)
      : value(std::move(v)), requires_grad(needs_grad) {}

  std::vector<Index> shape() const { return {value.rows(), value.cols()}; }
  bool has_grad() const { return grad.size() != 0; }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

template <typename Scalar>
class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, int id) : tape_(tape), id_(id) {}

  Tape<Scalar>* tape() const noexcept { return tape_; }
  int id() const noexcept { return id_; }
  const Matrix<Scalar>& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }

 private:
  Tape<Scalar>* tape_ = nullptr;
  int id_ = -1;
};

/// Records primitive ops in forward order for reverse-mode differentiation.
/// A tape built with `record = false` evaluates values only.
template <typename Scalar>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int)>;

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var<Scalar> constant(Matrix<Scalar> value) {
    Node n;
    n.value = std::move(value);
    return add_node(std::move(n));
  }

  /// Binds `tensor` without copying; gradients flow back into tensor.grad.
  Var<Scalar> parameter(Tensor<Scalar>& tensor) {
    Node n;
    n.external = &tensor.value;
    n.leaf = &tensor;
    n.needs_grad = record_ && tensor.requires_grad;
    return add_node(std::move(n));
  }

  /// Binds a read-only matrix without copying; no gradient is tracked.
  Var<Scalar> reference(const Matrix<Scalar>& value) {
    Node n;
    n.external = &value;
    return add_node(std::move(n));
  }

  Var<Scalar> push(Matrix<Scalar> value, std::initializer_list<Var<Scalar>> inputs, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    for (const auto& in : inputs) {
      check_owner(in);
      n.needs_grad = n.needs_grad || nodes_[in.id()].needs_grad;
    }
    n.needs_grad = n.needs_grad && record_;
    if (n.needs_grad) n.backward = std::move(fn);
    return add_node(std::move(n));
  }

  const Matrix<Scalar>& value(int id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
  }

  bool needs_grad(const Var<Scalar>& v) const { return nodes_[v.id()].needs_grad; }

  /// Gradient buffer of node `id`, zero-initialised on first access.
  Matrix<Scalar>& grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad.setZero(value(id).rows(), value(id).cols());
    return n.grad;
  }

  void check_owner(const Var<Scalar>& v) const {
    if (v.tape() != this || v.id() < 0 || static_cast<std::size_t>(v.id()) >= nodes_.size()) {
      throw Error(ErrorCode::kNoTape, "variable does not belong to this tape");
    }
  }

  /// Accumulates d(loss)/d(tensor) into every bound parameter tensor.
  void backward(const Var<Scalar>& loss) {
    check_owner(loss);
    if (!record_) throw Error(ErrorCode::kNoTape, "tape was built without recording");
    if (value(loss.id()).size() != 1) {
      throw Error(ErrorCode::kNotScalar, "loss must be 1x1");
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    grad(loss.id()).setOnes();
    for (int id = loss.id(); id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad.size() == 0 || !n.needs_grad) continue;
      if (n.backward) n.backward(*this, id);
      if (n.leaf && n.leaf->requires_grad) {
        if (!n.leaf->has_grad()) n.leaf->zero_grad();
        n.leaf->grad += n.grad;
      }
    }
  }

 private:
  struct Node {
    Matrix<Scalar> value;
    const Matrix<Scalar>* external = nullptr;
    Tensor<Scalar>* leaf = nullptr;
    Matrix<Scalar> grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  Var<Scalar> add_node(Node n) {
    nodes_.push_back(std::move(n));
    return Var<Scalar>(this, static_cast<int>(nodes_.size() - 1));
  }

  bool record_;
  std::vector<Node> nodes_;
};

template <typename Scalar>
const Matrix<Scalar>& Var<Scalar>::value() const {
  if (tape_ == nullptr) throw Error(ErrorCode::kNoTape, "variable is not on a tape");
  return tape_->value(id_);
}

template <typename Scalar>
void backward(const Var<Scalar>& loss) {
  if (loss.tape() == nullptr) throw Error(ErrorCode::kNoTape, "loss is not on a tape");
  loss.tape()->backward(loss);
}

}  // namespace mtlab
