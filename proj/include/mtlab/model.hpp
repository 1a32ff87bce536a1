#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mtlab/ops.hpp"
#include "mtlab/random.hpp"
#include "mtlab/tensor.hpp"

namespace mtlab {

struct ModelConfig {
  int layers = 2;
  int heads = 4;
  int d_model = 128;
  int d_ff = 256;
  int vocab_size = 0;
  int max_len = 64;
  double dropout = 0.1;
  double label_smoothing = 0.0;
  std::uint64_t seed = 1;

  /// Throws Error(kInvalidConfig).
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Named tensors in a fixed order.
template <typename Scalar>
class ParameterSet {
 public:
  using Entry = std::pair<std::string, Tensor<Scalar>>;

  Tensor<Scalar>& add(std::string name, Matrix<Scalar> value) {
    if (!index_.emplace(name, entries_.size()).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
    }
    entries_.emplace_back(std::move(name), Tensor<Scalar>(std::move(value)));
    return entries_.back().second;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  std::size_t index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw Error(ErrorCode::kInvalidArgument, "no parameter " + std::string(name));
    return it->second;
  }
  Tensor<Scalar>& operator[](std::string_view name) { return entries_[index_of(name)].second; }
  const Tensor<Scalar>& operator[](std::string_view name) const { return entries_[index_of(name)].second; }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) n += static_cast<std::size_t>(t.value.size());
    return n;
  }

  void zero_grad() {
    for (auto& [name, t] : entries_) t.zero_grad();
  }

  bool all_finite() const {
    for (const auto& [name, t] : entries_) {
      if (!t.value.allFinite()) return false;
    }
    return true;
  }

  template <typename Other>
  ParameterSet<Other> cast() const {
    ParameterSet<Other> out;
    for (const auto& [name, t] : entries_) out.add(name, t.value.template cast<Other>());
    return out;
  }

  /// True when names, shapes and values all match exactly.
  bool identical(const ParameterSet& other) const {
    if (size() != other.size()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
      const auto& a = entries_[i];
      const auto& b = other.entries_[i];
      if (a.first != b.first || a.second.value.rows() != b.second.value.rows() ||
          a.second.value.cols() != b.second.value.cols() || a.second.value != b.second.value) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Padded source/target id sequences. Targets start with BOS and end with
/// EOS; the model pads internally with PAD.
struct Batch {
  std::vector<std::vector<int>> sources;
  std::vector<std::vector<int>> targets;
};

/// Parameter names and shapes implied by a config, in storage order.
std::vector<std::pair<std::string, std::pair<Index, Index>>> parameter_layout(const ModelConfig& config);

/// Pre-norm encoder-decoder transformer with sinusoidal positions and an
/// output projection tied to the shared source/target embedding.
template <typename Scalar>
class TranslationModel {
 public:
  /// Glorot-uniform weights from a generator seeded with config.seed; layer
  /// norm gains are 1 and all biases 0.
  static TranslationModel init(const ModelConfig& config);

  /// Adopts existing parameters; names and shapes must match the layout.
  TranslationModel(ModelConfig config, ParameterSet<Scalar> parameters);

  const ModelConfig& config() const noexcept { return config_; }
  ParameterSet<Scalar>& parameters() noexcept { return params_; }
  const ParameterSet<Scalar>& parameters() const noexcept { return params_; }

  struct Loss {
    Var<Scalar> value;
    Index tokens = 0;
  };

  /// Teacher-forced mean cross-entropy over non-PAD next-token positions.
  /// Passing `dropout_rng` selects training mode (dropout and label
  /// smoothing active); without it the loss is the plain cross-entropy.
  Loss forward_loss(Tape<Scalar>& tape, const Batch& batch, Rng* dropout_rng = nullptr);

  /// Decoder logits for every target position, (batch * (T - 1)) x vocab with
  /// T the longest target.
  Var<Scalar> forward_logits(Tape<Scalar>& tape, const Batch& batch, Rng* dropout_rng = nullptr);

  /// Encoder output for one sentence. PAD positions are not attended to.
  struct EncodedSource {
    Matrix<Scalar> memory;
    std::vector<std::uint8_t> key_valid;
  };

  EncodedSource encode(std::span<const int> source) const;

  /// Log-probabilities of the next token after each prefix, one row per prefix.
  Matrix<Scalar> next_token_log_probs(const EncodedSource& source,
                                      const std::vector<std::vector<int>>& prefixes) const;

  /// Log-probabilities following `prefix` (which starts with BOS).
  RowVector<Scalar> logits_step(std::span<const int> source, std::span<const int> prefix) const;

  template <typename Other>
  TranslationModel<Other> cast() const {
    return TranslationModel<Other>(config_, params_.template cast<Other>());
  }

 private:
  struct Norm {
    std::size_t gain, bias;
  };
  struct Attention {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
  };
  struct FeedForward {
    std::size_t w1, b1, w2, b2;
  };
  struct EncoderLayer {
    Norm norm1;
    Attention self_attn;
    Norm norm2;
    FeedForward ffn;
  };
  struct DecoderLayer {
    Norm norm1;
    Attention self_attn;
    Norm norm2;
    Attention cross_attn;
    Norm norm3;
    FeedForward ffn;
  };
  using Bound = std::vector<Var<Scalar>>;

  void resolve_layout();
  Bound bind_trainable(Tape<Scalar>& tape);
  Bound bind_frozen(Tape<Scalar>& tape) const;

  Var<Scalar> embed(Tape<Scalar>& tape, const Bound& p, const std::vector<int>& ids, Index batch,
                    Index length, Rng* rng) const;
  Var<Scalar> attention(const Bound& p, const Attention& a, const Var<Scalar>& query,
                        const Var<Scalar>& memory, const AttentionSpec& spec) const;
  Var<Scalar> feed_forward(const Bound& p, const FeedForward& f, const Var<Scalar>& x) const;
  Var<Scalar> norm(const Bound& p, const Norm& n, const Var<Scalar>& x) const;
  Var<Scalar> encoder(Tape<Scalar>& tape, const Bound& p, const std::vector<std::vector<int>>& sources,
                      AttentionSpec& source_spec, Rng* rng) const;
  Var<Scalar> decoder(Tape<Scalar>& tape, const Bound& p, const Var<Scalar>& memory,
                      const AttentionSpec& source_spec, const std::vector<int>& inputs, Index batch,
                      Index length, Rng* rng) const;
  Var<Scalar> logits_from(const Bound& p, const Var<Scalar>& hidden) const;
  Var<Scalar> logits_impl(Tape<Scalar>& tape, const Bound& p, const Batch& batch, Rng* rng) const;

  ModelConfig config_;
  ParameterSet<Scalar> params_;
  std::size_t embedding_ = 0;
  std::vector<EncoderLayer> encoder_layers_;
  std::vector<DecoderLayer> decoder_layers_;
  Norm encoder_norm_{};
  Norm decoder_norm_{};
};

extern template class TranslationModel<float>;
extern template class TranslationModel<double>;

/// Sinusoidal position table, positions x width.
template <typename Scalar>
Matrix<Scalar> positional_encoding(Index positions, Index width);

}  // namespace mtlab
