#include "mtlab/model.hpp"

#include <algorithm>
#include <cmath>

#include "mtlab/special_tokens.hpp"

namespace mtlab {

void ModelConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (layers < 1) fail("layers must be >= 1");
  if (heads < 1) fail("heads must be >= 1");
  if (d_model < 1 || d_model % heads != 0) fail("d_model must be a positive multiple of heads");
  if (d_ff < 1) fail("d_ff must be >= 1");
  if (vocab_size < kNumSpecials + 1) fail("vocab_size must be >= 5");
  if (max_len < 2) fail("max_len must be >= 2");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) fail("label_smoothing must lie in [0, 1)");
}

std::vector<std::pair<std::string, std::pair<Index, Index>>> parameter_layout(const ModelConfig& c) {
  c.validate();
  std::vector<std::pair<std::string, std::pair<Index, Index>>> out;
  const Index d = c.d_model;
  const auto add = [&](std::string name, Index r, Index k) { out.push_back({std::move(name), {r, k}}); };
  const auto norm = [&](const std::string& prefix) {
    add(prefix + ".gain", 1, d);
    add(prefix + ".bias", 1, d);
  };
  const auto attention = [&](const std::string& prefix) {
    for (const char* w : {"q", "k", "v", "o"}) {
      add(prefix + ".w" + w, d, d);
      add(prefix + ".b" + w, 1, d);
    }
  };
  const auto ffn = [&](const std::string& prefix) {
    add(prefix + ".w1", d, c.d_ff);
    add(prefix + ".b1", 1, c.d_ff);
    add(prefix + ".w2", c.d_ff, d);
    add(prefix + ".b2", 1, d);
  };
  add("embedding", c.vocab_size, d);
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = "encoder." + std::to_string(l);
    norm(p + ".norm1");
    attention(p + ".self_attn");
    norm(p + ".norm2");
    ffn(p + ".ffn");
  }
  norm("encoder.norm");
  for (int l = 0; l < c.layers; ++l) {
    const std::string p = "decoder." + std::to_string(l);
    norm(p + ".norm1");
    attention(p + ".self_attn");
    norm(p + ".norm2");
    attention(p + ".cross_attn");
    norm(p + ".norm3");
    ffn(p + ".ffn");
  }
  norm("decoder.norm");
  return out;
}

template <typename Scalar>
Matrix<Scalar> positional_encoding(Index positions, Index width) {
  Matrix<Scalar> pe(positions, width);
  for (Index pos = 0; pos < positions; ++pos) {
    for (Index i = 0; i < width; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(width);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe(pos, i) = static_cast<Scalar>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

template <typename Scalar>
TranslationModel<Scalar> TranslationModel<Scalar>::init(const ModelConfig& config) {
  ParameterSet<Scalar> params;
  Rng rng(config.seed);
  for (const auto& [name, shape] : parameter_layout(config)) {
    const auto [rows, cols] = shape;
    Matrix<Scalar> value(rows, cols);
    const bool is_gain = name.ends_with(".gain");
    const bool is_bias = rows == 1 && !is_gain;
    if (is_gain) {
      value.setOnes();
    } else if (is_bias) {
      value.setZero();
    } else {
      const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
      for (Index i = 0; i < value.size(); ++i) value.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
    params.add(name, std::move(value));
  }
  return TranslationModel(config, std::move(params));
}

template <typename Scalar>
TranslationModel<Scalar>::TranslationModel(ModelConfig config, ParameterSet<Scalar> parameters)
    : config_(config), params_(std::move(parameters)) {
  const auto layout = parameter_layout(config_);
  if (layout.size() != params_.size()) {
    throw Error(ErrorCode::kInvalidConfig, "parameter count does not match the config");
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& [name, tensor] = params_.entry(i);
    if (name != layout[i].first || tensor.value.rows() != layout[i].second.first ||
        tensor.value.cols() != layout[i].second.second) {
      throw Error(ErrorCode::kInvalidConfig, "parameter " + name + " does not match the config layout");
    }
  }
  resolve_layout();
}

template <typename Scalar>
void TranslationModel<Scalar>::resolve_layout() {
  const auto idx = [&](const std::string& n) { return params_.index_of(n); };
  const auto norm = [&](const std::string& p) { return Norm{idx(p + ".gain"), idx(p + ".bias")}; };
  const auto attention = [&](const std::string& p) {
    return Attention{idx(p + ".wq"), idx(p + ".bq"), idx(p + ".wk"), idx(p + ".bk"),
                     idx(p + ".wv"), idx(p + ".bv"), idx(p + ".wo"), idx(p + ".bo")};
  };
  const auto ffn = [&](const std::string& p) {
    return FeedForward{idx(p + ".w1"), idx(p + ".b1"), idx(p + ".w2"), idx(p + ".b2")};
  };
  embedding_ = idx("embedding");
  encoder_layers_.clear();
  decoder_layers_.clear();
  for (int l = 0; l < config_.layers; ++l) {
    const std::string e = "encoder." + std::to_string(l);
    encoder_layers_.push_back({norm(e + ".norm1"), attention(e + ".self_attn"), norm(e + ".norm2"), ffn(e + ".ffn")});
    const std::string d = "decoder." + std::to_string(l);
    decoder_layers_.push_back({norm(d + ".norm1"), attention(d + ".self_attn"), norm(d + ".norm2"),
                               attention(d + ".cross_attn"), norm(d + ".norm3"), ffn(d + ".ffn")});
  }
  encoder_norm_ = norm("encoder.norm");
  decoder_norm_ = norm("decoder.norm");
}

template <typename Scalar>
typename TranslationModel<Scalar>::Bound TranslationModel<Scalar>::bind_trainable(Tape<Scalar>& tape) {
  Bound bound;
  bound.reserve(params_.size());
  for (auto& [name, t] : params_) bound.push_back(tape.parameter(t));
  return bound;
}

template <typename Scalar>
typename TranslationModel<Scalar>::Bound TranslationModel<Scalar>::bind_frozen(Tape<Scalar>& tape) const {
  Bound bound;
  bound.reserve(params_.size());
  for (const auto& [name, t] : params_) bound.push_back(tape.reference(t.value));
  return bound;
}

template <typename Scalar>
Var<Scalar> TranslationModel<Scalar>::embed(Tape<Scalar>& tape, const Bound& p, const std::vector<int>& ids,
                                            Index batch, Index length, Rng* rng) const {
  if (length > config_.max_len) {
    throw Error(ErrorCode::kInvalidArgument, "sequence of length " + std::to_string(length) +
                                                 " exceeds max_len " + std::to_string(config_.max_len));
  }
  const Index d = config_.d_model;
  Var<Scalar> x = scale(embedding_lookup(p[embedding_], std::span<const int>(ids)),
                        static_cast<Scalar>(std::sqrt(static_cast<double>(d))));
  const Matrix<Scalar> table = positional_encoding<Scalar>(length, d);
  Matrix<Scalar> positions(batch * length, d);
  for (Index b = 0; b < batch; ++b) positions.middleRows(b * length, length) = table;
  x = add(x, tape.constant(std::move(positions)));
  return rng ? dropout(x, config_.dropout, *rng) : x;
}

template <typename Scalar>
Var<Scalar> TranslationModel<Scalar>::norm(const Bound& p, const Norm& n, const Var<Scalar>& x) const {
  return layer_norm(x, p[n.gain], p[n.bias]);
}

template <typename Scalar>
Var<Scalar> TranslationModel<Scalar>::attention(const Bound& p, const Attention& a, const Var<Scalar>& query,
                                                const Var<Scalar>& memory, const AttentionSpec& spec) const {
  Var<Scalar> q = add(matmul(query, p[a.wq]), p[a.bq]);
  Var<Scalar> k = add(matmul(memory, p[a.wk]), p[a.bk]);
  Var<Scalar> v = add(matmul(memory, p[a.wv]), p[a.bv]);
  return add(matmul(multi_head_attention(q, k, v, spec), p[a.wo]), p[a.bo]);
}

template <typename Scalar>
Var<Scalar> TranslationModel<Scalar>::feed_forward(const Bound& p, const FeedForward& f,
                                                   const Var<Scalar>& x) const {
  return add(matmul(relu(add(matmul(x, p[f.w1]), p[f.b1])), p[f.w2]), p[f.b2]);
}

template <typename Scalar>
Var<Scalar> TranslationModel<Scalar>::encoder(Tape<Scalar>& tape, const Bound& p,
                                              const std::vector<std::vector<int>>& sources,
                                              AttentionSpec& spec, Rng* rng) const {
  const Index batch = static_cast<Index>(sources.size());
  Index length = 1;
  for (const auto& s : sources) length = std::max<Index>(length, static_cast<Index>(s.size()));
  std::vector<int> ids(static_cast<std::size_t>(batch * length), kPadId);
  spec = AttentionSpec{};
  spec.batch = batch;
  spec.heads = config_.heads;
  spec.query_len = length;
  spec.key_len = length;
  spec.key_valid.assign(ids.size(), 0);
  for (Index b = 0; b < batch; ++b) {
    const auto& s = sources[static_cast<std::size_t>(b)];
    for (std::size_t i = 0; i < s.size(); ++i) {
      ids[static_cast<std::size_t>(b * length) + i] = s[i];
      spec.key_valid[static_cast<std::size_t>(b * length) + i] = s[i] != kPadId;
    }
  }
  Var<Scalar> x = embed(tape, p, ids, batch, length, rng);
  const auto drop = [&](const Var<Scalar>& v) { return rng ? dropout(v, config_.dropout, *rng) : v; };
  for (const auto& layer : encoder_layers_) {
    Var<Scalar> h = norm(p, layer.norm1, x);
    x = add(x, drop(attention(p, layer.self_attn, h, h, spec)));
    h = norm(p, layer.norm2, x);
    x = add(x, drop(feed_forward(p, layer.ffn, h)));
  }
  return norm(p, encoder_norm_, x);
}

template <typename Scalar>
Var<Scalar> TranslationModel<Scalar>::decoder(Tape<Scalar>& tape, const Bound& p, const Var<Scalar>& memory,
                                              const AttentionSpec& source_spec, const std::vector<int>& inputs,
                                              Index batch, Index length, Rng* rng) const {
  AttentionSpec self_spec;
  self_spec.batch = batch;
  self_spec.heads = config_.heads;
  self_spec.query_len = length;
  self_spec.key_len = length;
  self_spec.causal = true;

  AttentionSpec cross_spec = source_spec;
  cross_spec.query_len = length;
  cross_spec.causal = false;

  Var<Scalar> x = embed(tape, p, inputs, batch, length, rng);
  const auto drop = [&](const Var<Scalar>& v) { return rng ? dropout(v, config_.dropout, *rng) : v; };
  for (const auto& layer : decoder_layers_) {
    Var<Scalar> h = norm(p, layer.norm1, x);
    x = add(x, drop(attention(p, layer.self_attn, h, h, self_spec)));
    h = norm(p, layer.norm2, x);
    x = add(x, drop(attention(p, layer.cross_attn, h, memory, cross_spec)));
    h = norm(p, layer.norm3, x);
    x = add(x, drop(feed_forward(p, layer.ffn, h)));
  }
  return norm(p, decoder_norm_, x);
}

template <typename Scalar>
Var<Scalar> TranslationModel<Scalar>::logits_from(const Bound& p, const Var<Scalar>& hidden) const {
  return matmul(hidden, transpose(p[embedding_]));
}

template <typename Scalar>
Var<Scalar> TranslationModel<Scalar>::logits_impl(Tape<Scalar>& tape, const Bound& p, const Batch& batch,
                                                  Rng* rng) const {
  if (batch.sources.empty() || batch.sources.size() != batch.targets.size()) {
    throw Error(ErrorCode::kEmptyBatch, "batch needs matching, non-empty source and target lists");
  }
  const Index n = static_cast<Index>(batch.targets.size());
  Index length = 0;
  for (const auto& t : batch.targets) length = std::max<Index>(length, static_cast<Index>(t.size()) - 1);
  if (length <= 0) throw Error(ErrorCode::kEmptyBatch, "targets hold no next-token positions");
  std::vector<int> inputs(static_cast<std::size_t>(n * length), kPadId);
  for (Index b = 0; b < n; ++b) {
    const auto& t = batch.targets[static_cast<std::size_t>(b)];
    for (std::size_t i = 0; i + 1 < t.size(); ++i) inputs[static_cast<std::size_t>(b * length) + i] = t[i];
  }
  AttentionSpec source_spec;
  Var<Scalar> memory = encoder(tape, p, batch.sources, source_spec, rng);
  Var<Scalar> hidden = decoder(tape, p, memory, source_spec, inputs, n, length, rng);
  return logits_from(p, hidden);
}

template <typename Scalar>
Var<Scalar> TranslationModel<Scalar>::forward_logits(Tape<Scalar>& tape, const Batch& batch, Rng* rng) {
  const Bound p = tape.recording() ? bind_trainable(tape) : bind_frozen(tape);
  return logits_impl(tape, p, batch, rng);
}

template <typename Scalar>
typename TranslationModel<Scalar>::Loss TranslationModel<Scalar>::forward_loss(Tape<Scalar>& tape,
                                                                              const Batch& batch, Rng* rng) {
  const Bound p = tape.recording() ? bind_trainable(tape) : bind_frozen(tape);
  Var<Scalar> logits = logits_impl(tape, p, batch, rng);
  const Index n = static_cast<Index>(batch.targets.size());
  const Index length = logits.rows() / n;
  std::vector<int> labels(static_cast<std::size_t>(n * length), kPadId);
  Index tokens = 0;
  for (Index b = 0; b < n; ++b) {
    const auto& t = batch.targets[static_cast<std::size_t>(b)];
    for (std::size_t i = 1; i < t.size(); ++i) {
      labels[static_cast<std::size_t>(b * length) + i - 1] = t[i];
      if (t[i] != kPadId) ++tokens;
    }
  }
  const double smoothing = rng ? config_.label_smoothing : 0.0;
  return {cross_entropy(logits, std::span<const int>(labels), kPadId, smoothing), tokens};
}

template <typename Scalar>
typename TranslationModel<Scalar>::EncodedSource TranslationModel<Scalar>::encode(
    std::span<const int> source) const {
  Tape<Scalar> tape(false);
  const Bound p = bind_frozen(tape);
  AttentionSpec spec;
  std::vector<std::vector<int>> sources{std::vector<int>(source.begin(), source.end())};
  Var<Scalar> memory = encoder(tape, p, sources, spec, nullptr);
  return {memory.value(), spec.key_valid};
}

template <typename Scalar>
Matrix<Scalar> TranslationModel<Scalar>::next_token_log_probs(const EncodedSource& source,
                                                              const std::vector<std::vector<int>>& prefixes) const {
  if (prefixes.empty()) return Matrix<Scalar>(0, config_.vocab_size);
  const Index n = static_cast<Index>(prefixes.size());
  Index length = 0;
  for (const auto& pre : prefixes) {
    if (pre.empty()) throw Error(ErrorCode::kInvalidArgument, "prefix must start with BOS");
    length = std::max<Index>(length, static_cast<Index>(pre.size()));
  }
  Tape<Scalar> tape(false);
  const Bound p = bind_frozen(tape);

  const Index src_len = source.memory.rows();
  Matrix<Scalar> memory(n * src_len, config_.d_model);
  AttentionSpec spec;
  spec.batch = n;
  spec.heads = config_.heads;
  spec.key_len = src_len;
  spec.key_valid.assign(static_cast<std::size_t>(n * src_len), 0);
  for (Index b = 0; b < n; ++b) {
    memory.middleRows(b * src_len, src_len) = source.memory;
    std::copy(source.key_valid.begin(), source.key_valid.end(), spec.key_valid.begin() + b * src_len);
  }
  std::vector<int> inputs(static_cast<std::size_t>(n * length), kPadId);
  for (Index b = 0; b < n; ++b) {
    const auto& pre = prefixes[static_cast<std::size_t>(b)];
    std::copy(pre.begin(), pre.end(), inputs.begin() + b * length);
  }
  Var<Scalar> hidden = decoder(tape, p, tape.constant(std::move(memory)), spec, inputs, n, length, nullptr);
  const Matrix<Scalar>& logits = logits_from(p, hidden).value();

  Matrix<Scalar> out(n, config_.vocab_size);
  for (Index b = 0; b < n; ++b) {
    const Index row = b * length + static_cast<Index>(prefixes[static_cast<std::size_t>(b)].size()) - 1;
    const Scalar m = logits.row(row).maxCoeff();
    const Scalar lse = m + std::log((logits.row(row).array() - m).exp().sum());
    out.row(b) = logits.row(row).array() - lse;
  }
  return out;
}

template <typename Scalar>
RowVector<Scalar> TranslationModel<Scalar>::logits_step(std::span<const int> source,
                                                       std::span<const int> prefix) const {
  if (prefix.empty() || prefix.front() != kBosId) {
    throw Error(ErrorCode::kInvalidArgument, "prefix must start with BOS");
  }
  return next_token_log_probs(encode(source), {std::vector<int>(prefix.begin(), prefix.end())}).row(0);
}

template class TranslationModel<float>;
template class TranslationModel<double>;
template Matrix<float> positional_encoding<float>(Index, Index);
template Matrix<double> positional_encoding<double>(Index, Index);

}  // namespace mtlab
