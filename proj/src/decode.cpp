#include "mtlab/decode.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "mtlab/parallel.hpp"
#include "mtlab/special_tokens.hpp"

namespace mtlab {
namespace {

double normalized(double log_prob, std::size_t length, double alpha) {
  if (alpha == 0.0 || length == 0) return log_prob;
  return log_prob / std::pow(static_cast<double>(length), alpha);
}

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.ids < b.ids;
}

}  // namespace

void BeamConfig::validate() const {
  if (beam_size < 1) throw Error(ErrorCode::kInvalidConfig, "beam_size must be >= 1");
  if (max_len < 1) throw Error(ErrorCode::kInvalidConfig, "max_len must be >= 1");
  if (!(length_norm_alpha >= 0.0 && length_norm_alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "length_norm_alpha must lie in [0, 1]");
  }
}

Hypothesis beam_search(const NextTokenScorer& scorer, const BeamConfig& config) {
  config.validate();
  const double alpha = config.length_norm_alpha;
  std::vector<Hypothesis> active{Hypothesis{}};
  std::vector<Hypothesis> finished;

  for (int t = 0; t < config.max_len && !active.empty(); ++t) {
    std::vector<std::vector<int>> prefixes;
    prefixes.reserve(active.size());
    for (const auto& h : active) {
      std::vector<int> p{kBosId};
      p.insert(p.end(), h.ids.begin(), h.ids.end());
      prefixes.push_back(std::move(p));
    }
    const Matrix<double> lp = scorer.log_probs(prefixes);

    std::vector<Hypothesis> candidates;
    candidates.reserve(active.size() * static_cast<std::size_t>(lp.cols()));
    for (std::size_t b = 0; b < active.size(); ++b) {
      for (Index tok = 0; tok < lp.cols(); ++tok) {
        if (tok == kPadId || tok == kBosId) continue;
        const double v = lp(static_cast<Index>(b), tok);
        if (!std::isfinite(v)) continue;
        Hypothesis h;
        h.ids = active[b].ids;
        h.ids.push_back(static_cast<int>(tok));
        h.log_prob = active[b].log_prob + v;
        h.score = normalized(h.log_prob, h.ids.size(), alpha);
        h.finished = tok == kEosId;
        candidates.push_back(std::move(h));
      }
    }
    const std::size_t keep = std::min(candidates.size(), static_cast<std::size_t>(config.beam_size));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      ranks_before);
    active.clear();
    for (std::size_t i = 0; i < keep; ++i) {
      (candidates[i].finished ? finished : active).push_back(std::move(candidates[i]));
    }
  }

  finished.insert(finished.end(), active.begin(), active.end());
  if (finished.empty()) return Hypothesis{};
  return *std::min_element(finished.begin(), finished.end(), ranks_before);
}

ModelScorer::ModelScorer(const TranslationModel<float>& model, std::span<const int> source)
    : model_(model), encoded_(model.encode(source)) {}

Matrix<double> ModelScorer::log_probs(const std::vector<std::vector<int>>& prefixes) const {
  return model_.next_token_log_probs(encoded_, prefixes).cast<double>();
}

Translator::Translator(const Checkpoint& checkpoint, const SubwordVocabulary& vocab)
    : model_(checkpoint.model()), vocab_(vocab) {
  if (checkpoint.vocab_fingerprint != vocab.fingerprint()) {
    throw Error(ErrorCode::kVocabMismatch, "checkpoint vocabulary " + checkpoint.vocab_fingerprint +
                                               " differs from " + vocab.fingerprint());
  }
}

Translation Translator::translate(std::string_view sentence, const BeamConfig& config) const {
  BeamConfig bounded = config;
  bounded.max_len = std::min(config.max_len, model_.config().max_len);
  const int max_len = model_.config().max_len;
  std::vector<int> source = encode(vocab_, sentence).ids;
  if (static_cast<int>(source.size()) > max_len - 1) source.resize(static_cast<std::size_t>(max_len - 1));
  source.push_back(kEosId);
  const ModelScorer scorer(model_, source);
  Hypothesis best = beam_search(scorer, bounded);
  return {decode(vocab_, std::span<const int>(best.ids)), std::move(best)};
}

std::vector<std::string> Translator::translate_all(const std::vector<std::string>& sentences,
                                                   const BeamConfig& config) const {
  config.validate();
  std::vector<std::string> out(sentences.size());
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(num_threads()), sentences.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < sentences.size(); ++i) out[i] = translate(sentences[i], config).text;
    return out;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < sentences.size(); i += workers) out[i] = translate(sentences[i], config).text;
    });
  }
  for (auto& t : pool) t.join();
  return out;
}

Translation beam_search(const Checkpoint& checkpoint, std::string_view source, const SubwordVocabulary& vocab,
                        const BeamConfig& config) {
  return Translator(checkpoint, vocab).translate(source, config);
}

std::vector<std::string> translate_corpus(const Checkpoint& checkpoint, const std::vector<std::string>& sources,
                                          const SubwordVocabulary& vocab, const BeamConfig& config) {
  return Translator(checkpoint, vocab).translate_all(sources, config);
}

}  // namespace mtlab
