#include "mtlab/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "mtlab/error.hpp"
#include "mtlab/utf8.hpp"

namespace mtlab {
namespace {

template <typename Seq>
std::map<Seq, long long> ngram_counts(const Seq& items, std::size_t n) {
  std::map<Seq, long long> counts;
  if (items.size() < n) return counts;
  for (std::size_t i = 0; i + n <= items.size(); ++i) {
    ++counts[Seq(items.begin() + static_cast<std::ptrdiff_t>(i),
                 items.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

template <typename Seq>
long long clipped_matches(const std::map<Seq, long long>& hyp, const std::map<Seq, long long>& ref) {
  long long m = 0;
  for (const auto& [gram, c] : hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) m += std::min(c, it->second);
  }
  return m;
}

void check_sizes(std::size_t refs, std::size_t hyps) {
  if (refs != hyps) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(refs) + " references vs " + std::to_string(hyps) + " hypotheses");
  }
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

BleuResult bleu(const std::vector<std::string>& references, const std::vector<std::string>& hypotheses,
                int max_n) {
  check_sizes(references.size(), hypotheses.size());
  if (references.empty()) throw Error(ErrorCode::kEmptyInput, "no sentences to score");
  if (max_n < 1) throw Error(ErrorCode::kInvalidArgument, "max_n must be >= 1");
  BleuResult r;
  r.matches.assign(static_cast<std::size_t>(max_n), 0);
  r.totals.assign(static_cast<std::size_t>(max_n), 0);
  for (std::size_t s = 0; s < references.size(); ++s) {
    const auto ref = utf8::split_whitespace(references[s]);
    const auto hyp = utf8::split_whitespace(hypotheses[s]);
    r.ref_len += static_cast<long long>(ref.size());
    r.hyp_len += static_cast<long long>(hyp.size());
    for (int n = 1; n <= max_n; ++n) {
      const auto h = ngram_counts(hyp, static_cast<std::size_t>(n));
      r.matches[n - 1] += clipped_matches(h, ngram_counts(ref, static_cast<std::size_t>(n)));
      if (hyp.size() >= static_cast<std::size_t>(n)) {
        r.totals[n - 1] += static_cast<long long>(hyp.size()) - n + 1;
      }
    }
  }
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 1; n <= max_n; ++n) {
    const double m = static_cast<double>(r.matches[n - 1]);
    const double t = static_cast<double>(r.totals[n - 1]);
    double p = 0.0;
    if (m > 0) {
      p = m / t;
    } else if (n >= 2) {
      p = 1.0 / (t + 1.0);
    }
    r.precisions.push_back(p);
    if (p == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(p);
    }
  }
  if (r.hyp_len == 0) {
    r.brevity_penalty = 0.0;
  } else if (r.hyp_len > r.ref_len) {
    r.brevity_penalty = 1.0;
  } else {
    r.brevity_penalty = std::exp(1.0 - static_cast<double>(r.ref_len) / static_cast<double>(r.hyp_len));
  }
  r.bleu = zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum / max_n);
  return r;
}

ChrfSentence chrf_sentence(const std::string& reference, const std::string& hypothesis, int char_n,
                           double beta) {
  if (char_n < 1) throw Error(ErrorCode::kInvalidArgument, "char_n must be >= 1");
  const std::u32string ref = utf8::strip_whitespace(utf8::decode(reference));
  const std::u32string hyp = utf8::strip_whitespace(utf8::decode(hypothesis));
  if (ref.empty() && hyp.empty()) return {1.0, 1.0, 1.0};
  const std::size_t longest = std::max(ref.size(), hyp.size());
  double p_sum = 0.0;
  double r_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= char_n; ++n) {
    if (longest < static_cast<std::size_t>(n)) break;
    ++orders;
    const auto h = ngram_counts(hyp, static_cast<std::size_t>(n));
    const auto r = ngram_counts(ref, static_cast<std::size_t>(n));
    const double m = static_cast<double>(clipped_matches(h, r));
    const double h_total = hyp.size() >= static_cast<std::size_t>(n) ? static_cast<double>(hyp.size() - n + 1) : 0.0;
    const double r_total = ref.size() >= static_cast<std::size_t>(n) ? static_cast<double>(ref.size() - n + 1) : 0.0;
    p_sum += h_total > 0 ? m / h_total : 0.0;
    r_sum += r_total > 0 ? m / r_total : 0.0;
  }
  ChrfSentence s;
  s.precision = p_sum / orders;
  s.recall = r_sum / orders;
  const double b2 = beta * beta;
  s.f = (s.precision + s.recall) == 0.0 ? 0.0 : (1.0 + b2) * s.precision * s.recall / (b2 * s.precision + s.recall);
  return s;
}

ChrfResult chrf(const std::vector<std::string>& references, const std::vector<std::string>& hypotheses, int char_n,
                double beta) {
  check_sizes(references.size(), hypotheses.size());
  ChrfResult out;
  double total = 0.0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    const double f = chrf_sentence(references[i], hypotheses[i], char_n, beta).f;
    out.per_sentence.push_back(f);
    total += f;
  }
  out.chrf = references.empty() ? 0.0 : total / static_cast<double>(references.size());
  return out;
}

EvaluationReport evaluate(const std::vector<std::string>& references, const std::vector<std::string>& hypotheses) {
  const BleuResult b = bleu(references, hypotheses);
  ChrfResult c = chrf(references, hypotheses);
  EvaluationReport report;
  report.bleu = b.bleu;
  report.chrf = c.chrf;
  report.per_sentence_chrf = std::move(c.per_sentence);
  report.ngram_precisions = b.precisions;
  report.brevity_penalty = b.brevity_penalty;
  report.hyp_len = b.hyp_len;
  report.ref_len = b.ref_len;
  return report;
}

std::string EvaluationReport::human() const {
  std::string out = "BLEU = " + fixed(bleu, 3) + " (";
  for (std::size_t i = 0; i < ngram_precisions.size(); ++i) {
    out += (i ? "/" : "") + fixed(100.0 * ngram_precisions[i], 1);
  }
  out += ", BP = " + fixed(brevity_penalty, 3) + ", hyp_len = " + std::to_string(hyp_len) +
         ", ref_len = " + std::to_string(ref_len) + ")\n";
  out += "chrF = " + fixed(chrf, 4) + '\n';
  return out;
}

std::string EvaluationReport::tsv() const {
  std::string out = "BLEU\t" + fixed(bleu, 4) + '\n' + "chrF\t" + fixed(chrf, 4) + '\n';
  for (std::size_t i = 0; i < ngram_precisions.size(); ++i) {
    out += "precision_" + std::to_string(i + 1) + '\t' + fixed(ngram_precisions[i], 6) + '\n';
  }
  out += "brevity_penalty\t" + fixed(brevity_penalty, 6) + '\n';
  out += "hyp_len\t" + std::to_string(hyp_len) + '\n';
  out += "ref_len\t" + std::to_string(ref_len) + '\n';
  out += "sentences\t" + std::to_string(per_sentence_chrf.size()) + '\n';
  return out;
}

}  // namespace mtlab
