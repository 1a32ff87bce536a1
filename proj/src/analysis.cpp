#include "mtlab/analysis.hpp"

#include <algorithm>
#include <cstdio>

#include "mtlab/error.hpp"
#include "mtlab/utf8.hpp"

namespace mtlab {
namespace {

struct SideTotals {
  std::size_t words = 0;
  std::size_t chars = 0;
};

SideTotals totals(const std::vector<std::string>& sentences) {
  SideTotals t;
  for (const auto& s : sentences) {
    for (const auto& w : utf8::split_whitespace(s)) {
      ++t.words;
      t.chars += utf8::length(w);
    }
  }
  return t;
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

LengthStats length_stats(const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(gold.size()) + " gold vs " + std::to_string(pred.size()) + " predicted sentences");
  }
  LengthStats stats;
  stats.sentences = gold.size();
  if (gold.empty()) return stats;
  const double n = static_cast<double>(gold.size());
  const SideTotals g = totals(gold);
  const SideTotals p = totals(pred);
  stats.avg_sent_len_gold = static_cast<double>(g.words) / n;
  stats.avg_sent_len_pred = static_cast<double>(p.words) / n;
  stats.avg_word_len_gold = g.words ? static_cast<double>(g.chars) / static_cast<double>(g.words) : 0.0;
  stats.avg_word_len_pred = p.words ? static_cast<double>(p.chars) / static_cast<double>(p.words) : 0.0;
  return stats;
}

std::string LengthStats::table() const {
  const std::size_t w = 12;
  std::string out = pad("Sent (Gold)", w) + pad("Sent (Pred)", w) + pad("Word (Gold)", w) + pad("Word (Pred)", w) + '\n';
  out += pad(fixed(avg_sent_len_gold), w) + pad(fixed(avg_sent_len_pred), w) + pad(fixed(avg_word_len_gold), w) +
         pad(fixed(avg_word_len_pred), w) + '\n';
  return out;
}

std::string LengthStats::tsv() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "sentences\t%zu\navg_sent_len_gold\t%.6f\navg_sent_len_pred\t%.6f\n"
                "avg_word_len_gold\t%.6f\navg_word_len_pred\t%.6f\n",
                sentences, avg_sent_len_gold, avg_sent_len_pred, avg_word_len_gold, avg_word_len_pred);
  return buf;
}

VariantReport variant_count(const std::vector<std::string>& sentences, const std::string& stem) {
  if (stem.empty()) throw Error(ErrorCode::kInvalidArgument, "stem must be non-empty");
  VariantReport report;
  report.stem = stem;
  for (const auto& s : sentences) {
    for (const auto& w : utf8::split_whitespace(s)) {
      if (w.starts_with(stem)) {
        ++report.count;
        ++report.matched_forms[w];
      }
    }
  }
  return report;
}

std::string VariantReport::table() const {
  std::size_t width = 4;
  for (const auto& [form, c] : matched_forms) width = std::max(width, utf8::length(form));
  std::string out;
  for (const auto& [form, c] : matched_forms) {
    out += form + std::string(width - utf8::length(form) + 2, ' ') + std::to_string(c) + '\n';
  }
  out += "total" + std::string(width > 3 ? width - 3 : 2, ' ') + std::to_string(count) + '\n';
  return out;
}

std::string VariantReport::tsv() const {
  std::string out = "stem\t" + stem + "\ncount\t" + std::to_string(count) + '\n';
  for (const auto& [form, c] : matched_forms) out += "form:" + form + '\t' + std::to_string(c) + '\n';
  return out;
}

}  // namespace mtlab
