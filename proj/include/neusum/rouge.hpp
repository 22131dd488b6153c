#pragma once

// ROUGE-N and ROUGE-L over token sequences. Multi-sentence inputs are
// concatenated into one token stream per side before scoring.

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "neusum/corpus.hpp"
#include "neusum/error.hpp"
#include "neusum/porter.hpp"

namespace neusum {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  bool operator==(const RougeScore&) const = default;
};

// Weighted harmonic mean; beta = 1 gives F1. Zero when both inputs are zero.
inline double f_measure(double precision, double recall, double beta = 1.0) {
  const double b2 = beta * beta;
  const double denom = recall + b2 * precision;
  return denom > 0.0 ? (1.0 + b2) * precision * recall / denom : 0.0;
}

inline RougeScore score_from_counts(std::size_t hits, std::size_t candidate_total, std::size_t reference_total,
                                    double beta = 1.0) {
  RougeScore s;
  s.precision = candidate_total ? static_cast<double>(hits) / static_cast<double>(candidate_total) : 0.0;
  s.recall = reference_total ? static_cast<double>(hits) / static_cast<double>(reference_total) : 0.0;
  s.f1 = f_measure(s.precision, s.recall, beta);
  return s;
}

struct RougeVariant {
  enum class Kind { ngram, lcs };
  Kind kind = Kind::ngram;
  int n = 2;
  bool stemming = false;
  double beta = 1.0;  // LCS F-measure weight

  static RougeVariant rouge1(bool stem = false) { return {Kind::ngram, 1, stem, 1.0}; }
  static RougeVariant rouge2(bool stem = false) { return {Kind::ngram, 2, stem, 1.0}; }
  static RougeVariant rougeL(bool stem = false) { return {Kind::lcs, 0, stem, 1.0}; }

  std::string name() const { return kind == Kind::lcs ? "rouge-l" : "rouge-" + std::to_string(n); }

  // Accepts rouge-1, rouge-2, rouge-l (also r1/r2/rl, any case).
  static RougeVariant parse(std::string s, bool stem = false) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "rouge-1" || s == "r1" || s == "rouge1") return rouge1(stem);
    if (s == "rouge-2" || s == "r2" || s == "rouge2") return rouge2(stem);
    if (s == "rouge-l" || s == "rl" || s == "rougel") return rougeL(stem);
    throw Error("unknown ROUGE variant '" + s + "' (expected rouge-1, rouge-2 or rouge-l)");
  }
};

template <class T>
using NgramCounts = std::map<std::vector<T>, std::size_t>;

template <class T>
NgramCounts<T> ngram_counts(std::span<const T> tokens, std::size_t n) {
  if (n < 1) throw Error("ngram_counts: n must be at least 1");
  NgramCounts<T> out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++out[std::vector<T>(tokens.begin() + i, tokens.begin() + i + n)];
  return out;
}

template <class T>
NgramCounts<T> ngram_counts(const std::vector<T>& tokens, std::size_t n) {
  return ngram_counts(std::span<const T>(tokens), n);
}

template <class T>
RougeScore rouge_n(std::span<const T> candidate, std::span<const T> reference, std::size_t n) {
  const auto cand = ngram_counts(candidate, n);
  const auto ref = ngram_counts(reference, n);
  std::size_t hits = 0;
  for (const auto& [gram, c] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) hits += std::min(c, it->second);
  }
  const auto total = [n](std::size_t len) { return len >= n ? len - n + 1 : 0; };
  return score_from_counts(hits, total(candidate.size()), total(reference.size()));
}

template <class T>
RougeScore rouge_n(const std::vector<T>& candidate, const std::vector<T>& reference, std::size_t n) {
  return rouge_n(std::span<const T>(candidate), std::span<const T>(reference), n);
}

// Two-row dynamic programme, O(|a||b|) time.
template <class T>
std::size_t lcs_length(std::span<const T> a, std::span<const T> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

template <class T>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
  return lcs_length(std::span<const T>(a), std::span<const T>(b));
}

template <class T>
RougeScore rouge_l(std::span<const T> candidate, std::span<const T> reference, double beta = 1.0) {
  return score_from_counts(lcs_length(candidate, reference), candidate.size(), reference.size(), beta);
}

template <class T>
RougeScore rouge_l(const std::vector<T>& candidate, const std::vector<T>& reference, double beta = 1.0) {
  return rouge_l(std::span<const T>(candidate), std::span<const T>(reference), beta);
}

inline Tokens flatten(const Sentences& sentences, bool stemming = false) {
  Tokens out;
  for (const auto& s : sentences)
    for (const auto& t : s) out.push_back(stemming ? stem(t) : t);
  return out;
}

template <class T>
RougeScore score_tokens(const std::vector<T>& candidate, const std::vector<T>& reference, const RougeVariant& v) {
  if (v.kind == RougeVariant::Kind::lcs) return rouge_l(candidate, reference, v.beta);
  if (v.n < 1) throw Error("ROUGE-N needs n >= 1");
  return rouge_n(candidate, reference, static_cast<std::size_t>(v.n));
}

inline RougeScore score_summary(const Sentences& candidate, const Sentences& reference, const RougeVariant& v) {
  return score_tokens(flatten(candidate, v.stemming), flatten(reference, v.stemming), v);
}

}  // namespace neusum
