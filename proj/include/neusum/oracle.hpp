#pragma once

// Extractive oracle labels and per-step gain targets.
//
// best_combination() searches k-combinations of sentences for the best
// ROUGE-2 F1 against the reference, growing k until the best score drops.
// build_training_targets() turns the chosen sentences into one soft target
// distribution per extraction step from the ROUGE F1 gain of every
// remaining sentence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "neusum/corpus.hpp"
#include "neusum/error.hpp"
#include "neusum/rouge.hpp"

namespace neusum {

// Set-scoring metric r(.): mean F1 over one or more ROUGE variants.
struct GainMetric {
  std::vector<RougeVariant> components{RougeVariant::rouge2()};

  static GainMetric rouge2() { return {}; }
  static GainMetric mean_f1(bool stem = false) {
    return {{RougeVariant::rouge1(stem), RougeVariant::rouge2(stem), RougeVariant::rougeL(stem)}};
  }

  std::string name() const {
    if (components.size() == 1) return components.front().name();
    return "mean";
  }
  // rouge-1 | rouge-2 | rouge-l | mean
  static GainMetric parse(const std::string& s, bool stem = false) {
    if (s == "mean") return mean_f1(stem);
    return {{RougeVariant::parse(s, stem)}};
  }
};

// Scores sentence subsets of one document against its reference. Tokens are
// interned to integers once so subset evaluation is cheap.
class SubsetScorer {
 public:
  SubsetScorer(const Document& doc, GainMetric metric) : metric_(std::move(metric)) {
    if (metric_.components.empty()) throw Error("gain metric has no components");
    bool stem_any = false, plain_any = false;
    for (const auto& v : metric_.components) (v.stemming ? stem_any : plain_any) = true;
    if (stem_any && plain_any) throw Error("gain metric mixes stemmed and unstemmed variants");
    stemming_ = stem_any;
    for (const auto& s : doc.sentences) sentences_.push_back(intern(s));
    for (const auto& s : doc.reference) {
      auto ids = intern(s);
      reference_.insert(reference_.end(), ids.begin(), ids.end());
    }
    for (int n : {1, 2}) reference_grams_[n] = sorted_grams(reference_, n);
  }

  std::size_t sentence_count() const noexcept { return sentences_.size(); }

  // Full score for one variant; `subset` is taken in document order.
  RougeScore score(std::vector<std::size_t> subset, const RougeVariant& v) const {
    std::sort(subset.begin(), subset.end());
    return score_sorted(concat(subset), v);
  }

  // r(subset): mean F1 over the metric's variants.
  double value(std::vector<std::size_t> subset) const {
    if (subset.empty()) return 0.0;
    std::sort(subset.begin(), subset.end());
    const auto tokens = concat(subset);
    double total = 0.0;
    for (const auto& v : metric_.components) total += score_sorted(tokens, v).f1;
    return total / static_cast<double>(metric_.components.size());
  }

 private:
  using Gram = std::uint64_t;

  std::vector<std::uint32_t> intern(const Tokens& toks) {
    std::vector<std::uint32_t> out;
    out.reserve(toks.size());
    for (const auto& t : toks) {
      const std::string key = stemming_ ? stem(t) : t;
      auto [it, inserted] = ids_.try_emplace(key, static_cast<std::uint32_t>(ids_.size()));
      out.push_back(it->second);
    }
    return out;
  }

  std::vector<std::uint32_t> concat(const std::vector<std::size_t>& subset) const {
    std::vector<std::uint32_t> out;
    for (std::size_t i : subset) {
      if (i >= sentences_.size())
        throw Error("sentence index " + std::to_string(i) + " out of range for a " +
                    std::to_string(sentences_.size()) + "-sentence document");
      out.insert(out.end(), sentences_[i].begin(), sentences_[i].end());
    }
    return out;
  }

  static std::vector<Gram> sorted_grams(const std::vector<std::uint32_t>& toks, int n) {
    std::vector<Gram> out;
    if (toks.size() < static_cast<std::size_t>(n)) return out;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= toks.size(); ++i)
      out.push_back(n == 1 ? toks[i] : (static_cast<Gram>(toks[i]) << 32) | toks[i + 1]);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Clipped overlap of two sorted multisets.
  static std::size_t overlap(const std::vector<Gram>& a, const std::vector<Gram>& b) {
    std::size_t i = 0, j = 0, hits = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) {
        ++i;
      } else if (b[j] < a[i]) {
        ++j;
      } else {
        ++hits;
        ++i;
        ++j;
      }
    }
    return hits;
  }

  RougeScore score_sorted(const std::vector<std::uint32_t>& tokens, const RougeVariant& v) const {
    if (v.kind == RougeVariant::Kind::lcs) return rouge_l(tokens, reference_, v.beta);
    if (v.n > 2) return rouge_n(tokens, reference_, static_cast<std::size_t>(v.n));
    const std::vector<Gram>& ref = reference_grams_.at(v.n);
    const auto cand = sorted_grams(tokens, v.n);
    return score_from_counts(overlap(cand, ref), cand.size(), ref.size());
  }

  GainMetric metric_;
  bool stemming_ = false;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::vector<std::uint32_t>> sentences_;
  std::vector<std::uint32_t> reference_;
  std::unordered_map<int, std::vector<Gram>> reference_grams_;
};

// Scores closer than this count as ties (lowest index tuple wins).
inline constexpr double kTieTolerance = 1e-12;

struct OracleLabels {
  std::vector<std::size_t> selected;  // greedy marginal-gain order
  RougeScore best_score;              // ROUGE-2 of the selected set
  std::size_t searched_k = 0;         // largest combination size evaluated
};

namespace detail {

// Visits k-combinations of {0..n-1} in lexicographic order.
template <class F>
void for_each_combination(std::size_t n, std::size_t k, F&& visit) {
  if (k == 0 || k > n) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    visit(static_cast<const std::vector<std::size_t>&>(idx));
    std::size_t i = k;
    while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Orders `chosen` so each element maximizes r(prefix + {i}); ties go to the lower index.
inline std::vector<std::size_t> greedy_order(const SubsetScorer& scorer, std::vector<std::size_t> chosen) {
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::size_t> order;
  while (!chosen.empty()) {
    std::size_t best_pos = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < chosen.size(); ++p) {
      auto trial = order;
      trial.push_back(chosen[p]);
      const double v = scorer.value(trial);
      if (v > best + kTieTolerance) {
        best = v;
        best_pos = p;
      }
    }
    order.push_back(chosen[best_pos]);
    chosen.erase(chosen.begin() + static_cast<std::ptrdiff_t>(best_pos));
  }
  return order;
}

}  // namespace detail

// With early_stop off every k up to max_k is searched.
inline OracleLabels best_combination(const Document& doc, std::size_t max_k = 5, bool early_stop = true) {
  if (doc.sentences.empty()) throw Error("best_combination: document '" + doc.id + "' has no sentences");
  if (doc.reference.empty() || flatten(doc.reference).empty())
    throw Error("best_combination: document '" + doc.id + "' has an empty reference");
  if (max_k < 1) throw Error("best_combination: max_k must be at least 1");
  const SubsetScorer scorer(doc, GainMetric::rouge2());
  const std::size_t n = doc.sentences.size();

  std::vector<std::size_t> best_set;
  double best = -1.0;
  double previous_level = -1.0;
  OracleLabels labels;
  for (std::size_t k = 1; k <= std::min(max_k, n); ++k) {
    double level_best = -1.0;
    std::vector<std::size_t> level_set;
    detail::for_each_combination(n, k, [&](const std::vector<std::size_t>& combo) {
      const double v = scorer.value(combo);
      if (v > level_best + kTieTolerance) {
        level_best = v;
        level_set = combo;
      }
    });
    labels.searched_k = k;
    if (early_stop && k > 1 && level_best < previous_level - kTieTolerance) break;
    if (level_best > best + kTieTolerance) {
      best = level_best;
      best_set = level_set;
    }
    previous_level = level_best;
  }
  labels.selected = detail::greedy_order(scorer, best_set);
  labels.best_score = scorer.score(labels.selected, RougeVariant::rouge2());
  return labels;
}

// g(S_i) = r(prefix + {S_i}) - r(prefix) for every sentence outside the prefix;
// prefix positions hold 0.
inline std::vector<double> step_gains(const SubsetScorer& scorer, const std::vector<std::size_t>& prefix) {
  const std::size_t n = scorer.sentence_count();
  std::vector<bool> taken(n, false);
  for (std::size_t i : prefix) {
    if (i >= n) throw Error("step_gains: prefix index " + std::to_string(i) + " out of range");
    if (taken[i]) throw Error("step_gains: duplicate prefix index " + std::to_string(i));
    taken[i] = true;
  }
  const double base = scorer.value(prefix);
  std::vector<double> gains(n, 0.0);
  auto trial = prefix;
  trial.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (taken[i]) continue;
    trial.back() = i;
    gains[i] = scorer.value(trial) - base;
  }
  return gains;
}

inline std::vector<double> step_gains(const Document& doc, const std::vector<std::size_t>& prefix,
                                      const GainMetric& metric = GainMetric::rouge2()) {
  return step_gains(SubsetScorer(doc, metric), prefix);
}

// Min-max rescaling over unmasked entries (mask true = still selectable).
// Equal gains map to 1; masked entries are 0.
inline std::vector<double> minmax_normalize(const std::vector<double>& gains, const std::vector<bool>& mask) {
  if (gains.size() != mask.size()) throw ShapeError("minmax_normalize: gains and mask differ in length");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (!mask[i]) continue;
    lo = std::min(lo, gains[i]);
    hi = std::max(hi, gains[i]);
  }
  if (lo > hi) throw Error("minmax_normalize: every entry is masked");
  std::vector<double> out(gains.size(), 0.0);
  for (std::size_t i = 0; i < gains.size(); ++i)
    if (mask[i]) out[i] = hi > lo ? (gains[i] - lo) / (hi - lo) : 1.0;
  return out;
}

// Q_i = exp(tau g_i) / sum over unmasked exp(tau g_k); masked entries exactly 0.
inline std::vector<double> target_distribution(const std::vector<double>& normalized, const std::vector<bool>& mask,
                                               double tau = 20.0) {
  std::vector<double> scaled(normalized.size());
  for (std::size_t i = 0; i < normalized.size(); ++i) scaled[i] = tau * normalized[i];
  return masked_softmax(std::span<const double>(scaled), mask);
}

struct StepTargets {
  std::vector<double> gains;
  std::vector<double> normalized;
  std::vector<double> q;
  std::vector<bool> mask;  // false = already selected
  double tau = 20.0;
  std::size_t oracle_pick = 0;  // sentence the oracle extracts at this step
};

inline std::vector<StepTargets> build_training_targets(const Document& doc, const OracleLabels& labels,
                                                       const GainMetric& metric = GainMetric::rouge2(),
                                                       double tau = 20.0) {
  if (labels.selected.empty()) throw Error("build_training_targets: oracle for '" + doc.id + "' selected nothing");
  const SubsetScorer scorer(doc, metric);
  std::vector<StepTargets> steps;
  std::vector<std::size_t> prefix;
  for (std::size_t pick : labels.selected) {
    StepTargets st;
    st.tau = tau;
    st.oracle_pick = pick;
    st.mask.assign(doc.sentences.size(), true);
    for (std::size_t i : prefix) st.mask[i] = false;
    st.gains = step_gains(scorer, prefix);
    st.normalized = minmax_normalize(st.gains, st.mask);
    st.q = target_distribution(st.normalized, st.mask, tau);
    steps.push_back(std::move(st));
    prefix.push_back(pick);
  }
  return steps;
}

// One line of the labels file.
struct LabelRecord {
  std::string id;
  std::vector<std::size_t> selected;
  std::vector<std::vector<double>> q;
  double tau = 20.0;
  std::string variant = "rouge-2";

  // Rebuilds per-step training targets; masks follow from the selection prefix.
  std::vector<StepTargets> steps() const {
    std::vector<StepTargets> out;
    for (std::size_t t = 0; t < selected.size(); ++t) {
      StepTargets st;
      st.tau = tau;
      st.q = q.at(t);
      st.oracle_pick = selected[t];
      st.mask.assign(st.q.size(), true);
      for (std::size_t p = 0; p < t; ++p) st.mask.at(selected[p]) = false;
      out.push_back(std::move(st));
    }
    return out;
  }
};

inline LabelRecord make_label_record(const Document& doc, const OracleLabels& labels,
                                     const std::vector<StepTargets>& steps, const GainMetric& metric, double tau) {
  LabelRecord r;
  r.id = doc.id;
  r.selected = labels.selected;
  for (const auto& s : steps) r.q.push_back(s.q);
  r.tau = tau;
  r.variant = metric.name();
  return r;
}

inline nlohmann::json to_json(const LabelRecord& r) {
  return {{"id", r.id}, {"selected", r.selected}, {"q", r.q}, {"tau", r.tau}, {"variant", r.variant}};
}

inline LabelRecord label_from_json(const nlohmann::json& j, std::size_t line = 0) {
  try {
    LabelRecord r;
    r.id = j.at("id").get<std::string>();
    r.selected = j.at("selected").get<std::vector<std::size_t>>();
    r.q = j.at("q").get<std::vector<std::vector<double>>>();
    r.tau = j.at("tau").get<double>();
    r.variant = j.at("variant").get<std::string>();
    if (r.q.size() != r.selected.size()) throw ParseError("label '" + r.id + "': q has one row per selected sentence", line);
    for (const auto& row : r.q)
      for (std::size_t s : r.selected)
        if (s >= row.size()) throw ParseError("label '" + r.id + "': selected index out of range", line);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed label record: ") + e.what(), line);
  }
}

inline void save_labels(const std::string& path, const std::vector<LabelRecord>& records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write labels", path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<LabelRecord> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open labels", path);
  std::vector<LabelRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line);
    }
    out.push_back(label_from_json(j, line));
  }
  return out;
}

}  // namespace neusum
