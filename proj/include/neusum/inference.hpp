#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "neusum/corpus.hpp"
#include "neusum/model.hpp"
#include "neusum/rouge.hpp"

namespace neusum {

struct Extraction {
  std::string id;
  std::vector<std::size_t> selected;  // extraction order
  std::vector<double> scores;         // score of the picked sentence at each step

  bool operator==(const Extraction&) const = default;
};

// Greedy joint scoring and selection: at each step take the highest-scoring
// unselected sentence (lowest index on ties) and feed it back to the extractor.
inline Extraction extract(const ModelParams& params, const EncodedDoc& doc, std::size_t budget = 3,
                          std::string id = {}) {
  Extraction out;
  out.id = std::move(id);
  if (doc.empty() || budget == 0) return out;
  Tape tape;
  BoundModel m(tape, params);
  Rng unused(0);
  const EncodedDocument enc = encode_document(m, doc, false, unused);
  ExtractorState st = init_extractor(m, enc);
  Var prev = zero_sentence(m);
  const std::size_t steps = std::min(budget, doc.size());
  for (std::size_t t = 0; t < steps; ++t) {
    const Tensor& delta = score_step(m, st, prev).value();
    std::size_t best = doc.size();
    for (std::size_t i = 0; i < doc.size(); ++i)
      if (st.mask[i] && (best == doc.size() || delta[i] > delta[best])) best = i;
    st.mask[best] = false;
    st.selected.push_back(best);
    out.selected.push_back(best);
    out.scores.push_back(delta[best]);
    prev = enc.sentences[best];
  }
  return out;
}

inline Extraction lead3(const Document& doc, std::size_t budget = 3) {
  Extraction out;
  out.id = doc.id;
  for (std::size_t i = 0; i < std::min(budget, doc.sentences.size()); ++i) out.selected.push_back(i);
  return out;
}

inline Sentences selected_sentences(const Document& doc, const std::vector<std::size_t>& selected) {
  std::vector<std::size_t> sorted = selected;
  std::sort(sorted.begin(), sorted.end());
  Sentences out;
  for (std::size_t i : sorted) {
    if (i >= doc.sentences.size())
      throw Error("extraction for '" + doc.id + "' selects sentence " + std::to_string(i) + " of " +
                  std::to_string(doc.sentences.size()));
    out.push_back(doc.sentences[i]);
  }
  return out;
}

struct EvalOptions {
  bool stemming = true;
  std::size_t max_position = 30;  // histogram positions 1..max_position, rest in overflow
};

struct EvalReport {
  std::size_t documents = 0;
  double rouge1 = 0.0;  // corpus-mean F1
  double rouge2 = 0.0;
  double rougeL = 0.0;
  std::vector<double> precision_at;       // p(@t), t = 1..longest extraction; empty without oracles
  std::vector<std::size_t> extracted_at;  // documents with a step-t pick (the p(@t) denominator)
  std::vector<std::size_t> histogram;     // histogram[k] counts picks at position k + 1
  std::size_t overflow = 0;

  // Share of all picks that fall in the first `k` positions.
  double leading_share(std::size_t k) const {
    std::size_t lead = 0, total = overflow;
    for (std::size_t i = 0; i < histogram.size(); ++i) {
      total += histogram[i];
      if (i < k) lead += histogram[i];
    }
    return total ? static_cast<double>(lead) / static_cast<double>(total) : 0.0;
  }
};

using OracleSets = std::unordered_map<std::string, std::vector<std::size_t>>;

// Corpus-mean ROUGE-1/2/L F1 of each extraction against its reference,
// precision at step t against the oracle sets (when given, over documents
// whose extraction reaches step t), and the
// position distribution of all picks.
inline EvalReport evaluate(const std::vector<Extraction>& extractions, const std::vector<Document>& corpus,
                           const OracleSets* oracles = nullptr, const EvalOptions& opts = {}) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : corpus) by_id[d.id] = &d;
  EvalReport report;
  report.histogram.assign(opts.max_position, 0);
  std::size_t longest = 0;
  for (const auto& e : extractions) longest = std::max(longest, e.selected.size());
  std::vector<std::size_t> hits(oracles ? longest : 0, 0);
  std::vector<std::size_t>& reached = report.extracted_at;
  reached.assign(longest, 0);

  for (const auto& e : extractions) {
    auto it = by_id.find(e.id);
    if (it == by_id.end()) throw Error("evaluate: extraction id '" + e.id + "' is not in the corpus");
    const Document& doc = *it->second;
    const Sentences cand = selected_sentences(doc, e.selected);
    report.rouge1 += score_summary(cand, doc.reference, RougeVariant::rouge1(opts.stemming)).f1;
    report.rouge2 += score_summary(cand, doc.reference, RougeVariant::rouge2(opts.stemming)).f1;
    report.rougeL += score_summary(cand, doc.reference, RougeVariant::rougeL(opts.stemming)).f1;
    for (std::size_t idx : e.selected) {
      if (idx < opts.max_position)
        ++report.histogram[idx];
      else
        ++report.overflow;
    }
    if (oracles) {
      auto o = oracles->find(e.id);
      if (o == oracles->end()) throw Error("evaluate: no oracle labels for document '" + e.id + "'");
      const std::unordered_set<std::size_t> gold(o->second.begin(), o->second.end());
      for (std::size_t t = 0; t < e.selected.size(); ++t)
        if (gold.count(e.selected[t])) ++hits[t];
    }
    for (std::size_t t = 0; t < e.selected.size(); ++t) ++reached[t];
    ++report.documents;
  }
  if (report.documents) {
    const double n = static_cast<double>(report.documents);
    report.rouge1 /= n;
    report.rouge2 /= n;
    report.rougeL /= n;
    for (std::size_t t = 0; t < hits.size(); ++t)
      report.precision_at.push_back(static_cast<double>(hits[t]) / static_cast<double>(reached[t]));
  }
  return report;
}

inline nlohmann::json to_json(const Extraction& e) {
  return {{"id", e.id}, {"selected", e.selected}, {"scores", e.scores}};
}

inline void save_extractions(const std::string& path, const std::vector<Extraction>& xs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write extractions", path);
  for (const auto& e : xs) out << to_json(e).dump() << '\n';
}

inline std::vector<Extraction> load_extractions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open extractions", path);
  std::vector<Extraction> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(text);
      Extraction e;
      e.id = j.at("id").get<std::string>();
      e.selected = j.at("selected").get<std::vector<std::size_t>>();
      e.scores = j.value("scores", std::vector<double>{});
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("malformed extraction: ") + ex.what(), line);
    }
  }
  return out;
}

inline nlohmann::json to_json(const EvalReport& r) {
  return {{"documents", r.documents},
          {"rouge_1_f1", r.rouge1},
          {"rouge_2_f1", r.rouge2},
          {"rouge_l_f1", r.rougeL},
          {"precision_at", r.precision_at},
          {"extracted_at", r.extracted_at},
          {"histogram", r.histogram},
          {"overflow", r.overflow},
          {"leading_3_share", r.leading_share(3)}};
}

// position,count rows (1-based), then an "overflow" row.
inline std::string histogram_csv(const EvalReport& r) {
  std::string out = "position,count\n";
  for (std::size_t i = 0; i < r.histogram.size(); ++i)
    out += std::to_string(i + 1) + "," + std::to_string(r.histogram[i]) + "\n";
  out += "overflow," + std::to_string(r.overflow) + "\n";
  return out;
}

}  // namespace neusum
