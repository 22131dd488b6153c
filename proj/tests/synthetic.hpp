#pragma once

// Synthetic corpora for end-to-end checks.

#include <string>
#include <vector>

#include "neusum/corpus.hpp"
#include "neusum/random.hpp"

namespace neusum::test {

// Filler sentences plus one or two sentences carrying the token "marker";
// the reference is the marker sentences verbatim.
inline std::vector<Document> marker_corpus(std::size_t n, std::uint64_t seed, const std::string& prefix = "m") {
  Rng rng(seed);
  std::vector<std::string> filler;
  for (int i = 0; i < 30; ++i) filler.push_back("w" + std::to_string(i));
  auto word = [&] { return filler[rng.next() % filler.size()]; };
  std::vector<Document> docs;
  for (std::size_t d = 0; d < n; ++d) {
    Document doc;
    doc.id = prefix + std::to_string(d);
    const std::size_t len = 4 + rng.next() % 5;
    const std::size_t markers = 1 + rng.next() % 2;
    std::vector<bool> is_marker(len, false);
    for (std::size_t k = 0; k < markers;) {
      const std::size_t at = rng.next() % len;
      if (!is_marker[at]) {
        is_marker[at] = true;
        ++k;
      }
    }
    for (std::size_t s = 0; s < len; ++s) {
      Tokens t;
      const std::size_t words = 4 + rng.next() % 4;
      for (std::size_t w = 0; w < words; ++w) t.push_back(word());
      if (is_marker[s]) {
        t[rng.next() % t.size()] = "marker";
        doc.reference.push_back(t);
      }
      doc.sentences.push_back(std::move(t));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

// Documents whose reference copies words from the leading sentences with
// high probability, so oracle picks cluster near the start.
inline std::vector<Document> lead_biased_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Document> docs;
  for (std::size_t d = 0; d < n; ++d) {
    Document doc;
    doc.id = "lead" + std::to_string(d);
    const std::size_t len = 5 + rng.next() % 20;
    for (std::size_t s = 0; s < len; ++s) {
      Tokens t;
      const std::size_t words = 3 + rng.next() % 5;
      for (std::size_t w = 0; w < words; ++w) t.push_back("t" + std::to_string(rng.next() % 60));
      doc.sentences.push_back(std::move(t));
    }
    Tokens ref;
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t src = rng.uniform() < 0.8 ? rng.next() % std::min<std::size_t>(3, len) : rng.next() % len;
      const Tokens& s = doc.sentences[src];
      ref.insert(ref.end(), s.begin(), s.begin() + static_cast<std::ptrdiff_t>(1 + s.size() / 2));
    }
    doc.reference.push_back(ref);
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace neusum::test
