#pragma once

// Corpus ingestion: JSON Lines documents, truncation, vocabulary and
// integer encoding, plus plain-text embedding tables.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "neusum/error.hpp"
#include "neusum/random.hpp"
#include "neusum/tensor.hpp"

namespace neusum {

using Tokens = std::vector<std::string>;
using Sentences = std::vector<Tokens>;

struct Document {
  std::string id;
  Sentences sentences;  // article, in order
  Sentences reference;  // abstractive summary

  bool operator==(const Document&) const = default;
};

inline Tokens tokenize(const std::string& text, bool lowercase = true) {
  Tokens out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    if (lowercase)
      std::transform(tok.begin(), tok.end(), tok.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    out.push_back(std::move(tok));
  }
  return out;
}

struct LoadedCorpus {
  std::vector<Document> documents;
  std::size_t skipped_empty = 0;  // lines whose document array had no tokens
};

namespace detail {
inline Sentences parse_sentences(const nlohmann::json& arr, const char* field, std::size_t line, bool lowercase) {
  if (!arr.is_array()) throw ParseError(std::string("field '") + field + "' must be an array of strings", line);
  Sentences out;
  for (const auto& s : arr) {
    if (!s.is_string()) throw ParseError(std::string("field '") + field + "' must contain only strings", line);
    Tokens toks = tokenize(s.get<std::string>(), lowercase);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}
}  // namespace detail

inline Document parse_document_line(const std::string& text, std::size_t line, bool lowercase = true) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line);
  }
  if (!j.is_object()) throw ParseError("expected a JSON object", line);
  for (const char* f : {"id", "document", "summary"})
    if (!j.contains(f)) throw ParseError(std::string("missing field '") + f + "'", line);
  Document doc;
  if (j["id"].is_string())
    doc.id = j["id"].get<std::string>();
  else if (j["id"].is_number_integer())
    doc.id = std::to_string(j["id"].get<long long>());
  else
    throw ParseError("field 'id' must be a string", line);
  doc.sentences = detail::parse_sentences(j["document"], "document", line, lowercase);
  doc.reference = detail::parse_sentences(j["summary"], "summary", line, lowercase);
  return doc;
}

inline LoadedCorpus read_corpus(std::istream& in, bool lowercase = true) {
  LoadedCorpus out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Document doc = parse_document_line(text, line, lowercase);
    if (doc.sentences.empty()) {
      ++out.skipped_empty;
      continue;
    }
    out.documents.push_back(std::move(doc));
  }
  return out;
}

inline LoadedCorpus load_corpus(const std::string& path, bool lowercase = true) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus", path);
  return read_corpus(in, lowercase);
}

inline nlohmann::json document_to_json(const Document& doc) {
  auto join = [](const Sentences& ss) {
    std::vector<std::string> out;
    for (const auto& s : ss) {
      std::string line;
      for (std::size_t i = 0; i < s.size(); ++i) line += (i ? " " : "") + s[i];
      out.push_back(std::move(line));
    }
    return out;
  };
  return {{"id", doc.id}, {"document", join(doc.sentences)}, {"summary", join(doc.reference)}};
}

inline void save_corpus(const std::string& path, const std::vector<Document>& docs) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus", path);
  for (const auto& d : docs) out << document_to_json(d).dump() << '\n';
}

inline Document truncate(const Document& doc, std::size_t max_sentences = 80, std::size_t max_words = 100) {
  if (max_sentences < 1 || max_words < 1) throw Error("truncate: caps must be at least 1");
  Document out;
  out.id = doc.id;
  out.reference = doc.reference;
  const std::size_t keep = std::min(max_sentences, doc.sentences.size());
  out.sentences.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    const Tokens& s = doc.sentences[i];
    out.sentences.emplace_back(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(std::min(max_words, s.size())));
  }
  return out;
}

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::size_t kSpecials = 2;

  Vocabulary() : token_of_{"<pad>", "<unk>"} {}

  // Appends a non-special token; duplicates are rejected.
  int add(const std::string& token) {
    if (id_of_.count(token) || token == token_of_[kPad] || token == token_of_[kUnk])
      throw Error("vocabulary: duplicate token '" + token + "'");
    const int id = static_cast<int>(token_of_.size());
    token_of_.push_back(token);
    id_of_.emplace(token, id);
    return id;
  }

  int id(const std::string& token) const {
    auto it = id_of_.find(token);
    return it == id_of_.end() ? kUnk : it->second;
  }
  bool contains(const std::string& token) const { return id_of_.count(token) != 0; }
  const std::string& token(int id) const { return token_of_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return token_of_.size(); }
  // Non-special tokens, in id order.
  std::vector<std::string> tokens() const { return {token_of_.begin() + kSpecials, token_of_.end()}; }

  // FNV-1a over the token list; ties checkpoints to the vocabulary they were trained with.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (const auto& t : token_of_) {
      for (unsigned char c : t) {
        h ^= c;
        h *= 1099511628211ULL;
      }
      h ^= 0xff;
      h *= 1099511628211ULL;
    }
    return h;
  }

  bool operator==(const Vocabulary& other) const { return token_of_ == other.token_of_; }

 private:
  std::unordered_map<std::string, int> id_of_;
  std::vector<std::string> token_of_;
};

// Ranks article tokens by frequency (ties lexicographic) and keeps the top_k.
inline Vocabulary build_vocab(const std::vector<Document>& corpus, std::size_t top_k = 100000) {
  if (top_k < 1) throw Error("build_vocab: top_k must be at least 1");
  if (corpus.empty()) throw Error("build_vocab: empty corpus");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : corpus)
    for (const auto& s : doc.sentences)
      for (const auto& t : s) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);
  Vocabulary vocab;
  for (const auto& [tok, n] : ranked) vocab.add(tok);
  return vocab;
}

// One token per line; line k (1-based) holds id k - 1 + specials.
inline void save_vocab(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write vocabulary", path);
  for (const auto& t : vocab.tokens()) out << t << '\n';
}

inline Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary", path);
  Vocabulary vocab;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw ParseError("empty token in vocabulary " + path, n);
    try {
      vocab.add(line);
    } catch (const Error& e) {
      throw ParseError(e.what(), n);
    }
  }
  return vocab;
}

using EncodedDoc = std::vector<std::vector<int>>;

inline EncodedDoc encode(const Document& doc, const Vocabulary& vocab) {
  EncodedDoc out;
  out.reserve(doc.sentences.size());
  for (const auto& s : doc.sentences) {
    std::vector<int> ids;
    ids.reserve(s.size());
    for (const auto& t : s) ids.push_back(vocab.id(t));
    out.push_back(std::move(ids));
  }
  return out;
}

inline Sentences decode(const EncodedDoc& ids, const Vocabulary& vocab) {
  Sentences out;
  for (const auto& s : ids) {
    Tokens toks;
    for (int id : s) toks.push_back(vocab.token(id));
    out.push_back(std::move(toks));
  }
  return out;
}

struct EmbeddingTable {
  Tensor matrix;  // |V| x E
  bool frozen = true;
  double coverage = 0.0;  // fraction of non-special vocabulary rows read from file
};

inline EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& rng) {
  return EmbeddingTable{xavier_gaussian({vocab.size(), dim}, rng), true, 0.0};
}

// Reads "token v1 ... v_dim" lines. Rows for tokens not in the file keep
// their Xavier initialization.
inline EmbeddingTable read_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t dim, Rng& rng) {
  EmbeddingTable table = random_embeddings(vocab, dim, rng);
  std::vector<bool> seen(vocab.size(), false);
  std::string line;
  std::size_t n = 0;
  std::size_t covered = 0;
  while (std::getline(in, line)) {
    ++n;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> values;
    std::string field;
    while (ls >> field) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (end == field.c_str() || *end != '\0')
        throw ParseError("non-numeric embedding value for token '" + token + "'", n);
      values.push_back(v);
    }
    if (values.size() != dim)
      throw ParseError("embedding for token '" + token + "' has " + std::to_string(values.size()) +
                           " values, expected " + std::to_string(dim),
                       n);
    if (!vocab.contains(token)) continue;
    const auto id = static_cast<std::size_t>(vocab.id(token));
    std::copy(values.begin(), values.end(), table.matrix.row(id).begin());
    if (!seen[id]) {
      seen[id] = true;
      ++covered;
    }
  }
  const std::size_t real = vocab.size() - Vocabulary::kSpecials;
  table.coverage = real ? static_cast<double>(covered) / static_cast<double>(real) : 0.0;
  return table;
}

inline EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, std::size_t dim, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open embeddings", path);
  return read_embeddings(in, vocab, dim, rng);
}

}  // namespace neusum
