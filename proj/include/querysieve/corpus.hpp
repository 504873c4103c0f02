#pragma once

// Similarity backends trained from a local plain-text corpus:
//  * CooccurrenceModel: positive-PMI context vectors over a symmetric token
//    window, compared by cosine (the distributional word similarity).
//  * DocumentIndex: token -> document postings, supplying the hit counts
//    used by the normalized hit-count distance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "querysieve/error.hpp"
#include "querysieve/text.hpp"

namespace querysieve {

using TokenId = std::uint32_t;
using DocId = std::uint32_t;

inline constexpr int kDefaultCooccurrenceWindow = 3;
inline constexpr int kDefaultMinCount = 2;

struct ContextWeight {
  TokenId context = 0;
  double weight = 0.0;

  friend bool operator==(const ContextWeight&, const ContextWeight&) = default;
};

/// Raw token and pair counts. Counting may be split across document
/// partitions and merged; all counts are integers, so the merged totals do
/// not depend on how the documents were partitioned.
class CooccurrenceCounts {
 public:
  explicit CooccurrenceCounts(int window) : window_(window) {
    if (window < 1) throw UsageError("co-occurrence window must be >= 1");
  }

  int window() const noexcept { return window_; }
  std::size_t documents() const noexcept { return documents_; }

  void add_document(std::string_view text) { add_tokens(tokenize(text)); }

  void add_tokens(const std::vector<std::string>& tokens) {
    ++documents_;
    std::vector<std::uint32_t> ids;
    ids.reserve(tokens.size());
    for (const std::string& t : tokens) {
      const std::uint32_t id = intern(t);
      ++frequency_[id];
      ids.push_back(id);
    }
    const std::size_t w = static_cast<std::size_t>(window_);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const std::size_t last = std::min(ids.size(), i + w + 1);
      for (std::size_t j = i + 1; j < last; ++j) {
        ++pairs_[key(ids[i], ids[j])];
        ++pairs_[key(ids[j], ids[i])];
      }
    }
  }

  void merge(const CooccurrenceCounts& other) {
    if (other.window_ != window_)
      throw UsageError("cannot merge counts built with different windows");
    documents_ += other.documents_;
    std::vector<std::uint32_t> remap(other.tokens_.size());
    for (std::size_t i = 0; i < other.tokens_.size(); ++i) remap[i] = intern(other.tokens_[i]);
    for (std::size_t i = 0; i < other.frequency_.size(); ++i)
      frequency_[remap[i]] += other.frequency_[i];
    for (const auto& [k, c] : other.pairs_) {
      const auto a = static_cast<std::uint32_t>(k >> 32);
      const auto b = static_cast<std::uint32_t>(k & 0xffffffffu);
      pairs_[key(remap[a], remap[b])] += c;
    }
  }

  std::uint64_t frequency(std::string_view token) const {
    const auto it = ids_.find(std::string(token));
    return it == ids_.end() ? 0 : frequency_[it->second];
  }

  std::uint64_t pair_count(std::string_view a, std::string_view b) const {
    const auto ia = ids_.find(std::string(a));
    const auto ib = ids_.find(std::string(b));
    if (ia == ids_.end() || ib == ids_.end()) return 0;
    const auto it = pairs_.find(key(ia->second, ib->second));
    return it == pairs_.end() ? 0 : it->second;
  }

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::unordered_map<std::uint64_t, std::uint64_t>& pairs() const noexcept { return pairs_; }
  std::uint64_t frequency_by_local_id(std::uint32_t id) const { return frequency_[id]; }

 private:
  static std::uint64_t key(std::uint32_t a, std::uint32_t b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }

  std::uint32_t intern(const std::string& token) {
    const auto [it, inserted] =
        ids_.try_emplace(token, static_cast<std::uint32_t>(tokens_.size()));
    if (inserted) {
      tokens_.push_back(token);
      frequency_.push_back(0);
    }
    return it->second;
  }

  int window_;
  std::size_t documents_ = 0;
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> frequency_;
  std::unordered_map<std::uint64_t, std::uint64_t> pairs_;
};

class CooccurrenceModel {
 public:
  CooccurrenceModel() = default;

  /// Assembles a model from sorted per-token vectors; validates invariants.
  CooccurrenceModel(int window, int min_count, std::vector<std::string> tokens,
                    std::vector<std::vector<ContextWeight>> vectors)
      : window_(window),
        min_count_(min_count),
        tokens_(std::move(tokens)),
        vectors_(std::move(vectors)) {
    if (tokens_.size() != vectors_.size())
      throw InvariantError("co-occurrence model: token/vector count mismatch");
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!vocabulary_.emplace(tokens_[i], static_cast<TokenId>(i)).second)
        throw InvariantError("co-occurrence model: duplicate token '" + tokens_[i] + "'");
    }
    norms_.reserve(vectors_.size());
    for (const auto& vec : vectors_) {
      double sq = 0.0;
      for (std::size_t j = 0; j < vec.size(); ++j) {
        if (!(vec[j].weight >= 0.0) || !std::isfinite(vec[j].weight))
          throw InvariantError("co-occurrence model: negative or non-finite weight");
        if (vec[j].context >= tokens_.size())
          throw InvariantError("co-occurrence model: context id out of range");
        if (j > 0 && vec[j - 1].context >= vec[j].context)
          throw InvariantError("co-occurrence model: context ids not strictly increasing");
        sq += vec[j].weight * vec[j].weight;
      }
      norms_.push_back(std::sqrt(sq));
    }
  }

  int window() const noexcept { return window_; }
  int min_count() const noexcept { return min_count_; }
  std::size_t vocabulary_size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::optional<TokenId> id(std::string_view token) const {
    const auto it = vocabulary_.find(std::string(token));
    if (it == vocabulary_.end()) return std::nullopt;
    return it->second;
  }

  std::span<const ContextWeight> vector(TokenId id) const { return vectors_.at(id); }
  double norm(TokenId id) const { return norms_.at(id); }

  /// Weight of `context` in the vector of `token`; 0 when absent.
  double weight(std::string_view token, std::string_view context) const {
    const auto t = id(token);
    const auto c = id(context);
    if (!t || !c) return 0.0;
    const auto& vec = vectors_[*t];
    const auto it = std::lower_bound(vec.begin(), vec.end(), *c,
                                     [](const ContextWeight& e, TokenId v) { return e.context < v; });
    return (it != vec.end() && it->context == *c) ? it->weight : 0.0;
  }

  /// Cosine of two token ids' vectors, clamped to [0, 1].
  double cosine(TokenId a, TokenId b) const {
    if (a == b) return 1.0;
    const double na = norms_[a];
    const double nb = norms_[b];
    if (na == 0.0 || nb == 0.0) return 0.0;
    // Merge in ascending context order; identical for (a, b) and (b, a).
    const auto& va = vectors_[a];
    const auto& vb = vectors_[b];
    double dot = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < va.size() && j < vb.size()) {
      if (va[i].context < vb[j].context) {
        ++i;
      } else if (vb[j].context < va[i].context) {
        ++j;
      } else {
        dot += va[i].weight * vb[j].weight;
        ++i;
        ++j;
      }
    }
    const double c = dot / (na * nb);
    return std::clamp(c, 0.0, 1.0);
  }

  friend bool operator==(const CooccurrenceModel& a, const CooccurrenceModel& b) {
    return a.window_ == b.window_ && a.min_count_ == b.min_count_ &&
           a.tokens_ == b.tokens_ && a.vectors_ == b.vectors_;
  }

 private:
  int window_ = kDefaultCooccurrenceWindow;
  int min_count_ = kDefaultMinCount;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> vocabulary_;
  std::vector<std::vector<ContextWeight>> vectors_;
  std::vector<double> norms_;
};

/// PPMI model from accumulated counts. Tokens with corpus frequency below
/// `min_count` are dropped, together with every pair they take part in,
/// before probabilities are estimated:
///   weight(w, c) = max(0, log(p(w, c) / (p(w) p(c))))
/// with p(w, c) = n(w, c) / T, p(w) = sum_c n(w, c) / T over retained pairs.
inline CooccurrenceModel build_cooccurrence_model(const CooccurrenceCounts& counts,
                                                  int min_count) {
  if (min_count < 1) throw UsageError("min_count must be >= 1");
  if (counts.documents() == 0) throw InputError("corpus is empty");

  const auto& local_tokens = counts.tokens();
  std::vector<std::uint32_t> retained;
  for (std::uint32_t i = 0; i < local_tokens.size(); ++i)
    if (counts.frequency_by_local_id(i) >= static_cast<std::uint64_t>(min_count))
      retained.push_back(i);
  if (retained.empty())
    throw InputError("no token reaches min_count = " + std::to_string(min_count));

  std::sort(retained.begin(), retained.end(), [&](std::uint32_t a, std::uint32_t b) {
    return local_tokens[a] < local_tokens[b];
  });
  constexpr std::uint32_t kDropped = 0xffffffffu;
  std::vector<std::uint32_t> final_id(local_tokens.size(), kDropped);
  std::vector<std::string> tokens;
  tokens.reserve(retained.size());
  for (std::uint32_t i = 0; i < retained.size(); ++i) {
    final_id[retained[i]] = i;
    tokens.push_back(local_tokens[retained[i]]);
  }

  std::vector<std::vector<std::pair<TokenId, std::uint64_t>>> rows(tokens.size());
  std::vector<std::uint64_t> row_sum(tokens.size(), 0);
  std::uint64_t total = 0;
  for (const auto& [k, c] : counts.pairs()) {
    const std::uint32_t a = final_id[static_cast<std::uint32_t>(k >> 32)];
    const std::uint32_t b = final_id[static_cast<std::uint32_t>(k & 0xffffffffu)];
    if (a == kDropped || b == kDropped) continue;
    rows[a].emplace_back(b, c);
    row_sum[a] += c;
    total += c;
  }

  std::vector<std::vector<ContextWeight>> vectors(tokens.size());
  const double t = static_cast<double>(total);
  for (std::size_t w = 0; w < rows.size(); ++w) {
    auto& row = rows[w];
    std::sort(row.begin(), row.end());
    for (const auto& [c, n] : row) {
      const double ratio = static_cast<double>(n) * t /
                           (static_cast<double>(row_sum[w]) * static_cast<double>(row_sum[c]));
      const double pmi = std::log(ratio);
      if (pmi > 0.0) vectors[w].push_back({c, pmi});
    }
  }
  return CooccurrenceModel(counts.window(), min_count, std::move(tokens), std::move(vectors));
}

inline CooccurrenceModel build_cooccurrence_model(const std::vector<std::string>& corpus,
                                                  int window = kDefaultCooccurrenceWindow,
                                                  int min_count = kDefaultMinCount) {
  if (corpus.empty()) throw InputError("corpus is empty");
  if (min_count < 1) throw UsageError("min_count must be >= 1");
  CooccurrenceCounts counts(window);
  for (const std::string& doc : corpus) counts.add_document(doc);
  return build_cooccurrence_model(counts, min_count);
}

/// Distributional similarity of two tokens in [0, 1]. Equal tokens (after
/// trimming and casefolding) score 1 even when out of vocabulary; otherwise
/// an out-of-vocabulary token or an empty vector scores 0.
inline double word_similarity(const CooccurrenceModel& model, std::string_view w1,
                              std::string_view w2) {
  const std::string a = casefold(trim(w1));
  const std::string b = casefold(trim(w2));
  if (a == b) return 1.0;
  const auto ia = model.id(a);
  const auto ib = model.id(b);
  if (!ia || !ib) return 0.0;
  return model.cosine(*ia, *ib);
}

class DocumentIndex {
 public:
  DocumentIndex() = default;

  DocumentIndex(std::size_t doc_count, std::unordered_map<std::string, std::vector<DocId>> postings)
      : doc_count_(doc_count), postings_(std::move(postings)) {
    if (doc_count_ == 0) throw InvariantError("document index: no documents");
    for (const auto& [term, docs] : postings_) {
      for (std::size_t i = 0; i < docs.size(); ++i) {
        if (docs[i] >= doc_count_)
          throw InvariantError("document index: id out of range for '" + term + "'");
        if (i > 0 && docs[i - 1] >= docs[i])
          throw InvariantError("document index: postings for '" + term +
                               "' not strictly increasing");
      }
    }
  }

  std::size_t doc_count() const noexcept { return doc_count_; }
  std::size_t term_count() const noexcept { return postings_.size(); }

  std::span<const DocId> postings(std::string_view term) const {
    const auto it = postings_.find(std::string(term));
    if (it == postings_.end()) return {};
    return it->second;
  }

  const std::unordered_map<std::string, std::vector<DocId>>& all_postings() const noexcept {
    return postings_;
  }

  friend bool operator==(const DocumentIndex&, const DocumentIndex&) = default;

 private:
  std::size_t doc_count_ = 0;
  std::unordered_map<std::string, std::vector<DocId>> postings_;
};

inline DocumentIndex build_document_index(const std::vector<std::string>& corpus) {
  if (corpus.empty()) throw InputError("corpus is empty");
  std::unordered_map<std::string, std::vector<DocId>> postings;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    for (std::string& tok : tokenize(corpus[d])) {
      auto& list = postings[std::move(tok)];
      // Documents are visited in increasing order, so a repeat is always last.
      if (list.empty() || list.back() != d) list.push_back(static_cast<DocId>(d));
    }
  }
  return DocumentIndex(corpus.size(), std::move(postings));
}

/// Number of documents containing every term; an empty term set yields N.
template <typename Range>
std::size_t hit_count(const DocumentIndex& index, const Range& terms) {
  std::vector<std::span<const DocId>> lists;
  for (const auto& term : terms) {
    lists.push_back(index.postings(casefold(trim(term))));
    if (lists.back().empty()) return 0;
  }
  if (lists.empty()) return index.doc_count();
  std::sort(lists.begin(), lists.end(),
            [](auto a, auto b) { return a.size() < b.size(); });
  std::vector<DocId> acc(lists[0].begin(), lists[0].end());
  std::vector<DocId> next;
  for (std::size_t i = 1; i < lists.size() && !acc.empty(); ++i) {
    next.clear();
    std::set_intersection(acc.begin(), acc.end(), lists[i].begin(), lists[i].end(),
                          std::back_inserter(next));
    acc.swap(next);
  }
  return acc.size();
}

inline std::size_t hit_count(const DocumentIndex& index,
                             std::initializer_list<std::string_view> terms) {
  return hit_count(index, std::vector<std::string_view>(terms));
}

// ---------------------------------------------------------------------------
// Corpus input

enum class CorpusMode { Lines, Directory };

/// One document per non-blank line.
inline std::vector<std::string> read_corpus_lines(std::istream& in) {
  std::vector<std::string> docs;
  for (std::string& line : read_lines(in))
    if (!trim(line).empty()) docs.push_back(std::move(line));
  return docs;
}

inline std::vector<std::string> load_corpus(const std::filesystem::path& path, CorpusMode mode) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw InputError("corpus not found: " + path.string());
  std::vector<std::string> docs;
  if (mode == CorpusMode::Lines) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open corpus file: " + path.string());
    docs = read_corpus_lines(in);
  } else {
    if (!fs::is_directory(path))
      throw InputError("corpus path is not a directory: " + path.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(path))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      std::ostringstream ss;
      ss << in.rdbuf();
      docs.push_back(ss.str());
    }
  }
  if (docs.empty()) throw InputError("corpus is empty: " + path.string());
  return docs;
}

// ---------------------------------------------------------------------------
// Serialization (plain text, versioned magic header)
//
//   querysieve-cooccurrence 1
//   window <w>
//   min_count <m>
//   tokens <V>
//   <token> <nnz> <context_id>:<weight> ...      (V lines; line i is id i)
//
//   querysieve-index 1
//   documents <N>
//   terms <T>
//   <token> <df> <doc_id> ...                    (T lines, tokens sorted)

inline constexpr std::string_view kModelMagic = "querysieve-cooccurrence 1";
inline constexpr std::string_view kIndexMagic = "querysieve-index 1";

inline void write_model(std::ostream& out, const CooccurrenceModel& model) {
  out << kModelMagic << '\n'
      << "window " << model.window() << '\n'
      << "min_count " << model.min_count() << '\n'
      << "tokens " << model.vocabulary_size() << '\n';
  for (TokenId i = 0; i < model.vocabulary_size(); ++i) {
    const auto vec = model.vector(i);
    out << model.tokens()[i] << ' ' << vec.size();
    for (const ContextWeight& e : vec) out << ' ' << e.context << ':' << format_double(e.weight);
    out << '\n';
  }
}

namespace detail {

inline std::size_t expect_header_value(const std::vector<std::string>& lines, std::size_t i,
                                       std::string_view key, const std::string& source) {
  if (i >= lines.size()) throw ParseError(source, i + 1, "missing '" + std::string(key) + "' line");
  const auto fields = split_ws(lines[i]);
  if (fields.size() != 2 || fields[0] != key)
    throw ParseError(source, i + 1, "expected '" + std::string(key) + " <value>'");
  const auto v = parse_int<std::size_t>(fields[1]);
  if (!v) throw ParseError(source, i + 1, "malformed value for '" + std::string(key) + "'");
  return *v;
}

}  // namespace detail

inline CooccurrenceModel read_model(const std::vector<std::string>& lines,
                                    const std::string& source = {}) {
  if (lines.empty() || trim(lines[0]) != kModelMagic)
    throw ParseError(source, 1, "not a co-occurrence model (bad magic header)");
  const std::size_t window = detail::expect_header_value(lines, 1, "window", source);
  const std::size_t min_count = detail::expect_header_value(lines, 2, "min_count", source);
  const std::size_t v = detail::expect_header_value(lines, 3, "tokens", source);
  if (lines.size() < 4 + v) throw ParseError(source, lines.size(), "truncated model");
  std::vector<std::string> tokens;
  std::vector<std::vector<ContextWeight>> vectors;
  tokens.reserve(v);
  vectors.reserve(v);
  for (std::size_t i = 0; i < v; ++i) {
    const std::size_t line_no = 5 + i;
    const auto fields = split_ws(lines[4 + i]);
    if (fields.size() < 2) throw ParseError(source, line_no, "expected '<token> <nnz> ...'");
    const auto nnz = parse_int<std::size_t>(fields[1]);
    if (!nnz || fields.size() != 2 + *nnz) throw ParseError(source, line_no, "bad entry count");
    std::vector<ContextWeight> vec;
    vec.reserve(*nnz);
    for (std::size_t j = 0; j < *nnz; ++j) {
      const std::string_view f = fields[2 + j];
      const std::size_t colon = f.find(':');
      const auto ctx = colon == std::string_view::npos ? std::nullopt
                                                      : parse_int<TokenId>(f.substr(0, colon));
      const auto w = colon == std::string_view::npos ? std::nullopt
                                                    : parse_double(f.substr(colon + 1));
      if (!ctx || !w) throw ParseError(source, line_no, "malformed entry '" + std::string(f) + "'");
      vec.push_back({*ctx, *w});
    }
    tokens.emplace_back(fields[0]);
    vectors.push_back(std::move(vec));
  }
  try {
    return CooccurrenceModel(static_cast<int>(window), static_cast<int>(min_count),
                             std::move(tokens), std::move(vectors));
  } catch (const InvariantError& e) {
    throw ParseError(source, 0, e.what());
  }
}

inline void write_index(std::ostream& out, const DocumentIndex& index) {
  std::vector<const std::string*> terms;
  terms.reserve(index.term_count());
  for (const auto& [t, _] : index.all_postings()) terms.push_back(&t);
  std::sort(terms.begin(), terms.end(), [](auto a, auto b) { return *a < *b; });
  out << kIndexMagic << '\n'
      << "documents " << index.doc_count() << '\n'
      << "terms " << terms.size() << '\n';
  for (const std::string* t : terms) {
    const auto docs = index.postings(*t);
    out << *t << ' ' << docs.size();
    for (DocId d : docs) out << ' ' << d;
    out << '\n';
  }
}

inline DocumentIndex read_index(const std::vector<std::string>& lines,
                                const std::string& source = {}) {
  if (lines.empty() || trim(lines[0]) != kIndexMagic)
    throw ParseError(source, 1, "not a document index (bad magic header)");
  const std::size_t n = detail::expect_header_value(lines, 1, "documents", source);
  const std::size_t t = detail::expect_header_value(lines, 2, "terms", source);
  if (lines.size() < 3 + t) throw ParseError(source, lines.size(), "truncated index");
  std::unordered_map<std::string, std::vector<DocId>> postings;
  postings.reserve(t);
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t line_no = 4 + i;
    const auto fields = split_ws(lines[3 + i]);
    if (fields.size() < 2) throw ParseError(source, line_no, "expected '<token> <df> ...'");
    const auto df = parse_int<std::size_t>(fields[1]);
    if (!df || fields.size() != 2 + *df) throw ParseError(source, line_no, "bad postings count");
    std::vector<DocId> docs;
    docs.reserve(*df);
    for (std::size_t j = 0; j < *df; ++j) {
      const auto d = parse_int<DocId>(fields[2 + j]);
      if (!d) throw ParseError(source, line_no, "malformed document id");
      docs.push_back(*d);
    }
    postings.emplace(std::string(fields[0]), std::move(docs));
  }
  try {
    return DocumentIndex(n, std::move(postings));
  } catch (const InvariantError& e) {
    throw ParseError(source, 0, e.what());
  }
}

}  // namespace querysieve
