#pragma once

// Query-level semantic measures and the dissimilarity matrix they produce.
//
// Word similarities are lifted to whole queries by the max-then-mean rule:
// every word of Q1 is scored against its best match in Q2 and the scores are
// averaged over the words of Q1. The two directions are averaged to get a
// symmetric similarity, and dissimilarity is 1 - similarity.
//
// The hit-count measure is the normalized distance
//   (max(log f1, log f2) - log f12) / (log N - min(log f1, log f2))
// over a local document index, clamped into [0, 1].

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "querysieve/corpus.hpp"
#include "querysieve/error.hpp"
#include "querysieve/text.hpp"

namespace querysieve {

struct Query {
  std::string raw;
  std::vector<std::string> tokens;

  /// Tokenizes `raw`; a query without tokens is rejected.
  static Query parse(std::string_view raw) {
    Query q{std::string(raw), tokenize(raw)};
    if (q.tokens.empty())
      throw InputError("query '" + std::string(raw) + "' has no tokens");
    return q;
  }

  std::set<std::string> token_set() const { return {tokens.begin(), tokens.end()}; }
};

template <typename F>
concept WordSimilarityFn = requires(const F& f, const std::string& a, const std::string& b) {
  { f(a, b) } -> std::convertible_to<double>;
};

/// (1/|Q1|) * sum over words w of Q1 of max over words v of Q2 of sim(w, v).
/// Repeated words in Q1 each contribute a term.
template <WordSimilarityFn Backend>
double phrase_sim_directed(const Backend& backend, const Query& q1, const Query& q2) {
  if (q1.tokens.empty() || q2.tokens.empty())
    throw UsageError("phrase similarity needs queries with at least one token");
  double sum = 0.0;
  for (const std::string& w : q1.tokens) {
    double best = 0.0;
    for (const std::string& v : q2.tokens) best = std::max(best, static_cast<double>(backend(w, v)));
    sum += best;
  }
  return sum / static_cast<double>(q1.tokens.size());
}

template <WordSimilarityFn Backend>
double phrase_sim(const Backend& backend, const Query& q1, const Query& q2) {
  return (phrase_sim_directed(backend, q1, q2) + phrase_sim_directed(backend, q2, q1)) / 2.0;
}

/// Word similarity over a co-occurrence model.
struct ModelBackend {
  const CooccurrenceModel* model;

  double operator()(std::string_view a, std::string_view b) const {
    return word_similarity(*model, a, b);
  }
};

/// Precomputed word similarities for the tokens of a fixed query set. Holds
/// exactly the values word_similarity would return, looked up in O(1).
class SimilarityTable {
 public:
  SimilarityTable(const CooccurrenceModel& model, const std::vector<Query>& queries) {
    for (const Query& q : queries)
      for (const std::string& t : q.tokens) ids_.try_emplace(t, 0);
    tokens_.reserve(ids_.size());
    for (auto& [t, id] : ids_) {
      id = tokens_.size();
      tokens_.push_back(t);
    }
    const std::size_t m = tokens_.size();
    table_.assign(m * m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      table_[i * m + i] = word_similarity(model, tokens_[i], tokens_[i]);
      for (std::size_t j = i + 1; j < m; ++j) {
        const double s = word_similarity(model, tokens_[i], tokens_[j]);
        table_[i * m + j] = s;
        table_[j * m + i] = s;
      }
    }
  }

  double operator()(const std::string& a, const std::string& b) const {
    const auto ia = ids_.find(a);
    const auto ib = ids_.find(b);
    if (ia == ids_.end() || ib == ids_.end())
      throw InvariantError("similarity table: token outside the prepared query set");
    return table_[ia->second * tokens_.size() + ib->second];
  }

 private:
  std::map<std::string, std::size_t> ids_;
  std::vector<std::string> tokens_;
  std::vector<double> table_;
};

// ---------------------------------------------------------------------------
// Normalized hit-count distance

struct NgdValue {
  double value = 1.0;      // clamped into [0, 1]
  double raw = 1.0;        // before clamping (equals value for the fixed-point rules)
  bool clamped = false;    // raw fell outside [0, 1]
};

namespace detail {

inline NgdValue ngd_from_counts(std::size_t n, std::size_t f1, std::size_t f2, std::size_t f12) {
  if (n < 2) throw UsageError("hit-count distance needs an index with at least 2 documents");
  if (f1 == 0 || f2 == 0 || f12 == 0) return {1.0, 1.0, false};
  // Each side as the log of one ratio: log(max f / f12) / log(N / min f).
  const double hi = static_cast<double>(std::max(f1, f2));
  const double lo = static_cast<double>(std::min(f1, f2));
  const double numerator = std::log(hi / static_cast<double>(f12));
  const double denominator = std::log(static_cast<double>(n) / lo);
  double raw;
  if (denominator > 0.0) {
    raw = numerator / denominator;
  } else {
    // Both queries hit every document: no spread to normalize by.
    raw = numerator > 0.0 ? 1.0 : 0.0;
  }
  const double value = std::clamp(raw, 0.0, 1.0);
  return {value, raw, raw < 0.0 || raw > 1.0};
}

}  // namespace detail

/// Evaluates the hit-count distance directly from counts (natural log).
inline double ngd_from_counts(std::size_t n, std::size_t f1, std::size_t f2, std::size_t f12) {
  return detail::ngd_from_counts(n, f1, f2, f12).value;
}

inline NgdValue ngd_detail(const DocumentIndex& index, const Query& q1, const Query& q2) {
  if (index.doc_count() < 2)
    throw UsageError("hit-count distance needs an index with at least 2 documents");
  const std::set<std::string> s1 = q1.token_set();
  const std::set<std::string> s2 = q2.token_set();
  if (s1 == s2) return {0.0, 0.0, false};
  std::set<std::string> both = s1;
  both.insert(s2.begin(), s2.end());
  return detail::ngd_from_counts(index.doc_count(), hit_count(index, s1), hit_count(index, s2),
                                 hit_count(index, both));
}

inline double ngd(const DocumentIndex& index, const Query& q1, const Query& q2) {
  return ngd_detail(index, q1, q2).value;
}

// ---------------------------------------------------------------------------
// Dissimilarity matrix

class DissimilarityMatrix {
 public:
  DissimilarityMatrix() = default;
  explicit DissimilarityMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }

  /// Sets (i, j) and (j, i).
  void set_symmetric(std::size_t i, std::size_t j, double v) {
    data_[i * n_ + j] = v;
    data_[j * n_ + i] = v;
  }

  const std::vector<double>& data() const noexcept { return data_; }

  /// Principal submatrix on rows/columns [begin, end).
  DissimilarityMatrix slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, n_);
    begin = std::min(begin, end);
    DissimilarityMatrix out(end - begin);
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = begin; j < end; ++j) out(i - begin, j - begin) = (*this)(i, j);
    return out;
  }

  /// Returns a description of the first violated invariant, or an empty string.
  std::string check_invariants() const {
    for (std::size_t i = 0; i < n_; ++i) {
      if ((*this)(i, i) != 0.0)
        return "diagonal entry (" + std::to_string(i) + "," + std::to_string(i) + ") is not 0";
      for (std::size_t j = 0; j < n_; ++j) {
        const double v = (*this)(i, j);
        if (!(v >= 0.0 && v <= 1.0))
          return "entry (" + std::to_string(i) + "," + std::to_string(j) + ") outside [0,1]";
        if (v != (*this)(j, i))
          return "entry (" + std::to_string(i) + "," + std::to_string(j) + ") not symmetric";
      }
    }
    return {};
  }

  friend bool operator==(const DissimilarityMatrix&, const DissimilarityMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

enum class Measure { DiscoLike, Ngd };

inline std::string_view measure_name(Measure m) {
  return m == Measure::DiscoLike ? "disco" : "ngd";
}

struct MatrixBuild {
  DissimilarityMatrix matrix;
  Measure measure = Measure::DiscoLike;
  std::size_t clamped = 0;   // hit-count values that fell outside [0, 1] before clamping
};

/// entries(i, j) = 1 - phrase_sim(i, j); the diagonal is 0.
template <WordSimilarityFn Backend>
MatrixBuild build_matrix(const std::vector<Query>& queries, const Backend& backend) {
  if (queries.empty()) throw UsageError("cannot build a matrix over zero queries");
  MatrixBuild out{DissimilarityMatrix(queries.size()), Measure::DiscoLike, 0};
  for (std::size_t i = 0; i < queries.size(); ++i)
    for (std::size_t j = i + 1; j < queries.size(); ++j) {
      const double d = 1.0 - phrase_sim(backend, queries[i], queries[j]);
      out.matrix.set_symmetric(i, j, std::clamp(d, 0.0, 1.0));
    }
  return out;
}

inline MatrixBuild build_matrix(const std::vector<Query>& queries, const CooccurrenceModel& model) {
  if (queries.empty()) throw UsageError("cannot build a matrix over zero queries");
  const SimilarityTable table(model, queries);
  return build_matrix(queries, table);
}

inline MatrixBuild build_matrix(const std::vector<Query>& queries, const DocumentIndex& index) {
  if (queries.empty()) throw UsageError("cannot build a matrix over zero queries");
  if (index.doc_count() < 2)
    throw UsageError("hit-count distance needs an index with at least 2 documents");
  MatrixBuild out{DissimilarityMatrix(queries.size()), Measure::Ngd, 0};
  for (std::size_t i = 0; i < queries.size(); ++i)
    for (std::size_t j = i + 1; j < queries.size(); ++j) {
      const NgdValue v = ngd_detail(index, queries[i], queries[j]);
      if (v.clamped) ++out.clamped;
      out.matrix.set_symmetric(i, j, v.value);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix file format
//
//   # key=value        metadata comments (optional, before the header)
//   <n>
//   <n rows of n whitespace-separated decimal reals>

struct MatrixFile {
  DissimilarityMatrix matrix;
  std::vector<std::pair<std::string, std::string>> metadata;
};

inline void write_matrix(std::ostream& out, const DissimilarityMatrix& m,
                         const std::vector<std::pair<std::string, std::string>>& metadata = {}) {
  for (const auto& [k, v] : metadata) out << "# " << k << '=' << v << '\n';
  out << m.size() << '\n';
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (j > 0) out << ' ';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

inline MatrixFile read_matrix(const std::vector<std::string>& lines, const std::string& source = {}) {
  MatrixFile file;
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    const std::string_view t = trim(lines[i]);
    if (t.empty()) continue;
    if (t.front() != '#') break;
    const std::string_view body = trim(t.substr(1));
    const std::size_t eq = body.find('=');
    if (eq != std::string_view::npos)
      file.metadata.emplace_back(std::string(trim(body.substr(0, eq))),
                                 std::string(trim(body.substr(eq + 1))));
  }
  if (i >= lines.size()) throw ParseError(source, lines.size() + 1, "missing matrix header line");
  const std::size_t header_line = i + 1;
  const auto n = parse_int<std::size_t>(trim(lines[i]));
  if (!n || *n == 0)
    throw ParseError(source, header_line,
                     "matrix header line must be a positive element count, got '" +
                         std::string(trim(lines[i])) + "'");
  DissimilarityMatrix m(*n);
  std::size_t row = 0;
  for (++i; i < lines.size() && row < *n; ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto fields = split_ws(lines[i]);
    if (fields.size() != *n)
      throw ParseError(source, i + 1,
                       "expected " + std::to_string(*n) + " values, found " +
                           std::to_string(fields.size()));
    for (std::size_t j = 0; j < *n; ++j) {
      const auto v = parse_double(fields[j]);
      if (!v) throw ParseError(source, i + 1, "malformed value '" + std::string(fields[j]) + "'");
      m(row, j) = *v;
    }
    ++row;
  }
  if (row != *n)
    throw ParseError(source, lines.size(),
                     "expected " + std::to_string(*n) + " rows, found " + std::to_string(row));
  for (; i < lines.size(); ++i)
    if (!trim(lines[i]).empty()) throw ParseError(source, i + 1, "trailing data after matrix");
  if (const std::string err = m.check_invariants(); !err.empty())
    throw ParseError(source, 0, "invalid dissimilarity matrix: " + err);
  file.matrix = std::move(m);
  return file;
}

}  // namespace querysieve
