#pragma once

// Largest-cluster classifier and its precision/recall evaluation.

#include <algorithm>
#include <cstdio>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include "querysieve/clustering.hpp"
#include "querysieve/error.hpp"
#include "querysieve/ingest.hpp"
#include "querysieve/text.hpp"

namespace querysieve {

enum class Predicted : std::uint8_t { U, T };

struct ClassificationResult {
  std::vector<Predicted> predicted;
  std::vector<std::size_t> chosen_clusters;   // ascending

  std::size_t size() const noexcept { return predicted.size(); }
  std::size_t predicted_user() const {
    return static_cast<std::size_t>(std::count(predicted.begin(), predicted.end(), Predicted::U));
  }
};

/// Labels every member of the largest cluster(s) U, everything else T.
/// All clusters that share the maximal size are chosen.
inline ClassificationResult classify_largest(const std::vector<std::size_t>& assignment,
                                             std::size_t k) {
  std::vector<std::size_t> sizes(k, 0);
  for (std::size_t c : assignment) {
    if (c >= k) throw UsageError("cluster id " + std::to_string(c) + " outside [0, k)");
    ++sizes[c];
  }
  const std::size_t largest = sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
  ClassificationResult r;
  std::vector<bool> chosen(k, false);
  for (std::size_t c = 0; c < k; ++c)
    if (sizes[c] == largest && largest > 0) {
      chosen[c] = true;
      r.chosen_clusters.push_back(c);
    }
  r.predicted.reserve(assignment.size());
  for (std::size_t c : assignment) r.predicted.push_back(chosen[c] ? Predicted::U : Predicted::T);
  return r;
}

inline ClassificationResult classify_largest(const Clustering& clustering) {
  return classify_largest(clustering.assignment, clustering.k);
}

struct EvalReport {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  double precision = 1.0;
  double recall = 0.0;
  bool precision_degenerate = false;   // tp + fp == 0, precision reported as 1
  bool recall_degenerate = false;      // tp + fn == 0, recall reported as 0
  std::vector<std::size_t> chosen_clusters;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
};

/// Precision and recall from confusion counts, with the degenerate-case
/// conventions precision = 1 when nothing is predicted U and recall = 0
/// when there are no true user queries.
inline EvalReport report_from_counts(std::size_t tp, std::size_t fp, std::size_t fn,
                                     std::size_t tn) {
  EvalReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.tn = tn;
  if (tp + fp > 0) {
    r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  } else {
    r.precision = 1.0;
    r.precision_degenerate = true;
  }
  if (tp + fn > 0) {
    r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  } else {
    r.recall = 0.0;
    r.recall_degenerate = true;
  }
  return r;
}

inline EvalReport evaluate(const ClassificationResult& result, const LabeledDataset& truth) {
  if (result.size() != truth.size())
    throw InputError("classification covers " + std::to_string(result.size()) +
                     " elements but the dataset has " + std::to_string(truth.size()));
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < result.size(); ++i) {
    const Label l = truth.records[i].label;
    if (l == Label::Unknown)
      throw InputError("record " + std::to_string(i) + " has no ground-truth label");
    const bool user = l == Label::User;
    if (result.predicted[i] == Predicted::U) {
      (user ? tp : fp) += 1;
    } else {
      (user ? fn : tn) += 1;
    }
  }
  EvalReport r = report_from_counts(tp, fp, fn, tn);
  r.chosen_clusters = result.chosen_clusters;
  return r;
}

// ---------------------------------------------------------------------------
// Classification file
//
//   chosen_clusters <c0> <c1> ...
//   <index> <U|T>                      (one line per element)

inline void write_classification(std::ostream& out, const ClassificationResult& r) {
  out << "chosen_clusters";
  for (std::size_t c : r.chosen_clusters) out << ' ' << c;
  out << '\n';
  for (std::size_t i = 0; i < r.size(); ++i)
    out << i << ' ' << (r.predicted[i] == Predicted::U ? 'U' : 'T') << '\n';
}

inline ClassificationResult read_classification(const std::vector<std::string>& lines,
                                                const std::string& source = {}) {
  ClassificationResult r;
  bool have_header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (is_blank_or_comment(lines[i])) continue;
    const auto fields = split_ws(lines[i]);
    if (!have_header) {
      if (fields.empty() || fields[0] != "chosen_clusters")
        throw ParseError(source, line_no, "expected 'chosen_clusters ...' header line");
      for (std::size_t f = 1; f < fields.size(); ++f) {
        const auto c = parse_int<std::size_t>(fields[f]);
        if (!c) throw ParseError(source, line_no, "malformed cluster id");
        r.chosen_clusters.push_back(*c);
      }
      have_header = true;
      continue;
    }
    const auto idx = fields.size() == 2 ? parse_int<std::size_t>(fields[0]) : std::nullopt;
    if (!idx || (fields[1] != "U" && fields[1] != "T"))
      throw ParseError(source, line_no, "expected '<index> <U|T>'");
    if (*idx != r.predicted.size())
      throw ParseError(source, line_no, "element indices must be consecutive from 0");
    r.predicted.push_back(fields[1] == "U" ? Predicted::U : Predicted::T);
  }
  if (!have_header) throw ParseError(source, lines.size(), "missing 'chosen_clusters' header");
  return r;
}

// ---------------------------------------------------------------------------
// Reports: human-readable text and a key=value record.

namespace detail {

inline std::string pad(std::size_t v) {
  std::string s = std::to_string(v);
  return std::string(s.size() < 10 ? 10 - s.size() : 0, ' ') + s;
}

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace detail

inline void write_report_text(std::ostream& out, const EvalReport& r, const std::string& name = {}) {
  if (!name.empty()) out << "Dataset:    " << name << '\n';
  out << "Elements:   " << r.total() << '\n'
      << "Chosen:     cluster(s)";
  for (std::size_t c : r.chosen_clusters) out << ' ' << c;
  out << '\n'
      << "                 truth U   truth T\n"
      << "  predicted U  " << detail::pad(r.tp) << detail::pad(r.fp) << '\n'
      << "  predicted T  " << detail::pad(r.fn) << detail::pad(r.tn) << '\n'
      << "Precision:  " << detail::fixed3(r.precision)
      << (r.precision_degenerate ? "  (degenerate: nothing predicted U)" : "") << '\n'
      << "Recall:     " << detail::fixed3(r.recall)
      << (r.recall_degenerate ? "  (degenerate: no true user queries)" : "") << '\n';
}

inline void write_report_kv(std::ostream& out, const EvalReport& r) {
  out << "tp=" << r.tp << '\n'
      << "fp=" << r.fp << '\n'
      << "fn=" << r.fn << '\n'
      << "tn=" << r.tn << '\n'
      << "precision=" << format_double(r.precision) << '\n'
      << "recall=" << format_double(r.recall) << '\n'
      << "precision_degenerate=" << (r.precision_degenerate ? 1 : 0) << '\n'
      << "recall_degenerate=" << (r.recall_degenerate ? 1 : 0) << '\n'
      << "chosen_clusters=";
  for (std::size_t i = 0; i < r.chosen_clusters.size(); ++i)
    out << (i ? "," : "") << r.chosen_clusters[i];
  out << '\n';
}

}  // namespace querysieve
