#pragma once

// Query-log ingestion: parsing proxy-style query logs and TrackMeNot
// activity logs, and collating the two into a labeled query stream.
//
// Query log line:  <timestamp>\t<label>\t<query>   label in {U, T, ?}
// TMN log line:    <timestamp>\t<query>
// Blank lines and lines whose first non-space byte is '#' are ignored.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "querysieve/error.hpp"
#include "querysieve/text.hpp"

namespace querysieve {

enum class Label : std::uint8_t { User, TMN, Unknown };

inline char label_token(Label l) {
  switch (l) {
    case Label::User: return 'U';
    case Label::TMN: return 'T';
    case Label::Unknown: return '?';
  }
  return '?';
}

inline std::string_view label_name(Label l) {
  switch (l) {
    case Label::User: return "User";
    case Label::TMN: return "TMN";
    case Label::Unknown: return "Unknown";
  }
  return "Unknown";
}

struct QueryRecord {
  std::int64_t timestamp = 0;
  std::string query;
  Label label = Label::Unknown;

  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

struct TmnEntry {
  std::int64_t timestamp = 0;
  std::string query;

  friend bool operator==(const TmnEntry&, const TmnEntry&) = default;
};

struct LabeledDataset {
  std::string name;
  std::vector<QueryRecord> records;

  std::size_t size() const noexcept { return records.size(); }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(),
                      [l](const QueryRecord& r) { return r.label == l; }));
  }

  /// Records [begin, end) as a new dataset; bounds are clamped to size().
  LabeledDataset slice(std::size_t begin, std::size_t end) const {
    end = std::min(end, records.size());
    begin = std::min(begin, end);
    LabeledDataset out;
    out.name = name;
    out.records.assign(records.begin() + static_cast<std::ptrdiff_t>(begin),
                       records.begin() + static_cast<std::ptrdiff_t>(end));
    return out;
  }
};

/// Throws InvariantError when the dataset is unsorted, carries an empty
/// query or a negative timestamp, or (if `resolved`) any Unknown label.
inline void validate_dataset(const LabeledDataset& ds, bool resolved) {
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const QueryRecord& r = ds.records[i];
    if (r.timestamp < 0)
      throw InvariantError("record " + std::to_string(i) + ": negative timestamp");
    if (trim(r.query).empty())
      throw InvariantError("record " + std::to_string(i) + ": empty query");
    if (resolved && r.label == Label::Unknown)
      throw InvariantError("record " + std::to_string(i) + ": unresolved label");
    if (i > 0 && ds.records[i - 1].timestamp > r.timestamp)
      throw InvariantError("record " + std::to_string(i) + ": timestamps not sorted");
  }
}

namespace detail {

inline std::int64_t parse_timestamp(std::string_view field, const std::string& source,
                                    std::size_t line_no) {
  const std::string_view t = trim(field);
  const bool digits_only =
      !t.empty() && std::all_of(t.begin(), t.end(),
                                [](char c) { return c >= '0' && c <= '9'; });
  const auto value = digits_only ? parse_int<std::int64_t>(t) : std::nullopt;
  if (!value)
    throw ParseError(source, line_no,
                     "malformed timestamp '" + std::string(field) + "'");
  return *value;
}

inline std::string parse_query_text(std::string_view field, const std::string& source,
                                    std::size_t line_no) {
  const std::string_view q = trim(field);
  if (q.empty()) throw ParseError(source, line_no, "empty query");
  return std::string(q);
}

}  // namespace detail

/// Parses a query log. Records are returned in file order; malformed lines
/// raise ParseError carrying the 1-based line number.
inline std::vector<QueryRecord> parse_query_log(const std::vector<std::string>& lines,
                                                const std::string& source = {}) {
  std::vector<QueryRecord> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const std::size_t line_no = i + 1;
    if (is_blank_or_comment(line)) continue;
    const std::size_t tab1 = line.find('\t');
    if (tab1 == std::string_view::npos)
      throw ParseError(source, line_no, "expected <timestamp>\\t<label>\\t<query>");
    const std::size_t tab2 = line.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos)
      throw ParseError(source, line_no, "missing query field");

    QueryRecord rec;
    rec.timestamp = detail::parse_timestamp(line.substr(0, tab1), source, line_no);
    const std::string_view label = trim(line.substr(tab1 + 1, tab2 - tab1 - 1));
    if (label == "U") {
      rec.label = Label::User;
    } else if (label == "T") {
      rec.label = Label::TMN;
    } else if (label == "?") {
      rec.label = Label::Unknown;
    } else {
      throw ParseError(source, line_no, "unknown label '" + std::string(label) + "'");
    }
    rec.query = detail::parse_query_text(line.substr(tab2 + 1), source, line_no);
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<QueryRecord> parse_query_log(std::istream& in,
                                                const std::string& source = {}) {
  return parse_query_log(read_lines(in), source);
}

inline std::vector<TmnEntry> parse_tmn_log(const std::vector<std::string>& lines,
                                           const std::string& source = {}) {
  std::vector<TmnEntry> out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const std::size_t line_no = i + 1;
    if (is_blank_or_comment(line)) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParseError(source, line_no, "expected <timestamp>\\t<query>");
    TmnEntry e;
    e.timestamp = detail::parse_timestamp(line.substr(0, tab), source, line_no);
    e.query = detail::parse_query_text(line.substr(tab + 1), source, line_no);
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<TmnEntry> parse_tmn_log(std::istream& in,
                                           const std::string& source = {}) {
  return parse_tmn_log(read_lines(in), source);
}

inline void write_query_log(std::ostream& out, const std::vector<QueryRecord>& records) {
  for (const QueryRecord& r : records)
    out << r.timestamp << '\t' << label_token(r.label) << '\t' << r.query << '\n';
}

inline std::string format_query_log(const std::vector<QueryRecord>& records) {
  std::ostringstream os;
  write_query_log(os, records);
  return os.str();
}

struct CollationSummary {
  std::size_t matched = 0;           // Unknown records relabeled TMN
  std::size_t defaulted_user = 0;    // Unknown records relabeled User
  std::size_t prelabeled = 0;        // records that already carried a label
  std::vector<TmnEntry> unmatched;   // TMN entries with no proxy counterpart

  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    for (const TmnEntry& e : unmatched)
      w.push_back("unmatched TMN log entry at " + std::to_string(e.timestamp) +
                  ": '" + e.query + "'");
    return w;
  }
};

struct CollationResult {
  LabeledDataset dataset;
  CollationSummary summary;
};

inline constexpr std::int64_t kDefaultCollationWindow = 120;

/// Resolves Unknown proxy records against the TMN log. A match needs equal
/// normalized text (trim + casefold) and |dt| <= window; matching is
/// one-to-one, nearest timestamp first, ties by proxy then TMN position.
/// Remaining Unknown records become User; labeled records are untouched.
inline CollationResult collate(std::vector<QueryRecord> proxy,
                               const std::vector<TmnEntry>& tmn, std::int64_t window,
                               std::string name = {}) {
  if (window < 0) throw UsageError("collation window must be >= 0");

  std::stable_sort(proxy.begin(), proxy.end(),
                   [](const QueryRecord& a, const QueryRecord& b) {
                     return a.timestamp < b.timestamp;
                   });

  std::vector<std::string> tmn_keys;
  tmn_keys.reserve(tmn.size());
  for (const TmnEntry& e : tmn) tmn_keys.push_back(casefold(trim(e.query)));

  struct Candidate {
    std::int64_t distance;
    std::size_t proxy_index;
    std::size_t tmn_index;
  };
  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < proxy.size(); ++p) {
    if (proxy[p].label != Label::Unknown) continue;
    const std::string key = casefold(trim(proxy[p].query));
    for (std::size_t t = 0; t < tmn.size(); ++t) {
      if (tmn_keys[t] != key) continue;
      const std::int64_t dt = std::abs(proxy[p].timestamp - tmn[t].timestamp);
      if (dt <= window) candidates.push_back({dt, p, t});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.distance, a.proxy_index, a.tmn_index) <
           std::tie(b.distance, b.proxy_index, b.tmn_index);
  });

  std::vector<bool> proxy_used(proxy.size(), false);
  std::vector<bool> tmn_used(tmn.size(), false);
  CollationResult result;
  for (const Candidate& c : candidates) {
    if (proxy_used[c.proxy_index] || tmn_used[c.tmn_index]) continue;
    proxy_used[c.proxy_index] = true;
    tmn_used[c.tmn_index] = true;
    proxy[c.proxy_index].label = Label::TMN;
    ++result.summary.matched;
  }
  for (std::size_t p = 0; p < proxy.size(); ++p) {
    if (proxy_used[p]) continue;
    if (proxy[p].label == Label::Unknown) {
      proxy[p].label = Label::User;
      ++result.summary.defaulted_user;
    } else {
      ++result.summary.prelabeled;
    }
  }
  for (std::size_t t = 0; t < tmn.size(); ++t)
    if (!tmn_used[t]) result.summary.unmatched.push_back(tmn[t]);

  result.dataset.name = std::move(name);
  result.dataset.records = std::move(proxy);
  return result;
}

/// Parses a resolved query log into a dataset, sorting by timestamp (stable).
inline LabeledDataset load_dataset(const std::vector<std::string>& lines,
                                   const std::string& source, bool require_resolved) {
  LabeledDataset ds;
  ds.name = source;
  ds.records = parse_query_log(lines, source);
  std::stable_sort(ds.records.begin(), ds.records.end(),
                   [](const QueryRecord& a, const QueryRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  if (require_resolved) {
    for (std::size_t i = 0; i < ds.records.size(); ++i)
      if (ds.records[i].label == Label::Unknown)
        throw InputError(source + ": record " + std::to_string(i) +
                         " has unresolved label '?'; run the ingest stage first");
  }
  return ds;
}

}  // namespace querysieve
