#pragma once

// Post-characterization analysis over one or more scoreboards: summary
// statistics, diversity, correlation and coverage.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slamchar/core.hpp"
#include "slamchar/scoreboard.hpp"

namespace slamchar {

struct Stats {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> stddev;  // divisor n-1; absent for n = 1
  double min = 0.0;
  double max = 0.0;
};

inline std::optional<Stats> describe(std::span<const double> v) {
  if (v.empty()) return std::nullopt;
  Stats s;
  s.n = v.size();
  s.mean = stats::mean(v);
  if (s.n > 1) s.stddev = stats::stddev(v, 1);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

/// Scoreboards labelled by dataset name; repeated names get a "#k" suffix.
inline std::vector<std::string> dataset_labels(std::span<const Scoreboard> boards) {
  std::vector<std::string> out;
  std::map<std::string, int> seen;
  for (const auto& b : boards) {
    const std::string base = b.dataset_name.empty() ? "dataset" : b.dataset_name;
    const int k = ++seen[base];
    out.push_back(k == 1 ? base : base + "#" + std::to_string(k));
  }
  return out;
}

struct SequenceSummary {
  std::string dataset;
  std::string sequence;
  Stats stats;
};

struct DatasetSummary {
  std::string dataset;
  std::optional<Stats> stats;  // nullopt when every record is ABSENT
};

struct MetricSummary {
  std::string metric_id;
  Level level = Level::Sequence;
  std::string unit;
  std::vector<SequenceSummary> sequences;
  std::vector<DatasetSummary> datasets;
  std::optional<Stats> aggregated;
};

/// Statistics of one metric per sequence, per dataset (pooled over sequences)
/// and across all datasets. nullopt when no scoreboard holds a PRESENT record.
inline std::optional<MetricSummary> summarize(std::span<const Scoreboard> boards, const std::string& metric_id) {
  const auto labels = dataset_labels(boards);
  MetricSummary out;
  out.metric_id = metric_id;
  std::vector<double> all;
  bool found = false;
  for (std::size_t b = 0; b < boards.size(); ++b) {
    std::vector<double> pooled;
    for (const auto& [seq, rec] : boards[b].records(metric_id)) {
      if (!found) {
        out.level = rec->level;
        out.unit = rec->unit;
      }
      if (!rec->present() || rec->values.empty()) continue;
      found = true;
      out.level = rec->level;
      out.unit = rec->unit;
      const auto v = rec->numbers();
      out.sequences.push_back({labels[b], seq, *describe(v)});
      pooled.insert(pooled.end(), v.begin(), v.end());
    }
    out.datasets.push_back({labels[b], describe(pooled)});
    all.insert(all.end(), pooled.begin(), pooled.end());
  }
  if (!found) return std::nullopt;
  out.aggregated = describe(all);
  return out;
}

inline std::optional<MetricSummary> summarize(const Scoreboard& board, const std::string& metric_id) {
  return summarize(std::span<const Scoreboard>(&board, 1), metric_id);
}

// ---------------------------------------------------------------------------
// Diversity
// ---------------------------------------------------------------------------

/// Category label of a value rounded to `precision` decimals.
inline std::string quantize_value(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos) s = "0";  // fold -0.000 into 0
  return s;
}

inline std::map<std::string, std::size_t> categories(std::span<const double> values, int precision) {
  std::map<std::string, std::size_t> counts;
  for (double v : values) ++counts[quantize_value(v, precision)];
  return counts;
}

/// Shannon entropy in nats over quantized categories.
inline double shannon_entropy(std::span<const double> values, int precision = 6) {
  if (values.empty()) throw Error("entropy of an empty set");
  const double n = static_cast<double>(values.size());
  double h = 0.0;
  for (const auto& [cat, c] : categories(values, precision)) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h == 0.0 ? 0.0 : h;
}

inline std::optional<double> simpson_diversity(std::span<const double> values, int precision = 6) {
  const std::size_t n = values.size();
  if (n < 2) return std::nullopt;
  double same = 0.0;
  for (const auto& [cat, c] : categories(values, precision)) same += static_cast<double>(c) * static_cast<double>(c - 1);
  return 1.0 - same / (static_cast<double>(n) * static_cast<double>(n - 1));
}

struct DiversityScores {
  std::string metric_id;
  std::string dataset;
  std::size_t total = 0;
  std::size_t categories = 0;
  std::optional<double> entropy;
  std::optional<double> simpson;
  int precision = 6;
};

/// Diversity of every PRESENT value of one metric within one dataset.
inline DiversityScores diversity(const Scoreboard& board, const std::string& dataset, const std::string& metric_id,
                                 int precision) {
  DiversityScores d;
  d.metric_id = metric_id;
  d.dataset = dataset;
  d.precision = precision;
  std::vector<double> v;
  for (const auto& [seq, rec] : board.records(metric_id)) {
    if (!rec->present()) continue;
    const auto x = rec->numbers();
    v.insert(v.end(), x.begin(), x.end());
  }
  d.total = v.size();
  if (v.empty()) return d;
  d.categories = categories(v, precision).size();
  d.entropy = shannon_entropy(v, precision);
  d.simpson = simpson_diversity(v, precision);
  return d;
}

// ---------------------------------------------------------------------------
// Correlation
// ---------------------------------------------------------------------------

/// Pearson product-moment correlation; nullopt for fewer than two pairs or a
/// zero-variance input.
inline std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const double mx = stats::mean(x), my = stats::mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct CorrelationMatrix {
  std::vector<std::string> metric_ids;
  std::vector<std::vector<std::optional<double>>> r;  // symmetric
};

/// Correlation between metrics, one observation per sequence (the sequence
/// mean), using the sequences where both metrics are present.
inline CorrelationMatrix pmcc_matrix(const Scoreboard& board, const std::vector<std::string>& metric_ids) {
  std::vector<std::map<std::string, double>> means(metric_ids.size());
  for (std::size_t m = 0; m < metric_ids.size(); ++m) {
    for (const auto& [seq, rec] : board.records(metric_ids[m])) {
      if (rec->present() && !rec->values.empty()) means[m][seq] = stats::mean(rec->numbers());
    }
  }
  CorrelationMatrix out;
  out.metric_ids = metric_ids;
  const std::size_t k = metric_ids.size();
  out.r.assign(k, std::vector<std::optional<double>>(k));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a; b < k; ++b) {
      std::vector<double> x, y;
      for (const auto& [seq, va] : means[a]) {
        if (const auto it = means[b].find(seq); it != means[b].end()) {
          x.push_back(va);
          y.push_back(it->second);
        }
      }
      auto r = pearson(x, y);
      if (a == b && r) r = 1.0;
      out.r[a][b] = out.r[b][a] = r;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

struct CoverageStep {
  std::string sequence;
  std::size_t new_bins = 0;
  double cumulative_pct = 0.0;
};

struct CoverageResult {
  std::string metric_id;
  std::size_t bins = 0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<std::size_t> occupied;                               // bins occupied by the corpus
  std::vector<std::pair<std::string, std::set<std::size_t>>> sets;  // per sequence
  std::vector<CoverageStep> steps;
  bool exact = false;  // the subset was proven minimum
};

inline std::size_t bin_of(double v, double lo, double hi, std::size_t bins) {
  if (!(hi > lo)) return 0;
  const double f = (v - lo) / (hi - lo) * static_cast<double>(bins);
  return std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, std::floor(f))));
}

namespace detail {

using Bits = std::vector<std::uint64_t>;

inline Bits to_bits(const std::set<std::size_t>& s, std::size_t bins) {
  Bits b((bins + 63) / 64, 0);
  for (auto i : s) b[i / 64] |= std::uint64_t{1} << (i % 64);
  return b;
}

inline std::size_t count_new(const Bits& set, const Bits& covered) {
  std::size_t n = 0;
  for (std::size_t w = 0; w < set.size(); ++w) n += static_cast<std::size_t>(__builtin_popcountll(set[w] & ~covered[w]));
  return n;
}

inline void merge(Bits& into, const Bits& from) {
  for (std::size_t w = 0; w < into.size(); ++w) into[w] |= from[w];
}

/// Greedy order over a fixed candidate list (indices into `sets`, sorted by name):
/// most newly covered bins first, ties to the earlier name.
inline std::vector<std::size_t> greedy_order(const std::vector<Bits>& sets, std::vector<std::size_t> candidates,
                                             std::size_t target, std::size_t words) {
  std::vector<std::size_t> order;
  Bits covered(words, 0);
  std::size_t done = 0;
  while (done < target && !candidates.empty()) {
    std::size_t best = 0, gain = 0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const std::size_t g = count_new(sets[candidates[c]], covered);
      if (g > gain) {
        gain = g;
        best = c;
      }
    }
    if (gain == 0) break;
    order.push_back(candidates[best]);
    merge(covered, sets[candidates[best]]);
    done += gain;
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return order;
}

/// First cover of exactly `size` sets in lexicographic index order, if any.
inline std::optional<std::vector<std::size_t>> cover_of_size(const std::vector<Bits>& sets, std::size_t size,
                                                             const Bits& full) {
  const std::size_t n = sets.size();
  if (size > n) return std::nullopt;
  std::vector<std::size_t> pick(size);
  std::vector<Bits> prefix(size + 1, Bits(full.size(), 0));
  // Depth-first enumeration with prefix unions.
  std::function<bool(std::size_t, std::size_t)> rec = [&](std::size_t depth, std::size_t start) -> bool {
    if (depth == size) return prefix[depth] == full;
    for (std::size_t i = start; i + (size - depth) <= n; ++i) {
      prefix[depth + 1] = prefix[depth];
      merge(prefix[depth + 1], sets[i]);
      pick[depth] = i;
      if (rec(depth + 1, i + 1)) return true;
    }
    return false;
  };
  if (rec(0, 0)) return pick;
  return std::nullopt;
}

}  // namespace detail

/// Orders sequences so that each step adds the most uncovered occupied bins
/// (ties to the lexicographically smaller name). When there are at most
/// `exact_limit` sequences the subset is also checked against an exhaustive
/// minimum cover and replaced by it if greedy overshoots.
inline CoverageResult coverage_analysis(const std::vector<std::pair<std::string, std::vector<double>>>& per_sequence,
                                        std::size_t bins, std::size_t min_count = 1, std::size_t exact_limit = 20,
                                        std::string metric_id = {}) {
  if (bins < 1) throw Error("coverage needs at least one bin");
  if (min_count < 1) throw Error("coverage min count must be at least 1");
  CoverageResult r;
  r.metric_id = std::move(metric_id);
  r.bins = bins;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t n_values = 0;
  for (const auto& [name, v] : per_sequence) {
    for (double x : v) {
      if (!std::isfinite(x)) continue;
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      ++n_values;
    }
  }
  if (n_values == 0) throw Error("coverage: metric " + r.metric_id + " has no values");
  r.lo = lo;
  r.hi = hi;

  auto sorted = per_sequence;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::set<std::size_t> occupied;
  for (const auto& [name, v] : sorted) {
    std::map<std::size_t, std::size_t> counts;
    for (double x : v) {
      if (std::isfinite(x)) ++counts[bin_of(x, lo, hi, bins)];
    }
    std::set<std::size_t> s;
    for (const auto& [b, c] : counts) {
      if (c >= min_count) s.insert(b);
    }
    occupied.insert(s.begin(), s.end());
    r.sets.emplace_back(name, std::move(s));
  }
  r.occupied.assign(occupied.begin(), occupied.end());
  if (occupied.empty()) return r;  // min_count filtered everything out

  const std::size_t words = (bins + 63) / 64;
  std::vector<detail::Bits> bits;
  for (const auto& [name, s] : r.sets) bits.push_back(detail::to_bits(s, bins));
  std::vector<std::size_t> all(bits.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;

  auto chosen = detail::greedy_order(bits, all, occupied.size(), words);
  if (r.sets.size() <= exact_limit) {
    r.exact = true;
    const auto full = detail::to_bits(occupied, bins);
    for (std::size_t k = 1; k < chosen.size(); ++k) {
      if (auto cover = detail::cover_of_size(bits, k, full)) {
        chosen = detail::greedy_order(bits, *cover, occupied.size(), words);
        break;
      }
    }
  }

  std::set<std::size_t> covered;
  for (auto i : chosen) {
    const auto before = covered.size();
    covered.insert(r.sets[i].second.begin(), r.sets[i].second.end());
    r.steps.push_back({r.sets[i].first, covered.size() - before,
                       100.0 * static_cast<double>(covered.size()) / static_cast<double>(occupied.size())});
  }
  return r;
}

/// Coverage of one metric over the sequences of several scoreboards. Sequences
/// are named "<dataset>/<sequence>".
inline CoverageResult coverage_analysis(std::span<const Scoreboard> boards, const std::string& metric_id,
                                        std::size_t bins, std::size_t min_count = 1, std::size_t exact_limit = 20) {
  const auto labels = dataset_labels(boards);
  std::vector<std::pair<std::string, std::vector<double>>> per_sequence;
  for (std::size_t b = 0; b < boards.size(); ++b) {
    for (const auto& [seq, rec] : boards[b].records(metric_id)) {
      if (rec->present() && !rec->values.empty()) per_sequence.emplace_back(labels[b] + "/" + seq, rec->numbers());
    }
  }
  if (per_sequence.empty()) throw Error("coverage: metric " + metric_id + " has no values");
  return coverage_analysis(per_sequence, bins, min_count, exact_limit, metric_id);
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

namespace detail {

inline std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

}  // namespace detail

struct AnalysisOptions {
  int precision = 6;
  std::size_t coverage_bins = 100;
  std::size_t coverage_min_count = 1;
  std::size_t coverage_exact_limit = 20;
  std::vector<std::string> coverage_metrics = {"blur.score"};
};

/// All metric ids present in any scoreboard, sorted.
inline std::vector<std::string> all_metric_ids(std::span<const Scoreboard> boards) {
  std::set<std::string> ids;
  for (const auto& b : boards) {
    for (auto& id : b.metric_ids()) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

inline std::vector<MetricSummary> summarize_all(std::span<const Scoreboard> boards) {
  std::vector<MetricSummary> out;
  for (const auto& id : all_metric_ids(boards)) {
    if (auto s = summarize(boards, id)) out.push_back(std::move(*s));
  }
  return out;
}

inline void write_summary_csv(std::ostream& out, std::span<const MetricSummary> summaries,
                              const std::vector<std::string>& datasets) {
  out << "metric_id,level,unit";
  for (const auto& d : datasets) {
    out << ',' << detail::csv_field(d + "_mean") << ',' << detail::csv_field(d + "_std") << ','
        << detail::csv_field(d + "_n");
  }
  out << ",aggregated_mean,aggregated_std,aggregated_n\n";
  for (const auto& s : summaries) {
    out << s.metric_id << ',' << to_string(s.level) << ',' << s.unit;
    for (const auto& d : s.datasets) {
      if (d.stats) {
        out << ',' << format_double(d.stats->mean) << ',' << detail::opt(d.stats->stddev) << ',' << d.stats->n;
      } else {
        out << ",,,0";
      }
    }
    out << ',' << format_double(s.aggregated->mean) << ',' << detail::opt(s.aggregated->stddev) << ','
        << s.aggregated->n << '\n';
  }
}

inline void write_sequence_summary_csv(std::ostream& out, std::span<const MetricSummary> summaries) {
  out << "metric_id,dataset,sequence,n,mean,std,min,max\n";
  for (const auto& s : summaries) {
    for (const auto& q : s.sequences) {
      out << s.metric_id << ',' << detail::csv_field(q.dataset) << ',' << detail::csv_field(q.sequence) << ','
          << q.stats.n << ',' << format_double(q.stats.mean) << ',' << detail::opt(q.stats.stddev) << ','
          << format_double(q.stats.min) << ',' << format_double(q.stats.max) << '\n';
    }
  }
}

inline void write_diversity_csv(std::ostream& out, std::span<const DiversityScores> rows) {
  out << "metric_id,dataset,n,categories,H,SDI\n";
  for (const auto& d : rows) {
    out << d.metric_id << ',' << detail::csv_field(d.dataset) << ',' << d.total << ',' << d.categories << ','
        << detail::opt(d.entropy) << ',' << detail::opt(d.simpson) << '\n';
  }
}

inline void write_pmcc_csv(std::ostream& out, const CorrelationMatrix& m) {
  out << "metric_id";
  for (const auto& id : m.metric_ids) out << ',' << id;
  out << '\n';
  for (std::size_t a = 0; a < m.metric_ids.size(); ++a) {
    out << m.metric_ids[a];
    for (std::size_t b = 0; b < m.metric_ids.size(); ++b) out << ',' << detail::opt(m.r[a][b]);
    out << '\n';
  }
}

inline void write_coverage_csv(std::ostream& out, const CoverageResult& c) {
  out << "step,sequence,cumulative_pct\n";
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    out << i + 1 << ',' << detail::csv_field(c.steps[i].sequence) << ',' << format_double(c.steps[i].cumulative_pct)
        << '\n';
  }
}

/// File name for a per-metric or per-dataset export, with path separators replaced.
inline std::string export_name(const std::string& prefix, std::string id) {
  for (auto& c : id) {
    if (c == '/' || c == '\\' || c == ' ' || c == '#') c = '_';
  }
  return prefix + id + ".csv";
}

struct AnalysisResult {
  std::vector<std::string> datasets;
  std::vector<MetricSummary> summaries;
  std::vector<DiversityScores> diversity;
  std::vector<CorrelationMatrix> pmcc;  // per dataset
  std::vector<CoverageResult> coverage;
};

inline AnalysisResult analyze(std::span<const Scoreboard> boards, const AnalysisOptions& opts) {
  if (boards.empty()) throw Error("no scoreboards to analyze");
  AnalysisResult r;
  r.datasets = dataset_labels(boards);
  r.summaries = summarize_all(boards);
  for (const auto& s : r.summaries) {
    for (std::size_t b = 0; b < boards.size(); ++b) {
      r.diversity.push_back(diversity(boards[b], r.datasets[b], s.metric_id, opts.precision));
    }
  }
  for (const auto& b : boards) r.pmcc.push_back(pmcc_matrix(b, b.metric_ids()));
  const auto ids = all_metric_ids(boards);
  for (const auto& m : opts.coverage_metrics) {
    if (!std::binary_search(ids.begin(), ids.end(), m)) continue;
    bool any = false;
    for (const auto& b : boards) {
      for (const auto& [seq, rec] : b.records(m)) any = any || (rec->present() && !rec->values.empty());
    }
    if (any) {
      r.coverage.push_back(
          coverage_analysis(boards, m, opts.coverage_bins, opts.coverage_min_count, opts.coverage_exact_limit));
    }
  }
  return r;
}

/// Writes summary.csv, sequence_summary.csv, diversity.csv, pmcc_<dataset>.csv
/// and coverage_<metric>.csv into `dir`.
inline void write_analysis(const AnalysisResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = detail::open_out(dir / "summary.csv");
    write_summary_csv(out, r.summaries, r.datasets);
  }
  {
    auto out = detail::open_out(dir / "sequence_summary.csv");
    write_sequence_summary_csv(out, r.summaries);
  }
  {
    auto out = detail::open_out(dir / "diversity.csv");
    write_diversity_csv(out, r.diversity);
  }
  for (std::size_t b = 0; b < r.pmcc.size(); ++b) {
    auto out = detail::open_out(dir / export_name("pmcc_", r.datasets[b]));
    write_pmcc_csv(out, r.pmcc[b]);
  }
  for (const auto& c : r.coverage) {
    auto out = detail::open_out(dir / export_name("coverage_", c.metric_id));
    write_coverage_csv(out, c);
  }
}

}  // namespace slamchar
