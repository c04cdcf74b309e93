#pragma once

// Plain-text report: a statistics table (mean and standard deviation per dataset,
// plus an aggregated column when several datasets are analysed) and an entropy /
// diversity table.

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "slamchar/analysis.hpp"

namespace slamchar {

namespace detail {

inline std::string fixed(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

inline std::string mean_std(const std::optional<Stats>& s) {
  if (!s) return "- ± (-)";
  return fixed(s->mean) + " ± (" + (s->stddev ? fixed(*s->stddev) : std::string("-")) + ")";
}

// Display width; "±" is two bytes but one column.
inline std::size_t columns(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

inline void write_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  if (rows.empty()) return;
  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], columns(r[c]));
  }
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) out << " | ";
      out << r[c];
      if (c + 1 < r.size()) out << std::string(width[c] - columns(r[c]), ' ');
    }
    out << '\n';
  };
  line(rows.front());
  std::size_t total = 0;
  for (auto w : width) total += w;
  out << std::string(total + 3 * (width.size() - 1), '-') << '\n';
  for (std::size_t i = 1; i < rows.size(); ++i) line(rows[i]);
}

inline std::string metric_label(const std::string& id, const std::string& unit) {
  return unit.empty() ? id : id + " [" + unit + "]";
}

}  // namespace detail

inline void write_report(std::ostream& out, const AnalysisResult& r) {
  const bool aggregated = r.datasets.size() > 1;

  out << "Statistical analysis (mean ± (std))\n\n";
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> head{"metric"};
  head.insert(head.end(), r.datasets.begin(), r.datasets.end());
  if (aggregated) head.push_back("Aggregated");
  rows.push_back(head);
  for (const auto& s : r.summaries) {
    std::vector<std::string> row{detail::metric_label(s.metric_id, s.unit)};
    for (const auto& d : s.datasets) row.push_back(detail::mean_std(d.stats));
    if (aggregated) row.push_back(detail::mean_std(s.aggregated));
    rows.push_back(std::move(row));
  }
  detail::write_table(out, rows);
  out << "\nStandard deviations use the n-1 divisor; '-' marks metrics that are absent or have a single value.\n";

  out << "\nEntropy and diversity (H in nats, SDI)\n\n";
  rows.clear();
  head = {"metric"};
  for (const auto& d : r.datasets) {
    head.push_back(d + " H");
    head.push_back(d + " SDI");
  }
  rows.push_back(head);
  const std::size_t nd = r.datasets.size();
  for (std::size_t m = 0; m < r.summaries.size(); ++m) {
    const auto& s = r.summaries[m];
    std::vector<std::string> row{detail::metric_label(s.metric_id, s.unit)};
    for (std::size_t d = 0; d < nd; ++d) {
      const auto& div = r.diversity[m * nd + d];
      row.push_back(div.entropy ? detail::fixed(*div.entropy) : "-");
      row.push_back(div.simpson ? detail::fixed(*div.simpson) : "-");
    }
    rows.push_back(std::move(row));
  }
  detail::write_table(out, rows);

  for (const auto& c : r.coverage) {
    out << "\nCoverage of " << c.metric_id << " (" << c.occupied.size() << " of " << c.bins << " bins occupied"
        << (c.exact ? ", minimum subset" : "") << ")\n\n";
    rows = {{"step", "sequence", "cumulative %"}};
    for (std::size_t i = 0; i < c.steps.size(); ++i) {
      rows.push_back({std::to_string(i + 1), c.steps[i].sequence, detail::fixed(c.steps[i].cumulative_pct, 1)});
    }
    detail::write_table(out, rows);
  }
}

}  // namespace slamchar
