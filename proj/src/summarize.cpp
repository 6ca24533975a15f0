#include "remfit/summarize.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "remfit/design.hpp"
#include "remfit/netstate.hpp"

namespace remfit {

namespace {

template <class It>
Range range_of(It first, It last) {
  Range r;
  if (first == last) return r;
  r.min = std::numeric_limits<double>::infinity();
  r.max = -r.min;
  double sum = 0.0;
  std::size_t n = 0;
  for (; first != last; ++first, ++n) {
    const double v = static_cast<double>(*first);
    r.min = std::min(r.min, v);
    r.max = std::max(r.max, v);
    sum += v;
  }
  r.mean = sum / static_cast<double>(n);
  return r;
}

PeriodSummary summarize_period(const std::vector<PatentRecord>& records, const StudyWindow& window,
                               const DistanceOptions& distance) {
  PeriodSummary s;
  s.window = window;
  const auto active = active_actors(records, window);
  s.active_actors = active.size();

  std::unordered_set<std::uint64_t> edges;
  for (const auto& rec : records) {
    if (!window.in_period(rec.filing_month)) continue;
    for (const auto& [i, j] : record_dyads(rec))
      if (std::binary_search(active.begin(), active.end(), i) && std::binary_search(active.begin(), active.end(), j))
        edges.insert(dyad_key(i, j));
  }
  s.edges = edges.size();
  const double pairs = static_cast<double>(active.size()) * (static_cast<double>(active.size()) - 1.0) / 2.0;
  s.density = pairs > 0.0 ? static_cast<double>(s.edges) / pairs : 0.0;

  DesignOptions opt;
  opt.distance = distance;
  const NetworkDesign design = build_design(records, window, active, opt);
  s.event_times = design.num_slices();
  std::array<double, kNumCovariates> lo, hi, sum{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t d = 0; d < design.num_slices(); ++d) {
    const auto& slice = design.slice(d);
    for (const auto& e : slice.events) s.dyad_events += static_cast<std::size_t>(e.count);
    slice.for_each_row(0, slice.n, [&](std::size_t, std::size_t, std::uint64_t,
                                       const std::array<double, kNumCovariates>& x, int) {
      ++s.option_rows;
      for (std::size_t q = 0; q < kNumCovariates; ++q) {
        lo[q] = std::min(lo[q], x[q]);
        hi[q] = std::max(hi[q], x[q]);
        sum[q] += x[q];
      }
    });
  }
  if (s.option_rows > 0)
    for (std::size_t q = 0; q < kNumCovariates; ++q)
      s.covariates[q] = {lo[q], sum[q] / static_cast<double>(s.option_rows), hi[q]};
  return s;
}

}  // namespace

SummaryReport summarize(const std::vector<PatentRecord>& records, const std::vector<StudyWindow>& windows,
                        const DistanceOptions& distance) {
  SummaryReport r;
  std::unordered_map<ActorId, std::size_t> per_inventor;
  std::unordered_set<std::uint64_t> pairs;
  std::vector<std::size_t> sizes;
  for (const auto& rec : records) {
    sizes.push_back(rec.size());
    if (rec.size() == 1) ++r.single_ownership;
    for (ActorId a : rec.inventors) ++per_inventor[a];
    for (const auto& [i, j] : record_dyads(rec)) pairs.insert(dyad_key(i, j));
  }
  r.patents = records.size();
  r.inventors = per_inventor.size();
  r.unique_pairs = pairs.size();
  std::vector<std::size_t> counts;
  counts.reserve(per_inventor.size());
  for (const auto& [a, c] : per_inventor) counts.push_back(c);
  std::sort(counts.begin(), counts.end());
  r.patents_per_inventor = range_of(counts.begin(), counts.end());
  r.inventors_per_patent = range_of(sizes.begin(), sizes.end());
  for (const auto& w : windows) r.periods.push_back(summarize_period(records, w, distance));
  return r;
}

void write_summary_text(std::ostream& out, const SummaryReport& r) {
  const auto flags = out.flags();
  out << std::left;
  auto count = [&](const char* label, std::size_t v) { out << "  " << std::setw(28) << label << v << '\n'; };
  auto range = [&](const char* label, const Range& v) {
    out << "  " << std::setw(28) << label << std::fixed << std::setprecision(3) << std::setw(10) << v.min
        << std::setw(10) << v.mean << std::setw(10) << v.max << '\n';
    out.unsetf(std::ios::floatfield);
  };
  out << "records\n";
  count("inventors", r.inventors);
  count("patents", r.patents);
  count("single-ownership patents", r.single_ownership);
  count("unique inventor pairs", r.unique_pairs);
  out << "  " << std::setw(28) << "" << std::setw(10) << "min" << std::setw(10) << "mean" << "max\n";
  range("patents per inventor", r.patents_per_inventor);
  range("inventors per patent", r.inventors_per_patent);
  for (const auto& p : r.periods) {
    out << "\nperiod " << p.window.period_start << ".." << p.window.period_end << " (history "
        << p.window.history_months << " months)\n";
    count("active inventors", p.active_actors);
    count("edges", p.edges);
    out << "  " << std::setw(28) << "density" << std::setprecision(6) << p.density << '\n';
    count("event times", p.event_times);
    count("dyad events", p.dyad_events);
    count("option rows", p.option_rows);
    for (std::size_t q = 0; q < kNumCovariates; ++q) {
      const std::string name(covariate_name(kAllCovariates[q]));
      range(name.c_str(), p.covariates[q]);
    }
  }
  out.flags(flags);
}

}  // namespace remfit
