#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "remfit/covariates.hpp"
#include "remfit/ingest.hpp"

namespace remfit {

struct Range {
  double min = 0.0;
  double mean = 0.0;
  double max = 0.0;
};

struct PeriodSummary {
  StudyWindow window;
  std::size_t active_actors = 0;
  std::size_t edges = 0;  // distinct active dyads with a joint patent in the period
  double density = 0.0;   // edges / C(N, 2)
  std::size_t event_times = 0;
  std::size_t dyad_events = 0;
  std::size_t option_rows = 0;
  std::array<Range, kNumCovariates> covariates{};
};

struct SummaryReport {
  std::size_t inventors = 0;
  std::size_t patents = 0;
  std::size_t single_ownership = 0;
  std::size_t unique_pairs = 0;
  Range patents_per_inventor;
  Range inventors_per_patent;
  std::vector<PeriodSummary> periods;
};

SummaryReport summarize(const std::vector<PatentRecord>& records, const std::vector<StudyWindow>& windows = {},
                        const DistanceOptions& distance = {});

void write_summary_text(std::ostream& out, const SummaryReport& report);

}  // namespace remfit
