#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "remfit/design.hpp"
#include "remfit/ingest.hpp"

namespace testing {

using remfit::ActorId;
using remfit::GeoPoint;
using remfit::Month;
using remfit::PatentRecord;

// Random records over `actors` ids and months [0, months), sorted by month.
inline std::vector<PatentRecord> random_records(std::mt19937_64& rng, std::size_t actors, int months,
                                                std::size_t count, std::size_t max_size = 4,
                                                double location_rate = 0.8) {
  std::uniform_int_distribution<int> month(0, months - 1);
  std::uniform_int_distribution<std::size_t> size(1, max_size);
  std::uniform_int_distribution<ActorId> actor(0, static_cast<ActorId>(actors - 1));
  std::uniform_real_distribution<double> lat(47.0, 55.0), lon(6.0, 15.0), unit(0.0, 1.0);
  std::vector<PatentRecord> out;
  for (std::size_t r = 0; r < count; ++r) {
    PatentRecord rec;
    rec.filing_month = month(rng);
    const std::size_t k = std::min(size(rng), actors);
    while (rec.inventors.size() < k) {
      const ActorId a = actor(rng);
      if (std::find(rec.inventors.begin(), rec.inventors.end(), a) == rec.inventors.end()) rec.inventors.push_back(a);
    }
    std::sort(rec.inventors.begin(), rec.inventors.end());
    for (std::size_t k2 = 0; k2 < rec.inventors.size(); ++k2) {
      if (unit(rng) < location_rate) rec.locations.emplace_back(GeoPoint{lat(rng), lon(rng)});
      else rec.locations.emplace_back(std::nullopt);
    }
    out.push_back(std::move(rec));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const PatentRecord& a, const PatentRecord& b) { return a.filing_month < b.filing_month; });
  for (std::size_t r = 0; r < out.size(); ++r) {
    char id[32];
    std::snprintf(id, sizeof id, "P%05zu", r);
    out[r].patent_id = id;
  }
  return out;
}

inline PatentRecord record(const std::string& id, Month month, std::vector<ActorId> inventors) {
  PatentRecord r;
  r.patent_id = id;
  r.filing_month = month;
  std::sort(inventors.begin(), inventors.end());
  r.inventors = std::move(inventors);
  r.locations.assign(r.inventors.size(), std::nullopt);
  return r;
}

// Synthetic design: `slices` event times, rows per slice drawn in
// [min_rows, max_rows], p standard-normal columns, events placed at random
// rows (at least one per slice) with multiplicities up to max_mult.
inline remfit::RowDesign random_design(std::mt19937_64& rng, std::size_t slices, std::size_t min_rows,
                                       std::size_t max_rows, std::size_t p, int max_events = 3,
                                       int max_mult = 2, std::size_t block_rows = 4096) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> rows(min_rows, max_rows);
  std::vector<remfit::RowDesign::Slice> out;
  for (std::size_t d = 0; d < slices; ++d) {
    const std::size_t n = rows(rng);
    remfit::RowDesign::Slice s;
    s.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (Eigen::Index r = 0; r < s.x.rows(); ++r)
      for (Eigen::Index c = 0; c < s.x.cols(); ++c) s.x(r, c) = normal(rng);
    s.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::uniform_int_distribution<int> events(1, max_events), mult(1, max_mult);
    const int e = events(rng);
    for (int k = 0; k < e; ++k) s.y(static_cast<Eigen::Index>(pick(rng))) += mult(rng);
    out.push_back(std::move(s));
  }
  std::vector<std::string> names;
  for (std::size_t c = 0; c < p; ++c) names.push_back("x" + std::to_string(c + 1));
  return remfit::RowDesign(names, std::move(out), block_rows);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testing
