#include <doctest.h>

#include <set>
#include <sstream>

#include "helpers.hpp"
#include "remfit/summarize.hpp"

using namespace remfit;

TEST_CASE("three-patent example") {
  // {a, b}, {a}, {a, b, c}
  const std::vector<PatentRecord> recs = {testing::record("p1", 0, {0, 1}), testing::record("p2", 1, {0}),
                                          testing::record("p3", 2, {0, 1, 2})};
  const auto r = summarize(recs);
  CHECK(r.inventors == 3);
  CHECK(r.patents == 3);
  CHECK(r.single_ownership == 1);
  CHECK(r.unique_pairs == 3);
  CHECK(r.patents_per_inventor.min == 1.0);
  CHECK(r.patents_per_inventor.mean == 2.0);
  CHECK(r.patents_per_inventor.max == 3.0);
  CHECK(r.inventors_per_patent.min == 1.0);
  CHECK(r.inventors_per_patent.mean == 2.0);
  CHECK(r.inventors_per_patent.max == 3.0);
  CHECK(r.periods.empty());
}

TEST_CASE("empty input summarizes to zeros") {
  const auto r = summarize({});
  CHECK(r.inventors == 0);
  CHECK(r.patents == 0);
  CHECK(r.single_ownership == 0);
  CHECK(r.unique_pairs == 0);
  CHECK(r.patents_per_inventor.mean == 0.0);
  CHECK(r.inventors_per_patent.max == 0.0);
  std::ostringstream text;
  write_summary_text(text, r);
  CHECK(text.str().find("patents") != std::string::npos);
}

TEST_CASE("period statistics against direct counts") {
  const std::vector<PatentRecord> recs = {testing::record("r1", 2, {0, 1, 2}), testing::record("r2", 12, {0, 1}),
                                          testing::record("r3", 15, {2, 3, 4}),
                                          testing::record("r4", 15, {3, 4})};
  StudyWindow w;
  w.period_start = 10;
  w.period_end = 20;
  w.history_months = 10;
  const auto r = summarize(recs, {w});
  REQUIRE(r.periods.size() == 1);
  const auto& p = r.periods[0];
  CHECK(p.active_actors == 5);
  CHECK(p.edges == 4);  // 01, 23, 24, 34
  CHECK(p.density == doctest::Approx(0.4));
  CHECK(p.event_times == 2);
  CHECK(p.dyad_events == 5);
  CHECK(p.option_rows == 20);
  // Joint patents: slice 0 has (0,1), (0,2), (1,2) at 1; slice 1 has (0,1) at 2 and (0,2), (1,2) at 1.
  CHECK(p.covariates[1].min == 0.0);
  CHECK(p.covariates[1].max == 2.0);
  CHECK(p.covariates[1].mean == doctest::Approx(7.0 / 20.0));
  CHECK(p.covariates[4].mean == 10.0);
}

TEST_CASE("summary invariants on random records") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto recs = testing::random_records(rng, 25, 30, 60, 5);
    StudyWindow w;
    w.period_start = 10;
    w.period_end = 29;
    w.history_months = 10;
    const auto r = summarize(recs, {w});
    std::set<ActorId> inv;
    std::size_t slots = 0, singles = 0;
    std::set<std::pair<ActorId, ActorId>> pairs;
    for (const auto& rec : recs) {
      slots += rec.size();
      singles += rec.size() == 1;
      for (std::size_t a = 0; a < rec.size(); ++a) {
        inv.insert(rec.inventors[a]);
        for (std::size_t b = a + 1; b < rec.size(); ++b) pairs.emplace(rec.inventors[a], rec.inventors[b]);
      }
    }
    CHECK(r.inventors == inv.size());
    CHECK(r.single_ownership == singles);
    CHECK(r.unique_pairs == pairs.size());
    CHECK(r.unique_pairs <= r.inventors * (r.inventors - 1) / 2);
    CHECK(r.patents_per_inventor.mean * static_cast<double>(r.inventors) == doctest::Approx(static_cast<double>(slots)));
    CHECK(r.inventors_per_patent.mean * static_cast<double>(r.patents) == doctest::Approx(static_cast<double>(slots)));
    const auto& p = r.periods.at(0);
    const std::size_t n = p.active_actors;
    CHECK(p.edges <= n * (n - 1) / 2);
    CHECK(p.density >= 0.0);
    CHECK(p.density <= 1.0);
    CHECK(p.dyad_events >= p.edges);
    CHECK(p.option_rows == p.event_times * n * (n - 1) / 2);
    for (const auto& c : p.covariates) {
      CHECK(c.min <= c.mean);
      CHECK(c.mean <= c.max);
    }
  }
}
