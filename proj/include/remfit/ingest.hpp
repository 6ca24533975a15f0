#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace remfit {

using ActorId = std::uint32_t;
using Month = std::int32_t;

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

// One multi-inventor submission. Inventors are sorted by ActorId and
// distinct; locations[k] belongs to inventors[k].
struct PatentRecord {
  std::string patent_id;
  Month filing_month = 0;
  std::vector<ActorId> inventors;
  std::vector<std::optional<GeoPoint>> locations;

  std::size_t size() const noexcept { return inventors.size(); }
};

// Interned actor names. Ids are assigned in lexicographic order of the names,
// which fixes the canonical i < j ordering of a dyad.
class ActorTable {
 public:
  ActorTable() = default;
  explicit ActorTable(std::vector<std::string> sorted_unique_names);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(ActorId id) const { return names_.at(id); }
  std::optional<ActorId> find(std::string_view name) const;
  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ActorId> index_;
};

// Parsed event file: records sorted by (filing_month, patent_id).
struct EventData {
  ActorTable actors;
  std::vector<PatentRecord> records;
};

// Relational event for one inventor pair of one patent. `d` is the zero-based
// position of `month` in the event-time grid.
struct DyadEvent {
  std::size_t d = 0;
  Month month = 0;
  ActorId i = 0;
  ActorId j = 0;
  std::string patent_id;
};

struct StudyWindow {
  Month period_start = 0;
  Month period_end = 0;
  int history_months = 24;
  int burn_in_months = 24;
  // Re-anchor the history window at t(d) - history_months for every event
  // time instead of keeping it fixed at period_start - history_months.
  bool rolling_history = false;

  Month history_start() const noexcept { return period_start - history_months; }
  bool in_period(Month m) const noexcept { return m >= period_start && m <= period_end; }
  void validate() const;
};

struct CsvFormat {
  char delimiter = ',';
  std::optional<Month> min_month;
  std::optional<Month> max_month;
};

/// Reads the long CSV format (one row per patent/inventor pair) with header
/// columns patent_id, filing_month, inventor_id and optional lat, lon.
/// Throws ParseError for malformed rows and ValidationError for duplicate
/// (patent_id, inventor_id) pairs or inconsistent filing months.
EventData parse_events(std::istream& source, const CsvFormat& format = {});
EventData parse_events_file(const std::string& path, const CsvFormat& format = {});

// Writes records back in the format parse_events reads, rows ordered by
// (month, patent_id, inventor name).
void write_events(std::ostream& out, const EventData& data, char delimiter = ',');

struct FilterResult {
  std::vector<PatentRecord> kept;
  std::size_t removed = 0;
};

// Drops records with more than `max_inventors` inventors.
FilterResult filter_records(std::vector<PatentRecord> records, std::size_t max_inventors);

// Actors with a patent inside the period, or with patents both strictly
// before and strictly after it. Result is sorted.
std::vector<ActorId> active_actors(const std::vector<PatentRecord>& records,
                                   const StudyWindow& window);

// All C(k,2) canonical pairs of one record.
std::vector<std::pair<ActorId, ActorId>> record_dyads(const PatentRecord& record);

struct DyadExpansion {
  std::vector<Month> grid;  // strictly increasing event months
  std::vector<DyadEvent> events;
};

// Dyadic events inside the study period whose endpoints are both active.
// `active` must be sorted.
DyadExpansion expand_dyads(const std::vector<PatentRecord>& records,
                           const std::vector<ActorId>& active, const StudyWindow& window);

}  // namespace remfit
