#include "remfit/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>

#include "remfit/error.hpp"

namespace remfit {

ActorTable::ActorTable(std::vector<std::string> sorted_unique_names)
    : names_(std::move(sorted_unique_names)) {
  index_.reserve(names_.size());
  for (std::size_t k = 0; k < names_.size(); ++k) index_.emplace(names_[k], static_cast<ActorId>(k));
}

std::optional<ActorId> ActorTable::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void StudyWindow::validate() const {
  if (period_start >= period_end)
    throw InputError("study window: period_start must be before period_end");
  if (history_months < 0) throw InputError("study window: history_months must be >= 0");
  if (burn_in_months < 0) throw InputError("study window: burn_in_months must be >= 0");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Splits one line on `delim`, honouring double-quoted fields with "" escapes.
std::vector<std::string> split_fields(std::string_view line, char delim, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          field.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      if (!trim(field).empty()) throw ParseError(line_no, "unexpected quote inside field");
      field.clear();
      quoted = true;
      was_quoted = true;
    } else if (c == delim) {
      out.emplace_back(was_quoted ? field : std::string(trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field.push_back(c);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quoted field");
  out.emplace_back(was_quoted ? field : std::string(trim(field)));
  return out;
}

template <class T>
bool parse_number(std::string_view text, T& value) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

struct RawRow {
  Month month;
  std::string inventor;
  std::optional<GeoPoint> location;
  std::size_t line;
};

}  // namespace

EventData parse_events(std::istream& source, const CsvFormat& format) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(source, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    header = split_fields(line, format.delimiter, line_no);
    break;
  }
  if (header.empty()) return {};

  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    return std::nullopt;
  };
  const auto col_patent = column("patent_id");
  const auto col_month = column("filing_month");
  const auto col_inventor = column("inventor_id");
  const auto col_lat = column("lat");
  const auto col_lon = column("lon");
  if (!col_patent || !col_month || !col_inventor)
    throw ParseError(line_no, "header must contain patent_id, filing_month and inventor_id");
  if (col_lat.has_value() != col_lon.has_value())
    throw ParseError(line_no, "header must contain both lat and lon or neither");

  // Insertion order of patents is irrelevant; records are sorted afterwards.
  std::map<std::string, std::vector<RawRow>> groups;
  std::set<std::string> names;
  while (std::getline(source, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = split_fields(line, format.delimiter, line_no);
    if (fields.size() != header.size())
      throw ParseError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                    std::to_string(fields.size()));
    const std::string& patent = fields[*col_patent];
    const std::string& inventor = fields[*col_inventor];
    if (patent.empty()) throw ParseError(line_no, "empty patent_id");
    if (inventor.empty()) throw ParseError(line_no, "empty inventor_id");
    Month month = 0;
    if (!parse_number(fields[*col_month], month))
      throw ParseError(line_no, "filing_month is not an integer: '" + fields[*col_month] + "'");
    if ((format.min_month && month < *format.min_month) ||
        (format.max_month && month > *format.max_month))
      throw ParseError(line_no, "filing_month " + std::to_string(month) + " outside dataset range");

    std::optional<GeoPoint> location;
    if (col_lat) {
      const auto& lat_s = fields[*col_lat];
      const auto& lon_s = fields[*col_lon];
      if (lat_s.empty() != lon_s.empty())
        throw ParseError(line_no, "lat and lon must both be present or both be empty");
      if (!lat_s.empty()) {
        GeoPoint p;
        if (!parse_number(lat_s, p.lat) || !parse_number(lon_s, p.lon))
          throw ParseError(line_no, "lat/lon are not numbers");
        if (p.lat < -90.0 || p.lat > 90.0 || p.lon < -180.0 || p.lon > 180.0)
          throw ParseError(line_no, "lat/lon out of range");
        location = p;
      }
    }

    auto& rows = groups[patent];
    for (const auto& r : rows) {
      if (r.inventor == inventor)
        throw ValidationError("line " + std::to_string(line_no) + ": inventor '" + inventor +
                              "' listed twice on patent '" + patent + "'");
      if (r.month != month)
        throw ValidationError("line " + std::to_string(line_no) + ": patent '" + patent +
                              "' has inconsistent filing months");
    }
    rows.push_back({month, inventor, location, line_no});
    names.insert(inventor);
  }

  EventData data;
  data.actors = ActorTable(std::vector<std::string>(names.begin(), names.end()));
  data.records.reserve(groups.size());
  for (auto& [patent, rows] : groups) {
    PatentRecord rec;
    rec.patent_id = patent;
    rec.filing_month = rows.front().month;
    std::vector<std::pair<ActorId, std::optional<GeoPoint>>> inv;
    inv.reserve(rows.size());
    for (const auto& r : rows) inv.emplace_back(*data.actors.find(r.inventor), r.location);
    std::sort(inv.begin(), inv.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [id, loc] : inv) {
      rec.inventors.push_back(id);
      rec.locations.push_back(loc);
    }
    data.records.push_back(std::move(rec));
  }
  std::stable_sort(data.records.begin(), data.records.end(),
                   [](const PatentRecord& a, const PatentRecord& b) {
                     return a.filing_month < b.filing_month;
                   });
  return data;
}

EventData parse_events_file(const std::string& path, const CsvFormat& format) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return parse_events(in, format);
}

void write_events(std::ostream& out, const EventData& data, char delimiter) {
  const char d = delimiter;
  out << "patent_id" << d << "filing_month" << d << "inventor_id" << d << "lat" << d << "lon\n";
  auto quote = [d](const std::string& s) {
    if (s.find(d) == std::string::npos && s.find('"') == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q.push_back('"');
      q.push_back(c);
    }
    q.push_back('"');
    return q;
  };
  char buf[64];
  auto fmt = [&buf](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  };
  for (const auto& rec : data.records) {
    for (std::size_t k = 0; k < rec.inventors.size(); ++k) {
      out << quote(rec.patent_id) << d << rec.filing_month << d
          << quote(data.actors.name(rec.inventors[k])) << d;
      if (rec.locations[k]) out << fmt(rec.locations[k]->lat) << d << fmt(rec.locations[k]->lon);
      else out << d;
      out << '\n';
    }
  }
}

FilterResult filter_records(std::vector<PatentRecord> records, std::size_t max_inventors) {
  if (max_inventors < 2) throw InputError("max_inventors must be at least 2");
  FilterResult result;
  result.kept.reserve(records.size());
  for (auto& r : records) {
    if (r.inventors.size() > max_inventors) ++result.removed;
    else result.kept.push_back(std::move(r));
  }
  return result;
}

std::vector<ActorId> active_actors(const std::vector<PatentRecord>& records,
                                   const StudyWindow& window) {
  struct Seen {
    bool inside = false, before = false, after = false;
  };
  std::unordered_map<ActorId, Seen> seen;
  for (const auto& rec : records) {
    for (ActorId a : rec.inventors) {
      auto& s = seen[a];
      if (rec.filing_month < window.period_start) s.before = true;
      else if (rec.filing_month > window.period_end) s.after = true;
      else s.inside = true;
    }
  }
  std::vector<ActorId> out;
  for (const auto& [a, s] : seen)
    if (s.inside || (s.before && s.after)) out.push_back(a);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<ActorId, ActorId>> record_dyads(const PatentRecord& record) {
  std::vector<std::pair<ActorId, ActorId>> out;
  const auto& inv = record.inventors;
  out.reserve(inv.size() * (inv.size() - (inv.empty() ? 0 : 1)) / 2);
  for (std::size_t a = 0; a < inv.size(); ++a)
    for (std::size_t b = a + 1; b < inv.size(); ++b)
      out.emplace_back(std::min(inv[a], inv[b]), std::max(inv[a], inv[b]));
  return out;
}

DyadExpansion expand_dyads(const std::vector<PatentRecord>& records,
                           const std::vector<ActorId>& active, const StudyWindow& window) {
  auto is_active = [&](ActorId a) { return std::binary_search(active.begin(), active.end(), a); };
  DyadExpansion out;
  for (const auto& rec : records) {
    if (!window.in_period(rec.filing_month)) continue;
    for (auto [i, j] : record_dyads(rec)) {
      if (!is_active(i) || !is_active(j)) continue;
      out.events.push_back({0, rec.filing_month, i, j, rec.patent_id});
    }
  }
  std::sort(out.events.begin(), out.events.end(), [](const DyadEvent& a, const DyadEvent& b) {
    if (a.month != b.month) return a.month < b.month;
    if (a.i != b.i) return a.i < b.i;
    if (a.j != b.j) return a.j < b.j;
    return a.patent_id < b.patent_id;
  });
  for (const auto& e : out.events)
    if (out.grid.empty() || out.grid.back() != e.month) out.grid.push_back(e.month);
  std::size_t d = 0;
  for (auto& e : out.events) {
    while (out.grid[d] != e.month) ++d;
    e.d = d;
  }
  return out;
}

}  // namespace remfit
