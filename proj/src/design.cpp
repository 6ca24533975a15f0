#include "remfit/design.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "remfit/error.hpp"

namespace remfit {

// --- RowDesign --------------------------------------------------------------

RowDesign::RowDesign(std::vector<std::string> names, std::vector<Slice> slices, std::size_t block_rows)
    : names_(std::move(names)), slices_(std::move(slices)), block_rows_(std::max<std::size_t>(1, block_rows)) {
  for (const auto& s : slices_) {
    if (static_cast<std::size_t>(s.x.cols()) != names_.size() && s.x.rows() > 0)
      throw InputError("RowDesign: column count does not match names");
    if (s.x.rows() != s.y.size()) throw InputError("RowDesign: x and y row counts differ");
  }
}

RowDesign RowDesign::from_rows(const std::vector<DesignRow>& rows, const std::vector<Covariate>& columns,
                               std::size_t num_slices) {
  std::vector<std::size_t> counts(num_slices, 0);
  for (const auto& r : rows) {
    if (r.d >= num_slices) throw InputError("RowDesign::from_rows: row index beyond slice count");
    ++counts[r.d];
  }
  std::vector<Slice> slices(num_slices);
  for (std::size_t d = 0; d < num_slices; ++d) {
    slices[d].x.resize(static_cast<Eigen::Index>(counts[d]), static_cast<Eigen::Index>(columns.size()));
    slices[d].y.resize(static_cast<Eigen::Index>(counts[d]));
  }
  std::vector<Eigen::Index> fill(num_slices, 0);
  for (const auto& r : rows) {
    const Eigen::Index k = fill[r.d]++;
    for (std::size_t c = 0; c < columns.size(); ++c)
      slices[r.d].x(k, static_cast<Eigen::Index>(c)) = r.x[static_cast<std::size_t>(columns[c])];
    slices[r.d].y(k) = r.events;
  }
  std::vector<std::string> names;
  for (auto c : columns) names.emplace_back(covariate_name(c));
  return RowDesign(std::move(names), std::move(slices));
}

std::size_t RowDesign::num_blocks(std::size_t d) const {
  const auto n = static_cast<std::size_t>(slices_.at(d).x.rows());
  return (n + block_rows_ - 1) / block_rows_;
}

void RowDesign::fill_block(std::size_t d, std::size_t block, DesignBlock& out) const {
  const auto& s = slices_.at(d);
  const std::size_t begin = block * block_rows_;
  const std::size_t end = std::min<std::size_t>(begin + block_rows_, static_cast<std::size_t>(s.x.rows()));
  out.reserve(block_rows_, names_.size());
  const auto rows = static_cast<Eigen::Index>(end - begin);
  out.x.topRows(rows) = s.x.middleRows(static_cast<Eigen::Index>(begin), rows);
  out.y.head(rows) = s.y.segment(static_cast<Eigen::Index>(begin), rows);
  out.rows = end - begin;
}

// --- DesignSlice ------------------------------------------------------------

std::size_t DesignSlice::first_sparse(std::size_t row) const {
  if (row + 1 >= n) return sparse.size();
  const auto p = packed_index(row, row + 1, n);
  return static_cast<std::size_t>(
      std::lower_bound(sparse.begin(), sparse.end(), p,
                       [](const SparseEntry& e, std::uint64_t v) { return e.packed < v; }) -
      sparse.begin());
}

std::size_t DesignSlice::first_event(std::size_t row) const {
  if (row + 1 >= n) return events.size();
  const auto p = packed_index(row, row + 1, n);
  return static_cast<std::size_t>(
      std::lower_bound(events.begin(), events.end(), p,
                       [](const EventEntry& e, std::uint64_t v) { return e.packed < v; }) -
      events.begin());
}

std::array<double, kNumCovariates> DesignSlice::covariates(std::size_t i, std::size_t j) const {
  const auto p = packed_index(i, j, n);
  auto it = std::lower_bound(sparse.begin(), sparse.end(), p,
                             [](const SparseEntry& e, std::uint64_t v) { return e.packed < v; });
  int joint = 0;
  int common = 0;
  if (it != sparse.end() && it->packed == p) {
    joint = it->joint;
    common = it->common;
  }
  const int link = joint > 0 ? 1 : 0;
  return {static_cast<double>(self_count[i] + self_count[j]), static_cast<double>(joint),
          static_cast<double>(degree[i] + degree[j] - 2 * link), static_cast<double>(common),
          distance.empty() ? 0.0 : distance[p]};
}

DesignSlice make_slice(const NetworkState& state, const std::vector<ActorId>& actors,
                       const DistanceOptions& distance_options, bool distance_enabled) {
  DesignSlice s;
  s.n = actors.size();
  s.self_count.resize(s.n);
  s.degree.resize(s.n);

  std::size_t capacity = state.actor_capacity();
  if (!actors.empty()) capacity = std::max<std::size_t>(capacity, actors.back() + 1);
  std::vector<std::int64_t> local(capacity, -1);
  for (std::size_t l = 0; l < s.n; ++l) {
    local[actors[l]] = static_cast<std::int64_t>(l);
    s.self_count[l] = state.self_count(actors[l]);
    s.degree[l] = static_cast<int>(state.degree(actors[l]));
  }

  std::vector<DesignSlice::SparseEntry> entries;
  for (std::size_t l = 0; l < s.n; ++l) {
    const ActorId a = actors[l];
    for (ActorId b : state.neighbors(a)) {
      if (b <= a || b >= capacity || local[b] < 0) continue;
      entries.push_back({packed_index(l, static_cast<std::size_t>(local[b]), s.n), state.pair_count(a, b), 0});
    }
  }
  for (const auto& [key, count] : state.common_neighbor_counts()) {
    const auto a = static_cast<ActorId>(key >> 32);
    const auto b = static_cast<ActorId>(key & 0xffffffffu);
    if (a >= capacity || b >= capacity || local[a] < 0 || local[b] < 0) continue;
    entries.push_back({packed_index(static_cast<std::size_t>(local[a]), static_cast<std::size_t>(local[b]), s.n),
                       0, count});
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& x, const auto& y) { return x.packed < y.packed; });
  for (const auto& e : entries) {
    if (!s.sparse.empty() && s.sparse.back().packed == e.packed) {
      s.sparse.back().joint += e.joint;
      s.sparse.back().common += e.common;
    } else {
      s.sparse.push_back(e);
    }
  }

  if (distance_enabled) {
    std::vector<std::optional<GeoPoint>> loc(s.n);
    for (std::size_t l = 0; l < s.n; ++l) loc[l] = state.location(actors[l]);
    s.distance.resize(s.num_pairs());
    std::size_t p = 0;
    for (std::size_t i = 0; i < s.n; ++i)
      for (std::size_t j = i + 1; j < s.n; ++j, ++p) {
        const auto v = distance(loc[i], loc[j], distance_options);
        s.distance[p] = v ? *v : std::numeric_limits<double>::quiet_NaN();
      }
  }
  return s;
}

// --- NetworkDesign ----------------------------------------------------------

namespace {

bool has_column(const std::vector<Covariate>& cols, Covariate c) {
  return std::find(cols.begin(), cols.end(), c) != cols.end();
}

}  // namespace

NetworkDesign::NetworkDesign(std::vector<ActorId> actors, std::vector<DesignSlice> slices,
                             DesignOptions options)
    : actors_(std::move(actors)), slices_(std::move(slices)), options_(std::move(options)) {
  if (options_.columns.empty()) throw InputError("design needs at least one covariate column");
  const std::size_t n = actors_.size();
  const std::size_t target = std::max<std::size_t>(1, options_.target_block_pairs);
  row_starts_.push_back(0);
  std::size_t acc = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    acc += n - 1 - i;
    if (acc >= target) {
      row_starts_.push_back(i + 1);
      max_block_rows_ = std::max(max_block_rows_, acc);
      acc = 0;
    }
  }
  if (acc > 0 || row_starts_.size() == 1) {
    row_starts_.push_back(n == 0 ? 0 : n - 1);
    max_block_rows_ = std::max(max_block_rows_, acc);
  }
  max_block_rows_ = std::max<std::size_t>(max_block_rows_, 1);
}

std::vector<std::string> NetworkDesign::column_names() const {
  std::vector<std::string> out;
  for (auto c : options_.columns) out.emplace_back(covariate_name(c));
  return out;
}

std::vector<Month> NetworkDesign::months() const {
  std::vector<Month> out;
  out.reserve(slices_.size());
  for (const auto& s : slices_) out.push_back(s.month);
  return out;
}

void NetworkDesign::fill_block(std::size_t d, std::size_t block, DesignBlock& out) const {
  const auto& s = slices_.at(d);
  const auto& cols = options_.columns;
  const std::size_t ncol = cols.size();
  out.reserve(max_block_rows_, ncol);
  s.for_each_row(row_starts_.at(block), row_starts_.at(block + 1),
                 [&](std::size_t, std::size_t, std::uint64_t, const auto& x, int y) {
                   const auto r = static_cast<Eigen::Index>(out.rows++);
                   for (std::size_t c = 0; c < ncol; ++c)
                     out.x(r, static_cast<Eigen::Index>(c)) = x[static_cast<std::size_t>(cols[c])];
                   out.y(r) = y;
                 });
}

std::vector<DesignRow> NetworkDesign::rows(std::size_t d) const {
  std::vector<DesignRow> out;
  const auto& s = slices_.at(d);
  s.for_each_row(0, s.n, [&](std::size_t i, std::size_t j, std::uint64_t, const auto& x, int y) {
    out.push_back({d, actors_[i], actors_[j], x, y});
  });
  return out;
}

NetworkDesign build_design(const std::vector<PatentRecord>& records, const StudyWindow& window,
                           const std::vector<ActorId>& active, const DesignOptions& options) {
  window.validate();
  const auto expansion = expand_dyads(records, active, window);
  const bool with_distance = has_column(options.columns, Covariate::distance);

  std::unordered_map<ActorId, std::size_t> local;
  for (std::size_t l = 0; l < active.size(); ++l) local.emplace(active[l], l);

  std::vector<DesignSlice> slices;
  slices.reserve(expansion.grid.size());
  NetworkState state;
  std::size_t next = 0;
  std::size_t ev = 0;
  for (std::size_t d = 0; d < expansion.grid.size(); ++d) {
    const Month t = expansion.grid[d];
    const Month start = window.rolling_history ? t - window.history_months : window.history_start();
    for (; next < records.size() && records[next].filing_month < t; ++next)
      if (records[next].filing_month >= start) state.apply(records[next]);
    if (window.rolling_history) state.expire_before(start);

    DesignSlice slice = make_slice(state, active, options.distance, with_distance);
    slice.month = t;
    std::vector<DesignSlice::EventEntry> events;
    for (; ev < expansion.events.size() && expansion.events[ev].d == d; ++ev) {
      const auto& e = expansion.events[ev];
      events.push_back({packed_index(local.at(e.i), local.at(e.j), active.size()), 1});
    }
    std::sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.packed < b.packed; });
    for (const auto& e : events) {
      if (!slice.events.empty() && slice.events.back().packed == e.packed) ++slice.events.back().count;
      else slice.events.push_back(e);
    }
    slices.push_back(std::move(slice));
  }
  return NetworkDesign(active, std::move(slices), options);
}

std::vector<DesignRow> design_rows_exact(const std::vector<PatentRecord>& records,
                                         const StudyWindow& window, const std::vector<ActorId>& active,
                                         const DistanceOptions& distance_options) {
  window.validate();
  const auto expansion = expand_dyads(records, active, window);
  std::vector<DesignRow> rows;
  std::size_t ev = 0;
  for (std::size_t d = 0; d < expansion.grid.size(); ++d) {
    const NetworkState state = snapshot_at(records, expansion.grid, d, window);
    std::unordered_map<std::uint64_t, int> counts;
    for (; ev < expansion.events.size() && expansion.events[ev].d == d; ++ev)
      ++counts[dyad_key(expansion.events[ev].i, expansion.events[ev].j)];
    for (std::size_t a = 0; a < active.size(); ++a)
      for (std::size_t b = a + 1; b < active.size(); ++b) {
        const auto x = dyad_covariates(state, active[a], active[b], distance_options);
        if (!x) continue;
        auto it = counts.find(dyad_key(active[a], active[b]));
        rows.push_back({d, active[a], active[b], *x, it == counts.end() ? 0 : it->second});
      }
  }
  return rows;
}

RowDesign materialize_design(const std::vector<PatentRecord>& records, const StudyWindow& window,
                             const std::vector<ActorId>& active, const DesignOptions& options) {
  DistanceOptions dist = options.distance;
  if (!has_column(options.columns, Covariate::distance)) dist.missing = MissingLocation::impute_cap;
  const auto rows = design_rows_exact(records, window, active, dist);
  const auto grid = expand_dyads(records, active, window).grid;
  return RowDesign::from_rows(rows, options.columns, grid.size());
}

// --- profiling and export ---------------------------------------------------

ColumnProfile profile_column(const Design& design, std::size_t column, std::size_t max_sample,
                             std::size_t distinct_cap) {
  ColumnProfile prof;
  prof.min = std::numeric_limits<double>::infinity();
  prof.max = -std::numeric_limits<double>::infinity();
  std::unordered_set<double> distinct;
  DesignBlock block;
  const auto col = static_cast<Eigen::Index>(column);
  for (std::size_t d = 0; d < design.num_slices(); ++d)
    for (std::size_t b = 0; b < design.num_blocks(d); ++b) {
      design.fill_block(d, b, block);
      for (std::size_t r = 0; r < block.rows; ++r) {
        const double v = block.x(static_cast<Eigen::Index>(r), col);
        prof.min = std::min(prof.min, v);
        prof.max = std::max(prof.max, v);
        if (v != std::floor(v)) prof.integer_valued = false;
        if (distinct.size() < distinct_cap) distinct.insert(v);
        ++prof.count;
      }
    }
  prof.distinct = distinct.size();
  if (prof.count == 0) {
    prof.min = prof.max = 0.0;
    return prof;
  }
  const std::size_t stride = std::max<std::size_t>(1, (prof.count + max_sample - 1) / std::max<std::size_t>(1, max_sample));
  std::size_t k = 0;
  prof.sample.reserve(prof.count / stride + 1);
  for (std::size_t d = 0; d < design.num_slices(); ++d)
    for (std::size_t b = 0; b < design.num_blocks(d); ++b) {
      design.fill_block(d, b, block);
      for (std::size_t r = 0; r < block.rows; ++r, ++k)
        if (k % stride == 0) prof.sample.push_back(block.x(static_cast<Eigen::Index>(r), col));
    }
  return prof;
}

namespace {

void append_number(std::string& line, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, ptr);
}

}  // namespace

void export_poisson_long(std::ostream& out, const NetworkDesign& design, const ActorTable& actors,
                         const std::string& preamble) {
  if (!preamble.empty()) {
    out << preamble;
    if (preamble.back() != '\n') out << '\n';
  }
  out << "d,month,i,j,y,x1,x2,x3,x4,x5\n";
  std::string line;
  const auto& ids = design.actors();
  for (std::size_t d = 0; d < design.num_slices(); ++d) {
    const auto& s = design.slice(d);
    const std::string prefix = std::to_string(d + 1) + ',' + std::to_string(s.month) + ',';
    s.for_each_row(0, s.n, [&](std::size_t i, std::size_t j, std::uint64_t, const auto& x, int y) {
      line = prefix;
      line += actors.name(ids[i]);
      line += ',';
      line += actors.name(ids[j]);
      line += ',';
      line += std::to_string(y);
      for (double v : x) {
        line += ',';
        append_number(line, v);
      }
      line += '\n';
      out << line;
    });
  }
}

}  // namespace remfit
