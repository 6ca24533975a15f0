#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "remfit/covariates.hpp"
#include "remfit/ingest.hpp"
#include "remfit/netstate.hpp"

namespace remfit {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A chunk of option-set rows of one event time: covariates and the event
// multiplicity y (0 for non-events). Only the first `rows` rows are valid.
struct DesignBlock {
  RowMatrix x;
  Eigen::VectorXd y;
  std::size_t rows = 0;

  void reserve(std::size_t max_rows, std::size_t cols) {
    if (static_cast<std::size_t>(x.rows()) < max_rows || static_cast<std::size_t>(x.cols()) != cols) {
      x.resize(static_cast<Eigen::Index>(max_rows), static_cast<Eigen::Index>(cols));
      y.resize(static_cast<Eigen::Index>(max_rows));
    }
    rows = 0;
  }
};

// Streaming access to the per-event-time design. Each slice d is split into
// a fixed set of blocks; the split depends only on the data, never on the
// number of worker threads.
class Design {
 public:
  virtual ~Design() = default;
  virtual std::size_t num_slices() const = 0;
  virtual std::size_t num_columns() const = 0;
  virtual std::vector<std::string> column_names() const = 0;
  virtual std::size_t num_blocks(std::size_t d) const = 0;
  virtual std::size_t max_block_rows() const = 0;
  virtual void fill_block(std::size_t d, std::size_t block, DesignBlock& out) const = 0;
};

// Explicitly materialized design, used for the exact full-pass mode and for
// synthetic instances.
class RowDesign final : public Design {
 public:
  struct Slice {
    RowMatrix x;
    Eigen::VectorXd y;
  };

  RowDesign(std::vector<std::string> names, std::vector<Slice> slices, std::size_t block_rows = 4096);

  // Rows must be grouped by d (ascending); keeps the listed covariates.
  static RowDesign from_rows(const std::vector<DesignRow>& rows, const std::vector<Covariate>& columns,
                             std::size_t num_slices);

  std::size_t num_slices() const override { return slices_.size(); }
  std::size_t num_columns() const override { return names_.size(); }
  std::vector<std::string> column_names() const override { return names_; }
  std::size_t num_blocks(std::size_t d) const override;
  std::size_t max_block_rows() const override { return block_rows_; }
  void fill_block(std::size_t d, std::size_t block, DesignBlock& out) const override;

  const Slice& slice(std::size_t d) const { return slices_.at(d); }

 private:
  std::vector<std::string> names_;
  std::vector<Slice> slices_;
  std::size_t block_rows_;
};

// Index of the unordered pair (i, j), i < j, among n actors.
inline std::uint64_t packed_index(std::size_t i, std::size_t j, std::size_t n) noexcept {
  return static_cast<std::uint64_t>(i) * (2 * n - i - 1) / 2 + (j - i - 1);
}

// Compressed covariates of one event time over a fixed list of local actors.
// x1 and x3 are assembled from per-actor aggregates, x2 and x4 live in the
// sparse list, x5 is stored densely.
struct DesignSlice {
  struct SparseEntry {
    std::uint64_t packed;
    int joint;   // Y_ij
    int common;  // |N(i) ∩ N(j)|
  };
  struct EventEntry {
    std::uint64_t packed;
    int count;
  };

  Month month = 0;
  std::size_t n = 0;
  std::vector<int> self_count;  // Y_ii per local actor
  std::vector<int> degree;      // |N(i)| on the full history graph
  std::vector<SparseEntry> sparse;
  std::vector<double> distance;  // packed; NaN marks a dropped dyad
  std::vector<EventEntry> events;

  std::size_t num_pairs() const noexcept { return n * (n - (n > 0 ? 1 : 0)) / 2; }

  // Raw covariates of local pair (i, j), i < j. x5 is NaN for a dropped dyad.
  std::array<double, kNumCovariates> covariates(std::size_t i, std::size_t j) const;

  // Visits every retained option dyad in packed order:
  // fn(i, j, packed, const std::array<double,5>& x, int events).
  template <class F>
  void for_each_row(std::size_t row_begin, std::size_t row_end, F&& fn) const;

  std::size_t first_sparse(std::size_t row) const;
  std::size_t first_event(std::size_t row) const;
};

// Builds the slice of `state` for the local actors `actors` (sorted global
// ids). `distance_enabled = false` leaves x5 at zero and skips storage.
DesignSlice make_slice(const NetworkState& state, const std::vector<ActorId>& actors,
                       const DistanceOptions& distance_options, bool distance_enabled = true);

struct DesignOptions {
  std::vector<Covariate> columns{kAllCovariates.begin(), kAllCovariates.end()};
  DistanceOptions distance;
  std::size_t target_block_pairs = 8192;
};

// Design built incrementally from the event stream: one NetworkState is
// streamed forward, and slices keep the compressed representation.
class NetworkDesign final : public Design {
 public:
  NetworkDesign(std::vector<ActorId> actors, std::vector<DesignSlice> slices, DesignOptions options);

  std::size_t num_slices() const override { return slices_.size(); }
  std::size_t num_columns() const override { return options_.columns.size(); }
  std::vector<std::string> column_names() const override;
  std::size_t num_blocks(std::size_t) const override { return row_starts_.size() - 1; }
  std::size_t max_block_rows() const override { return max_block_rows_; }
  void fill_block(std::size_t d, std::size_t block, DesignBlock& out) const override;

  const std::vector<ActorId>& actors() const noexcept { return actors_; }
  const DesignSlice& slice(std::size_t d) const { return slices_.at(d); }
  Month month(std::size_t d) const { return slices_.at(d).month; }
  const DesignOptions& options() const noexcept { return options_; }
  std::vector<Month> months() const;

  // All retained rows of slice d with global actor ids.
  std::vector<DesignRow> rows(std::size_t d) const;

 private:
  std::vector<ActorId> actors_;
  std::vector<DesignSlice> slices_;
  DesignOptions options_;
  std::vector<std::size_t> row_starts_;  // block b covers local rows [row_starts_[b], row_starts_[b+1])
  std::size_t max_block_rows_ = 0;
};

// Streams the records once, maintaining the network state incrementally.
// Records must be sorted by month; `active` must be sorted.
NetworkDesign build_design(const std::vector<PatentRecord>& records, const StudyWindow& window,
                           const std::vector<ActorId>& active, const DesignOptions& options = {});

// Exact full pass: every row recomputed from a from-scratch snapshot with the
// per-dyad covariate queries.
std::vector<DesignRow> design_rows_exact(const std::vector<PatentRecord>& records,
                                         const StudyWindow& window,
                                         const std::vector<ActorId>& active,
                                         const DistanceOptions& distance_options = {});

RowDesign materialize_design(const std::vector<PatentRecord>& records, const StudyWindow& window,
                             const std::vector<ActorId>& active, const DesignOptions& options = {});

// Exact min/max, distinct-value count (capped), and a deterministic strided
// sample of one design column.
struct ColumnProfile {
  double min = 0.0;
  double max = 0.0;
  std::size_t distinct = 0;  // saturates at distinct_cap
  bool integer_valued = true;
  std::size_t count = 0;
  std::vector<double> sample;
};

ColumnProfile profile_column(const Design& design, std::size_t column,
                             std::size_t max_sample = 200000, std::size_t distinct_cap = 4096);

// Long "Poisson" layout: one line per option-set dyad and event time with
// header d,month,i,j,y,x1,x2,x3,x4,x5; d is 1-based. Lines starting with '#'
// in `preamble` are written before the header.
void export_poisson_long(std::ostream& out, const NetworkDesign& design, const ActorTable& actors,
                         const std::string& preamble = {});

// ---------------------------------------------------------------------------

template <class F>
void DesignSlice::for_each_row(std::size_t row_begin, std::size_t row_end, F&& fn) const {
  std::size_t sp = first_sparse(row_begin);
  std::size_t ev = first_event(row_begin);
  const bool has_distance = !distance.empty();
  std::array<double, kNumCovariates> x{};
  for (std::size_t i = row_begin; i < row_end; ++i) {
    std::uint64_t p = packed_index(i, i + 1, n);
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      int joint = 0;
      int common = 0;
      while (sp < sparse.size() && sparse[sp].packed < p) ++sp;
      if (sp < sparse.size() && sparse[sp].packed == p) {
        joint = sparse[sp].joint;
        common = sparse[sp].common;
      }
      int y = 0;
      while (ev < events.size() && events[ev].packed < p) ++ev;
      if (ev < events.size() && events[ev].packed == p) y = events[ev].count;
      const double dist = has_distance ? distance[p] : 0.0;
      if (std::isnan(dist)) continue;
      const int link = joint > 0 ? 1 : 0;
      x[0] = self_count[i] + self_count[j];
      x[1] = joint;
      x[2] = degree[i] + degree[j] - 2 * link;
      x[3] = common;
      x[4] = dist;
      fn(i, j, p, x, y);
    }
  }
}

}  // namespace remfit
