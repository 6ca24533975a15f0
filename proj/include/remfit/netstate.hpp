#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "remfit/ingest.hpp"

namespace remfit {

inline std::uint64_t dyad_key(ActorId i, ActorId j) noexcept {
  if (i > j) std::swap(i, j);
  return (static_cast<std::uint64_t>(i) << 32) | j;
}

// The counting process Y(t) restricted to a history window: pair counts
// Y_ij, self counts Y_ii, the binarized neighbor sets, and for every pair the
// number of common neighbors on the binarized graph. All of them are kept
// incrementally; every applied record stays in a contribution log so that the
// oldest records can be expired exactly.
class NetworkState {
 public:
  static constexpr Month kEmpty = std::numeric_limits<Month>::min();

  // Throws ValidationError if the record is older than as_of_month().
  void apply(const PatentRecord& record);

  // Removes every logged record with filing_month < cutoff.
  void expire_before(Month cutoff);

  // Removes the most recently applied record. No-op on an empty state.
  void retract_last();

  int self_count(ActorId i) const noexcept;
  int pair_count(ActorId i, ActorId j) const noexcept;
  std::size_t degree(ActorId i) const noexcept;
  std::span<const ActorId> neighbors(ActorId i) const noexcept;
  bool adjacent(ActorId i, ActorId j) const noexcept { return pair_count(i, j) > 0; }
  // |N(i) ∩ N(j)|, maintained incrementally.
  int common_neighbors(ActorId i, ActorId j) const noexcept;
  std::optional<GeoPoint> location(ActorId i) const noexcept;

  Month as_of_month() const noexcept { return as_of_; }
  std::size_t num_records() const noexcept { return log_.size(); }
  std::size_t num_edges() const noexcept { return pair_counts_.size(); }
  // Actor ids are dense; this is one past the largest id ever touched.
  std::size_t actor_capacity() const noexcept { return self_.size(); }

  const std::unordered_map<std::uint64_t, int>& pair_counts() const noexcept { return pair_counts_; }
  const std::unordered_map<std::uint64_t, int>& common_neighbor_counts() const noexcept {
    return common_;
  }

  // Structural equality on counts, neighbors and locations (not on the log).
  bool same_counts(const NetworkState& other) const;

 private:
  struct LocationEntry {
    GeoPoint point;
    std::uint64_t source = 0;  // sequence number of the record that set it
  };
  struct LoggedRecord {
    std::uint64_t seq;
    PatentRecord record;
  };

  void ensure_actor(ActorId a);
  void add_edge(ActorId a, ActorId b);
  void remove_edge(ActorId a, ActorId b);
  void bump_common(ActorId a, ActorId b, int delta);
  void remove_contribution(const LoggedRecord& entry);

  std::vector<int> self_;
  std::vector<std::vector<ActorId>> neighbors_;  // sorted
  std::vector<std::optional<LocationEntry>> location_;
  std::unordered_map<std::uint64_t, int> pair_counts_;
  std::unordered_map<std::uint64_t, int> common_;
  std::deque<LoggedRecord> log_;
  std::uint64_t next_seq_ = 1;
  Month as_of_ = kEmpty;
};

// State strictly before grid[d]: every record with
// history_start <= month < grid[d], where history_start follows the window's
// fixed or rolling convention.
NetworkState snapshot_at(const std::vector<PatentRecord>& records, const std::vector<Month>& grid,
                         std::size_t d, const StudyWindow& window);

}  // namespace remfit
