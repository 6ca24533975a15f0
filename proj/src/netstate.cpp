#include "remfit/netstate.hpp"

#include <algorithm>

#include "remfit/error.hpp"

namespace remfit {

void NetworkState::ensure_actor(ActorId a) {
  if (a >= self_.size()) {
    self_.resize(a + 1, 0);
    neighbors_.resize(a + 1);
    location_.resize(a + 1);
  }
}

void NetworkState::bump_common(ActorId a, ActorId b, int delta) {
  const auto key = dyad_key(a, b);
  auto it = common_.find(key);
  if (it == common_.end()) {
    common_.emplace(key, delta);
    return;
  }
  it->second += delta;
  if (it->second == 0) common_.erase(it);
}

void NetworkState::add_edge(ActorId a, ActorId b) {
  for (ActorId k : neighbors_[a]) bump_common(b, k, +1);
  for (ActorId k : neighbors_[b]) bump_common(a, k, +1);
  auto& na = neighbors_[a];
  na.insert(std::lower_bound(na.begin(), na.end(), b), b);
  auto& nb = neighbors_[b];
  nb.insert(std::lower_bound(nb.begin(), nb.end(), a), a);
}

void NetworkState::remove_edge(ActorId a, ActorId b) {
  auto& na = neighbors_[a];
  na.erase(std::lower_bound(na.begin(), na.end(), b));
  auto& nb = neighbors_[b];
  nb.erase(std::lower_bound(nb.begin(), nb.end(), a));
  for (ActorId k : neighbors_[a]) bump_common(b, k, -1);
  for (ActorId k : neighbors_[b]) bump_common(a, k, -1);
}

void NetworkState::apply(const PatentRecord& record) {
  if (record.filing_month < as_of_)
    throw ValidationError("record '" + record.patent_id + "' (month " +
                          std::to_string(record.filing_month) +
                          ") is older than the network state (month " + std::to_string(as_of_) + ")");
  const std::uint64_t seq = next_seq_++;
  for (std::size_t k = 0; k < record.inventors.size(); ++k) {
    const ActorId a = record.inventors[k];
    ensure_actor(a);
    ++self_[a];
    if (k < record.locations.size() && record.locations[k])
      location_[a] = LocationEntry{*record.locations[k], seq};
  }
  for (auto [i, j] : record_dyads(record)) {
    int& c = pair_counts_[dyad_key(i, j)];
    if (++c == 1) add_edge(i, j);
  }
  as_of_ = record.filing_month;
  log_.push_back({seq, record});
}

void NetworkState::remove_contribution(const LoggedRecord& entry) {
  const auto& record = entry.record;
  for (auto [i, j] : record_dyads(record)) {
    auto it = pair_counts_.find(dyad_key(i, j));
    if (--it->second == 0) {
      pair_counts_.erase(it);
      remove_edge(i, j);
    }
  }
  for (ActorId a : record.inventors) --self_[a];
}

void NetworkState::expire_before(Month cutoff) {
  while (!log_.empty() && log_.front().record.filing_month < cutoff) {
    const auto& entry = log_.front();
    remove_contribution(entry);
    // Anything newer carrying a location would already have replaced it.
    for (ActorId a : entry.record.inventors)
      if (location_[a] && location_[a]->source == entry.seq) location_[a].reset();
    log_.pop_front();
  }
}

void NetworkState::retract_last() {
  if (log_.empty()) return;
  const LoggedRecord entry = std::move(log_.back());
  log_.pop_back();
  remove_contribution(entry);
  for (ActorId a : entry.record.inventors) {
    if (!location_[a] || location_[a]->source != entry.seq) continue;
    location_[a].reset();
    for (auto it = log_.rbegin(); it != log_.rend() && !location_[a]; ++it) {
      const auto& inv = it->record.inventors;
      for (std::size_t k = 0; k < inv.size(); ++k)
        if (inv[k] == a && k < it->record.locations.size() && it->record.locations[k])
          location_[a] = LocationEntry{*it->record.locations[k], it->seq};
    }
  }
  as_of_ = log_.empty() ? kEmpty : log_.back().record.filing_month;
}

int NetworkState::self_count(ActorId i) const noexcept {
  return i < self_.size() ? self_[i] : 0;
}

int NetworkState::pair_count(ActorId i, ActorId j) const noexcept {
  if (i == j) return self_count(i);
  auto it = pair_counts_.find(dyad_key(i, j));
  return it == pair_counts_.end() ? 0 : it->second;
}

std::size_t NetworkState::degree(ActorId i) const noexcept {
  return i < neighbors_.size() ? neighbors_[i].size() : 0;
}

std::span<const ActorId> NetworkState::neighbors(ActorId i) const noexcept {
  if (i >= neighbors_.size()) return {};
  return neighbors_[i];
}

int NetworkState::common_neighbors(ActorId i, ActorId j) const noexcept {
  auto it = common_.find(dyad_key(i, j));
  return it == common_.end() ? 0 : it->second;
}

std::optional<GeoPoint> NetworkState::location(ActorId i) const noexcept {
  if (i >= location_.size() || !location_[i]) return std::nullopt;
  return location_[i]->point;
}

bool NetworkState::same_counts(const NetworkState& other) const {
  const std::size_t n = std::max(self_.size(), other.self_.size());
  for (ActorId a = 0; a < n; ++a) {
    if (self_count(a) != other.self_count(a)) return false;
    const auto x = neighbors(a);
    const auto y = other.neighbors(a);
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
    if (location(a) != other.location(a)) return false;
  }
  return pair_counts_ == other.pair_counts_ && common_ == other.common_;
}

NetworkState snapshot_at(const std::vector<PatentRecord>& records, const std::vector<Month>& grid,
                         std::size_t d, const StudyWindow& window) {
  if (d >= grid.size()) throw InputError("snapshot_at: event index out of range");
  const Month t = grid[d];
  const Month start = window.rolling_history ? t - window.history_months : window.history_start();
  NetworkState state;
  for (const auto& rec : records) {
    if (rec.filing_month >= t) break;
    if (rec.filing_month >= start) state.apply(rec);
  }
  return state;
}

}  // namespace remfit
