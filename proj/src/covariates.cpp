#include "remfit/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace remfit {

std::string_view covariate_name(Covariate c) noexcept {
  switch (c) {
    case Covariate::patents_ij: return "patents_ij";
    case Covariate::joint_patent: return "joint_patent";
    case Covariate::two_star: return "two_star";
    case Covariate::triangle: return "triangle";
    case Covariate::distance: return "distance";
  }
  return "?";
}

std::optional<Covariate> parse_covariate(std::string_view name) noexcept {
  for (auto c : kAllCovariates)
    if (name == covariate_name(c)) return c;
  if (name == "2-star" || name == "2star") return Covariate::two_star;
  if (name == "joint_patents") return Covariate::joint_patent;
  if (name.size() == 2 && name[0] == 'x' && name[1] >= '1' && name[1] <= '5')
    return static_cast<Covariate>(name[1] - '1');
  return std::nullopt;
}

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

double great_circle_km(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2);
  const double s2 = std::sin(dlambda / 2);
  const double h = std::min(1.0, s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2);
  return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

double equirectangular_km(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double mean_lat = 0.5 * (a.lat + b.lat) * kDegToRad;
  double dlon = b.lon - a.lon;
  if (dlon > 180.0) dlon -= 360.0;
  if (dlon < -180.0) dlon += 360.0;
  const double dx = dlon * kDegToRad * std::cos(mean_lat);
  const double dy = (b.lat - a.lat) * kDegToRad;
  return kEarthRadiusKm * std::sqrt(dx * dx + dy * dy);
}

std::optional<double> distance(const std::optional<GeoPoint>& a, const std::optional<GeoPoint>& b,
                               const DistanceOptions& options) noexcept {
  if (!a || !b) {
    switch (options.missing) {
      case MissingLocation::impute_zero: return 0.0;
      case MissingLocation::impute_cap: return options.cap_km / 100.0;
      case MissingLocation::drop: return std::nullopt;
    }
  }
  const double km = options.metric == DistanceMetric::haversine ? great_circle_km(*a, *b)
                                                                : equirectangular_km(*a, *b);
  return std::min(km, options.cap_km) / 100.0;
}

int patents_ij(const NetworkState& state, ActorId i, ActorId j) noexcept {
  return state.self_count(i) + state.self_count(j);
}

int joint_patents(const NetworkState& state, ActorId i, ActorId j) noexcept {
  return state.pair_count(i, j);
}

int two_star(const NetworkState& state, ActorId i, ActorId j) noexcept {
  const int link = state.adjacent(i, j) ? 1 : 0;
  return static_cast<int>(state.degree(i)) - link + static_cast<int>(state.degree(j)) - link;
}

int triangle(const NetworkState& state, ActorId i, ActorId j) noexcept {
  const auto a = state.neighbors(i);
  const auto b = state.neighbors(j);
  int count = 0;
  auto p = a.begin();
  auto q = b.begin();
  while (p != a.end() && q != b.end()) {
    if (*p < *q) {
      ++p;
    } else if (*q < *p) {
      ++q;
    } else {
      if (*p != i && *p != j) ++count;
      ++p;
      ++q;
    }
  }
  return count;
}

std::optional<std::array<double, kNumCovariates>> dyad_covariates(const NetworkState& state,
                                                                   ActorId i, ActorId j,
                                                                   const DistanceOptions& options) {
  const auto dist = distance(state.location(i), state.location(j), options);
  if (!dist) return std::nullopt;
  return std::array<double, kNumCovariates>{
      static_cast<double>(patents_ij(state, i, j)), static_cast<double>(joint_patents(state, i, j)),
      static_cast<double>(two_star(state, i, j)), static_cast<double>(triangle(state, i, j)), *dist};
}

}  // namespace remfit
