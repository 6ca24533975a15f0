#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

#include "remfit/ingest.hpp"
#include "remfit/netstate.hpp"

namespace remfit {

enum class Covariate : int { patents_ij = 0, joint_patent = 1, two_star = 2, triangle = 3, distance = 4 };
inline constexpr std::size_t kNumCovariates = 5;
inline constexpr std::array<Covariate, kNumCovariates> kAllCovariates = {
    Covariate::patents_ij, Covariate::joint_patent, Covariate::two_star, Covariate::triangle,
    Covariate::distance};

std::string_view covariate_name(Covariate c) noexcept;
// Accepts the canonical names plus "x1".."x5" and "2-star".
std::optional<Covariate> parse_covariate(std::string_view name) noexcept;

enum class MissingLocation { impute_zero, impute_cap, drop };
enum class DistanceMetric { haversine, equirectangular };

struct DistanceOptions {
  double cap_km = 1000.0;
  MissingLocation missing = MissingLocation::impute_cap;
  DistanceMetric metric = DistanceMetric::haversine;
};

inline constexpr double kEarthRadiusKm = 6371.0;

double great_circle_km(const GeoPoint& a, const GeoPoint& b) noexcept;
// Flat distance on an equirectangular projection centred at the mean latitude.
double equirectangular_km(const GeoPoint& a, const GeoPoint& b) noexcept;

// Distance in units of 100 km, capped at cap_km. std::nullopt means the dyad
// is dropped (missing location under MissingLocation::drop).
std::optional<double> distance(const std::optional<GeoPoint>& a, const std::optional<GeoPoint>& b,
                               const DistanceOptions& options = {}) noexcept;

// Per-dyad statistics on a snapshot. Unknown actors contribute zero.
int patents_ij(const NetworkState& state, ActorId i, ActorId j) noexcept;
int joint_patents(const NetworkState& state, ActorId i, ActorId j) noexcept;
int two_star(const NetworkState& state, ActorId i, ActorId j) noexcept;
// Common neighbors counted once each, by explicit set intersection.
int triangle(const NetworkState& state, ActorId i, ActorId j) noexcept;

// One option-set dyad at one event time. x is indexed by Covariate.
struct DesignRow {
  std::size_t d = 0;
  ActorId i = 0;
  ActorId j = 0;
  std::array<double, kNumCovariates> x{};
  int events = 0;  // multiplicity in C_d

  bool is_event() const noexcept { return events > 0; }
};

// All five covariates of (i, j) on a snapshot via the per-dyad queries above.
std::optional<std::array<double, kNumCovariates>> dyad_covariates(const NetworkState& state,
                                                                   ActorId i, ActorId j,
                                                                   const DistanceOptions& options);

}  // namespace remfit
