#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "remfit/covariates.hpp"
#include "remfit/fit.hpp"
#include "remfit/ingest.hpp"

namespace remfit {

// Latitude/longitude box for the fixed actor locations.
struct BoundingBox {
  double lat_min = 47.3;
  double lat_max = 55.0;
  double lon_min = 5.9;
  double lon_max = 15.0;
};

struct SimConfig {
  std::size_t actors = 100;
  int burn_in_months = 24;  // simulated before the study period
  int months = 36;          // study period length
  std::array<double, kNumCovariates> beta{};
  // Nonlinear effects m_q(x); an empty entry means beta[q] * x.
  std::array<std::function<double(double)>, kNumCovariates> effects;
  // Baseline rate per simulated month; a single value is used for all months.
  std::vector<double> baseline{0.01};
  BoundingBox box;
  std::uint64_t seed = 1;
  // inventor_probs[k - 2] is the probability that a drawn dyad event is
  // recorded as a k-inventor patent. The extra inventors are drawn uniformly.
  std::vector<double> inventor_probs{1.0};
  DistanceOptions distance;

  int horizon() const noexcept { return burn_in_months + months; }
  double baseline_at(int month) const;
  double effect(std::size_t q, double x) const;
  void validate() const;
};

// Per-month totals recorded while simulating.
struct SimTrace {
  std::vector<double> expected;       // sum over dyads of the Poisson means
  std::vector<std::size_t> draws;     // dyad events drawn
  std::vector<std::size_t> patents;   // records emitted
};

// Month-by-month Poisson simulation from the intensity with covariates taken
// from the simulator's own network state. Deterministic in the seed; throws
// GuardError when the expected number of events in a month exceeds N^2.
EventData simulate_stream(const SimConfig& config, SimTrace* trace = nullptr);

// Window matching a simulated stream: the burn-in months form the history.
StudyWindow simulation_window(const SimConfig& config);

// Counter-based generator: a uniform in [0, 1) for each (seed, stream, a, b).
double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) noexcept;

struct RoundtripOptions {
  FitOptions fit;
  std::optional<SmoothSpec> smooth;  // empty: linear fit
  std::size_t max_inventors = 20;
  std::vector<Covariate> columns{kAllCovariates.begin(), kAllCovariates.end()};
};

struct CurveError {
  std::string name;
  double lo = 0.0;  // central 90% of the event-row covariate mass
  double hi = 0.0;
  double sup_error = 0.0;
};

struct RoundtripReport {
  std::vector<std::string> names;
  std::vector<double> truth;  // linear terms only; NaN for smooth terms
  std::vector<double> estimate;
  std::vector<double> se;
  std::vector<double> z;
  std::vector<CurveError> curves;
  std::size_t events = 0;
  std::size_t event_times = 0;
  FitResult fit;
};

// Simulates, writes and re-reads the CSV, filters, builds the design and fits.
RoundtripReport roundtrip_check(const SimConfig& config, const RoundtripOptions& options = {});

}  // namespace remfit
