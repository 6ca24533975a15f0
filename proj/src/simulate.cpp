#include "remfit/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "remfit/design.hpp"
#include "remfit/error.hpp"

namespace remfit {

namespace {

// Streams of the counter-based generator.
enum : std::uint64_t { kStreamCount = 1, kStreamLocationLat, kStreamLocationLon, kStreamSize, kStreamExtra };

std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Inversion sampling from one uniform; means above 30 are split into chunks
// that each get their own uniform.
int poisson_draw(double mean, std::uint64_t seed, std::uint64_t month, std::uint64_t dyad) {
  int total = 0;
  std::uint64_t chunk = 0;
  while (mean > 0.0) {
    const double mu = std::min(mean, 30.0);
    mean -= mu;
    const double u = counter_uniform(seed, kStreamCount, month, (dyad << 8) | (chunk++ & 0xff));
    double p = std::exp(-mu);
    double cdf = p;
    int k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mu / k;
      cdf += p;
    }
    total += k;
  }
  return total;
}

std::string actor_name(std::size_t index, std::size_t total) {
  int width = 4;
  for (std::size_t t = total; t >= 10000; t /= 10) ++width;
  std::string digits = std::to_string(index + 1);
  if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, width - digits.size(), '0');
  return "A" + digits;
}

}  // namespace

double counter_uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ stream);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double SimConfig::baseline_at(int month) const {
  if (baseline.size() == 1) return baseline.front();
  return baseline.at(static_cast<std::size_t>(month));
}

double SimConfig::effect(std::size_t q, double x) const {
  return effects[q] ? effects[q](x) : beta[q] * x;
}

void SimConfig::validate() const {
  if (actors < 2) throw InputError("simulation needs at least 2 actors");
  if (months < 1) throw InputError("simulation needs at least one period month");
  if (burn_in_months < 0) throw InputError("burn-in months must be non-negative");
  if (baseline.empty()) throw InputError("baseline schedule is empty");
  if (baseline.size() != 1 && baseline.size() != static_cast<std::size_t>(horizon()))
    throw InputError("baseline schedule needs 1 or " + std::to_string(horizon()) + " values");
  for (double v : baseline)
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("baseline rates must be positive and finite");
  if (inventor_probs.empty()) throw InputError("inventor-count schedule is empty");
  double total = 0.0;
  for (double p : inventor_probs) {
    if (!(p >= 0.0)) throw InputError("inventor-count probabilities must be non-negative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InputError("inventor-count probabilities must sum to 1");
  if (inventor_probs.size() + 1 > actors) throw InputError("inventor-count schedule exceeds the number of actors");
  if (!(box.lat_min <= box.lat_max && box.lon_min <= box.lon_max && box.lat_min >= -90.0 && box.lat_max <= 90.0 &&
        box.lon_min >= -180.0 && box.lon_max <= 180.0))
    throw InputError("invalid bounding box");
  for (double b : beta)
    if (!std::isfinite(b)) throw InputError("coefficients must be finite");
}

StudyWindow simulation_window(const SimConfig& config) {
  StudyWindow w;
  w.period_start = config.burn_in_months;
  w.period_end = config.horizon() - 1;
  w.history_months = config.burn_in_months;
  w.burn_in_months = config.burn_in_months;
  return w;
}

EventData simulate_stream(const SimConfig& config, SimTrace* trace) {
  config.validate();
  const std::size_t n = config.actors;
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t a = 0; a < n; ++a) names.push_back(actor_name(a, n));
  std::vector<ActorId> all(n);
  std::vector<GeoPoint> home(n);
  for (std::size_t a = 0; a < n; ++a) {
    all[a] = static_cast<ActorId>(a);
    const auto& b = config.box;
    home[a].lat = b.lat_min + (b.lat_max - b.lat_min) * counter_uniform(config.seed, kStreamLocationLat, a, 0);
    home[a].lon = b.lon_min + (b.lon_max - b.lon_min) * counter_uniform(config.seed, kStreamLocationLon, a, 0);
  }

  std::vector<double> cumulative;
  for (double p : config.inventor_probs) cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + p);

  EventData out;
  out.actors = ActorTable(names);
  NetworkState state;
  const double guard = static_cast<double>(n) * static_cast<double>(n);
  std::vector<std::pair<std::size_t, int>> hits;  // (packed dyad, count)

  for (int month = 0; month < config.horizon(); ++month) {
    const DesignSlice slice = make_slice(state, all, config.distance, true);
    const double rate = config.baseline_at(month);
    hits.clear();
    double expected = 0.0;
    slice.for_each_row(0, n, [&](std::size_t, std::size_t, std::uint64_t packed,
                                 const std::array<double, kNumCovariates>& x, int) {
      double eta = 0.0;
      for (std::size_t q = 0; q < kNumCovariates; ++q) eta += config.effect(q, x[q]);
      const double mu = rate * std::exp(eta);
      expected += mu;
      if (!(expected <= guard))
        throw GuardError("expected events in month " + std::to_string(month) + " exceed N^2 = " +
                         std::to_string(static_cast<long long>(guard)) + "; intensity is running away");
      const int k = poisson_draw(mu, config.seed, static_cast<std::uint64_t>(month), packed);
      if (k > 0) hits.emplace_back(packed, k);
    });

    // Dyads come back in packed order; decode them alongside.
    std::size_t draws = 0;
    std::vector<PatentRecord> emitted;
    std::size_t hit = 0;
    std::uint64_t p = 0;
    for (std::size_t i = 0; i < n && hit < hits.size(); ++i)
      for (std::size_t j = i + 1; j < n && hit < hits.size(); ++j, ++p) {
        if (hits[hit].first != p) continue;
        for (int c = 0; c < hits[hit].second; ++c, ++draws) {
          const std::uint64_t tag = (p << 16) | static_cast<std::uint64_t>(c & 0xffff);
          const double u = counter_uniform(config.seed, kStreamSize, static_cast<std::uint64_t>(month), tag);
          std::size_t size = 2;
          while (size - 2 + 1 < cumulative.size() && u >= cumulative[size - 2]) ++size;
          std::vector<ActorId> inv{static_cast<ActorId>(i), static_cast<ActorId>(j)};
          for (std::uint64_t e = 0; inv.size() < size; ++e) {
            const double v = counter_uniform(config.seed, kStreamExtra, static_cast<std::uint64_t>(month),
                                             (tag << 8) ^ e);
            const auto cand = static_cast<ActorId>(std::min<std::size_t>(n - 1, static_cast<std::size_t>(v * n)));
            if (std::find(inv.begin(), inv.end(), cand) == inv.end()) inv.push_back(cand);
          }
          std::sort(inv.begin(), inv.end());
          PatentRecord rec;
          rec.filing_month = month;
          rec.inventors = inv;
          for (ActorId a : inv) rec.locations.emplace_back(home[a]);
          emitted.push_back(std::move(rec));
        }
        ++hit;
      }

    char id[48];
    for (std::size_t k = 0; k < emitted.size(); ++k) {
      std::snprintf(id, sizeof id, "S%05d-%07zu", month, k + 1);
      emitted[k].patent_id = id;
    }
    for (const auto& rec : emitted) state.apply(rec);
    if (trace) {
      trace->expected.push_back(expected);
      trace->draws.push_back(draws);
      trace->patents.push_back(emitted.size());
    }
    std::move(emitted.begin(), emitted.end(), std::back_inserter(out.records));
  }
  return out;
}

namespace {

// Weighted quantile of (value, weight) pairs.
double weighted_quantile(std::vector<std::pair<double, double>> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double total = 0.0;
  for (const auto& e : v) total += e.second;
  double acc = 0.0;
  for (const auto& e : v) {
    acc += e.second;
    if (acc >= q * total) return e.first;
  }
  return v.back().first;
}

}  // namespace

RoundtripReport roundtrip_check(const SimConfig& config, const RoundtripOptions& options) {
  const EventData simulated = simulate_stream(config);
  std::stringstream csv;
  write_events(csv, simulated);
  EventData data = parse_events(csv);
  auto filtered = filter_records(std::move(data.records), options.max_inventors);
  const StudyWindow window = simulation_window(config);
  const auto active = active_actors(filtered.kept, window);
  DesignOptions dopt;
  dopt.columns = options.columns;
  dopt.distance = config.distance;
  const NetworkDesign design = build_design(filtered.kept, window, active, dopt);

  RoundtripReport report;
  report.event_times = design.num_slices();
  for (std::size_t d = 0; d < design.num_slices(); ++d)
    for (const auto& e : design.slice(d).events) report.events += static_cast<std::size_t>(e.count);

  report.fit = options.smooth ? fit_smooth(design, *options.smooth, options.fit) : fit_linear(design, options.fit);
  const auto& fit = report.fit;
  const auto& terms = fit.model->terms();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const auto q = static_cast<std::size_t>(options.columns.at(terms[t].column));
    report.names.push_back(terms[t].name);
    if (terms[t].is_smooth()) {
      report.truth.push_back(nan);
      report.estimate.push_back(nan);
      report.se.push_back(nan);
      report.z.push_back(nan);

      std::vector<std::pair<double, double>> mass;
      for (std::size_t d = 0; d < design.num_slices(); ++d)
        for (const auto& row : design.rows(d))
          if (row.events > 0) mass.emplace_back(row.x[q], row.events);
      CurveError ce;
      ce.name = terms[t].name;
      ce.lo = weighted_quantile(mass, 0.05);
      ce.hi = weighted_quantile(mass, 0.95);
      const double anchor = config.effect(q, 0.0);
      const int points = 200;
      for (int k = 0; k < points; ++k) {
        const double x = ce.lo + (ce.hi - ce.lo) * k / (points - 1);
        const double err = std::abs(fit.effect(t, x) - (config.effect(q, x) - anchor));
        ce.sup_error = std::max(ce.sup_error, err);
      }
      report.curves.push_back(ce);
    } else {
      const auto off = static_cast<Eigen::Index>(terms[t].offset);
      const double truth = config.effects[q] ? nan : config.beta[q];
      report.truth.push_back(truth);
      report.estimate.push_back(fit.coefficients[off]);
      report.se.push_back(fit.standard_errors[off]);
      report.z.push_back((fit.coefficients[off] - truth) / fit.standard_errors[off]);
    }
  }
  return report;
}

}  // namespace remfit
