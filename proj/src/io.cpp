#include "remfit/io.hpp"

#include <charconv>
#include <cstdio>
#include <ostream>

#include "remfit/error.hpp"

namespace remfit {

namespace {

std::string number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

nlohmann::ordered_json range_json(const Range& r) { return {{"min", r.min}, {"mean", r.mean}, {"max", r.max}}; }

}  // namespace

std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string Provenance::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config)));
  return buf;
}

std::string Provenance::header() const { return "# remfit " + std::string(kVersion) + " config=" + hash(); }

nlohmann::ordered_json to_json(const FitResult& fit, const std::vector<Month>& months, const Provenance& prov) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = "remfit";
  j["version"] = kVersion;
  j["config_hash"] = prov.hash();
  j["model"] = fit.model->num_smooth() > 0 ? "smooth" : "linear";

  ordered_json params = ordered_json::array();
  for (std::size_t k = 0; k < fit.parameter_names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    params.push_back({{"name", fit.parameter_names[k]},
                      {"estimate", fit.coefficients[i]},
                      {"se", fit.standard_errors[i]}});
  }
  j["parameters"] = params;
  j["coefficients"] = std::vector<double>(fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size());

  ordered_json cov = ordered_json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(r + 1));
    for (Eigen::Index c = 0; c <= r; ++c) row[static_cast<std::size_t>(c)] = fit.covariance(r, c);
    cov.push_back(row);
  }
  j["covariance_lower"] = cov;

  ordered_json terms = ordered_json::array();
  const auto& model_terms = fit.model->terms();
  for (std::size_t t = 0; t < model_terms.size(); ++t) {
    ordered_json term{{"name", model_terms[t].name},
                      {"smooth", model_terms[t].is_smooth()},
                      {"offset", model_terms[t].offset},
                      {"size", model_terms[t].size()},
                      {"lambda", fit.lambdas.at(t)},
                      {"edf", fit.edf.at(t)}};
    if (model_terms[t].smooth) {
      term["degree"] = model_terms[t].smooth->basis().degree();
      term["knots"] = model_terms[t].smooth->basis().knots();
    }
    terms.push_back(term);
  }
  j["terms"] = terms;
  j["edf_total"] = fit.edf_total;
  j["log_likelihood"] = fit.log_likelihood;
  j["penalized_log_likelihood"] = fit.penalized_log_likelihood;
  j["aic"] = fit.aic;

  j["baseline"] = {{"month", months}, {"level", fit.baseline.level}, {"cumulative", fit.baseline.cumulative}};

  ordered_json curves = ordered_json::array();
  for (const auto& c : fit.curves)
    curves.push_back({{"name", c.name}, {"smooth", c.smooth}, {"x", c.x}, {"fit", c.fit}, {"se", c.se}});
  j["curves"] = curves;

  const auto& d = fit.diagnostics;
  j["diagnostics"] = {{"converged", d.converged},       {"iterations", d.iterations},
                      {"gradient_norm", d.gradient_norm}, {"objective_trace", d.objective_trace},
                      {"ridge_count", d.ridge_count},   {"max_ridge", d.max_ridge},
                      {"inner_fits", d.inner_fits},     {"warnings", d.warnings}};
  return j;
}

nlohmann::ordered_json to_json(const SummaryReport& r, const Provenance& prov) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = "remfit";
  j["version"] = kVersion;
  j["config_hash"] = prov.hash();
  j["inventors"] = r.inventors;
  j["patents"] = r.patents;
  j["single_ownership_patents"] = r.single_ownership;
  j["unique_pairs"] = r.unique_pairs;
  j["patents_per_inventor"] = range_json(r.patents_per_inventor);
  j["inventors_per_patent"] = range_json(r.inventors_per_patent);
  ordered_json periods = ordered_json::array();
  for (const auto& p : r.periods) {
    ordered_json cov;
    for (std::size_t q = 0; q < kNumCovariates; ++q)
      cov[std::string(covariate_name(kAllCovariates[q]))] = range_json(p.covariates[q]);
    periods.push_back({{"period_start", p.window.period_start},
                       {"period_end", p.window.period_end},
                       {"history_months", p.window.history_months},
                       {"active_inventors", p.active_actors},
                       {"edges", p.edges},
                       {"density", p.density},
                       {"event_times", p.event_times},
                       {"dyad_events", p.dyad_events},
                       {"option_rows", p.option_rows},
                       {"covariates", cov}});
  }
  j["periods"] = periods;
  return j;
}

void write_curves_csv(std::ostream& out, const FitResult& fit, const Provenance& prov) {
  out << prov.header() << "\nterm,smooth,x,fit,se\n";
  for (const auto& c : fit.curves)
    for (std::size_t k = 0; k < c.x.size(); ++k)
      out << c.name << ',' << (c.smooth ? 1 : 0) << ',' << number(c.x[k]) << ',' << number(c.fit[k] + 0.0) << ','
          << number(c.se[k]) << '\n';
}

void write_baseline_csv(std::ostream& out, const FitResult& fit, const std::vector<Month>& months,
                        const Provenance& prov) {
  out << prov.header() << "\nd,month,level,cumulative\n";
  for (std::size_t d = 0; d < fit.baseline.level.size(); ++d)
    out << d + 1 << ',' << (d < months.size() ? months[d] : 0) << ',' << number(fit.baseline.level[d]) << ','
        << number(fit.baseline.cumulative[d]) << '\n';
}

std::vector<double> read_coefficients(const nlohmann::json& result) {
  if (!result.contains("coefficients")) throw InputError("result JSON has no coefficients");
  return result.at("coefficients").get<std::vector<double>>();
}

}  // namespace remfit
