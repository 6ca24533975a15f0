#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "remfit/fit.hpp"
#include "remfit/ingest.hpp"
#include "remfit/summarize.hpp"

namespace remfit {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

std::uint64_t fnv1a(std::string_view text) noexcept;

// Tool version and configuration hash stamped on every output.
struct Provenance {
  std::string config;  // canonical configuration text
  std::string hash() const;
  // "# remfit <version> config=<hash>"
  std::string header() const;
};

nlohmann::ordered_json to_json(const FitResult& fit, const std::vector<Month>& months, const Provenance& prov);
nlohmann::ordered_json to_json(const SummaryReport& report, const Provenance& prov);

// CSV tables: term,x,fit,se and d,month,level,cumulative.
void write_curves_csv(std::ostream& out, const FitResult& fit, const Provenance& prov);
void write_baseline_csv(std::ostream& out, const FitResult& fit, const std::vector<Month>& months,
                        const Provenance& prov);

// Coefficients as read back from a result JSON file.
std::vector<double> read_coefficients(const nlohmann::json& result);

}  // namespace remfit
