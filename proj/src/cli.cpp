#include "remfit/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "remfit/design.hpp"
#include "remfit/error.hpp"
#include "remfit/fit.hpp"
#include "remfit/ingest.hpp"
#include "remfit/io.hpp"
#include "remfit/parallel.hpp"
#include "remfit/simulate.hpp"
#include "remfit/summarize.hpp"

namespace remfit::cli {

namespace fs = std::filesystem;

namespace {

struct WindowFlags {
  std::optional<Month> period_start;
  std::optional<Month> period_end;
  int history_months = 24;
  int burn_in_months = 24;
  bool rolling_history = false;
};

struct CommonFlags {
  std::string input;
  std::string out_dir = ".";
  char delimiter = ',';
  std::size_t max_inventors = 20;
  double distance_cap_km = 1000.0;
  std::string missing_location = "cap";
  std::string metric = "haversine";
  unsigned threads = 0;
  std::string log_level = "warn";
  WindowFlags window;
};

struct FitFlags {
  bool linear = false;
  std::vector<std::string> smooth;
  std::vector<std::string> covariates;
  int knots = 10;
  int degree = 3;
  std::string placement = "quantile";
  std::vector<double> lambda_grid;  // lo, hi, n
  std::vector<double> lambdas;
  std::size_t curve_points = 200;
  int max_iter = 100;
  std::string export_poisson;
  std::uint64_t seed = 0;
};

struct SimFlags {
  std::string output;
  std::string out_dir;
  std::size_t actors = 100;
  int months = 36;
  int burn_in_months = 24;
  std::vector<double> beta{-0.10, 0.50, 0.02, 0.10, -0.30};
  std::vector<double> baseline{0.03};
  std::vector<double> inventor_probs{1.0};
  std::uint64_t seed = 1;
  double distance_cap_km = 1000.0;
  std::string log_level = "warn";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--input", f.input, "Event CSV (patent_id, filing_month, inventor_id[, lat, lon])")->required();
  cmd->add_option("--out-dir", f.out_dir, "Output directory");
  cmd->add_option("--delimiter", f.delimiter, "Field delimiter of the input");
  cmd->add_option("--max-inventors", f.max_inventors, "Drop patents with more inventors")->check(CLI::Range(2, 1 << 20));
  cmd->add_option("--period-start", f.window.period_start, "First study month (default: first month + burn-in)");
  cmd->add_option("--period-end", f.window.period_end, "Last study month (default: last month in the data)");
  cmd->add_option("--history-months", f.window.history_months, "Covariate look-back before the period")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--burn-in-months", f.window.burn_in_months, "Months used only as history")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--rolling-history", f.window.rolling_history, "Re-anchor the history window at every event time");
  cmd->add_option("--distance-cap-km", f.distance_cap_km, "Truncation of the distance covariate")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--missing-location", f.missing_location, "Missing locations: cap, zero or drop")
      ->check(CLI::IsMember({"cap", "zero", "drop"}));
  cmd->add_option("--distance-metric", f.metric, "haversine or equirectangular")
      ->check(CLI::IsMember({"haversine", "equirectangular"}));
  cmd->add_option("--threads", f.threads, "Worker threads (default: REMFIT_THREADS or all cores)");
  cmd->add_option("--log-level", f.log_level, "trace, debug, info, warn, error, off");
}

DistanceOptions distance_options(const CommonFlags& f) {
  DistanceOptions d;
  d.cap_km = f.distance_cap_km;
  d.missing = f.missing_location == "zero"   ? MissingLocation::impute_zero
              : f.missing_location == "drop" ? MissingLocation::drop
                                             : MissingLocation::impute_cap;
  d.metric = f.metric == "equirectangular" ? DistanceMetric::equirectangular : DistanceMetric::haversine;
  return d;
}

StudyWindow resolve_window(const WindowFlags& f, const std::vector<PatentRecord>& records) {
  if (records.empty() && (!f.period_start || !f.period_end))
    throw InputError("no records left to derive the study window from");
  StudyWindow w;
  w.history_months = f.history_months;
  w.burn_in_months = f.burn_in_months;
  w.rolling_history = f.rolling_history;
  w.period_start = f.period_start ? *f.period_start : records.front().filing_month + f.burn_in_months;
  w.period_end = f.period_end ? *f.period_end : records.back().filing_month;
  w.validate();
  return w;
}

void setup_logging(const std::string& level, std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("remfit", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::from_str(level));
  spdlog::set_default_logger(logger);
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::string canonical_config(const std::string& name, const CLI::App& cmd) {
  return name + "\n" + cmd.config_to_str(true, false);
}

struct Loaded {
  EventData data;
  std::vector<PatentRecord> records;
  std::size_t removed = 0;
};

Loaded load(const CommonFlags& f) {
  CsvFormat fmt;
  fmt.delimiter = f.delimiter;
  Loaded l;
  l.data = parse_events_file(f.input, fmt);
  auto filtered = filter_records(std::move(l.data.records), f.max_inventors);
  l.records = std::move(filtered.kept);
  l.removed = filtered.removed;
  spdlog::info("read {} actors, kept {} patents, removed {} with more than {} inventors", l.data.actors.size(),
               l.records.size(), l.removed, f.max_inventors);
  return l;
}

int cmd_ingest(const CommonFlags& f, const std::string& config, std::ostream& out) {
  Loaded l = load(f);
  const Provenance prov{config};
  const fs::path dir(f.out_dir);
  EventData store{l.data.actors, l.records};
  {
    auto file = open_output(dir / "events.csv");
    file << prov.header() << '\n';
    write_events(file, store, ',');
  }
  std::vector<StudyWindow> windows;
  if (!l.records.empty()) {
    const bool explicit_window = f.window.period_start || f.window.period_end;
    try {
      windows.push_back(resolve_window(f.window, l.records));
    } catch (const InputError& e) {
      if (explicit_window) throw;
      spdlog::warn("no period summary: {}", e.what());
    }
  }
  const SummaryReport report = summarize(l.records, windows, distance_options(f));
  auto json = to_json(report, prov);
  json["removed_patents"] = l.removed;
  {
    auto file = open_output(dir / "summary.json");
    file << json.dump(2) << '\n';
  }
  {
    auto file = open_output(dir / "summary.txt");
    file << prov.header() << '\n';
    write_summary_text(file, report);
  }
  write_summary_text(out, report);
  return kOk;
}

std::vector<std::size_t> resolve_columns(const std::vector<std::string>& names, const std::vector<Covariate>& columns,
                                         const char* flag) {
  std::vector<std::size_t> out;
  for (const auto& n : names) {
    const auto c = parse_covariate(n);
    if (!c) throw InputError(std::string(flag) + ": unknown covariate '" + n + "'");
    const auto it = std::find(columns.begin(), columns.end(), *c);
    if (it == columns.end()) throw InputError(std::string(flag) + ": covariate '" + n + "' is not in the model");
    out.push_back(static_cast<std::size_t>(it - columns.begin()));
  }
  return out;
}

int cmd_fit(const CommonFlags& f, const FitFlags& ff, const std::string& config, std::ostream& out) {
  if (ff.linear && !ff.smooth.empty()) throw InputError("--linear and --smooth are mutually exclusive");
  const bool smooth = !ff.smooth.empty();
  if (!smooth && (!ff.lambdas.empty() || !ff.lambda_grid.empty()))
    throw InputError("--lambda and --lambda-grid need --smooth");
  Loaded l = load(f);
  const StudyWindow window = resolve_window(f.window, l.records);
  const auto active = active_actors(l.records, window);

  DesignOptions dopt;
  dopt.distance = distance_options(f);
  if (!ff.covariates.empty()) {
    dopt.columns.clear();
    for (const auto& n : ff.covariates) {
      const auto c = parse_covariate(n);
      if (!c) throw InputError("--covariates: unknown covariate '" + n + "'");
      if (std::find(dopt.columns.begin(), dopt.columns.end(), *c) == dopt.columns.end()) dopt.columns.push_back(*c);
    }
  }
  const NetworkDesign design = build_design(l.records, window, active, dopt);
  if (design.num_slices() == 0) throw InputError("no dyadic events between active inventors inside the period");
  spdlog::info("{} active inventors, {} event times", active.size(), design.num_slices());

  const Provenance prov{config};
  const fs::path dir(f.out_dir);
  if (!ff.export_poisson.empty()) {
    auto file = open_output(ff.export_poisson);
    export_poisson_long(file, design, l.data.actors, prov.header() + "\n");
  }

  FitOptions fopt;
  fopt.threads = f.threads == 0 ? default_thread_count() : f.threads;
  fopt.curve_points = ff.curve_points;
  fopt.newton.max_iter = ff.max_iter;

  FitResult result;
  try {
    if (smooth) {
      SmoothSpec spec;
      spec.smooth_columns = resolve_columns(ff.smooth, dopt.columns, "--smooth");
      spec.spline.basis_dim = ff.knots;
      spec.spline.degree = ff.degree;
      spec.spline.placement = ff.placement == "uniform"   ? KnotPlacement::uniform
                              : ff.placement == "pspline" ? KnotPlacement::pspline
                                                          : KnotPlacement::quantile;
      if (!ff.lambda_grid.empty()) {
        if (ff.lambda_grid.size() != 3 || ff.lambda_grid[2] < 1 || ff.lambda_grid[0] > ff.lambda_grid[1])
          throw InputError("--lambda-grid expects lo,hi,n with lo <= hi and n >= 1 (log10 scale)");
        spec.grid.log10_lo = ff.lambda_grid[0];
        spec.grid.log10_hi = ff.lambda_grid[1];
        spec.grid.points = static_cast<int>(ff.lambda_grid[2]);
      }
      if (!ff.lambdas.empty()) {
        if (ff.lambdas.size() != spec.smooth_columns.size())
          throw InputError("--lambda needs one value per --smooth covariate");
        spec.fixed_lambdas = ff.lambdas;
      }
      result = fit_smooth(design, spec, fopt);
    } else {
      result = fit_linear(design, fopt);
    }
  } catch (const ConvergenceError& e) {
    auto file = open_output(dir / "diagnostics.json");
    nlohmann::ordered_json j{{"schema_version", kSchemaVersion},
                             {"config_hash", prov.hash()},
                             {"error", e.what()},
                             {"objective_trace", e.objective_trace()}};
    file << j.dump(2) << '\n';
    throw;
  }
  for (const auto& w : result.diagnostics.warnings) spdlog::warn("{}", w);

  const auto months = design.months();
  {
    auto file = open_output(dir / "fit.json");
    file << to_json(result, months, prov).dump(2) << '\n';
  }
  {
    auto file = open_output(dir / "curves.csv");
    write_curves_csv(file, result, prov);
  }
  {
    auto file = open_output(dir / "baseline.csv");
    write_baseline_csv(file, result, months, prov);
  }

  out << std::left << std::setw(24) << "parameter" << std::setw(16) << "estimate" << "se\n";
  for (std::size_t k = 0; k < result.parameter_names.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    out << std::setw(24) << result.parameter_names[k] << std::setw(16) << result.coefficients[i]
        << result.standard_errors[i] << '\n';
  }
  out << "log-likelihood " << result.log_likelihood << ", AIC " << result.aic << ", iterations "
      << result.diagnostics.iterations << '\n';
  return kOk;
}

int cmd_simulate(const SimFlags& sf, const std::string& config, std::ostream& out) {
  SimConfig c;
  c.actors = sf.actors;
  c.months = sf.months;
  c.burn_in_months = sf.burn_in_months;
  if (sf.beta.size() != kNumCovariates) throw InputError("--beta needs 5 values");
  std::copy(sf.beta.begin(), sf.beta.end(), c.beta.begin());
  c.baseline = sf.baseline;
  c.inventor_probs = sf.inventor_probs;
  c.seed = sf.seed;
  c.distance.cap_km = sf.distance_cap_km;
  SimTrace trace;
  const EventData data = simulate_stream(c, &trace);
  const Provenance prov{config};
  std::ostringstream text;
  text << prov.header() << '\n';
  write_events(text, data, ',');
  const std::string path = sf.out_dir.empty() ? sf.output : (fs::path(sf.out_dir) / "events.csv").string();
  if (path.empty() || path == "-") {
    out << text.str();
  } else {
    auto file = open_output(path);
    file << text.str();
  }
  spdlog::info("simulated {} patents over {} months", data.records.size(), c.horizon());
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Relational event models for collaboration networks", "remfit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  CommonFlags ingest_flags;
  auto* ingest = app.add_subcommand("ingest", "Validate an event file and summarize it");
  add_common(ingest, ingest_flags);

  CommonFlags fit_common;
  FitFlags fit_flags;
  auto* fit = app.add_subcommand("fit", "Fit the relational event model");
  add_common(fit, fit_common);
  fit->add_flag("--linear", fit_flags.linear, "Linear effects for all covariates (default)");
  fit->add_option("--smooth", fit_flags.smooth, "Covariates with smooth effects")->delimiter(',');
  fit->add_option("--covariates", fit_flags.covariates, "Covariates in the model (default: all five)")
      ->delimiter(',');
  fit->add_option("--knots", fit_flags.knots, "Basis dimension K per smooth")->check(CLI::Range(4, 200));
  fit->add_option("--degree", fit_flags.degree, "Spline degree")->check(CLI::Range(1, 5));
  fit->add_option("--knot-placement", fit_flags.placement, "quantile, uniform or pspline")
      ->check(CLI::IsMember({"quantile", "uniform", "pspline"}));
  fit->add_option("--lambda-grid", fit_flags.lambda_grid, "log10 grid lo,hi,n for smoothing parameters")
      ->delimiter(',');
  fit->add_option("--lambda", fit_flags.lambdas, "Fixed smoothing parameters, one per smooth")->delimiter(',');
  fit->add_option("--curve-points", fit_flags.curve_points, "Points per effect curve");
  fit->add_option("--max-iter", fit_flags.max_iter, "Newton iterations")->check(CLI::PositiveNumber);
  fit->add_option("--export-poisson", fit_flags.export_poisson, "Also write the long Poisson layout here");
  fit->add_option("--seed", fit_flags.seed, "Accepted for uniformity; the fit itself is deterministic");

  SimFlags sim_flags;
  auto* sim = app.add_subcommand("simulate", "Simulate an event stream from known effects");
  sim->add_option("--output,-o", sim_flags.output, "Output CSV (default: stdout)");
  sim->add_option("--out-dir", sim_flags.out_dir, "Directory; writes events.csv there")->excludes("--output");
  sim->add_option("--actors", sim_flags.actors, "Number of actors");
  sim->add_option("--months", sim_flags.months, "Study-period months");
  sim->add_option("--burn-in-months", sim_flags.burn_in_months, "History months simulated before the period");
  sim->add_option("--beta", sim_flags.beta, "Five coefficients")->delimiter(',');
  sim->add_option("--baseline", sim_flags.baseline, "Baseline rate, constant or one per month")->delimiter(',');
  sim->add_option("--inventor-probs", sim_flags.inventor_probs, "P(k inventors) for k = 2, 3, ...")->delimiter(',');
  sim->add_option("--seed", sim_flags.seed, "Random seed");
  sim->add_option("--distance-cap-km", sim_flags.distance_cap_km, "Truncation of the distance covariate")
      ->check(CLI::PositiveNumber);
  sim->add_option("--log-level", sim_flags.log_level, "trace, debug, info, warn, error, off");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    std::ostringstream help, error;
    app.exit(e, help, error);
    out << help.str();
    return kOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream help, error;
    app.exit(e, help, error);
    err << error.str();
    return kInputError;
  }

  try {
    if (*ingest) {
      setup_logging(ingest_flags.log_level, err);
      return cmd_ingest(ingest_flags, canonical_config("ingest", *ingest), out);
    }
    if (*fit) {
      setup_logging(fit_common.log_level, err);
      return cmd_fit(fit_common, fit_flags, canonical_config("fit", *fit), out);
    }
    setup_logging(sim_flags.log_level, err);
    return cmd_simulate(sim_flags, canonical_config("simulate", *sim), out);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidationError;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kConvergenceError;
  } catch (const SingularHessianError& e) {
    err << "error: " << e.what() << '\n';
    return kConvergenceError;
  } catch (const GuardError& e) {
    err << "error: " << e.what() << '\n';
    return kGuardError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace remfit::cli
