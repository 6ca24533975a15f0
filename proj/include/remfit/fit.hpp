#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "remfit/design.hpp"
#include "remfit/likelihood.hpp"
#include "remfit/model.hpp"
#include "remfit/splines.hpp"

namespace remfit {

struct NewtonOptions {
  int max_iter = 100;
  int max_halving = 30;
  double score_tol = 1e-8;       // relative to max(1, |objective|)
  double objective_tol = 1e-10;  // absolute change per accepted step
  double ridge = 1e-8;           // first ridge tried when -H fails to factor
};

struct FitOptions {
  NewtonOptions newton;
  unsigned threads = 1;
  std::size_t curve_points = 200;
};

struct LambdaGrid {
  double log10_lo = -4.0;
  double log10_hi = 6.0;
  int points = 21;
  int sweeps = 2;
};

struct SmoothSpec {
  std::vector<std::size_t> smooth_columns;  // design columns that get a spline
  SplineConfig spline;
  LambdaGrid grid;
  // One value per smooth column; skips the AIC search when set.
  std::optional<std::vector<double>> fixed_lambdas;
};

struct Diagnostics {
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<double> objective_trace;
  int ridge_count = 0;
  double max_ridge = 0.0;
  int inner_fits = 0;
  std::vector<std::string> warnings;
};

struct EffectCurve {
  std::string name;
  bool smooth = false;
  std::vector<double> x;
  std::vector<double> fit;
  std::vector<double> se;
};

struct BaselineSeries {
  std::vector<double> level;       // lambda_d
  std::vector<double> cumulative;  // running sum of lambda_d
};

struct FitResult {
  std::shared_ptr<const Predictor> model;
  std::vector<std::string> parameter_names;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;  // inverse of the negative penalized Hessian
  Eigen::VectorXd standard_errors;

  std::vector<std::string> term_names;
  std::vector<double> lambdas;  // one per term, 0 for linear terms
  std::vector<double> edf;      // one per term
  double edf_total = 0.0;

  double log_likelihood = 0.0;            // unpenalized profile value
  double penalized_log_likelihood = 0.0;
  double aic = 0.0;

  BaselineSeries baseline;
  std::vector<EffectCurve> curves;
  Diagnostics diagnostics;

  // m_t(x) and its delta-method standard error under this fit.
  double effect(std::size_t term, double x) const;
  double effect_se(std::size_t term, double x) const;
};

struct NewtonResult {
  Eigen::VectorXd coefficients;
  Evaluation evaluation;  // penalized, with Hessian, at the optimum
  Diagnostics diagnostics;
};

// Maximizes l(u) - u'K u / 2 by Newton-Raphson with step halving. Throws
// ConvergenceError when neither stopping rule is met within max_iter.
NewtonResult newton_maximize(const LikelihoodContext& ctx, const Eigen::MatrixXd& penalty,
                             Eigen::VectorXd start, const NewtonOptions& options = {});

// Fit of an arbitrary feature map at fixed smoothing parameters (one per term).
FitResult fit_model(const Design& design, std::shared_ptr<const Predictor> model,
                    const std::vector<double>& lambdas, const FitOptions& options = {},
                    const Eigen::VectorXd* start = nullptr);

FitResult fit_linear(const Design& design, const FitOptions& options = {});

// Builds identifiable spline terms for the requested columns and selects
// their smoothing parameters by coordinate-wise AIC search.
FitResult fit_smooth(const Design& design, const SmoothSpec& spec, const FitOptions& options = {});

// Spline terms for the requested columns (others linear), anchored at zero.
std::shared_ptr<const Predictor> make_smooth_predictor(const Design& design, const SmoothSpec& spec,
                                                       std::vector<std::string>* warnings = nullptr);

BaselineSeries extract_baseline(const LikelihoodContext& ctx, const Eigen::VectorXd& coef);

// Per-column [min, max] over all design rows.
std::vector<std::pair<double, double>> column_ranges(const Design& design);

}  // namespace remfit
