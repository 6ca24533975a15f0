#include "remfit/fit.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "remfit/error.hpp"

namespace remfit {

namespace {

// Solves A x = b for symmetric positive definite A, adding a growing ridge
// when the Cholesky factorization fails or is numerically singular.
Eigen::VectorXd solve_ridged(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, double ridge,
                             Diagnostics& diag) {
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  auto usable = [&](const Eigen::LLT<Eigen::MatrixXd>& f) {
    return f.info() == Eigen::Success && f.rcond() > 1e-14;
  };
  if (usable(llt)) return llt.solve(b);
  const auto n = A.rows();
  for (int attempt = 0; attempt < 16; ++attempt, ridge *= 10.0) {
    llt.compute(A + ridge * Eigen::MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      ++diag.ridge_count;
      diag.max_ridge = std::max(diag.max_ridge, ridge);
      return llt.solve(b);
    }
  }
  throw ConvergenceError("negative Hessian could not be factorized even with a ridge", diag.objective_trace);
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

NewtonResult newton_maximize(const LikelihoodContext& ctx, const Eigen::MatrixXd& penalty,
                             Eigen::VectorXd start, const NewtonOptions& options) {
  NewtonResult res;
  auto& diag = res.diagnostics;
  Eigen::VectorXd coef = std::move(start);
  Evaluation ev = ctx.penalized(coef, penalty, Derivatives::hessian);
  if (!std::isfinite(ev.value)) throw ConvergenceError("objective is not finite at the starting point", {});
  diag.objective_trace.push_back(ev.value);

  for (int iter = 0;; ++iter) {
    diag.iterations = iter;
    diag.gradient_norm = sup_norm(ev.score);
    if (diag.gradient_norm < options.score_tol * std::max(1.0, std::abs(ev.value))) {
      diag.converged = true;
      break;
    }
    if (iter >= options.max_iter)
      throw ConvergenceError("Newton-Raphson did not converge in " + std::to_string(options.max_iter) +
                                 " iterations (gradient norm " + std::to_string(diag.gradient_norm) + ")",
                             diag.objective_trace);

    const Eigen::VectorXd step = solve_ridged(-ev.hessian, ev.score, options.ridge, diag);
    double scale = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double value = 0.0;
    for (int h = 0; h <= options.max_halving; ++h, scale *= 0.5) {
      candidate = coef + scale * step;
      value = ctx.penalized(candidate, penalty, Derivatives::none).value;
      if (std::isfinite(value) && value >= ev.value) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No ascent along the Newton direction: at the numerical optimum unless
      // the gradient is still far from zero.
      if (diag.gradient_norm < 1e-4 * std::max(1.0, std::abs(ev.value))) {
        diag.converged = true;
        diag.warnings.push_back("step halving stalled at gradient norm " + std::to_string(diag.gradient_norm));
        break;
      }
      throw ConvergenceError("step halving failed to increase the objective", diag.objective_trace);
    }
    const double change = value - ev.value;
    coef = std::move(candidate);
    ev = ctx.penalized(coef, penalty, Derivatives::hessian);
    diag.objective_trace.push_back(ev.value);
    if (change < options.objective_tol) {
      diag.iterations = iter + 1;
      diag.gradient_norm = sup_norm(ev.score);
      // One polishing step so the reported score also meets the score tolerance.
      if (diag.gradient_norm >= options.score_tol * std::max(1.0, std::abs(ev.value))) {
        Eigen::VectorXd polished = coef + solve_ridged(-ev.hessian, ev.score, options.ridge, diag);
        Evaluation next = ctx.penalized(polished, penalty, Derivatives::hessian);
        if (std::isfinite(next.value) && next.value >= ev.value && sup_norm(next.score) < diag.gradient_norm) {
          coef = std::move(polished);
          ev = std::move(next);
          diag.objective_trace.push_back(ev.value);
          diag.iterations = iter + 2;
          diag.gradient_norm = sup_norm(ev.score);
        }
      }
      diag.converged = true;
      break;
    }
  }
  res.coefficients = std::move(coef);
  res.evaluation = std::move(ev);
  return res;
}

BaselineSeries extract_baseline(const LikelihoodContext& ctx, const Eigen::VectorXd& coef) {
  BaselineSeries out;
  out.level = ctx.estimate_baseline(coef);
  double acc = 0.0;
  for (double v : out.level) out.cumulative.push_back(acc += v);
  return out;
}

std::vector<std::pair<double, double>> column_ranges(const Design& design) {
  const std::size_t p = design.num_columns();
  std::vector<std::pair<double, double>> out(p, {std::numeric_limits<double>::infinity(),
                                                 -std::numeric_limits<double>::infinity()});
  DesignBlock block;
  for (std::size_t d = 0; d < design.num_slices(); ++d)
    for (std::size_t b = 0; b < design.num_blocks(d); ++b) {
      design.fill_block(d, b, block);
      if (block.rows == 0) continue;
      const auto top = block.x.topRows(static_cast<Eigen::Index>(block.rows));
      for (std::size_t c = 0; c < p; ++c) {
        out[c].first = std::min(out[c].first, top.col(static_cast<Eigen::Index>(c)).minCoeff());
        out[c].second = std::max(out[c].second, top.col(static_cast<Eigen::Index>(c)).maxCoeff());
      }
    }
  for (auto& r : out)
    if (r.first > r.second) r = {0.0, 0.0};
  return out;
}

double FitResult::effect(std::size_t term, double x) const { return model->term_value(term, x, coefficients); }

double FitResult::effect_se(std::size_t term, double x) const {
  const auto& t = model->terms().at(term);
  const Eigen::VectorXd row = model->term_row(term, x);
  const auto off = static_cast<Eigen::Index>(t.offset);
  const auto k = static_cast<Eigen::Index>(t.size());
  const double var = row.dot(covariance.block(off, off, k, k) * row);
  return std::sqrt(std::max(0.0, var));
}

FitResult fit_model(const Design& design, std::shared_ptr<const Predictor> model,
                    const std::vector<double>& lambdas, const FitOptions& options, const Eigen::VectorXd* start) {
  const LikelihoodContext ctx(design, *model, options.threads);
  const Eigen::MatrixXd K = model->penalty(lambdas) + model->identification_penalty();
  const auto p = static_cast<Eigen::Index>(model->dim());
  Eigen::VectorXd init = start ? *start : Eigen::VectorXd::Zero(p);
  NewtonResult nr = newton_maximize(ctx, K, std::move(init), options.newton);

  FitResult fit;
  fit.model = model;
  fit.parameter_names = model->parameter_names();
  fit.coefficients = nr.coefficients;
  fit.diagnostics = std::move(nr.diagnostics);
  fit.lambdas = lambdas;
  for (const auto& t : model->terms()) fit.term_names.push_back(t.name);

  const Eigen::MatrixXd A = -nr.evaluation.hessian;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(A);
  const double top = eig.eigenvalues().maxCoeff();
  const double bottom = eig.eigenvalues().minCoeff();
  if (!(bottom > 1e-10 * std::max(1.0, top))) {
    std::ostringstream msg;
    msg << "negative Hessian is singular at the optimum (smallest eigenvalue " << bottom
        << "); covariates may be collinear or constant";
    throw SingularHessianError(msg.str(), fit.coefficients, fit.diagnostics.iterations);
  }
  fit.covariance = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
  fit.standard_errors = fit.covariance.diagonal().cwiseSqrt();

  const Eigen::MatrixXd influence = fit.covariance * (A - K);
  for (const auto& t : model->terms()) {
    double e = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) e += influence(static_cast<Eigen::Index>(t.offset + k),
                                                             static_cast<Eigen::Index>(t.offset + k));
    fit.edf.push_back(e);
    fit.edf_total += e;
  }
  fit.penalized_log_likelihood = nr.evaluation.value;
  fit.log_likelihood = nr.evaluation.value + 0.5 * fit.coefficients.dot(K * fit.coefficients);
  fit.aic = -2.0 * fit.log_likelihood + 2.0 * fit.edf_total;

  const auto& ev = nr.evaluation;
  double acc = 0.0;
  for (std::size_t d = 0; d < ev.log_sums.size(); ++d) {
    const double level = ev.option_counts[d] == 0 ? 0.0 : ev.event_counts[d] * std::exp(-ev.log_sums[d]);
    fit.baseline.level.push_back(level);
    fit.baseline.cumulative.push_back(acc += level);
  }

  if (options.curve_points > 1) {
    std::vector<std::pair<double, double>> ranges;
    for (std::size_t t = 0; t < model->terms().size(); ++t) {
      const auto& term = model->terms()[t];
      double lo, hi;
      if (term.smooth) {
        lo = term.smooth->basis().lower();
        hi = term.smooth->basis().upper();
      } else {
        if (ranges.empty()) ranges = column_ranges(design);
        lo = ranges[term.column].first;
        hi = ranges[term.column].second;
      }
      EffectCurve curve;
      curve.name = term.name;
      curve.smooth = term.is_smooth();
      const std::size_t n = options.curve_points;
      for (std::size_t k = 0; k < n; ++k) {
        const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
        curve.x.push_back(x);
        curve.fit.push_back(fit.effect(t, x));
        curve.se.push_back(fit.effect_se(t, x));
      }
      fit.curves.push_back(std::move(curve));
    }
  }
  return fit;
}

FitResult fit_linear(const Design& design, const FitOptions& options) {
  auto model = std::make_shared<const Predictor>(Predictor::linear(design));
  return fit_model(design, model, std::vector<double>(model->terms().size(), 0.0), options);
}

std::shared_ptr<const Predictor> make_smooth_predictor(const Design& design, const SmoothSpec& spec,
                                                       std::vector<std::string>* warnings) {
  const auto names = design.column_names();
  std::vector<Term> terms;
  for (std::size_t c = 0; c < names.size(); ++c) {
    Term term{c, names[c], std::nullopt, 0};
    const bool wanted = std::find(spec.smooth_columns.begin(), spec.smooth_columns.end(), c) !=
                        spec.smooth_columns.end();
    if (wanted) {
      const ColumnProfile profile = profile_column(design, c);
      BasisResult basis = build_basis(spec.spline, profile);
      if (basis.term) {
        SmoothTerm st = apply_identifiability(std::move(*basis.term));
        const double lo = std::min(0.0, profile.min);
        if (profile.integer_valued && profile.max - lo <= 100000.0)
          st.cache_integers(static_cast<long>(std::floor(lo)), static_cast<long>(std::ceil(profile.max)));
        term.smooth = std::move(st);
      } else if (warnings) {
        warnings->push_back(names[c] + ": " + basis.warning);
      }
    }
    terms.push_back(std::move(term));
  }
  return std::make_shared<const Predictor>(std::move(terms));
}

FitResult fit_smooth(const Design& design, const SmoothSpec& spec, const FitOptions& options) {
  std::vector<std::string> warnings;
  auto model = make_smooth_predictor(design, spec, &warnings);
  const auto& terms = model->terms();

  std::vector<std::size_t> smooth_terms;
  for (std::size_t t = 0; t < terms.size(); ++t)
    if (terms[t].is_smooth()) smooth_terms.push_back(t);

  std::vector<double> lambdas(terms.size(), 0.0);
  FitOptions inner = options;
  inner.curve_points = 0;
  int inner_fits = 0;

  if (spec.fixed_lambdas) {
    std::size_t k = 0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const bool requested = std::find(spec.smooth_columns.begin(), spec.smooth_columns.end(), terms[t].column) !=
                             spec.smooth_columns.end();
      if (!requested) continue;
      if (k >= spec.fixed_lambdas->size()) throw InputError("need one fixed smoothing parameter per smooth column");
      lambdas[t] = terms[t].is_smooth() ? (*spec.fixed_lambdas)[k] : 0.0;
      ++k;
    }
  } else if (!smooth_terms.empty()) {
    const auto& g = spec.grid;
    if (g.points < 1) throw InputError("lambda grid needs at least one point");
    std::vector<double> grid;
    for (int k = 0; k < g.points; ++k)
      grid.push_back(std::pow(10.0, g.points == 1 ? g.log10_lo
                                                  : g.log10_lo + (g.log10_hi - g.log10_lo) * k / (g.points - 1)));
    std::vector<std::size_t> choice(terms.size(), static_cast<std::size_t>(g.points / 2));
    for (auto t : smooth_terms) lambdas[t] = grid[choice[t]];
    Eigen::VectorXd current = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model->dim()));

    for (int sweep = 0; sweep < g.sweeps; ++sweep) {
      for (auto t : smooth_terms) {
        double best_aic = std::numeric_limits<double>::infinity();
        std::size_t best_k = choice[t];
        Eigen::VectorXd best_coef = current;
        for (std::size_t k = 0; k < grid.size(); ++k) {
          auto trial = lambdas;
          trial[t] = grid[k];
          ++inner_fits;
          try {
            const FitResult r = fit_model(design, model, trial, inner, &current);
            if (r.aic < best_aic) {
              best_aic = r.aic;
              best_k = k;
              best_coef = r.coefficients;
            }
          } catch (const Error& e) {
            warnings.push_back("lambda=" + std::to_string(grid[k]) + " for " + terms[t].name +
                               " skipped: " + e.what());
          }
        }
        choice[t] = best_k;
        lambdas[t] = grid[best_k];
        current = best_coef;
      }
    }
    for (auto t : smooth_terms)
      if (choice[t] == 0 || choice[t] + 1 == grid.size())
        warnings.push_back("smoothing parameter for " + terms[t].name + " selected at the grid boundary (" +
                           std::to_string(lambdas[t]) + ")");
  }

  FitResult fit = fit_model(design, model, lambdas, options);
  fit.diagnostics.inner_fits = inner_fits + 1;
  fit.diagnostics.warnings.insert(fit.diagnostics.warnings.begin(), warnings.begin(), warnings.end());
  return fit;
}

}  // namespace remfit
