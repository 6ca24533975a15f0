#include "remfit/splines.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "remfit/design.hpp"
#include "remfit/error.hpp"

namespace remfit {

BSplineBasis::BSplineBasis(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree), dim_(static_cast<int>(knots_.size()) - degree - 1) {
  if (degree_ < 0) throw InputError("spline degree must be non-negative");
  if (dim_ < degree_ + 1) throw InputError("spline basis needs at least degree + 1 functions");
  for (std::size_t k = 1; k < knots_.size(); ++k)
    if (!(knots_[k] >= knots_[k - 1])) throw InputError("knot vector must be non-decreasing");
  if (!(upper() > lower())) throw InputError("spline domain is empty");
}

std::size_t BSplineBasis::evaluate_nonzero(double x, std::span<double> values) const {
  const auto p = static_cast<std::size_t>(degree_);
  const auto K = static_cast<std::size_t>(dim_);
  x = std::clamp(x, lower(), upper());
  // Span s with knots[s] <= x < knots[s+1], s in [p, K-1].
  std::size_t s;
  if (x >= upper()) {
    s = K - 1;
    while (s > p && !(knots_[s] < knots_[s + 1])) --s;
  } else {
    s = static_cast<std::size_t>(std::upper_bound(knots_.begin() + static_cast<std::ptrdiff_t>(p),
                                                  knots_.begin() + static_cast<std::ptrdiff_t>(K) + 1, x) -
                                 knots_.begin()) - 1;
  }
  double left[32];
  double right[32];
  values[0] = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    left[j] = x - knots_[s + 1 - j];
    right[j] = knots_[s + j] - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom == 0.0 ? 0.0 : values[r] / denom;
      values[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    values[j] = saved;
  }
  return s - p;
}

Eigen::VectorXd BSplineBasis::evaluate(double x) const {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(dim_);
  double vals[32];
  const auto first = evaluate_nonzero(x, std::span<double>(vals, static_cast<std::size_t>(degree_) + 1));
  for (int k = 0; k <= degree_; ++k) row(static_cast<Eigen::Index>(first) + k) = vals[k];
  return row;
}

SmoothTerm::SmoothTerm(BSplineBasis basis)
    : basis_(std::move(basis)), anchor_(Eigen::VectorXd::Zero(basis_.dim())) {
  if (basis_.degree() > 30) throw InputError("spline degree above 30 is not supported");
}

void SmoothTerm::row(double x, double* out) const {
  if (cache_.rows() > 0 && x == std::floor(x)) {
    const long k = static_cast<long>(x) - cache_lo_;
    if (k >= 0 && k < cache_.rows()) {
      std::copy_n(cache_.row(k).data(), dim(), out);
      return;
    }
  }
  const int K = dim();
  for (int k = 0; k < K; ++k) out[k] = -anchor_(k);
  double vals[32];
  const auto first = basis_.evaluate_nonzero(x, std::span<double>(vals, static_cast<std::size_t>(basis_.degree()) + 1));
  for (int k = 0; k <= basis_.degree(); ++k) out[first + static_cast<std::size_t>(k)] += vals[k];
}

Eigen::VectorXd SmoothTerm::row(double x) const {
  Eigen::VectorXd r(dim());
  row(x, r.data());
  return r;
}

double SmoothTerm::value(double x, const Eigen::Ref<const Eigen::VectorXd>& u) const {
  return row(x).dot(u);
}

void SmoothTerm::cache_integers(long lo, long hi) {
  cache_.resize(0, 0);
  if (hi < lo) return;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> table(hi - lo + 1, dim());
  for (long v = lo; v <= hi; ++v) row(static_cast<double>(v), table.row(v - lo).data());
  cache_ = std::move(table);
  cache_lo_ = lo;
}

SmoothTerm apply_identifiability(SmoothTerm term) {
  term.cache_.resize(0, 0);
  term.anchor_ = term.basis_.evaluate(0.0);
  term.anchored_ = true;
  return term;
}

namespace {

// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double>& v, double prob) {
  const double pos = prob * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

bool strictly_inside(const std::vector<double>& interior, double lo, double hi) {
  double prev = lo;
  for (double k : interior) {
    if (!(k > prev)) return false;
    prev = k;
  }
  return interior.empty() || interior.back() < hi;
}

std::vector<double> uniform_interior(std::size_t count, double lo, double hi) {
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k)
    out[k] = lo + (hi - lo) * static_cast<double>(k + 1) / static_cast<double>(count + 1);
  return out;
}

std::vector<double> quantile_interior(std::vector<double> data, std::size_t count) {
  std::vector<double> out(count);
  if (data.empty()) return out;
  std::sort(data.begin(), data.end());
  for (std::size_t k = 0; k < count; ++k)
    out[k] = quantile_sorted(data, static_cast<double>(k + 1) / static_cast<double>(count + 1));
  return out;
}

}  // namespace

std::vector<double> make_knots(const SplineConfig& config, const ColumnProfile& profile) {
  if (!config.knots.empty()) return config.knots;
  const int p = config.degree;
  const int K = config.basis_dim;
  if (K < p + 1) throw InputError("basis dimension must be at least degree + 1");
  const double lo = std::min(0.0, profile.min);
  const double hi = profile.max;
  std::vector<double> knots;
  knots.reserve(static_cast<std::size_t>(K + p + 1));

  if (config.placement == KnotPlacement::pspline) {
    const double h = (hi - lo) / (K - p);
    for (int k = 0; k <= K + p; ++k) knots.push_back(lo + (k - p) * h);
    knots[static_cast<std::size_t>(p)] = lo;
    knots[static_cast<std::size_t>(K)] = hi;
    return knots;
  }

  const auto n_interior = static_cast<std::size_t>(K - p - 1);
  std::vector<double> interior;
  if (config.placement == KnotPlacement::quantile) {
    interior = quantile_interior(profile.sample, n_interior);
    if (!strictly_inside(interior, lo, hi)) {
      // Heavy ties (count covariates): fall back to quantiles of the distinct values.
      std::set<double> uniq(profile.sample.begin(), profile.sample.end());
      uniq.insert(lo);
      uniq.insert(hi);
      interior = quantile_interior(std::vector<double>(uniq.begin(), uniq.end()), n_interior);
    }
  }
  if (!strictly_inside(interior, lo, hi) || config.placement == KnotPlacement::uniform)
    interior = uniform_interior(n_interior, lo, hi);

  knots.assign(static_cast<std::size_t>(p + 1), lo);
  knots.insert(knots.end(), interior.begin(), interior.end());
  knots.insert(knots.end(), static_cast<std::size_t>(p + 1), hi);
  return knots;
}

BasisResult build_basis(const SplineConfig& config, const ColumnProfile& profile) {
  BasisResult result;
  if (!config.enabled) return result;
  const double lo = std::min(0.0, profile.min);
  if (!(profile.max > lo)) {
    result.warning = "degenerate covariate range; using a linear term";
    return result;
  }
  if (config.knots.empty() && profile.distinct < static_cast<std::size_t>(config.basis_dim)) {
    result.warning = "only " + std::to_string(profile.distinct) + " distinct values for " +
                     std::to_string(config.basis_dim) + " basis functions; using a linear term";
    return result;
  }
  SmoothTerm term(BSplineBasis(make_knots(config, profile), config.degree));
  result.term = std::move(term);
  return result;
}

Eigen::MatrixXd difference_matrix(int dim, int order) {
  if (dim < 1) throw InputError("difference matrix needs a positive dimension");
  if (order < 0 || order >= dim) throw InputError("difference order must be in [0, dim)");
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(dim, dim);
  for (int r = 1; r <= order; ++r) {
    const int rows = dim - r;
    Eigen::MatrixXd D1 = Eigen::MatrixXd::Zero(rows, rows + 1);
    for (int k = 0; k < rows; ++k) {
      D1(k, k) = -1.0;
      D1(k, k + 1) = 1.0;
    }
    D = D1 * D;
  }
  return D;
}

Eigen::MatrixXd difference_penalty(int dim, int order) {
  const Eigen::MatrixXd D = difference_matrix(dim, order);
  return D.transpose() * D;
}

}  // namespace remfit
