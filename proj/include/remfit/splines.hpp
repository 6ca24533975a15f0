#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace remfit {

struct ColumnProfile;

enum class KnotPlacement {
  quantile,  // clamped; interior knots at equally spaced quantiles
  uniform,   // clamped; equally spaced interior knots
  pspline,   // equally spaced knots extended beyond the range on both sides
};

struct SplineConfig {
  int basis_dim = 10;
  int degree = 3;
  KnotPlacement placement = KnotPlacement::quantile;
  // Full knot vector (basis_dim + degree + 1 entries); overrides placement.
  std::vector<double> knots;
  bool enabled = true;
};

// B-spline basis of a given degree over a full, non-decreasing knot vector.
// The basis domain is [knots[degree], knots[dim]]; arguments outside it are
// clamped to the nearest end.
class BSplineBasis {
 public:
  BSplineBasis(std::vector<double> knots, int degree);

  int dim() const noexcept { return dim_; }
  int degree() const noexcept { return degree_; }
  double lower() const noexcept { return knots_[static_cast<std::size_t>(degree_)]; }
  double upper() const noexcept { return knots_[static_cast<std::size_t>(dim_)]; }
  const std::vector<double>& knots() const noexcept { return knots_; }

  // Writes the degree+1 possibly nonzero values into `values` and returns the
  // index of the first one.
  std::size_t evaluate_nonzero(double x, std::span<double> values) const;
  Eigen::VectorXd evaluate(double x) const;

 private:
  std::vector<double> knots_;
  int degree_;
  int dim_;
};

// Smooth effect m(x) = (B(x) - B(0)) u. Before apply_identifiability() the
// anchor row is zero and m(x) = B(x) u.
class SmoothTerm {
 public:
  explicit SmoothTerm(BSplineBasis basis);

  const BSplineBasis& basis() const noexcept { return basis_; }
  int dim() const noexcept { return basis_.dim(); }
  bool anchored() const noexcept { return anchored_; }
  const Eigen::VectorXd& anchor() const noexcept { return anchor_; }

  // Row of the design for this term: B(x) - anchor.
  void row(double x, double* out) const;
  Eigen::VectorXd row(double x) const;
  double value(double x, const Eigen::Ref<const Eigen::VectorXd>& u) const;

  // Precomputes rows for the integers in [lo, hi]; used for count covariates.
  void cache_integers(long lo, long hi);

  friend SmoothTerm apply_identifiability(SmoothTerm term);

 private:
  BSplineBasis basis_;
  Eigen::VectorXd anchor_;
  bool anchored_ = false;
  long cache_lo_ = 0;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cache_;
};

// Subtracts B(0) from every row so that m(0) = 0 for any coefficients.
SmoothTerm apply_identifiability(SmoothTerm term);

// Knot vector for a column profile. The covered range is
// [min(0, profile.min), profile.max].
std::vector<double> make_knots(const SplineConfig& config, const ColumnProfile& profile);

struct BasisResult {
  std::optional<SmoothTerm> term;  // empty: demoted to a linear term
  std::string warning;
};

// Builds the (unanchored) basis for one covariate. Demotes to a linear term
// when the observed range is degenerate or the covariate has fewer distinct
// values than basis functions.
BasisResult build_basis(const SplineConfig& config, const ColumnProfile& profile);

// Order-th difference matrix, (K - order) x K, built recursively from first
// differences.
Eigen::MatrixXd difference_matrix(int dim, int order);

// D'D for the order-th differences.
Eigen::MatrixXd difference_penalty(int dim, int order = 2);

}  // namespace remfit
