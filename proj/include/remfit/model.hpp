#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "remfit/design.hpp"
#include "remfit/splines.hpp"

namespace remfit {

// One additive component of the linear predictor, bound to a design column.
struct Term {
  std::size_t column = 0;
  std::string name;
  std::optional<SmoothTerm> smooth;  // empty: linear term x * beta
  std::size_t offset = 0;            // first coefficient index

  std::size_t size() const noexcept { return smooth ? static_cast<std::size_t>(smooth->dim()) : 1; }
  bool is_smooth() const noexcept { return smooth.has_value(); }
};

// Maps design rows to the stacked feature vector of all terms.
class Predictor {
 public:
  explicit Predictor(std::vector<Term> terms);

  // One linear term per design column.
  static Predictor linear(const Design& design);

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Term>& terms() const noexcept { return terms_; }
  bool is_linear() const noexcept { return linear_identity_; }
  std::size_t num_smooth() const noexcept;

  // rows x dim() feature matrix for the valid rows of `block`.
  void features(const DesignBlock& block, RowMatrix& out) const;

  // Block-diagonal K(lambda): lambda[t] * D2'D2 for smooth term t, zero for
  // linear terms. `lambdas` has one entry per term. Throws on negative values.
  Eigen::MatrixXd penalty(std::span<const double> lambdas) const;

  // Sum-to-zero pin (1'u)^2 per smooth term. Rows B(x) - B(0) annihilate the
  // constant coefficient vector, so without it the objective is flat along it.
  Eigen::MatrixXd identification_penalty() const;

  // Feature row of term t at covariate value x (the gradient of m_t(x)).
  Eigen::VectorXd term_row(std::size_t t, double x) const;
  double term_value(std::size_t t, double x, const Eigen::VectorXd& coef) const;

  std::vector<std::string> parameter_names() const;

 private:
  std::vector<Term> terms_;
  std::size_t dim_ = 0;
  bool linear_identity_ = false;
};

}  // namespace remfit
