#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "remfit/design.hpp"
#include "remfit/model.hpp"

namespace remfit {

enum class Derivatives { none, gradient, hessian };

// Result of one pass over the design.
struct Evaluation {
  double value = 0.0;  // profile log-likelihood (penalized if requested)
  Eigen::VectorXd score;
  Eigen::MatrixXd hessian;

  // Per event time: log of the option-set exponential sum, |C_d|, the sum of
  // the linear predictor over C_d (with multiplicity), and |O_d|.
  std::vector<double> log_sums;
  std::vector<double> event_counts;
  std::vector<double> event_eta;
  std::vector<std::size_t> option_counts;
};

// Softmax weights of one option set.
struct OptionSetWeights {
  std::vector<double> weights;
  double log_sum = 0.0;
};

// Profile (Breslow) likelihood of the relational event model over a design
// and a feature map. Passes are split into (event time, block) tasks whose
// partial sums are reduced in a fixed order, so results are identical for any
// thread count.
class LikelihoodContext {
 public:
  LikelihoodContext(const Design& design, const Predictor& predictor, unsigned threads = 1);

  const Design& design() const noexcept { return design_; }
  const Predictor& predictor() const noexcept { return predictor_; }
  std::size_t dim() const noexcept { return predictor_.dim(); }
  unsigned threads() const noexcept { return threads_; }

  Evaluation evaluate(const Eigen::VectorXd& coef, Derivatives order) const;

  double profile_log_likelihood(const Eigen::VectorXd& coef) const;
  Eigen::VectorXd score(const Eigen::VectorXd& coef) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& coef) const;

  // Closed-form maximizer over the baseline at fixed coefficients:
  // |C_d| / sum over O_d of exp(eta). Throws on an empty option set.
  std::vector<double> estimate_baseline(const Eigen::VectorXd& coef) const;

  // Full log-likelihood with explicit baseline levels; all must be positive.
  double full_log_likelihood(std::span<const double> baseline, const Eigen::VectorXd& coef) const;

  // l(u) - u'K u / 2 with matching score and Hessian.
  Evaluation penalized(const Eigen::VectorXd& coef, const Eigen::MatrixXd& penalty,
                       Derivatives order = Derivatives::hessian) const;

  OptionSetWeights option_weights(const Eigen::VectorXd& coef, std::size_t d) const;

 private:
  const Design& design_;
  const Predictor& predictor_;
  unsigned threads_;
};

}  // namespace remfit
