#include "remfit/model.hpp"

#include "remfit/error.hpp"

namespace remfit {

Predictor::Predictor(std::vector<Term> terms) : terms_(std::move(terms)) {
  if (terms_.empty()) throw InputError("model needs at least one term");
  linear_identity_ = true;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    terms_[t].offset = dim_;
    dim_ += terms_[t].size();
    if (terms_[t].is_smooth() || terms_[t].column != t) linear_identity_ = false;
  }
}

Predictor Predictor::linear(const Design& design) {
  const auto names = design.column_names();
  std::vector<Term> terms;
  for (std::size_t c = 0; c < names.size(); ++c) terms.push_back({c, names[c], std::nullopt, 0});
  return Predictor(std::move(terms));
}

std::size_t Predictor::num_smooth() const noexcept {
  std::size_t n = 0;
  for (const auto& t : terms_) n += t.is_smooth() ? 1 : 0;
  return n;
}

void Predictor::features(const DesignBlock& block, RowMatrix& out) const {
  const auto rows = static_cast<Eigen::Index>(block.rows);
  if (out.rows() < rows || out.cols() != static_cast<Eigen::Index>(dim_))
    out.resize(std::max<Eigen::Index>(rows, 1), static_cast<Eigen::Index>(dim_));
  for (const auto& term : terms_) {
    const auto col = static_cast<Eigen::Index>(term.column);
    const auto off = static_cast<Eigen::Index>(term.offset);
    if (!term.smooth) {
      out.col(off).head(rows) = block.x.col(col).head(rows);
      continue;
    }
    for (Eigen::Index r = 0; r < rows; ++r) term.smooth->row(block.x(r, col), out.row(r).data() + off);
  }
}

Eigen::MatrixXd Predictor::penalty(std::span<const double> lambdas) const {
  if (lambdas.size() != terms_.size())
    throw InputError("penalty needs one smoothing parameter per term");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    if (lambdas[t] < 0.0) throw InputError("smoothing parameters must be non-negative");
    if (!terms_[t].smooth || lambdas[t] == 0.0) continue;
    const int k = terms_[t].smooth->dim();
    const auto off = static_cast<Eigen::Index>(terms_[t].offset);
    K.block(off, off, k, k) = lambdas[t] * difference_penalty(k, 2);
  }
  return K;
}

Eigen::MatrixXd Predictor::identification_penalty() const {
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
  for (const auto& term : terms_) {
    if (!term.smooth || !term.smooth->anchored()) continue;
    const int k = term.smooth->dim();
    K.block(static_cast<Eigen::Index>(term.offset), static_cast<Eigen::Index>(term.offset), k, k).setOnes();
  }
  return K;
}

Eigen::VectorXd Predictor::term_row(std::size_t t, double x) const {
  const auto& term = terms_.at(t);
  if (!term.smooth) return Eigen::VectorXd::Constant(1, x);
  return term.smooth->row(x);
}

double Predictor::term_value(std::size_t t, double x, const Eigen::VectorXd& coef) const {
  const auto& term = terms_.at(t);
  return term_row(t, x).dot(coef.segment(static_cast<Eigen::Index>(term.offset),
                                         static_cast<Eigen::Index>(term.size())));
}

std::vector<std::string> Predictor::parameter_names() const {
  std::vector<std::string> out;
  for (const auto& term : terms_) {
    if (!term.smooth) {
      out.push_back(term.name);
      continue;
    }
    for (int k = 0; k < term.smooth->dim(); ++k) out.push_back(term.name + "[" + std::to_string(k) + "]");
  }
  return out;
}

}  // namespace remfit
