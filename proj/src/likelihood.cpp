#include "remfit/likelihood.hpp"

#include <cmath>
#include <limits>

#include "remfit/error.hpp"
#include "remfit/parallel.hpp"

namespace remfit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Partial sums of one block, with exponentials shifted by the block maximum.
struct BlockSums {
  std::size_t rows = 0;
  double shift = kNegInf;
  double exp_sum = 0.0;
  Eigen::VectorXd exp_x;   // sum w x
  Eigen::MatrixXd exp_xx;  // sum w x x'
  double events = 0.0;     // sum y
  double event_eta = 0.0;  // sum y eta
  Eigen::VectorXd event_x; // sum y x
};

template <class Features>
void accumulate(const Features& F, const Eigen::Ref<const Eigen::VectorXd>& y, const Eigen::VectorXd& coef,
                Derivatives order, BlockSums& out) {
  const Eigen::VectorXd eta = F * coef;
  out.shift = eta.maxCoeff();
  const Eigen::ArrayXd w = (eta.array() - out.shift).exp();
  out.exp_sum = w.sum();
  out.events = y.sum();
  out.event_eta = y.dot(eta);
  if (order == Derivatives::none) return;
  out.exp_x.noalias() = F.transpose() * w.matrix();
  out.event_x.noalias() = F.transpose() * y;
  if (order == Derivatives::hessian) {
    const RowMatrix scaled = F.array().colwise() * w.sqrt();
    out.exp_xx.noalias() = scaled.transpose() * scaled;
  }
}

}  // namespace

LikelihoodContext::LikelihoodContext(const Design& design, const Predictor& predictor, unsigned threads)
    : design_(design), predictor_(predictor), threads_(threads == 0 ? default_thread_count() : threads) {
  for (const auto& t : predictor_.terms())
    if (t.column >= design_.num_columns()) throw InputError("model term refers to a missing design column");
}

Evaluation LikelihoodContext::evaluate(const Eigen::VectorXd& coef, Derivatives order) const {
  const std::size_t p = predictor_.dim();
  if (static_cast<std::size_t>(coef.size()) != p) throw InputError("coefficient vector has the wrong length");
  const std::size_t m = design_.num_slices();
  std::vector<std::size_t> first_task(m + 1, 0);
  for (std::size_t d = 0; d < m; ++d) first_task[d + 1] = first_task[d] + design_.num_blocks(d);
  std::vector<BlockSums> partial(first_task[m]);
  std::vector<std::size_t> task_slice(first_task[m]);
  for (std::size_t d = 0; d < m; ++d)
    for (std::size_t t = first_task[d]; t < first_task[d + 1]; ++t) task_slice[t] = d;

  const bool direct = predictor_.is_linear() && design_.num_columns() == p;
  parallel_for(partial.size(), threads_, [&](std::size_t task) {
    const std::size_t d = task_slice[task];
    DesignBlock block;
    design_.fill_block(d, task - first_task[d], block);
    auto& out = partial[task];
    out.rows = block.rows;
    if (block.rows == 0) return;
    const auto rows = static_cast<Eigen::Index>(block.rows);
    if (direct) {
      accumulate(block.x.topRows(rows), block.y.head(rows), coef, order, out);
    } else {
      RowMatrix F;
      predictor_.features(block, F);
      accumulate(F.topRows(rows), block.y.head(rows), coef, order, out);
    }
  });

  Evaluation ev;
  ev.score = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  if (order == Derivatives::hessian)
    ev.hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  ev.log_sums.assign(m, kNegInf);
  ev.event_counts.assign(m, 0.0);
  ev.event_eta.assign(m, 0.0);
  ev.option_counts.assign(m, 0);

  Eigen::VectorXd mean(static_cast<Eigen::Index>(p));
  Eigen::VectorXd event_x(static_cast<Eigen::Index>(p));
  Eigen::MatrixXd second;
  for (std::size_t d = 0; d < m; ++d) {
    double shift = kNegInf;
    for (std::size_t t = first_task[d]; t < first_task[d + 1]; ++t)
      if (partial[t].rows > 0) shift = std::max(shift, partial[t].shift);
    double sum = 0.0, events = 0.0, event_eta = 0.0;
    std::size_t rows = 0;
    mean.setZero();
    event_x.setZero();
    if (order == Derivatives::hessian) second.setZero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t t = first_task[d]; t < first_task[d + 1]; ++t) {
      const auto& b = partial[t];
      if (b.rows == 0) continue;
      rows += b.rows;
      const double scale = std::exp(b.shift - shift);
      sum += scale * b.exp_sum;
      events += b.events;
      event_eta += b.event_eta;
      if (order == Derivatives::none) continue;
      mean += scale * b.exp_x;
      event_x += b.event_x;
      if (order == Derivatives::hessian) second += scale * b.exp_xx;
    }
    ev.option_counts[d] = rows;
    ev.event_counts[d] = events;
    ev.event_eta[d] = event_eta;
    if (rows == 0) continue;
    const double log_sum = shift + std::log(sum);
    ev.log_sums[d] = log_sum;
    if (events == 0.0) continue;
    ev.value += event_eta - events * log_sum;
    if (order == Derivatives::none) continue;
    mean /= sum;
    ev.score += event_x - events * mean;
    if (order == Derivatives::hessian) {
      second /= sum;
      second.noalias() -= mean * mean.transpose();
      ev.hessian -= events * second;
    }
  }
  if (order == Derivatives::hessian) ev.hessian = 0.5 * (ev.hessian + ev.hessian.transpose()).eval();
  return ev;
}

double LikelihoodContext::profile_log_likelihood(const Eigen::VectorXd& coef) const {
  return evaluate(coef, Derivatives::none).value;
}

Eigen::VectorXd LikelihoodContext::score(const Eigen::VectorXd& coef) const {
  return evaluate(coef, Derivatives::gradient).score;
}

Eigen::MatrixXd LikelihoodContext::hessian(const Eigen::VectorXd& coef) const {
  return evaluate(coef, Derivatives::hessian).hessian;
}

std::vector<double> LikelihoodContext::estimate_baseline(const Eigen::VectorXd& coef) const {
  const auto ev = evaluate(coef, Derivatives::none);
  std::vector<double> out(ev.log_sums.size());
  for (std::size_t d = 0; d < out.size(); ++d) {
    if (ev.option_counts[d] == 0)
      throw InputError("event time " + std::to_string(d) + " has an empty option set");
    out[d] = ev.event_counts[d] * std::exp(-ev.log_sums[d]);
  }
  return out;
}

double LikelihoodContext::full_log_likelihood(std::span<const double> baseline,
                                              const Eigen::VectorXd& coef) const {
  const auto ev = evaluate(coef, Derivatives::none);
  if (baseline.size() != ev.log_sums.size())
    throw InputError("need one baseline level per event time");
  double value = 0.0;
  for (std::size_t d = 0; d < baseline.size(); ++d) {
    if (!(baseline[d] > 0.0)) throw InputError("baseline levels must be positive");
    const double total = ev.option_counts[d] == 0 ? 0.0 : std::exp(ev.log_sums[d]);
    value += ev.event_counts[d] * std::log(baseline[d]) + ev.event_eta[d] - baseline[d] * total;
  }
  return value;
}

Evaluation LikelihoodContext::penalized(const Eigen::VectorXd& coef, const Eigen::MatrixXd& penalty,
                                        Derivatives order) const {
  Evaluation ev = evaluate(coef, order);
  const Eigen::VectorXd Ku = penalty * coef;
  ev.value -= 0.5 * coef.dot(Ku);
  if (order != Derivatives::none) ev.score -= Ku;
  if (order == Derivatives::hessian) ev.hessian -= penalty;
  return ev;
}

OptionSetWeights LikelihoodContext::option_weights(const Eigen::VectorXd& coef, std::size_t d) const {
  std::vector<double> eta;
  DesignBlock block;
  RowMatrix F;
  for (std::size_t b = 0; b < design_.num_blocks(d); ++b) {
    design_.fill_block(d, b, block);
    if (block.rows == 0) continue;
    predictor_.features(block, F);
    const Eigen::VectorXd e = F.topRows(static_cast<Eigen::Index>(block.rows)) * coef;
    eta.insert(eta.end(), e.data(), e.data() + e.size());
  }
  OptionSetWeights out;
  if (eta.empty()) {
    out.log_sum = kNegInf;
    return out;
  }
  double shift = kNegInf;
  for (double v : eta) shift = std::max(shift, v);
  double sum = 0.0;
  for (double v : eta) sum += std::exp(v - shift);
  out.log_sum = shift + std::log(sum);
  out.weights.reserve(eta.size());
  for (double v : eta) out.weights.push_back(std::exp(v - out.log_sum));
  return out;
}

}  // namespace remfit
