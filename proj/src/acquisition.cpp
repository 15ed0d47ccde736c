#include "infogain/acquisition.hpp"

#include <algorithm>
#include <cmath>

namespace infogain {

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Eig: return "eig";
    case EstimatorKind::PredEntropy: return "pred_entropy";
    case EstimatorKind::DataEstimation: return "data_estimation";
  }
  return "unknown";
}

CategoricalDistribution RowCache::get_or_fetch(const Hypothesis& h, const Question& q,
                                               Backend& backend) {
  auto key = std::make_pair(h.key, q.id);
  {
    std::lock_guard lock(mutex_);
    auto it = rows_.find(key);
    if (it != rows_.end()) return it->second;
  }
  auto row = backend.answer_distribution(h, q);
  std::lock_guard lock(mutex_);
  rows_.insert_or_assign(std::move(key), row);
  return row;
}

std::size_t RowCache::size() const {
  std::lock_guard lock(mutex_);
  return rows_.size();
}

void RowCache::clear() {
  std::lock_guard lock(mutex_);
  rows_.clear();
}

double eig_from_rows(std::span<const CategoricalDistribution> rows) {
  const double marginal = entropy(mix(rows));
  double conditional = 0.0;
  for (const auto& r : rows) conditional += entropy(r);
  conditional /= static_cast<double>(rows.size());
  // Non-negative by concavity; only rounding can push it below zero.
  return std::max(0.0, marginal - conditional);
}

double predictive_entropy_from_rows(std::span<const CategoricalDistribution> rows) {
  return entropy(mix(rows));
}

namespace {

std::vector<CategoricalDistribution> fetch_rows(const Question& q, std::span<const Hypothesis> hyps,
                                                Backend& backend, RowCache* cache) {
  if (hyps.empty()) throw Error(ErrorCode::InvalidArgument, "cannot score against an empty belief");
  std::vector<CategoricalDistribution> rows;
  rows.reserve(hyps.size());
  for (const auto& h : hyps) {
    rows.push_back(cache ? cache->get_or_fetch(h, q, backend) : backend.answer_distribution(h, q));
  }
  return rows;
}

}  // namespace

ScoredQuestion estimate_eig(const Question& q, std::span<const Hypothesis> hyps, Backend& backend,
                            RowCache* cache) {
  ScoredQuestion s{q, 0.0, fetch_rows(q, hyps, backend, cache), EstimatorKind::Eig};
  s.score = eig_from_rows(s.rows);
  return s;
}

ScoredQuestion estimate_eig(const Question& q, const BeliefState& belief, Backend& backend,
                            RowCache* cache) {
  return estimate_eig(q, std::span<const Hypothesis>(belief.members()), backend, cache);
}

ScoredQuestion estimate_pred_entropy(const Question& q, std::span<const Hypothesis> hyps,
                                     Backend& backend, RowCache* cache) {
  ScoredQuestion s{q, 0.0, fetch_rows(q, hyps, backend, cache), EstimatorKind::PredEntropy};
  s.score = predictive_entropy_from_rows(s.rows);
  return s;
}

ScoredQuestion estimate_pred_entropy(const Question& q, const BeliefState& belief,
                                     Backend& backend, RowCache* cache) {
  return estimate_pred_entropy(q, std::span<const Hypothesis>(belief.members()), backend, cache);
}

double exact_eig_tabular(const TabularModel& model, std::span<const double> posterior,
                         const Question& q) {
  const std::size_t n = model.hypotheses.size();
  if (posterior.size() != n) throw Error(ErrorCode::InvalidArgument, "posterior size does not match the model");
  std::vector<CategoricalDistribution> rows;
  rows.reserve(n);
  for (std::size_t h = 0; h < n; ++h) rows.push_back(model.row(q, h));
  const std::size_t k = q.options.size();

  std::vector<double> marginal(k, 0.0);
  for (std::size_t h = 0; h < n; ++h) {
    for (std::size_t y = 0; y < k; ++y) marginal[y] += posterior[h] * rows[h][y];
  }
  // I(theta; y) = sum_{theta,y} p(theta) p(y|theta) log(p(y|theta) / p(y)).
  double mi = 0.0;
  for (std::size_t h = 0; h < n; ++h) {
    if (posterior[h] <= 0.0) continue;
    for (std::size_t y = 0; y < k; ++y) {
      const double lik = rows[h][y];
      if (lik <= 0.0) continue;
      mi += posterior[h] * lik * std::log(lik / marginal[y]);
    }
  }
  return mi < 0.0 ? 0.0 : mi;
}

ScoredQuestion data_estimation_score(const Question& q, const History& history, Backend& backend,
                                     int k) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "data-estimation needs k >= 2");
  const auto predictive = backend.predictive_answer_distribution(history, q);
  if (predictive.size() != q.options.size()) {
    throw Error(ErrorCode::Backend, "predictive distribution does not match the option count");
  }
  double score = 0.0;
  for (std::size_t y = 0; y < predictive.size(); ++y) {
    if (predictive[y] <= 0.0) continue;
    score -= predictive[y] * backend.posterior_hypothesis_entropy(history, q, Answer{q.id, y}, k);
  }
  return ScoredQuestion{q, score, {predictive}, EstimatorKind::DataEstimation};
}

double true_expected_posterior_entropy(const TabularModel& model, const Question& q,
                                       UpdateRule rule, TruthSource truth,
                                       std::span<const double> weights) {
  if (rule != UpdateRule::ExactBayes) throw Error(ErrorCode::InvalidArgument, "unsupported update rule");
  const std::size_t n = model.hypotheses.size();
  std::vector<double> w = weights.empty() ? model.prior : std::vector<double>(weights.begin(), weights.end());
  if (w.size() != n) throw Error(ErrorCode::InvalidArgument, "weight vector size mismatch");
  const std::size_t k = q.options.size();

  std::vector<double> p_true(k, 0.0);
  if (truth == TruthSource::TrueTarget) {
    if (!model.true_target) throw Error(ErrorCode::InvalidArgument, "model has no true target");
    const auto r = model.row(q, *model.true_target);
    for (std::size_t y = 0; y < k; ++y) p_true[y] = r[y];
  } else {
    for (std::size_t h = 0; h < n; ++h) {
      const auto r = model.row(q, h);
      for (std::size_t y = 0; y < k; ++y) p_true[y] += w[h] * r[y];
    }
  }

  double expected = 0.0;
  for (std::size_t y = 0; y < k; ++y) {
    if (p_true[y] <= 0.0) continue;
    std::vector<double> post(n, 0.0);
    double total = 0.0;
    for (std::size_t h = 0; h < n; ++h) {
      post[h] = w[h] * model.row(q, h)[y];
      total += post[h];
    }
    // An answer the model deems impossible leaves beliefs undefined; skip it.
    if (!(total > 0.0)) continue;
    expected += p_true[y] * entropy_of_weights(post);
  }
  return expected;
}

std::size_t select_question(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorCode::InvalidArgument, "no candidates to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::size_t select_question(std::span<const ScoredQuestion> scored) {
  std::vector<double> scores;
  scores.reserve(scored.size());
  for (const auto& s : scored) scores.push_back(s.score);
  return select_question(scores);
}

}  // namespace infogain
