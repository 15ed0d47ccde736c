#pragma once

// Question scoring. The Rao-Blackwellized EIG estimator and the marginal
// predictive-entropy baseline share likelihood rows; the data-estimation
// score and the tabular-only oracles are computed along independent paths.

#include <map>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infogain/backend.hpp"
#include "infogain/core.hpp"
#include "infogain/tabular.hpp"

namespace infogain {

enum class EstimatorKind { Eig, PredEntropy, DataEstimation };

std::string_view to_string(EstimatorKind kind);

struct ScoredQuestion {
  Question question;
  double score = 0.0;  // nats
  std::vector<CategoricalDistribution> rows;
  EstimatorKind kind = EstimatorKind::Eig;
};

/// Per-turn likelihood cache keyed by (hypothesis key, question id).
/// Concurrent inserts of the same key keep the last value; values for a key
/// are identical by construction.
class RowCache {
 public:
  CategoricalDistribution get_or_fetch(const Hypothesis& h, const Question& q, Backend& backend);
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::map<std::pair<std::string, std::string>, CategoricalDistribution> rows_;
};

/// entropy(mix(rows)) - mean(entropy(row)).
double eig_from_rows(std::span<const CategoricalDistribution> rows);
/// entropy(mix(rows)).
double predictive_entropy_from_rows(std::span<const CategoricalDistribution> rows);

/// `hyps` may contain repeats; each entry carries equal weight.
ScoredQuestion estimate_eig(const Question& q, std::span<const Hypothesis> hyps, Backend& backend,
                            RowCache* cache = nullptr);
ScoredQuestion estimate_eig(const Question& q, const BeliefState& belief, Backend& backend,
                            RowCache* cache = nullptr);

ScoredQuestion estimate_pred_entropy(const Question& q, std::span<const Hypothesis> hyps,
                                     Backend& backend, RowCache* cache = nullptr);
ScoredQuestion estimate_pred_entropy(const Question& q, const BeliefState& belief,
                                     Backend& backend, RowCache* cache = nullptr);

/// Exact mutual information between theta and y under `posterior` and the
/// model's likelihood table, by enumeration of the joint.
double exact_eig_tabular(const TabularModel& model, std::span<const double> posterior,
                         const Question& q);

/// -sum_y p(y | h, q) * H[theta | h, q, y]; EIG up to the prior-entropy constant.
ScoredQuestion data_estimation_score(const Question& q, const History& history, Backend& backend,
                                     int k);

enum class UpdateRule { ExactBayes };
enum class TruthSource {
  ModelMarginal,  // p_true(y; q) = sum_theta w(theta) p(y | theta, q)
  TrueTarget,     // p_true(y; q) = the true target's likelihood row
};

/// sum_y p_true(y; q) H[posterior after y]. `weights` defaults to the model prior.
double true_expected_posterior_entropy(const TabularModel& model, const Question& q,
                                       UpdateRule rule = UpdateRule::ExactBayes,
                                       TruthSource truth = TruthSource::ModelMarginal,
                                       std::span<const double> weights = {});

/// argmax of scores; ties go to the lowest index.
std::size_t select_question(std::span<const double> scores);
std::size_t select_question(std::span<const ScoredQuestion> scored);

}  // namespace infogain
