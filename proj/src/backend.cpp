#include "infogain/backend.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace infogain {

std::vector<Hypothesis> Backend::sample_hypothesis_batch(const History& history, int n,
                                                         std::span<const Hypothesis> prior_batches) {
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "hypothesis batch size must be >= 1");
  ++counters_.hypothesis_batches;
  return do_sample_hypothesis_batch(history, n, prior_batches);
}

CategoricalDistribution Backend::answer_distribution(const Hypothesis& hyp, const Question& q) {
  if (q.is_guess()) {
    return CategoricalDistribution::point_mass(2, normalize_key(*q.guess_of) == hyp.key ? 0 : 1);
  }
  q.validate();
  ++counters_.likelihood_rows;
  if (log_calls_.load()) {
    std::lock_guard lock(log_mutex_);
    log_.push_back({hyp.key, q.id});
  }
  auto row = do_answer_distribution(hyp, q);
  if (row.size() != q.options.size()) {
    throw Error(ErrorCode::Backend, "likelihood row does not match the option count");
  }
  return row;
}

std::vector<Question> Backend::propose_questions_unconstrained(const History& history, int m,
                                                               QuestionKind kind) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "candidate count must be >= 1");
  ++counters_.question_generations;
  auto qs = dedup_questions(do_propose_unconstrained(history, m, kind));
  if (qs.empty()) throw Error(ErrorCode::QuestionGeneration, "no parseable question was generated");
  return qs;
}

std::vector<Question> Backend::propose_questions_conditional(const History& history,
                                                             std::span<const Hypothesis> hyps,
                                                             int m, QuestionKind kind) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "candidate count must be >= 1");
  if (hyps.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "conditional generation needs at least two hypotheses");
  }
  ++counters_.question_generations;
  auto qs = dedup_questions(do_propose_conditional(history, hyps, m, kind));
  if (qs.empty()) throw Error(ErrorCode::QuestionGeneration, "no parseable question was generated");
  return qs;
}

Question Backend::propose_question_naive(const History& history, QuestionKind kind) {
  ++counters_.question_generations;
  return do_propose_naive(history, kind);
}

Answer Backend::simulate_answer(const Hypothesis& target, const Question& q, std::uint64_t seed) {
  ++counters_.answers;
  Answer a = do_simulate_answer(target, q, seed);
  if (a.question_id != q.id || a.option_index >= q.options.size()) {
    throw Error(ErrorCode::Backend, "answerer returned an invalid answer");
  }
  return a;
}

std::vector<std::optional<double>> Backend::judge_recommendations(
    const Hypothesis& persona, std::span<const std::string> items) {
  if (items.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to judge");
  ++counters_.judgements;
  auto ratings = do_judge(persona, items);
  if (ratings.size() != items.size()) {
    throw Error(ErrorCode::Backend, "judge returned a misaligned rating list");
  }
  for (auto& r : ratings) {
    if (r) r = snap_rating(*r);
  }
  return ratings;
}

double Backend::posterior_hypothesis_entropy(const History& history, const Question& q,
                                             const Answer& a, int k) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "posterior entropy needs k >= 2 samples");
  ++counters_.posterior_entropies;
  return do_posterior_hypothesis_entropy(history, q, a, k);
}

CategoricalDistribution Backend::predictive_answer_distribution(const History& history,
                                                                const Question& q) {
  ++counters_.predictive_distributions;
  return do_predictive_answer_distribution(history, q);
}

std::size_t Backend::most_likely_member(const History& history,
                                        std::span<const Hypothesis> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no candidates to rank");
  if (candidates.size() == 1) return 0;
  ++counters_.greedy_queries;
  const std::size_t idx = do_most_likely_member(history, candidates);
  return idx < candidates.size() ? idx : 0;
}

std::optional<Hypothesis> Backend::greedy_generate(const History& history) {
  ++counters_.greedy_queries;
  return do_greedy_generate(history);
}

std::vector<std::string> Backend::generate_recommendations(const History& history,
                                                           std::span<const Hypothesis> belief,
                                                           int count,
                                                           std::span<const std::string> exclude) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "recommendation count must be >= 1");
  ++counters_.recommendations;
  return do_generate_recommendations(history, belief, count, exclude);
}

bool Backend::recommendation_consistent(const std::string& item, const History& history) {
  ++counters_.recommendations;
  return do_recommendation_consistent(item, history);
}

CallStats Backend::stats() const {
  CallStats s;
  s.hypothesis_batches = counters_.hypothesis_batches.load();
  s.likelihood_rows = counters_.likelihood_rows.load();
  s.question_generations = counters_.question_generations.load();
  s.answers = counters_.answers.load();
  s.judgements = counters_.judgements.load();
  s.posterior_entropies = counters_.posterior_entropies.load();
  s.predictive_distributions = counters_.predictive_distributions.load();
  s.greedy_queries = counters_.greedy_queries.load();
  s.recommendations = counters_.recommendations.load();
  return s;
}

void Backend::reset_stats() {
  counters_.hypothesis_batches = 0;
  counters_.likelihood_rows = 0;
  counters_.question_generations = 0;
  counters_.answers = 0;
  counters_.judgements = 0;
  counters_.posterior_entropies = 0;
  counters_.predictive_distributions = 0;
  counters_.greedy_queries = 0;
  counters_.recommendations = 0;
  std::lock_guard lock(log_mutex_);
  log_.clear();
}

void Backend::set_call_logging(bool on) { log_calls_ = on; }

std::vector<LikelihoodCall> Backend::likelihood_log() const {
  std::lock_guard lock(log_mutex_);
  return log_;
}

double snap_rating(double raw) {
  if (!std::isfinite(raw)) throw Error(ErrorCode::Parse, "rating is not a number");
  const double clamped = std::clamp(raw, 1.0, 5.0);
  // floor(2x + 0.5) / 2 rounds half-steps up.
  return std::floor(clamped * 2.0 + 0.5) / 2.0;
}

std::vector<Question> dedup_questions(std::vector<Question> questions) {
  std::unordered_set<std::string> seen;
  std::vector<Question> out;
  out.reserve(questions.size());
  for (auto& q : questions) {
    if (seen.insert(normalize_key(q.text)).second) out.push_back(std::move(q));
  }
  return out;
}

}  // namespace infogain
