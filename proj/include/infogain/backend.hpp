#pragma once

// The generative-backend contract. Public entry points are non-virtual so
// call accounting and the structural handling of direct guesses live in one
// place; implementations override the protected do_* hooks.

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infogain/core.hpp"

namespace infogain {

struct CallStats {
  std::uint64_t hypothesis_batches = 0;
  std::uint64_t likelihood_rows = 0;
  std::uint64_t question_generations = 0;
  std::uint64_t answers = 0;
  std::uint64_t judgements = 0;
  std::uint64_t posterior_entropies = 0;
  std::uint64_t predictive_distributions = 0;
  std::uint64_t greedy_queries = 0;
  std::uint64_t recommendations = 0;
};

/// One likelihood lookup, as seen by the backend. Recorded only when call
/// logging is switched on.
struct LikelihoodCall {
  std::string hypothesis_key;
  std::string question_id;
  friend bool operator==(const LikelihoodCall&, const LikelihoodCall&) = default;
};

class Backend {
 public:
  virtual ~Backend() = default;

  /// One generation call returning up to `n` hypotheses. `prior_batches` are
  /// earlier samples the backend should avoid repeating.
  std::vector<Hypothesis> sample_hypothesis_batch(const History& history, int n,
                                                  std::span<const Hypothesis> prior_batches);

  /// p(y | theta, x). Direct guesses are answered structurally: Yes with
  /// probability 1 iff the hypothesis key matches the guessed item.
  CategoricalDistribution answer_distribution(const Hypothesis& hyp, const Question& q);

  std::vector<Question> propose_questions_unconstrained(const History& history, int m,
                                                        QuestionKind kind);
  std::vector<Question> propose_questions_conditional(const History& history,
                                                      std::span<const Hypothesis> hyps,
                                                      int m, QuestionKind kind);
  /// Single direct question, no hypotheses and no scoring.
  Question propose_question_naive(const History& history, QuestionKind kind);

  /// Stateless answerer: sees only the target and the question.
  Answer simulate_answer(const Hypothesis& target, const Question& q, std::uint64_t seed);

  /// One rating per item in {1.0, 1.5, ..., 5.0}; nullopt marks a missing rating.
  std::vector<std::optional<double>> judge_recommendations(const Hypothesis& persona,
                                                           std::span<const std::string> items);

  double posterior_hypothesis_entropy(const History& history, const Question& q,
                                      const Answer& a, int k);

  /// p(y | h_t, x) obtained directly from the backend conditioned on history.
  CategoricalDistribution predictive_answer_distribution(const History& history,
                                                         const Question& q);

  /// Index of the most likely member of `candidates` given history.
  std::size_t most_likely_member(const History& history, std::span<const Hypothesis> candidates);
  /// Greedy single guess from the history alone.
  std::optional<Hypothesis> greedy_generate(const History& history);

  std::vector<std::string> generate_recommendations(const History& history,
                                                    std::span<const Hypothesis> belief, int count,
                                                    std::span<const std::string> exclude);
  bool recommendation_consistent(const std::string& item, const History& history);

  CallStats stats() const;
  void reset_stats();

  void set_call_logging(bool on);
  std::vector<LikelihoodCall> likelihood_log() const;

 protected:
  virtual std::vector<Hypothesis> do_sample_hypothesis_batch(
      const History& history, int n, std::span<const Hypothesis> prior_batches) = 0;
  virtual CategoricalDistribution do_answer_distribution(const Hypothesis& hyp,
                                                         const Question& q) = 0;
  virtual std::vector<Question> do_propose_unconstrained(const History& history, int m,
                                                         QuestionKind kind) = 0;
  virtual std::vector<Question> do_propose_conditional(const History& history,
                                                       std::span<const Hypothesis> hyps, int m,
                                                       QuestionKind kind) = 0;
  virtual Question do_propose_naive(const History& history, QuestionKind kind) = 0;
  virtual Answer do_simulate_answer(const Hypothesis& target, const Question& q,
                                    std::uint64_t seed) = 0;
  virtual std::vector<std::optional<double>> do_judge(const Hypothesis& persona,
                                                      std::span<const std::string> items) = 0;
  virtual double do_posterior_hypothesis_entropy(const History& history, const Question& q,
                                                 const Answer& a, int k) = 0;
  virtual CategoricalDistribution do_predictive_answer_distribution(const History& history,
                                                                    const Question& q) = 0;
  virtual std::size_t do_most_likely_member(const History& history,
                                            std::span<const Hypothesis> candidates) = 0;
  virtual std::optional<Hypothesis> do_greedy_generate(const History& history) = 0;
  virtual std::vector<std::string> do_generate_recommendations(
      const History& history, std::span<const Hypothesis> belief, int count,
      std::span<const std::string> exclude) = 0;
  virtual bool do_recommendation_consistent(const std::string& item, const History& history) = 0;

 private:
  struct Counters {
    std::atomic<std::uint64_t> hypothesis_batches{0};
    std::atomic<std::uint64_t> likelihood_rows{0};
    std::atomic<std::uint64_t> question_generations{0};
    std::atomic<std::uint64_t> answers{0};
    std::atomic<std::uint64_t> judgements{0};
    std::atomic<std::uint64_t> posterior_entropies{0};
    std::atomic<std::uint64_t> predictive_distributions{0};
    std::atomic<std::uint64_t> greedy_queries{0};
    std::atomic<std::uint64_t> recommendations{0};
  };
  Counters counters_;
  std::atomic<bool> log_calls_{false};
  mutable std::mutex log_mutex_;
  std::vector<LikelihoodCall> log_;
};

/// Snaps a rating onto the half-step grid of [1, 5]; ties round up.
double snap_rating(double raw);

/// Removes duplicates by normalized question text, keeping the first.
std::vector<Question> dedup_questions(std::vector<Question> questions);

}  // namespace infogain
