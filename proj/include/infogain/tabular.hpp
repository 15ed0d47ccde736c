#pragma once

// Explicit prior + likelihood-table backend. Every estimator in the
// acquisition module can be checked against it by enumeration.

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "infogain/backend.hpp"
#include "infogain/rng.hpp"

namespace infogain {

struct CatalogItem {
  std::string title;
  std::vector<std::string> tags;
};

/// Deterministic judge rubric: base score plus per-tag adjustments, clamped to [1, 5].
struct Rubric {
  double base = 3.0;
  std::map<std::string, double> tag_deltas;

  double score(const CatalogItem& item) const;
};

struct TabularModel {
  std::vector<Hypothesis> hypotheses;
  std::vector<double> prior;
  std::vector<Question> question_bank;
  // likelihood[question][hypothesis]
  std::vector<std::vector<CategoricalDistribution>> likelihood;
  std::optional<std::size_t> true_target;
  std::uint64_t seed = 0;

  // Preference fixtures only: items to recommend and one rubric per hypothesis.
  std::vector<CatalogItem> catalog;
  std::vector<Rubric> rubrics;
  double recommendation_floor = 2.5;

  void validate() const;

  std::optional<std::size_t> find_hypothesis(std::string_view key) const;
  std::optional<std::size_t> find_question(std::string_view id) const;
  std::optional<std::size_t> find_catalog_item(std::string_view title) const;

  /// Row for hypothesis `h`, answering structurally if `q` is a direct guess.
  CategoricalDistribution row(const Question& q, std::size_t h) const;

  /// Exact Bayesian posterior over `hypotheses` after `history`, starting from
  /// `prior`. Returns all zeros when the history has probability zero.
  std::vector<double> posterior(const History& history) const;
  std::vector<double> posterior(const History& history, std::span<const double> start) const;
};

TabularModel parse_tabular_model(std::string_view json_text);
TabularModel load_tabular_model(const std::filesystem::path& path);
std::string tabular_model_to_json(const TabularModel& model);

enum class PosteriorEntropyMode {
  Exact,
  // Plug-in entropy of k independent posterior draws; emulates the degraded
  // in-context sampling of the data-estimation pairing.
  PlugIn,
};

struct TabularOptions {
  PosteriorEntropyMode posterior_entropy = PosteriorEntropyMode::Exact;
};

class TabularBackend final : public Backend {
 public:
  TabularBackend(std::shared_ptr<const TabularModel> model, std::uint64_t seed,
                 TabularOptions options = {});

  const TabularModel& model() const { return *model_; }

 protected:
  std::vector<Hypothesis> do_sample_hypothesis_batch(
      const History& history, int n, std::span<const Hypothesis> prior_batches) override;
  CategoricalDistribution do_answer_distribution(const Hypothesis& hyp,
                                                 const Question& q) override;
  std::vector<Question> do_propose_unconstrained(const History& history, int m,
                                                 QuestionKind kind) override;
  std::vector<Question> do_propose_conditional(const History& history,
                                               std::span<const Hypothesis> hyps, int m,
                                               QuestionKind kind) override;
  Question do_propose_naive(const History& history, QuestionKind kind) override;
  Answer do_simulate_answer(const Hypothesis& target, const Question& q,
                            std::uint64_t seed) override;
  std::vector<std::optional<double>> do_judge(const Hypothesis& persona,
                                              std::span<const std::string> items) override;
  double do_posterior_hypothesis_entropy(const History& history, const Question& q,
                                         const Answer& a, int k) override;
  CategoricalDistribution do_predictive_answer_distribution(const History& history,
                                                            const Question& q) override;
  std::size_t do_most_likely_member(const History& history,
                                    std::span<const Hypothesis> candidates) override;
  std::optional<Hypothesis> do_greedy_generate(const History& history) override;
  std::vector<std::string> do_generate_recommendations(
      const History& history, std::span<const Hypothesis> belief, int count,
      std::span<const std::string> exclude) override;
  bool do_recommendation_consistent(const std::string& item, const History& history) override;

 private:
  std::size_t index_of(const Hypothesis& h) const;
  std::vector<std::size_t> unasked_bank(const History& history, QuestionKind kind) const;
  double expected_score(const CatalogItem& item, std::span<const double> weights) const;

  std::shared_ptr<const TabularModel> model_;
  TabularOptions options_;
  std::mutex rng_mutex_;
  Rng rng_;
};

}  // namespace infogain
