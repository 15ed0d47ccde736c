#pragma once

// Batch experiments: metrics over game records, the recommendation and
// judging pipeline for preference runs, and a resumable benchmark runner.

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infogain/backend.hpp"
#include "infogain/controller.hpp"

namespace infogain {

struct RunMetrics {
  std::string strategy;
  int n = 0;
  // Index t-1 holds turn t.
  std::vector<double> p;
  std::vector<double> sem;
  std::vector<double> rating_mean;
  std::vector<double> rating_sem;
  std::vector<int> rating_n;
};

/// sqrt(p(1-p)/(n-1)); 0 when n < 2.
double proportion_sem(double p, int n);

/// Success proportion per turn. A game counts as solved at turn t once an
/// evaluation guess or an in-game guess at or before t was correct.
RunMetrics success_curve(std::span<const GameRecord> records);

/// Mean judge rating per turn: each user's mean over their rated items, then
/// the mean over users with an SEM from the sample standard deviation.
RunMetrics rate_run(std::span<const GameRecord> records);

struct Recommendations {
  std::vector<std::string> items;
  bool shortfall = false;
  int rounds = 0;
};

/// Up to `count` items, each checked against the history; inconsistent and
/// duplicate items are replaced for at most `max_rounds` generations.
Recommendations recommend_items(const History& history, const BeliefState& belief, Backend& backend,
                                int count = 10, int max_rounds = 3);

/// Turn hook that recommends after every turn and has the answerer rate the
/// items as the target persona.
Game::TurnHook preference_hook(Backend& answerer, Hypothesis persona, int count = 10);

using BackendFactory = std::function<std::unique_ptr<Backend>(std::uint64_t seed)>;

struct BenchmarkOptions {
  std::filesystem::path run_dir;
  int parallelism = 1;
  int recommendation_count = 10;
};

struct BenchmarkResult {
  RunMetrics metrics;
  int executed = 0;
  int skipped = 0;
  std::vector<std::string> quarantined;
};

/// File-safe, stable id for the i-th dataset entry.
std::string game_id(std::size_t index, const TargetEntry& entry);

/// Plays one game per entry, writing games/<id>.json as each finishes and
/// skipping ids already present. Aborted or failed games go to quarantine/
/// and are retried on the next run. Afterwards writes transcripts.jsonl,
/// metrics.csv and, for preference runs, ratings.csv.
BenchmarkResult run_benchmark(std::span<const TargetEntry> dataset, const SessionConfig& cfg,
                              const BackendFactory& questioner, const BackendFactory& answerer,
                              const BenchmarkOptions& opts);

std::string metrics_csv(std::span<const RunMetrics> runs);
std::string ratings_csv(std::span<const RunMetrics> runs);

}  // namespace infogain
