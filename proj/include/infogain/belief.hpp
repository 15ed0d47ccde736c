#pragma once

// Sample-then-filter belief maintenance: hypotheses are drawn from the
// backend conditioned on history, rejected when any observed answer is
// implausible under them, retained across turns while consistent with the
// newest pair, deduplicated and weighted uniformly.

#include <string>
#include <vector>

#include "infogain/backend.hpp"
#include "infogain/core.hpp"

namespace infogain {

struct FilterConfig {
  double likelihood_threshold = 0.02;
  int target_count = 15;
  int max_cycles = 3;

  void validate() const;
};

struct Rejection {
  std::string hypothesis;
  std::string reason;
};

struct FilterReport {
  int sampled_count = 0;
  int retained_count = 0;
  int rejected_count = 0;
  // Previous members dropped by the newest pair.
  int dropped_count = 0;
  int cycles = 0;
  BeliefState accepted;
  std::vector<Rejection> rejections;
};

using QAPair = History::Pair;

/// True iff p(observed answer | hyp, question) >= threshold (inclusive).
bool is_consistent(const Hypothesis& hyp, const QAPair& pair, Backend& backend, double threshold);

/// Hypotheses consistent with every pair in `history`, order preserved.
/// Pairs are checked newest first and evaluation stops at the first failure.
std::vector<Hypothesis> filter_history(std::span<const Hypothesis> hyps, const History& history,
                                       Backend& backend, double threshold);

/// Builds the turn-0 belief (no filtering needed on an empty history) or
/// regenerates from scratch for an arbitrary history.
std::pair<BeliefState, FilterReport> initial_belief(const History& history, Backend& backend,
                                                    const FilterConfig& cfg);

/// One belief step. `history` must already end with `new_pair`.
std::pair<BeliefState, FilterReport> update_belief(const BeliefState& prev, const QAPair& new_pair,
                                                   const History& history, Backend& backend,
                                                   const FilterConfig& cfg);

}  // namespace infogain
