#include "infogain/belief.hpp"

#include <cstdio>

namespace infogain {

void FilterConfig::validate() const {
  if (!(likelihood_threshold > 0.0 && likelihood_threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "likelihood_threshold must be in (0, 1)");
  }
  if (target_count < 1) throw Error(ErrorCode::InvalidArgument, "target_count must be >= 1");
  if (max_cycles < 1) throw Error(ErrorCode::InvalidArgument, "max_cycles must be >= 1");
}

bool is_consistent(const Hypothesis& hyp, const QAPair& pair, Backend& backend, double threshold) {
  const auto row = backend.answer_distribution(hyp, pair.first);
  return row[pair.second.option_index] >= threshold;
}

namespace {

// Index of the first (newest-first) pair that rejects `hyp`, or -1.
long first_violation(const Hypothesis& hyp, const History& history, Backend& backend,
                     double threshold) {
  const auto& pairs = history.pairs();
  for (std::size_t i = pairs.size(); i-- > 0;) {
    if (!is_consistent(hyp, pairs[i], backend, threshold)) return static_cast<long>(i);
  }
  return -1;
}

std::string violation_reason(const History& history, long idx) {
  const auto& [q, a] = history.pairs()[static_cast<std::size_t>(idx)];
  char buf[64];
  std::snprintf(buf, sizeof(buf), "inconsistent with turn %ld: ", idx + 1);
  return buf + q.text + " -> " + q.options[a.option_index].label;
}

// Sampling cycles shared by initial_belief and update_belief.
void top_up(BeliefState& belief, FilterReport& report, const History& history, Backend& backend,
            const FilterConfig& cfg) {
  std::vector<Hypothesis> previous(belief.members().begin(), belief.members().end());
  while (static_cast<int>(belief.size()) < cfg.target_count && report.cycles < cfg.max_cycles) {
    ++report.cycles;
    auto batch = backend.sample_hypothesis_batch(history, cfg.target_count, previous);
    for (auto& h : batch) {
      ++report.sampled_count;
      previous.push_back(h);
      if (belief.contains(h.key)) {
        ++report.rejected_count;
        report.rejections.push_back({h.text, "duplicate"});
        continue;
      }
      const long bad = first_violation(h, history, backend, cfg.likelihood_threshold);
      if (bad >= 0) {
        ++report.rejected_count;
        report.rejections.push_back({h.text, violation_reason(history, bad)});
        continue;
      }
      belief.insert(std::move(h));
    }
  }
}

}  // namespace

std::vector<Hypothesis> filter_history(std::span<const Hypothesis> hyps, const History& history,
                                       Backend& backend, double threshold) {
  std::vector<Hypothesis> out;
  for (const auto& h : hyps) {
    if (first_violation(h, history, backend, threshold) < 0) out.push_back(h);
  }
  return out;
}

std::pair<BeliefState, FilterReport> initial_belief(const History& history, Backend& backend,
                                                    const FilterConfig& cfg) {
  cfg.validate();
  FilterReport report;
  BeliefState belief(static_cast<int>(history.size()));
  top_up(belief, report, history, backend, cfg);
  report.accepted = belief;
  return {std::move(belief), std::move(report)};
}

std::pair<BeliefState, FilterReport> update_belief(const BeliefState& prev, const QAPair& new_pair,
                                                   const History& history, Backend& backend,
                                                   const FilterConfig& cfg) {
  cfg.validate();
  if (history.empty() || history.back().first.id != new_pair.first.id ||
      history.back().second.option_index != new_pair.second.option_index) {
    throw Error(ErrorCode::InvalidArgument, "history must end with the new pair");
  }
  FilterReport report;
  BeliefState belief(static_cast<int>(history.size()));
  // Earlier pairs were already checked when these members were admitted.
  for (const auto& h : prev.members()) {
    if (is_consistent(h, new_pair, backend, cfg.likelihood_threshold)) {
      if (belief.insert(h)) ++report.retained_count;
    } else {
      ++report.dropped_count;
      report.rejections.push_back({h.text, violation_reason(history, static_cast<long>(history.size()) - 1)});
    }
  }
  top_up(belief, report, history, backend, cfg);
  report.accepted = belief;
  return {std::move(belief), std::move(report)};
}

}  // namespace infogain
