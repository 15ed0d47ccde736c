// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Criterion 13 needs INFOGAIN_LIVE=1 and a backend config in
// INFOGAIN_LIVE_CONFIG; otherwise it reports SKIP.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "support.hpp"

#include "infogain/acquisition.hpp"
#include "infogain/belief.hpp"
#include "infogain/controller.hpp"
#include "infogain/datasets.hpp"
#include "infogain/harness.hpp"
#include "infogain/remote.hpp"

using namespace infogain;
using namespace infogain::testing;
namespace fs = std::filesystem;

namespace {

struct Failure {
  std::string what;
};

void expect(bool ok, const std::string& what) {
  if (!ok) throw Failure{what};
}

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

enum class Verdict { Pass, Fail, Skip };

struct Criterion {
  int number;
  std::string name;
  double limit_s;  // 0: no runtime bound
  std::function<std::string()> run;  // returns a short detail line
};

struct SkipCriterion {
  std::string reason;
};

// --- 1 ---------------------------------------------------------------------

std::string entropy_identities() {
  double worst = 0.0;
  for (std::size_t k = 2; k <= 8; ++k) {
    const double err = std::abs(entropy(CategoricalDistribution::uniform(k)) - std::log(double(k)));
    worst = std::max(worst, err);
    expect(err <= 1e-12, "entropy(uniform " + std::to_string(k) + ") off by " + num(err));
    for (std::size_t i = 0; i < k; ++i) {
      expect(entropy(CategoricalDistribution::point_mass(k, i)) == 0.0, "point mass entropy is not 0");
    }
  }
  return "max |H(uniform k) - ln k| = " + num(worst);
}

// --- 2 and 3 ----------------------------------------------------------------

// Builds a random model and a history over its deterministic questions; the
// exact posterior is then proportional to the integer prior counts on the
// surviving support.
struct OracleCase {
  std::shared_ptr<const TabularModel> model;
  History history;
  std::vector<double> posterior;
  std::vector<Hypothesis> support;  // repeated by prior count
};

OracleCase oracle_case(std::uint64_t seed) {
  Rng rng(derive_seed(2024, seed));
  std::vector<int> counts;
  RandomModelSpec spec;
  spec.max_hypotheses = 12;
  spec.questions = 7;
  spec.deterministic_questions = 3;
  spec.multiple_choice = seed % 2 == 1;
  spec.mc_live_options = 3 + seed % 4 / 2;
  OracleCase c;
  c.model = std::make_shared<const TabularModel>(random_model(rng, spec, &counts));
  const std::size_t target = rng.below(c.model->hypotheses.size());
  for (std::size_t q = 0; q < spec.deterministic_questions; ++q) {
    if (rng.uniform() < 0.5) continue;
    const auto& row = c.model->likelihood[q][target];
    c.history.append(c.model->question_bank[q], Answer{c.model->question_bank[q].id, row[0] > 0.5 ? 0u : 1u});
  }
  c.posterior = c.model->posterior(c.history);
  for (std::size_t h = 0; h < c.model->hypotheses.size(); ++h) {
    if (c.posterior[h] > 0.0) {
      for (int k = 0; k < counts[h]; ++k) c.support.push_back(c.model->hypotheses[h]);
    }
  }
  return c;
}

std::string oracle_equivalence() {
  double worst = 0.0;
  std::size_t checks = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    auto c = oracle_case(s);
    TabularBackend b(c.model, s);
    for (const auto& q : c.model->question_bank) {
      const double est = estimate_eig(q, c.support, b).score;
      const double exact = exact_eig_tabular(*c.model, c.posterior, q);
      const double err = std::abs(est - exact);
      worst = std::max(worst, err);
      ++checks;
      expect(err <= 1e-9, "model " + std::to_string(s) + " question " + q.id + ": estimate " + num(est) +
                              " vs exact " + num(exact));
    }
  }
  return std::to_string(checks) + " question scores (2 to 4 answer options), max error " + num(worst);
}

void check_jensen(std::span<const CategoricalDistribution> rows, const std::string& where) {
  const double eig = eig_from_rows(rows);
  const double pred = predictive_entropy_from_rows(rows);
  double cond = 0.0;
  for (const auto& r : rows) cond += entropy(r);
  cond /= static_cast<double>(rows.size());
  const double bound = std::log(static_cast<double>(rows.front().size()));
  expect(eig >= 0.0, where + ": negative EIG " + num(eig));
  expect(eig <= bound + 1e-12, where + ": EIG " + num(eig) + " above ln|options|");
  expect(std::abs(pred - (eig + cond)) <= 1e-12, where + ": pred-entropy does not reconcile");
}

std::string jensen_bounds() {
  std::size_t sets = 0;
  for (std::uint64_t s = 0; s < 500; ++s) {
    auto c = oracle_case(s);
    TabularBackend b(c.model, s);
    for (const auto& q : c.model->question_bank) {
      const auto scored = estimate_eig(q, c.support, b);
      const auto pred = estimate_pred_entropy(q, c.support, b);
      check_jensen(scored.rows, "model " + std::to_string(s));
      expect(scored.score == eig_from_rows(scored.rows), "estimate_eig differs from its rows");
      expect(pred.score == predictive_entropy_from_rows(pred.rows), "estimate_pred_entropy differs from its rows");
      ++sets;
    }
  }
  Rng rng(77);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t k = 2 + rng.below(3);
    std::vector<CategoricalDistribution> rows;
    for (std::size_t n = 0, total = 1 + rng.below(16); n < total; ++n) rows.push_back(random_row(rng, k));
    check_jensen(rows, "row set " + std::to_string(i));
    ++sets;
  }
  return std::to_string(sets) + " row sets within bounds";
}

// --- 4 ----------------------------------------------------------------------

std::string uniform_vs_split() {
  auto m = std::make_shared<const TabularModel>(uniform_vs_split_model());
  TabularBackend b(m, 1);
  const auto& qa = m->question_bank[0];
  const auto& qb = m->question_bank[1];
  std::vector<ScoredQuestion> eig{estimate_eig(qa, m->hypotheses, b), estimate_eig(qb, m->hypotheses, b)};
  std::vector<ScoredQuestion> ent{estimate_pred_entropy(qa, m->hypotheses, b),
                                  estimate_pred_entropy(qb, m->hypotheses, b)};
  const double ln4 = std::log(4.0);
  expect(std::abs(eig[0].score) < 1e-12, "EIG(A) = " + num(eig[0].score));
  expect(std::abs(eig[1].score - ln4) < 1e-12, "EIG(B) = " + num(eig[1].score));
  expect(std::abs(ent[0].score - ln4) < 1e-12, "H(A) = " + num(ent[0].score));
  expect(std::abs(ent[1].score - ln4) < 1e-12, "H(B) = " + num(ent[1].score));
  expect(std::abs(exact_eig_tabular(*m, m->prior, qa)) < 1e-12, "exact EIG(A) is not 0");
  expect(select_question(eig) == 1, "eig did not select B");
  expect(select_question(ent) == 0, "entropy did not select A");
  return "EIG A=" + num(eig[0].score) + " B=" + num(eig[1].score) + "; H A=" + num(ent[0].score) +
         " B=" + num(ent[1].score) + "; eig->B, entropy->A";
}

// --- 5 ----------------------------------------------------------------------

SessionConfig split_config(StrategyKind s) {
  auto cfg = SessionConfig::twenty_questions();
  cfg.strategy = s;
  cfg.budget = 5;
  cfg.filter.target_count = 16;
  return cfg;
}

std::string adversarial_game() {
  auto m = std::make_shared<const TabularModel>(split_game(4, 8, true));
  int eig_wins = 0, entropy_wins = 0;
  for (std::size_t t = 0; t < m->hypotheses.size(); ++t) {
    const TargetEntry target{m->hypotheses[t].text, {}};
    TabularBackend q1(m, t), a1(m, 100 + t);
    auto r1 = run_game(split_config(StrategyKind::Eig), target, q1, a1);
    if (r1.outcome == Outcome::Success && r1.success_turn && *r1.success_turn <= 5) ++eig_wins;
    TabularBackend q2(m, t), a2(m, 100 + t);
    auto r2 = run_game(split_config(StrategyKind::Entropy), target, q2, a2);
    if (r2.outcome == Outcome::Success) ++entropy_wins;
    for (const auto& turn : r2.turns) {
      expect(turn.question.id.rfind("noise", 0) == 0, "entropy asked " + turn.question.id);
    }
  }
  expect(eig_wins == 16, "eig solved " + std::to_string(eig_wins) + "/16");
  expect(entropy_wins == 0, "entropy solved " + std::to_string(entropy_wins) + "/16");
  return "eig " + std::to_string(eig_wins) + "/16 by turn 5, entropy " + std::to_string(entropy_wins) + "/16";
}

// --- 6 ----------------------------------------------------------------------

std::string belief_soundness() {
  std::size_t checks = 0;
  std::size_t dropped = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(derive_seed(6, s));
    RandomModelSpec spec;
    spec.min_hypotheses = 6;
    spec.max_hypotheses = 12;
    spec.questions = 12;
    spec.deterministic_questions = 2;
    spec.multiple_choice = s % 3 == 0;
    spec.integer_prior = false;
    auto m = std::make_shared<const TabularModel>(random_model(rng, spec));
    auto cfg = SessionConfig::twenty_questions();
    cfg.question_kind = spec.multiple_choice ? QuestionKind::MultipleChoice : QuestionKind::Binary;
    cfg.budget = 8;
    cfg.candidates = 6;
    cfg.filter.target_count = 8;
    cfg.seed = s;
    cfg.strategy = s % 2 == 0 ? StrategyKind::Eig : StrategyKind::Entropy;
    TabularBackend q(m, derive_seed(s, 1)), a(m, derive_seed(s, 2));
    const TargetEntry target{m->hypotheses[rng.below(m->hypotheses.size())].text, {}};
    auto rec = run_game(cfg, target, q, a, [&](const Game& g, TurnRecord& t) {
      const auto& members = g.belief().members();
      TabularBackend checker(m, 0);
      const auto full = filter_history(members, g.history(), checker, cfg.filter.likelihood_threshold);
      expect(full.size() == members.size(), "game " + std::to_string(s) + " turn " + std::to_string(t.turn) +
                                                ": a member fails the full-history check");
      if (t.filter) dropped += static_cast<std::size_t>(t.filter->dropped_count);
      ++checks;
    });
    expect(rec.outcome != Outcome::Aborted, "game " + std::to_string(s) + " aborted: " + rec.error);
  }
  expect(dropped > 0, "no member was ever dropped; the check is vacuous");
  return std::to_string(checks) + " turn checks, " + std::to_string(dropped) + " members dropped along the way";
}

// --- 7 ----------------------------------------------------------------------

std::string monte_carlo_convergence() {
  const std::vector<int> sizes{4, 16, 64, 256};
  std::vector<std::vector<double>> errors(sizes.size());
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(derive_seed(7, s));
    RandomModelSpec spec;
    spec.min_hypotheses = 4;
    spec.max_hypotheses = 12;
    spec.questions = 4;
    spec.deterministic_questions = 0;
    spec.multiple_choice = s % 2 == 1;
    spec.integer_prior = false;
    auto m = std::make_shared<const TabularModel>(random_model(rng, spec));
    // Condition on two noisy answers drawn from a random target.
    const std::size_t target = rng.below(m->hypotheses.size());
    History h;
    for (std::size_t q = 0; q < 2; ++q) {
      const auto& row = m->likelihood[q][target];
      h.append(m->question_bank[q], Answer{m->question_bank[q].id, rng.categorical(row.probs())});
    }
    const auto post = m->posterior(h);
    const auto& probe = m->question_bank[3];
    const double exact = exact_eig_tabular(*m, post, probe);
    TabularBackend b(m, s);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      std::vector<Hypothesis> draws;
      for (int n = 0; n < sizes[i]; ++n) draws.push_back(m->hypotheses[rng.categorical(post)]);
      errors[i].push_back(std::abs(estimate_eig(probe, draws, b).score - exact));
    }
  }
  std::vector<double> medians;
  for (auto& e : errors) {
    std::sort(e.begin(), e.end());
    medians.push_back(0.5 * (e[e.size() / 2 - 1] + e[e.size() / 2]));
  }
  std::string detail = "medians";
  for (std::size_t i = 0; i < sizes.size(); ++i) detail += " N=" + std::to_string(sizes[i]) + ":" + num(medians[i]);
  for (std::size_t i = 1; i < medians.size(); ++i) {
    expect(medians[i] <= medians[i - 1], "median error increased: " + detail);
  }
  return detail;
}

// --- 8 ----------------------------------------------------------------------

std::string sem_reproduction() {
  std::vector<GameRecord> records(100);
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& r = records[i];
    r.config.budget = 1;
    TurnRecord t;
    t.turn = 1;
    t.eval_correct = i < 94;
    r.turns.push_back(t);
  }
  const auto m = success_curve(records);
  const double p = m.p.back() * 100.0;
  const double sem = m.sem.back() * 100.0;
  expect(std::abs(p - 94.0) < 1e-9, "p = " + num(p));
  expect(std::abs(sem - 2.4) <= 0.05, "SEM = " + num(sem));
  return "p = " + num(p) + "%, SEM = " + num(sem) + " points";
}

// --- 9 ----------------------------------------------------------------------

std::string data_estimation_ordering() {
  auto game = std::make_shared<const TabularModel>(split_game(4, 8, true));
  TabularBackend exact(game, 1);
  double worst_split = 0.0, best_noise = -1e9;
  worst_split = 1e9;
  for (const auto& q : game->question_bank) {
    const double s = data_estimation_score(q, {}, exact, 10).score;
    if (q.id.rfind("split", 0) == 0) {
      worst_split = std::min(worst_split, s);
    } else {
      best_noise = std::max(best_noise, s);
    }
  }
  expect(worst_split > best_noise, "a noise question ranks with the splits: split " + num(worst_split) +
                                       " vs noise " + num(best_noise));

  // Degraded posterior sampling: plug-in entropy from k = 4 draws. Error means
  // picking a question whose exact EIG is below the best available.
  int de_errors = 0, eig_errors = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    Rng rng(derive_seed(9, s));
    RandomModelSpec spec;
    spec.min_hypotheses = 8;
    spec.max_hypotheses = 8;
    spec.questions = 6;
    spec.deterministic_questions = 2;
    auto m = std::make_shared<const TabularModel>(random_model(rng, spec));
    std::vector<double> oracle;
    for (const auto& q : m->question_bank) oracle.push_back(exact_eig_tabular(*m, m->prior, q));
    const double best = *std::max_element(oracle.begin(), oracle.end());

    TabularBackend degraded(m, s, {PosteriorEntropyMode::PlugIn});
    std::vector<double> de;
    for (const auto& q : m->question_bank) de.push_back(data_estimation_score(q, {}, degraded, 4).score);
    if (oracle[select_question(de)] < best - 1e-9) ++de_errors;

    TabularBackend questioner(m, s);
    FilterConfig fc;
    auto [belief, report] = initial_belief({}, questioner, fc);
    std::vector<double> eig;
    for (const auto& q : m->question_bank) eig.push_back(estimate_eig(q, belief, questioner).score);
    if (oracle[select_question(eig)] < best - 1e-9) ++eig_errors;
  }
  expect(de_errors > eig_errors, "data-estimation errors " + std::to_string(de_errors) + " vs eig " +
                                     std::to_string(eig_errors));
  return "splits " + num(worst_split) + " > noise " + num(best_noise) + "; selection errors over 100 seeds: " +
         "data-estimation(k=4) " + std::to_string(de_errors) + ", eig " + std::to_string(eig_errors);
}

// --- 10 ---------------------------------------------------------------------

std::string wire_protocol() {
  StubChatServer stub;
  BackendConfig cfg;
  cfg.endpoint = stub.endpoint();
  cfg.model = "stub";
  cfg.backoff = std::chrono::milliseconds(1);
  cfg.max_retries = 2;
  cfg.sample_count = 4;
  cfg.timeout = std::chrono::milliseconds(5000);
  auto client = std::make_shared<ChatClient>(cfg, nullptr);
  RemoteBackend b(client);
  const auto q = Question::binary("q", "Does it swim?");

  // Logprob extraction and renormalization over the option labels.
  stub.push({200, logprob_completion("Yes", {{"Yes", std::log(0.45)}, {"No", std::log(0.15)}, {"Maybe", -1.0}})});
  auto d = b.answer_distribution(Hypothesis("Otter"), q);
  expect(std::abs(d[0] - 0.75) < 1e-12 && std::abs(d[1] - 0.25) < 1e-12,
         "renormalized logprobs " + num(d[0]) + "/" + num(d[1]));
  auto reqs = stub.requests();
  expect(reqs.size() == 1 && reqs[0].value("logprobs", false) && reqs[0].value("top_logprobs", 0) == cfg.top_logprobs,
         "logprobs were not requested");

  // Retry: two retryable failures, then success.
  const auto before = client->attempts();
  stub.push({503, {{"error", "busy"}}});
  stub.push({429, {{"error", "rate"}}});
  stub.push({200, logprob_completion("No", {{"No", std::log(0.8)}, {"Yes", std::log(0.2)}})});
  d = b.answer_distribution(Hypothesis("Otter"), q);
  expect(client->attempts() - before == 3, "expected 3 attempts, saw " + std::to_string(client->attempts() - before));
  expect(std::abs(d[1] - 0.8) < 1e-12, "retry result " + num(d[1]));

  // Non-retryable client error surfaces at once.
  const auto before_bad = client->attempts();
  stub.push({400, {{"error", "bad"}}});
  bool threw = false;
  try {
    b.answer_distribution(Hypothesis("Otter"), q);
  } catch (const TransportError& e) {
    threw = !e.retryable();
  }
  expect(threw && client->attempts() - before_bad == 1, "400 was retried or not reported");

  // Missing logprobs: fall back to add-one sample frequencies.
  stub.push({200, completion({"Yes"})});
  stub.push({200, completion({"Yes", "yes.", "No", "Yes"})});
  d = b.answer_distribution(Hypothesis("Otter"), q);
  expect(std::abs(d[0] - 4.0 / 6.0) < 1e-12, "sample-frequency fallback gave " + num(d[0]));

  const auto all = stub.requests();
  for (const auto& r : all) {
    expect(r.contains("messages") && r.contains("model"), "malformed request body");
  }
  return std::to_string(all.size()) + " stub requests; renormalize, retry, no-retry on 400, fallback all ok";
}

// --- 11 ---------------------------------------------------------------------

std::string determinism() {
  TempDir dir("acceptance-det");
  const auto entries = animals_dataset();
  auto model = std::make_shared<const TabularModel>(make_name_feature_model(entries));
  BackendFactory f = [model](std::uint64_t seed) -> std::unique_ptr<Backend> {
    return std::make_unique<TabularBackend>(model, seed);
  };
  auto cfg = SessionConfig::twenty_questions();
  cfg.seed = 11;
  std::vector<std::string> csvs;
  for (const auto& [name, par] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 4}, {"c", 1}}) {
    const auto run = dir.path() / name;
    auto r = run_benchmark(entries, cfg, f, f, {run, par});
    expect(r.quarantined.empty(), "run " + name + " quarantined games");
    csvs.push_back(read_text(run / "metrics.csv"));
  }
  // A resumed run over complete results rewrites the same bytes.
  auto r = run_benchmark(entries, cfg, f, f, {dir.path() / "a", 2});
  expect(r.executed == 0, "resume re-ran games");
  csvs.push_back(read_text(dir.path() / "a" / "metrics.csv"));
  for (std::size_t i = 1; i < csvs.size(); ++i) expect(csvs[i] == csvs[0], "metrics.csv differs across runs");
  expect(csvs[0].size() > 100, "metrics.csv is suspiciously small");
  return "4 runs (parallelism 1, 4, 1, resumed) byte-identical, " + std::to_string(csvs[0].size()) + " bytes";
}

// --- 13 ---------------------------------------------------------------------

std::string live_smoke() {
  const char* flag = std::getenv("INFOGAIN_LIVE");
  if (!flag || std::string(flag) != "1") throw SkipCriterion{"set INFOGAIN_LIVE=1 to run"};
  const char* path = std::getenv("INFOGAIN_LIVE_CONFIG");
  BackendConfig cfg = path ? load_backend_config(path) : backend_config_from_json(nlohmann::json::object());
  auto prompts = PromptTemplates::for_task(cfg.task);
  RemoteBackend questioner(std::make_shared<ChatClient>(cfg, nullptr), prompts);
  RemoteBackend answerer(std::make_shared<ChatClient>(cfg, nullptr), prompts);
  auto session = SessionConfig::twenty_questions();
  const auto target = parse_target_entry("Dolphin");
  auto rec = run_game(session, target, questioner, answerer, {}, "live-smoke");
  expect(rec.outcome != Outcome::Aborted, "game aborted: " + rec.error);
  const auto j = to_json(rec);
  const auto back = game_record_from_json(nlohmann::json::parse(j.dump()));
  expect(back.turns.size() == rec.turns.size() && !rec.turns.empty(), "transcript did not round trip");
  return std::string(to_string(rec.outcome)) + " after " + std::to_string(rec.turns.size()) + " turns";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "entropy identities", 1.0, entropy_identities},
      {2, "estimator matches exact EIG on 500 models", 10.0, oracle_equivalence},
      {3, "Jensen bounds and estimator reconciliation", 0.0, jensen_bounds},
      {4, "uniform-noise vs split question", 1.0, uniform_vs_split},
      {5, "adversarial split game separation", 5.0, adversarial_game},
      {6, "belief soundness over 100 games", 10.0, belief_soundness},
      {7, "Monte Carlo convergence", 30.0, monte_carlo_convergence},
      {8, "SEM reproduction", 1.0, sem_reproduction},
      {9, "data-estimation ablation ordering", 30.0, data_estimation_ordering},
      {10, "wire protocol against a stub server", 0.0, wire_protocol},
      {11, "deterministic metrics across reruns", 0.0, determinism},
      {13, "live smoke game", 0.0, live_smoke},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v = Verdict::Pass;
    std::string detail;
    try {
      detail = c.run();
    } catch (const SkipCriterion& s) {
      v = Verdict::Skip;
      detail = s.reason;
    } catch (const Failure& f) {
      v = Verdict::Fail;
      detail = f.what;
    } catch (const std::exception& e) {
      v = Verdict::Fail;
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (v == Verdict::Pass && c.limit_s > 0.0 && secs > c.limit_s) {
      v = Verdict::Fail;
      detail += " (took " + num(secs) + " s, limit " + num(c.limit_s) + " s)";
    }
    if (v == Verdict::Fail) ++failures;
    const char* tag = v == Verdict::Pass ? "PASS" : v == Verdict::Fail ? "FAIL" : "SKIP";
    std::printf("[%s] %2d  %-45s %7.3fs  %s\n", tag, c.number, c.name.c_str(), secs, detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
