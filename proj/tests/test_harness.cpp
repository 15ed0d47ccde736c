#include <cmath>
#include <set>

#include "doctest.h"

#include "support.hpp"

#include "infogain/datasets.hpp"
#include "infogain/harness.hpp"

using namespace infogain;
using namespace infogain::testing;
namespace fs = std::filesystem;

namespace {

GameRecord solved_record(std::optional<int> success, std::optional<int> eval_correct_at, int budget = 5) {
  GameRecord r;
  r.config.budget = budget;
  for (int t = 1; t <= budget; ++t) {
    TurnRecord tr;
    tr.turn = t;
    tr.eval_correct = eval_correct_at && t >= *eval_correct_at;
    r.turns.push_back(tr);
    if (success && t == *success) break;
  }
  r.success_turn = success;
  r.outcome = success ? Outcome::Success : Outcome::BudgetExhausted;
  return r;
}

BackendFactory tabular_factory(std::shared_ptr<const TabularModel> m) {
  return [m](std::uint64_t seed) -> std::unique_ptr<Backend> { return std::make_unique<TabularBackend>(m, seed); };
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("proportion sem") {
  CHECK(proportion_sem(0.94, 100) * 100.0 == doctest::Approx(2.387).epsilon(1e-3));
  CHECK(proportion_sem(0.5, 1) == 0.0);
  CHECK(proportion_sem(1.0, 50) == 0.0);
}

TEST_CASE("success curve is absorbing and uses the earliest solve") {
  std::vector<GameRecord> rs{solved_record(4, std::nullopt), solved_record(std::nullopt, 2),
                             solved_record(5, 3), solved_record(std::nullopt, std::nullopt)};
  auto m = success_curve(rs);
  REQUIRE(m.p.size() == 5);
  CHECK(m.n == 4);
  CHECK(m.p[0] == 0.0);
  CHECK(m.p[1] == 0.25);
  CHECK(m.p[2] == 0.5);
  CHECK(m.p[3] == 0.75);
  CHECK(m.p[4] == 0.75);
  for (std::size_t t = 1; t < m.p.size(); ++t) CHECK(m.p[t] >= m.p[t - 1]);
  CHECK(m.sem[4] == doctest::Approx(std::sqrt(0.75 * 0.25 / 3)));
}

TEST_CASE("success curve rejects mixed configs") {
  std::vector<GameRecord> rs{solved_record(1, std::nullopt, 5), solved_record(1, std::nullopt, 6)};
  CHECK_THROWS_AS(success_curve(rs), Error);
  CHECK_THROWS_AS(success_curve(std::span<const GameRecord>{}), Error);
}

TEST_CASE("rate_run averages per user then across users") {
  GameRecord a, b;
  a.config = b.config = SessionConfig::preference();
  a.config.budget = b.config.budget = 1;
  TurnRecord ta;
  ta.turn = 1;
  ta.ratings = {4.0, 2.0, std::nullopt};
  a.turns.push_back(ta);
  TurnRecord tb;
  tb.turn = 1;
  tb.ratings = {5.0};
  b.turns.push_back(tb);
  std::vector<GameRecord> rs{a, b};
  auto m = rate_run(rs);
  REQUIRE(m.rating_mean.size() == 1);
  CHECK(m.rating_mean[0] == doctest::Approx(4.0));
  CHECK(m.rating_n[0] == 2);
  // Users 3 and 5: sd sqrt(2), SEM 1.
  CHECK(m.rating_sem[0] == doctest::Approx(1.0));
}

TEST_CASE("csv formats") {
  RunMetrics r;
  r.strategy = "eig";
  r.n = 10;
  r.p = {0.1, 0.25};
  r.sem = {0.1, 0.144338};
  const std::vector<RunMetrics> runs{r};
  CHECK(metrics_csv(runs) == "strategy,turn,p,sem,n\neig,1,0.100000,0.100000,10\neig,2,0.250000,0.144338,10\n");
  r.rating_mean = {3.5};
  r.rating_sem = {0.25};
  r.rating_n = {10};
  const std::vector<RunMetrics> rated{r};
  CHECK(ratings_csv(rated) == "strategy,turn,mean_rating,sem,n\neig,1,3.500000,0.250000,10\n");
}

TEST_CASE("game ids are stable and file safe") {
  CHECK(game_id(7, TargetEntry{"Arctic Fox", {}}) == "0007-arctic-fox");
  CHECK(game_id(12, TargetEntry{"Bird's-eye (view)!", {}}) == "0012-bird-s-eye-view");
}

TEST_CASE("benchmark resumes and quarantines") {
  TempDir dir("bench");
  auto entries = animals_dataset();
  entries.resize(12);
  auto model = std::make_shared<const TabularModel>(make_name_feature_model(animals_dataset()));
  auto cfg = SessionConfig::twenty_questions();
  cfg.seed = 3;
  auto f = tabular_factory(model);

  auto r1 = run_benchmark(entries, cfg, f, f, {dir.path(), 2});
  CHECK(r1.executed == 12);
  CHECK(r1.skipped == 0);
  CHECK(r1.quarantined.empty());
  CHECK(fs::exists(dir.path() / "metrics.csv"));
  const auto csv1 = read_text(dir.path() / "metrics.csv");
  const auto jsonl = read_text(dir.path() / "transcripts.jsonl");
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 12);

  fs::remove(dir.path() / "games" / (game_id(3, entries[3]) + ".json"));
  auto r2 = run_benchmark(entries, cfg, f, f, {dir.path(), 1});
  CHECK(r2.executed == 1);
  CHECK(r2.skipped == 11);
  CHECK(read_text(dir.path() / "metrics.csv") == csv1);

  // A target outside the model fails and lands in quarantine.
  entries.push_back(TargetEntry{"Unicorn", {}});
  auto r3 = run_benchmark(entries, cfg, f, f, {dir.path(), 1});
  CHECK(r3.quarantined.size() == 1);
  CHECK(fs::exists(dir.path() / "quarantine" / (game_id(12, entries[12]) + ".json")));
  CHECK(r3.metrics.n == 12);
}

TEST_CASE("preference benchmark writes ratings") {
  TempDir dir("pref");
  auto model = std::make_shared<const TabularModel>(make_persona_model());
  auto entries = persona_dataset();
  entries.resize(4);
  auto cfg = SessionConfig::preference();
  auto f = tabular_factory(model);
  auto r = run_benchmark(entries, cfg, f, f, {dir.path(), 1, 5});
  CHECK(r.quarantined.empty());
  REQUIRE(r.metrics.rating_mean.size() == 5);
  for (double x : r.metrics.rating_mean) {
    CHECK(x >= 1.0);
    CHECK(x <= 5.0);
  }
  CHECK(fs::exists(dir.path() / "ratings.csv"));
  CHECK_FALSE(fs::exists(dir.path() / "metrics.csv"));
}

TEST_CASE("recommendations are deduplicated and checked") {
  auto model = std::make_shared<const TabularModel>(make_persona_model());
  TabularBackend b(model, 1);
  BeliefState belief;
  belief.insert(model->hypotheses[0]);
  auto recs = recommend_items({}, belief, b, 5);
  std::set<std::string> keys;
  for (const auto& i : recs.items) keys.insert(normalize_key(i));
  CHECK(keys.size() == recs.items.size());
  CHECK(recs.items.size() <= 5);
  CHECK(recs.rounds >= 1);
  CHECK(recs.rounds <= 3);
  CHECK(recs.shortfall == (recs.items.size() < 5));
}

}  // TEST_SUITE
