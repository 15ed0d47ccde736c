#include "infogain/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace infogain {

namespace fs = std::filesystem;
using nlohmann::json;

double proportion_sem(double p, int n) {
  if (n < 2) return 0.0;
  return std::sqrt(p * (1.0 - p) / static_cast<double>(n - 1));
}

namespace {

void check_shared_config(std::span<const GameRecord> records) {
  if (records.empty()) throw Error(ErrorCode::InvalidArgument, "no records");
  const auto& c0 = records.front().config;
  for (const auto& r : records) {
    if (r.config.strategy != c0.strategy || r.config.budget != c0.budget ||
        r.config.task != c0.task) {
      throw Error(ErrorCode::InvalidArgument, "records do not share a config");
    }
  }
}

// First turn at which the game counts as solved, if any.
std::optional<int> solved_at(const GameRecord& r) {
  std::optional<int> best = r.success_turn;
  for (const auto& t : r.turns) {
    if (t.eval_correct.value_or(false)) {
      if (!best || t.turn < *best) best = t.turn;
      break;
    }
  }
  return best;
}

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

RunMetrics success_curve(std::span<const GameRecord> records) {
  check_shared_config(records);
  const int budget = records.front().config.budget;
  RunMetrics m;
  m.strategy = std::string(to_string(records.front().config.strategy));
  m.n = static_cast<int>(records.size());
  std::vector<int> solved(static_cast<std::size_t>(budget), 0);
  for (const auto& r : records) {
    if (auto t = solved_at(r)) {
      for (int k = *t; k <= budget; ++k) ++solved[static_cast<std::size_t>(k - 1)];
    }
  }
  for (int k = 0; k < budget; ++k) {
    const double p = static_cast<double>(solved[static_cast<std::size_t>(k)]) / m.n;
    m.p.push_back(p);
    m.sem.push_back(proportion_sem(p, m.n));
  }
  return m;
}

RunMetrics rate_run(std::span<const GameRecord> records) {
  check_shared_config(records);
  const int budget = records.front().config.budget;
  RunMetrics m;
  m.strategy = std::string(to_string(records.front().config.strategy));
  m.n = static_cast<int>(records.size());
  for (int t = 1; t <= budget; ++t) {
    std::vector<double> user_means;
    for (const auto& r : records) {
      for (const auto& turn : r.turns) {
        if (turn.turn != t) continue;
        double sum = 0.0;
        int cnt = 0;
        for (const auto& x : turn.ratings) {
          if (x) {
            sum += *x;
            ++cnt;
          }
        }
        if (cnt > 0) user_means.push_back(sum / cnt);
      }
    }
    const int n = static_cast<int>(user_means.size());
    double mean = 0.0;
    for (double u : user_means) mean += u;
    mean = n > 0 ? mean / n : std::nan("");
    double sem = 0.0;
    if (n >= 2) {
      double ss = 0.0;
      for (double u : user_means) ss += (u - mean) * (u - mean);
      sem = std::sqrt(ss / (n - 1)) / std::sqrt(static_cast<double>(n));
    }
    m.rating_mean.push_back(mean);
    m.rating_sem.push_back(sem);
    m.rating_n.push_back(n);
  }
  return m;
}

Recommendations recommend_items(const History& history, const BeliefState& belief, Backend& backend,
                                int count, int max_rounds) {
  if (count < 1) throw Error(ErrorCode::InvalidArgument, "count must be >= 1");
  Recommendations out;
  std::set<std::string> seen;
  std::vector<std::string> exclude;
  for (int round = 0; round < max_rounds && static_cast<int>(out.items.size()) < count; ++round) {
    ++out.rounds;
    const int want = count - static_cast<int>(out.items.size());
    for (auto& item : backend.generate_recommendations(history, belief.members(), want, exclude)) {
      if (static_cast<int>(out.items.size()) >= count) break;
      const auto key = normalize_key(item);
      if (key.empty() || !seen.insert(key).second) continue;
      exclude.push_back(item);
      if (backend.recommendation_consistent(item, history)) out.items.push_back(std::move(item));
    }
  }
  out.shortfall = static_cast<int>(out.items.size()) < count;
  return out;
}

Game::TurnHook preference_hook(Backend& answerer, Hypothesis persona, int count) {
  return [&answerer, persona = std::move(persona), count](const Game& game, TurnRecord& turn) {
    auto recs = recommend_items(game.history(), game.belief(), game.questioner(), count);
    turn.recommendations = recs.items;
    turn.recommendation_shortfall = recs.shortfall;
    if (!recs.items.empty()) turn.ratings = answerer.judge_recommendations(persona, recs.items);
  };
}

std::string game_id(std::size_t index, const TargetEntry& entry) {
  char prefix[16];
  std::snprintf(prefix, sizeof(prefix), "%04zu-", index);
  std::string slug;
  for (char c : normalize_key(entry.name)) {
    if (slug.size() >= 32) break;
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      slug += c;
    } else if (!slug.empty() && slug.back() != '-') {
      slug += '-';
    }
  }
  while (!slug.empty() && slug.back() == '-') slug.pop_back();
  return prefix + slug;
}

BenchmarkResult run_benchmark(std::span<const TargetEntry> dataset, const SessionConfig& cfg,
                              const BackendFactory& questioner, const BackendFactory& answerer,
                              const BenchmarkOptions& opts) {
  cfg.validate();
  if (dataset.empty()) throw Error(ErrorCode::InvalidArgument, "empty dataset");
  if (opts.run_dir.empty()) throw Error(ErrorCode::InvalidArgument, "run_dir is required");
  const fs::path games_dir = opts.run_dir / "games";
  const fs::path quarantine_dir = opts.run_dir / "quarantine";
  fs::create_directories(games_dir);
  fs::create_directories(quarantine_dir);

  BenchmarkResult result;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (fs::exists(games_dir / (game_id(i, dataset[i]) + ".json"))) {
      ++result.skipped;
    } else {
      todo.push_back(i);
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      const std::size_t i = todo[k];
      const auto& entry = dataset[i];
      const auto id = game_id(i, entry);
      SessionConfig game_cfg = cfg;
      game_cfg.seed = derive_seed(cfg.seed, i);
      std::string failure;
      try {
        auto q = questioner(derive_seed(game_cfg.seed, 1));
        auto a = answerer(derive_seed(game_cfg.seed, 2));
        Game::TurnHook hook;
        if (cfg.task == SessionTask::Preference) {
          hook = preference_hook(*a, Hypothesis(entry.name), opts.recommendation_count);
        }
        auto record = run_game(game_cfg, entry, *q, *a, std::move(hook), id);
        const auto text = to_json(record).dump() + "\n";
        if (record.outcome == Outcome::Aborted) {
          write_atomic(quarantine_dir / (id + ".json"), text);
          failure = record.error;
        } else {
          write_atomic(games_dir / (id + ".json"), text);
          fs::remove(quarantine_dir / (id + ".json"));
        }
      } catch (const std::exception& e) {
        failure = e.what();
        write_atomic(quarantine_dir / (id + ".json"),
                     json{{"id", id}, {"target", entry.name}, {"error", failure}}.dump() + "\n");
      }
      std::lock_guard lock(mu);
      ++result.executed;
      if (!failure.empty()) result.quarantined.push_back(id + ": " + failure);
    }
  };
  const int threads = std::max(1, std::min<int>(opts.parallelism, static_cast<int>(todo.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Single-writer pass over the completed games, in dataset order.
  std::vector<GameRecord> records;
  std::string transcripts;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto path = games_dir / (game_id(i, dataset[i]) + ".json");
    if (!fs::exists(path)) continue;
    const auto text = read_file(path);
    records.push_back(game_record_from_json(json::parse(text)));
    transcripts += text;
    if (!transcripts.empty() && transcripts.back() != '\n') transcripts += '\n';
  }
  write_atomic(opts.run_dir / "transcripts.jsonl", transcripts);
  if (!records.empty()) {
    result.metrics = success_curve(records);
    if (cfg.task == SessionTask::Preference) {
      auto rated = rate_run(records);
      result.metrics.rating_mean = rated.rating_mean;
      result.metrics.rating_sem = rated.rating_sem;
      result.metrics.rating_n = rated.rating_n;
    }
  } else {
    result.metrics.strategy = std::string(to_string(cfg.strategy));
  }
  const std::vector<RunMetrics> runs{result.metrics};
  if (cfg.task == SessionTask::Guessing) {
    write_atomic(opts.run_dir / "metrics.csv", metrics_csv(runs));
  } else {
    write_atomic(opts.run_dir / "ratings.csv", ratings_csv(runs));
  }
  return result;
}

std::string metrics_csv(std::span<const RunMetrics> runs) {
  std::string out = "strategy,turn,p,sem,n\n";
  for (const auto& r : runs) {
    for (std::size_t t = 0; t < r.p.size(); ++t) {
      out += r.strategy + "," + std::to_string(t + 1) + "," + fmt(r.p[t]) + "," + fmt(r.sem[t]) + "," +
             std::to_string(r.n) + "\n";
    }
  }
  return out;
}

std::string ratings_csv(std::span<const RunMetrics> runs) {
  std::string out = "strategy,turn,mean_rating,sem,n\n";
  for (const auto& r : runs) {
    for (std::size_t t = 0; t < r.rating_mean.size(); ++t) {
      out += r.strategy + "," + std::to_string(t + 1) + "," + fmt(r.rating_mean[t]) + "," +
             fmt(r.rating_sem[t]) + "," + std::to_string(r.rating_n[t]) + "\n";
    }
  }
  return out;
}

}  // namespace infogain
