// infogain: play, benchmark and serve information-gathering sessions.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "infogain/datasets.hpp"
#include "infogain/harness.hpp"
#include "infogain/remote.hpp"
#include "infogain/service.hpp"
#include "infogain/tabular.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace infogain;

namespace {

struct Options {
  std::string config_path;
  std::string backend = "tabular";
  std::string task;
  std::string strategy;
  std::string dataset = "animals";
  std::string model_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> budget;
  std::optional<int> candidates;
  std::string run_dir = "runs/latest";
  int parallelism = 1;
  std::vector<std::string> strategies{"eig", "entropy", "naive"};
  std::string host = "127.0.0.1";
  int port = 8080;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
  return json::parse(in);
}

struct Setup {
  SessionConfig session;
  std::optional<BackendConfig> remote;
  PromptTemplates prompts;
  std::shared_ptr<const TabularModel> model;
  std::vector<TargetEntry> dataset;
};

Setup make_setup(const Options& o) {
  json file = o.config_path.empty() ? json::object() : read_json_file(o.config_path);
  json session = file.value("session", json::object());
  if (!o.task.empty()) session["task"] = o.task;
  if (!o.strategy.empty()) session["strategy"] = o.strategy;
  if (o.seed) session["seed"] = *o.seed;
  if (o.budget) session["budget"] = *o.budget;
  if (o.candidates) session["candidates"] = *o.candidates;

  Setup s;
  s.session = session_config_from_json(session);
  const bool persona = s.session.task == SessionTask::Preference;

  if (o.backend == "remote") {
    json bj = file.value("backend", json::object());
    bj["task"] = persona ? "persona" : "entity";
    s.remote = backend_config_from_json(bj);
    s.prompts = PromptTemplates::for_task(s.remote->task);
    if (file.contains("prompts")) s.prompts.override_from_json(file.at("prompts"));
    if (s.remote->api_key.empty()) {
      std::cerr << "warning: " << s.remote->api_key_env << " is not set\n";
    }
  } else if (o.backend != "tabular") {
    throw Error(ErrorCode::InvalidArgument, "--backend must be tabular or remote");
  }

  const std::string model_path = !o.model_path.empty() ? o.model_path : file.value("model", std::string());
  if (persona && o.dataset == "animals") {
    s.dataset = persona_dataset();
  } else if (o.dataset == "animals") {
    s.dataset = animals_dataset();
  } else if (o.dataset == "personas") {
    s.dataset = persona_dataset();
  } else {
    s.dataset = load_dataset(o.dataset);
  }

  if (o.backend == "tabular") {
    if (!model_path.empty()) {
      s.model = std::make_shared<const TabularModel>(load_tabular_model(model_path));
    } else if (persona) {
      s.model = std::make_shared<const TabularModel>(make_persona_model());
    } else {
      s.model = std::make_shared<const TabularModel>(make_name_feature_model(s.dataset));
    }
  }
  return s;
}

BackendFactory factory_for(const Setup& s) {
  if (s.remote) {
    auto cfg = *s.remote;
    auto prompts = s.prompts;
    return [cfg, prompts](std::uint64_t) -> std::unique_ptr<Backend> {
      auto client = std::make_shared<ChatClient>(cfg, nullptr);
      return std::make_unique<RemoteBackend>(client, prompts);
    };
  }
  auto model = s.model;
  return [model](std::uint64_t seed) -> std::unique_ptr<Backend> {
    return std::make_unique<TabularBackend>(model, seed);
  };
}

void print_question(const Question& q, int turn) {
  std::cout << "\n[" << turn << "] " << q.text << "\n";
  if (q.kind == QuestionKind::MultipleChoice) {
    for (const auto& opt : q.options) std::cout << "  " << opt.label << ". " << opt.text << "\n";
  } else {
    std::cout << "  (Yes/No)\n";
  }
}

int cmd_play(const Options& o) {
  auto s = make_setup(o);
  auto backend = factory_for(s)(s.session.seed);
  Game game(s.session, *backend, "interactive");
  game.start();
  std::cout << "Think of a target and answer each question. Ctrl-D quits.\n";
  while (auto q = game.prepare_turn()) {
    print_question(*q, static_cast<int>(game.record().turns.size()) + 1);
    std::optional<std::size_t> idx;
    std::string line;
    while (!idx) {
      std::cout << "> " << std::flush;
      if (!std::getline(std::cin, line)) return 0;
      idx = q->option_index(line);
      if (!idx) std::cout << "please answer with one of the option labels\n";
    }
    game.record_answer(Answer{q->id, *idx});
    const auto& belief = game.belief();
    if (const auto& last = game.record().turns; !last.empty() && last.back().eval_guess) {
      std::cout << "  (current best guess: " << *last.back().eval_guess << "; " << belief.size()
                << " hypotheses remain)\n";
    }
  }
  const auto& rec = game.record();
  std::cout << "\noutcome: " << to_string(rec.outcome);
  if (rec.success_turn) std::cout << " at turn " << *rec.success_turn;
  if (!rec.error.empty()) std::cout << " (" << rec.error << ")";
  std::cout << "\n";
  return rec.outcome == Outcome::Aborted ? 1 : 0;
}

void print_result(const BenchmarkResult& r) {
  std::cout << r.metrics.strategy << ": executed " << r.executed << ", skipped " << r.skipped
            << ", quarantined " << r.quarantined.size() << "\n";
  for (const auto& q : r.quarantined) std::cout << "  quarantined " << q << "\n";
  if (!r.metrics.p.empty() && r.metrics.rating_mean.empty()) {
    std::cout << "  final success rate " << r.metrics.p.back() << " +/- " << r.metrics.sem.back()
              << " (n=" << r.metrics.n << ")\n";
  }
  if (!r.metrics.rating_mean.empty()) {
    std::cout << "  final mean rating " << r.metrics.rating_mean.back() << " +/- "
              << r.metrics.rating_sem.back() << "\n";
  }
}

int cmd_bench(const Options& o) {
  auto s = make_setup(o);
  auto f = factory_for(s);
  BenchmarkOptions bo{o.run_dir, o.parallelism};
  auto r = run_benchmark(s.dataset, s.session, f, f, bo);
  print_result(r);
  std::cout << "wrote " << o.run_dir << "\n";
  return r.quarantined.empty() ? 0 : 2;
}

int cmd_ablate(const Options& o) {
  std::vector<RunMetrics> runs;
  bool clean = true;
  for (const auto& name : o.strategies) {
    Options so = o;
    so.strategy = name;
    auto s = make_setup(so);
    auto f = factory_for(s);
    BenchmarkOptions bo{fs::path(o.run_dir) / std::string(to_string(s.session.strategy)), o.parallelism};
    auto r = run_benchmark(s.dataset, s.session, f, f, bo);
    print_result(r);
    clean = clean && r.quarantined.empty();
    runs.push_back(r.metrics);
  }
  fs::create_directories(o.run_dir);
  std::ofstream(fs::path(o.run_dir) / "metrics.csv") << metrics_csv(runs);
  if (!runs.empty() && !runs.front().rating_mean.empty()) {
    std::ofstream(fs::path(o.run_dir) / "ratings.csv") << ratings_csv(runs);
  }
  std::cout << "wrote " << o.run_dir << "\n";
  return clean ? 0 : 2;
}

HttpService* g_service = nullptr;

int cmd_serve(const Options& o) {
  auto s = make_setup(o);
  auto f = factory_for(s);
  ServiceOptions so;
  so.run_dir = o.run_dir;
  so.defaults = s.session;
  so.backend_factory = [f](const SessionConfig& cfg) { return f(cfg.seed); };
  SessionManager sessions(so);
  const auto restored = sessions.restore();
  HttpService http(sessions);
  const int port = http.bind(o.host, o.port);
  std::cout << "listening on http://" << o.host << ":" << port << " (" << restored
            << " sessions restored)\n"
            << std::flush;
  g_service = &http;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  http.serve();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive question asking by expected information gain"};
  app.require_subcommand(1);
  Options o;

  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON file with session, backend and prompts sections");
    sub->add_option("--backend", o.backend, "tabular or remote")->check(CLI::IsMember({"tabular", "remote"}));
    sub->add_option("--task", o.task, "guessing or preference")->check(CLI::IsMember({"guessing", "preference"}));
    sub->add_option("--strategy", o.strategy, "eig, entropy, naive or data-estimation")
        ->check(CLI::IsMember({"eig", "entropy", "naive", "data-estimation", "data_estimation"}));
    sub->add_option("--dataset", o.dataset, "animals, personas or a path to a 'Name | Alt' file");
    sub->add_option("--model", o.model_path, "tabular model JSON (tabular backend)");
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--budget", o.budget, "questions per game");
    sub->add_option("--candidates", o.candidates, "candidate questions per turn");
  };

  auto* play = app.add_subcommand("play", "answer the questions yourself in the terminal");
  common(play);
  auto* bench = app.add_subcommand("bench", "simulate one game per dataset entry");
  common(bench);
  bench->add_option("--run-dir", o.run_dir, "output directory (resumable)");
  bench->add_option("--parallelism", o.parallelism, "concurrent games")->check(CLI::PositiveNumber);
  auto* ablate = app.add_subcommand("ablate", "run bench for several strategies");
  common(ablate);
  ablate->add_option("--run-dir", o.run_dir, "output directory");
  ablate->add_option("--parallelism", o.parallelism, "concurrent games")->check(CLI::PositiveNumber);
  ablate->add_option("--strategies", o.strategies, "strategies to compare")->delimiter(',');
  auto* serve = app.add_subcommand("serve", "HTTP session API for human answerers");
  common(serve);
  serve->add_option("--run-dir", o.run_dir, "where sessions are saved");
  serve->add_option("--host", o.host, "bind address");
  serve->add_option("--port", o.port, "port (0 picks one)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*play) return cmd_play(o);
    if (*bench) return cmd_bench(o);
    if (*ablate) return cmd_ablate(o);
    if (*serve) return cmd_serve(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
