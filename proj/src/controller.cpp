#include "infogain/controller.hpp"

#include <algorithm>

#include "infogain/serialization.hpp"

namespace infogain {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string join_fields(const std::vector<FieldError>& fields) {
  std::string out = "invalid session config:";
  for (const auto& f : fields) out += " " + f.field + ": " + f.message + ";";
  return out;
}

}  // namespace

std::string_view to_string(StrategyKind s) {
  switch (s) {
    case StrategyKind::Eig: return "eig";
    case StrategyKind::Entropy: return "entropy";
    case StrategyKind::NaiveQA: return "naive";
    case StrategyKind::DataEstimation: return "data_estimation";
  }
  return "unknown";
}

StrategyKind strategy_from_string(std::string_view s) {
  if (s == "eig") return StrategyKind::Eig;
  if (s == "entropy") return StrategyKind::Entropy;
  if (s == "naive") return StrategyKind::NaiveQA;
  if (s == "data_estimation" || s == "data-estimation") return StrategyKind::DataEstimation;
  throw Error(ErrorCode::InvalidArgument, "unknown strategy: " + std::string(s));
}

std::string_view to_string(GenerationMode m) {
  switch (m) {
    case GenerationMode::Conditional: return "conditional";
    case GenerationMode::Unconstrained: return "unconstrained";
    case GenerationMode::ConditionalWithFallback: return "conditional_with_fallback";
  }
  return "unknown";
}

GenerationMode generation_mode_from_string(std::string_view s) {
  if (s == "conditional") return GenerationMode::Conditional;
  if (s == "unconstrained") return GenerationMode::Unconstrained;
  if (s == "conditional_with_fallback") return GenerationMode::ConditionalWithFallback;
  throw Error(ErrorCode::InvalidArgument, "unknown generation mode: " + std::string(s));
}

std::string_view to_string(SessionTask t) {
  return t == SessionTask::Guessing ? "guessing" : "preference";
}

SessionTask session_task_from_string(std::string_view s) {
  if (s == "guessing") return SessionTask::Guessing;
  if (s == "preference") return SessionTask::Preference;
  throw Error(ErrorCode::InvalidArgument, "unknown task: " + std::string(s));
}

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::InProgress: return "in_progress";
    case Outcome::Success: return "success";
    case Outcome::BudgetExhausted: return "budget_exhausted";
    case Outcome::Aborted: return "aborted";
  }
  return "unknown";
}

Outcome outcome_from_string(std::string_view s) {
  if (s == "in_progress") return Outcome::InProgress;
  if (s == "success") return Outcome::Success;
  if (s == "budget_exhausted") return Outcome::BudgetExhausted;
  if (s == "aborted") return Outcome::Aborted;
  throw Error(ErrorCode::InvalidArgument, "unknown outcome: " + std::string(s));
}

ValidationError::ValidationError(std::vector<FieldError> fields)
    : Error(ErrorCode::InvalidArgument, join_fields(fields)), fields_(std::move(fields)) {}

// ---------------------------------------------------------------------------
// SessionConfig

SessionConfig SessionConfig::twenty_questions() { return SessionConfig{}; }

SessionConfig SessionConfig::preference() {
  SessionConfig c;
  c.task = SessionTask::Preference;
  c.question_kind = QuestionKind::MultipleChoice;
  c.budget = 5;
  c.candidates = 8;
  c.filter.target_count = 5;
  c.guess_candidates = false;
  return c;
}

namespace {

void collect_config_errors(const SessionConfig& c, std::vector<FieldError>& errs) {
  if (c.budget < 1) errs.push_back({"budget", "must be >= 1"});
  if (c.candidates < 1) errs.push_back({"candidates", "must be >= 1"});
  if (!(c.filter.likelihood_threshold > 0.0 && c.filter.likelihood_threshold < 1.0)) {
    errs.push_back({"filter.likelihood_threshold", "must be in (0, 1)"});
  }
  if (c.filter.target_count < 1) errs.push_back({"filter.target_count", "must be >= 1"});
  if (c.filter.max_cycles < 1) errs.push_back({"filter.max_cycles", "must be >= 1"});
  if (c.data_estimation_k < 2) errs.push_back({"data_estimation_k", "must be >= 2"});
  if (c.task == SessionTask::Preference && c.question_kind != QuestionKind::MultipleChoice) {
    errs.push_back({"question_kind", "preference sessions use multiple_choice questions"});
  }
}

}  // namespace

void SessionConfig::validate() const {
  std::vector<FieldError> errs;
  collect_config_errors(*this, errs);
  if (!errs.empty()) throw ValidationError(std::move(errs));
}

json to_json(const SessionConfig& c) {
  return {{"strategy", to_string(c.strategy)},
          {"task", to_string(c.task)},
          {"question_kind", to_string(c.question_kind)},
          {"budget", c.budget},
          {"candidates", c.candidates},
          {"filter",
           {{"likelihood_threshold", c.filter.likelihood_threshold},
            {"target_count", c.filter.target_count},
            {"max_cycles", c.filter.max_cycles}}},
          {"generation", to_string(c.generation)},
          {"data_estimation_k", c.data_estimation_k},
          {"guess_candidates", c.guess_candidates},
          {"seed", c.seed}};
}

SessionConfig session_config_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError(std::vector<FieldError>{{"", "config must be a JSON object"}});
  std::vector<FieldError> errs;

  SessionConfig c;
  if (j.contains("task")) {
    try {
      c = session_task_from_string(j.at("task").get<std::string>()) == SessionTask::Preference
              ? SessionConfig::preference()
              : SessionConfig::twenty_questions();
    } catch (const std::exception&) {
      errs.push_back({"task", "must be \"guessing\" or \"preference\""});
    }
  }

  auto read = [&](const json& obj, const char* key, const std::string& field, auto& target,
                  const char* expect) {
    if (!obj.contains(key)) return;
    try {
      target = obj.at(key).get<std::remove_reference_t<decltype(target)>>();
    } catch (const json::exception&) {
      errs.push_back({field, std::string("must be ") + expect});
    }
  };
  auto read_enum = [&](const char* key, auto parse, auto& target, const char* expect) {
    if (!j.contains(key)) return;
    try {
      target = parse(j.at(key).get<std::string>());
    } catch (const std::exception&) {
      errs.push_back({key, std::string("must be one of ") + expect});
    }
  };

  read_enum("strategy", strategy_from_string, c.strategy, "eig, entropy, naive, data_estimation");
  read_enum("question_kind", question_kind_from_string, c.question_kind, "binary, multiple_choice");
  read_enum("generation", generation_mode_from_string, c.generation,
            "conditional, unconstrained, conditional_with_fallback");
  read(j, "budget", "budget", c.budget, "an integer");
  read(j, "candidates", "candidates", c.candidates, "an integer");
  read(j, "data_estimation_k", "data_estimation_k", c.data_estimation_k, "an integer");
  read(j, "guess_candidates", "guess_candidates", c.guess_candidates, "a boolean");
  read(j, "seed", "seed", c.seed, "a non-negative integer");
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    if (!f.is_object()) {
      errs.push_back({"filter", "must be an object"});
    } else {
      read(f, "likelihood_threshold", "filter.likelihood_threshold", c.filter.likelihood_threshold, "a number");
      read(f, "target_count", "filter.target_count", c.filter.target_count, "an integer");
      read(f, "max_cycles", "filter.max_cycles", c.filter.max_cycles, "an integer");
    }
  }
  collect_config_errors(c, errs);
  if (!errs.empty()) throw ValidationError(std::move(errs));
  return c;
}

// ---------------------------------------------------------------------------
// Record serialization

json to_json(const FilterReport& r) {
  json rej = json::array();
  for (const auto& x : r.rejections) rej.push_back({{"hypothesis", x.hypothesis}, {"reason", x.reason}});
  return {{"sampled_count", r.sampled_count},   {"retained_count", r.retained_count},
          {"rejected_count", r.rejected_count}, {"dropped_count", r.dropped_count},
          {"cycles", r.cycles},                 {"accepted", to_json(r.accepted)},
          {"rejections", rej}};
}

FilterReport filter_report_from_json(const json& j) {
  FilterReport r;
  r.sampled_count = j.at("sampled_count").get<int>();
  r.retained_count = j.at("retained_count").get<int>();
  r.rejected_count = j.at("rejected_count").get<int>();
  r.dropped_count = j.value("dropped_count", 0);
  r.cycles = j.at("cycles").get<int>();
  r.accepted = belief_from_json(j.at("accepted"));
  for (const auto& x : j.at("rejections")) {
    r.rejections.push_back({x.at("hypothesis").get<std::string>(), x.at("reason").get<std::string>()});
  }
  return r;
}

json to_json(const TurnRecord& t) {
  json cands = json::array();
  for (const auto& c : t.candidates) {
    cands.push_back({{"question", to_json(c.question)},
                     {"score", c.score ? json(*c.score) : json(nullptr)}});
  }
  json ratings = json::array();
  for (const auto& r : t.ratings) ratings.push_back(r ? json(*r) : json(nullptr));
  json j = {{"turn", t.turn},
            {"candidates", cands},
            {"estimator", t.estimator ? json(to_string(*t.estimator)) : json(nullptr)},
            {"chosen", t.chosen},
            {"question", to_json(t.question)},
            {"answer", to_json(t.answer)},
            {"answer_label", t.question.options.at(t.answer.option_index).label},
            {"selection", t.selection},
            {"is_guess", t.is_guess},
            {"filter", t.filter ? to_json(*t.filter) : json(nullptr)},
            {"eval_guess", t.eval_guess ? json(*t.eval_guess) : json(nullptr)},
            {"eval_correct", t.eval_correct ? json(*t.eval_correct) : json(nullptr)},
            {"eval_fallback", t.eval_fallback},
            {"elapsed_ms", t.elapsed_ms}};
  if (!t.recommendations.empty() || !t.ratings.empty()) {
    j["recommendations"] = t.recommendations;
    j["ratings"] = ratings;
    j["recommendation_shortfall"] = t.recommendation_shortfall;
  }
  return j;
}

namespace {

EstimatorKind estimator_from_string(std::string_view s) {
  if (s == "eig") return EstimatorKind::Eig;
  if (s == "pred_entropy") return EstimatorKind::PredEntropy;
  if (s == "data_estimation") return EstimatorKind::DataEstimation;
  throw Error(ErrorCode::Parse, "unknown estimator: " + std::string(s));
}

}  // namespace

TurnRecord turn_record_from_json(const json& j) {
  TurnRecord t;
  t.turn = j.at("turn").get<int>();
  for (const auto& c : j.at("candidates")) {
    CandidateScore cs{question_from_json(c.at("question")), std::nullopt};
    if (!c.at("score").is_null()) cs.score = c.at("score").get<double>();
    t.candidates.push_back(std::move(cs));
  }
  if (!j.at("estimator").is_null()) t.estimator = estimator_from_string(j.at("estimator").get<std::string>());
  t.chosen = j.at("chosen").get<std::size_t>();
  t.question = question_from_json(j.at("question"));
  t.answer = answer_from_json(j.at("answer"));
  t.selection = j.at("selection").get<std::string>();
  t.is_guess = j.at("is_guess").get<bool>();
  if (!j.at("filter").is_null()) t.filter = filter_report_from_json(j.at("filter"));
  if (!j.at("eval_guess").is_null()) t.eval_guess = j.at("eval_guess").get<std::string>();
  if (!j.at("eval_correct").is_null()) t.eval_correct = j.at("eval_correct").get<bool>();
  t.eval_fallback = j.at("eval_fallback").get<bool>();
  t.elapsed_ms = j.at("elapsed_ms").get<double>();
  if (j.contains("recommendations")) {
    t.recommendations = j.at("recommendations").get<std::vector<std::string>>();
    for (const auto& r : j.at("ratings")) {
      t.ratings.push_back(r.is_null() ? std::nullopt : std::optional<double>(r.get<double>()));
    }
    t.recommendation_shortfall = j.value("recommendation_shortfall", false);
  }
  return t;
}

json to_json(const GameRecord& g) {
  json turns = json::array();
  for (const auto& t : g.turns) turns.push_back(to_json(t));
  json guesses = json::array();
  for (const auto& x : g.guesses) {
    guesses.push_back({{"turn", x.turn}, {"hypothesis", x.hypothesis}, {"correct", x.correct}});
  }
  json j = {{"schema_version", g.schema_version},
            {"id", g.id},
            {"target", g.target},
            {"config", to_json(g.config)},
            {"initial_filter", g.initial_filter ? to_json(*g.initial_filter) : json(nullptr)},
            {"turns", turns},
            {"guesses", guesses},
            {"outcome", to_string(g.outcome)},
            {"success_turn", g.success_turn ? json(*g.success_turn) : json(nullptr)}};
  if (!g.error.empty()) j["error"] = g.error;
  return j;
}

GameRecord game_record_from_json(const json& j) {
  GameRecord g;
  g.schema_version = j.at("schema_version").get<int>();
  if (g.schema_version != kRecordSchemaVersion) {
    throw Error(ErrorCode::Parse, "unsupported record schema version " + std::to_string(g.schema_version));
  }
  g.id = j.at("id").get<std::string>();
  g.target = j.at("target").get<std::string>();
  g.config = session_config_from_json(j.at("config"));
  if (!j.at("initial_filter").is_null()) g.initial_filter = filter_report_from_json(j.at("initial_filter"));
  for (const auto& t : j.at("turns")) g.turns.push_back(turn_record_from_json(t));
  for (const auto& x : j.at("guesses")) {
    g.guesses.push_back({x.at("turn").get<int>(), x.at("hypothesis").get<std::string>(),
                         x.at("correct").get<bool>()});
  }
  g.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  if (!j.at("success_turn").is_null()) g.success_turn = j.at("success_turn").get<int>();
  g.error = j.value("error", std::string());
  return g;
}

// ---------------------------------------------------------------------------
// Guesses

EvalGuess greedy_evaluation_guess(const BeliefState& belief, const History& history,
                                  Backend& backend) {
  if (belief.empty()) return EvalGuess{backend.greedy_generate(history), true};
  const auto& members = belief.members();
  const std::size_t i = backend.most_likely_member(history, members);
  return EvalGuess{members.at(i), false};
}

std::optional<Question> maybe_guess(const BeliefState& belief,
                                    std::span<const ScoredQuestion> scored) {
  if (belief.size() == 1) return Question::guess(belief.members().front());
  if (scored.empty()) return std::nullopt;
  const auto& top = scored[select_question(scored)].question;
  if (top.is_guess()) return top;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Game

Game::Game(SessionConfig cfg, Backend& questioner, std::string id, std::string target)
    : backend_(questioner) {
  cfg.validate();
  record_.config = cfg;
  record_.id = std::move(id);
  record_.target = std::move(target);
}

bool Game::guessing() const {
  return record_.config.task == SessionTask::Guessing;
}

void Game::finish(Outcome o) {
  record_.outcome = o;
  pending_.reset();
}

void Game::abort(const std::string& reason) {
  record_.error = reason;
  finish(Outcome::Aborted);
}

void Game::start() {
  if (record_.config.strategy == StrategyKind::NaiveQA) return;
  try {
    auto [belief, report] = initial_belief(history_, backend_, record_.config.filter);
    belief_ = std::move(belief);
    record_.initial_filter = std::move(report);
  } catch (const Error& e) {
    abort(e.what());
  }
}

std::vector<Question> Game::generate_candidates() {
  const auto& cfg = record_.config;
  const bool conditional = cfg.generation != GenerationMode::Unconstrained && belief_.size() >= 2;
  auto generated = conditional
      ? backend_.propose_questions_conditional(history_, belief_.members(), cfg.candidates, cfg.question_kind)
      : backend_.propose_questions_unconstrained(history_, cfg.candidates, cfg.question_kind);

  std::vector<Question> out;
  for (auto& q : generated) {
    if (!history_.contains_question(q.id)) out.push_back(std::move(q));
  }
  // Repeats only when the generator offered nothing new.
  if (out.empty()) out = std::move(generated);

  if (guessing() && cfg.guess_candidates) {
    for (const auto& h : belief_.members()) {
      auto g = Question::guess(h);
      if (!history_.contains_question(g.id)) out.push_back(std::move(g));
    }
  }
  return out;
}

std::optional<Question> Game::prepare_turn() {
  if (finished()) return std::nullopt;
  if (pending_) return pending_;
  const auto& cfg = record_.config;
  if (static_cast<int>(record_.turns.size()) >= cfg.budget) {
    finish(Outcome::BudgetExhausted);
    return std::nullopt;
  }

  const auto start = Clock::now();
  TurnRecord turn;
  turn.turn = static_cast<int>(record_.turns.size()) + 1;
  try {
    if (cfg.strategy == StrategyKind::NaiveQA) {
      turn.candidates.push_back({backend_.propose_question_naive(history_, cfg.question_kind), std::nullopt});
      turn.selection = "naive";
    } else if (guessing() && belief_.size() == 1) {
      turn.candidates.push_back({*maybe_guess(belief_, {}), std::nullopt});
      turn.selection = "single_member";
    } else if (belief_.empty()) {
      auto qs = backend_.propose_questions_unconstrained(history_, 1, cfg.question_kind);
      turn.candidates.push_back({std::move(qs.front()), std::nullopt});
      turn.selection = "empty_belief";
    } else {
      const auto candidates = generate_candidates();
      std::vector<ScoredQuestion> scored;
      scored.reserve(candidates.size());
      RowCache cache;
      for (const auto& q : candidates) {
        switch (cfg.strategy) {
          case StrategyKind::Eig: scored.push_back(estimate_eig(q, belief_, backend_, &cache)); break;
          case StrategyKind::Entropy:
            scored.push_back(estimate_pred_entropy(q, belief_, backend_, &cache));
            break;
          case StrategyKind::DataEstimation:
            scored.push_back(data_estimation_score(q, history_, backend_, cfg.data_estimation_k));
            break;
          case StrategyKind::NaiveQA: break;
        }
      }
      for (const auto& s : scored) turn.candidates.push_back({s.question, s.score});
      turn.estimator = scored.front().kind;
      turn.chosen = select_question(scored);
      turn.selection = "scored";
    }
  } catch (const Error& e) {
    abort(e.what());
    return std::nullopt;
  }
  turn.question = turn.candidates[turn.chosen].question;
  turn.is_guess = turn.question.is_guess();
  pending_ = turn.question;
  pending_turn_ = std::move(turn);
  pending_ms_ = ms_since(start);
  return pending_;
}

void Game::record_answer(const Answer& answer) {
  if (!pending_) throw Error(ErrorCode::Conflict, "no question is awaiting an answer");
  if (answer.option_index >= pending_->options.size()) {
    throw Error(ErrorCode::InvalidArgument, "answer option out of range");
  }
  if (!answer.question_id.empty() && answer.question_id != pending_->id) {
    throw Error(ErrorCode::InvalidArgument, "answer refers to a different question");
  }
  const auto start = Clock::now();
  const auto& cfg = record_.config;
  TurnRecord turn = std::move(pending_turn_);
  turn.answer = Answer{pending_->id, answer.option_index};
  history_.append(*pending_, turn.answer);
  pending_.reset();

  if (turn.is_guess) {
    const bool yes = turn.answer.option_index == 0;
    record_.guesses.push_back({turn.turn, *turn.question.guess_of, yes});
    if (yes) {
      turn.elapsed_ms = pending_ms_ + ms_since(start);
      record_.turns.push_back(std::move(turn));
      record_.success_turn = record_.turns.back().turn;
      finish(Outcome::Success);
      return;
    }
  }

  try {
    if (cfg.strategy != StrategyKind::NaiveQA) {
      auto [belief, report] = update_belief(belief_, history_.back(), history_, backend_, cfg.filter);
      belief_ = std::move(belief);
      turn.filter = std::move(report);
    }
    if (cfg.task == SessionTask::Guessing) {
      auto eval = greedy_evaluation_guess(belief_, history_, backend_);
      turn.eval_fallback = eval.fallback;
      if (eval.guess) {
        turn.eval_guess = eval.guess->text;
        if (judge_) turn.eval_correct = judge_(eval.guess->text);
      }
    }
    if (hook_) hook_(*this, turn);
  } catch (const Error& e) {
    turn.elapsed_ms = pending_ms_ + ms_since(start);
    record_.turns.push_back(std::move(turn));
    abort(e.what());
    return;
  }
  turn.elapsed_ms = pending_ms_ + ms_since(start);
  record_.turns.push_back(std::move(turn));
  if (static_cast<int>(record_.turns.size()) >= cfg.budget) finish(Outcome::BudgetExhausted);
}

json Game::to_json() const {
  json j = {{"record", infogain::to_json(record_)},
            {"history", infogain::to_json(history_)},
            {"belief", infogain::to_json(belief_)},
            {"pending", pending_ ? infogain::to_json(*pending_) : json(nullptr)}};
  if (pending_) {
    // The pending turn has no answer yet; store its selection details alone.
    json cands = json::array();
    for (const auto& c : pending_turn_.candidates) {
      cands.push_back({{"question", infogain::to_json(c.question)},
                       {"score", c.score ? json(*c.score) : json(nullptr)}});
    }
    j["pending_turn"] = {{"turn", pending_turn_.turn},
                         {"candidates", cands},
                         {"estimator", pending_turn_.estimator ? json(to_string(*pending_turn_.estimator)) : json(nullptr)},
                         {"chosen", pending_turn_.chosen},
                         {"selection", pending_turn_.selection},
                         {"elapsed_ms", pending_ms_}};
  }
  return j;
}

Game Game::from_json(const json& j, Backend& questioner) {
  auto record = game_record_from_json(j.at("record"));
  Game g(record.config, questioner, record.id, record.target);
  g.record_ = std::move(record);
  g.history_ = history_from_json(j.at("history"));
  g.belief_ = belief_from_json(j.at("belief"));
  if (!j.at("pending").is_null()) {
    g.pending_ = question_from_json(j.at("pending"));
    const auto& p = j.at("pending_turn");
    TurnRecord t;
    t.turn = p.at("turn").get<int>();
    for (const auto& c : p.at("candidates")) {
      CandidateScore cs{question_from_json(c.at("question")), std::nullopt};
      if (!c.at("score").is_null()) cs.score = c.at("score").get<double>();
      t.candidates.push_back(std::move(cs));
    }
    if (!p.at("estimator").is_null()) t.estimator = estimator_from_string(p.at("estimator").get<std::string>());
    t.chosen = p.at("chosen").get<std::size_t>();
    t.selection = p.at("selection").get<std::string>();
    t.question = *g.pending_;
    t.is_guess = t.question.is_guess();
    g.pending_turn_ = std::move(t);
    g.pending_ms_ = p.at("elapsed_ms").get<double>();
  }
  return g;
}

// ---------------------------------------------------------------------------
// Targets and simulated games

TargetEntry parse_target_entry(std::string_view line) {
  TargetEntry e;
  std::size_t pos = 0;
  bool first = true;
  while (pos <= line.size()) {
    const auto bar = line.find('|', pos);
    const auto end = bar == std::string_view::npos ? line.size() : bar;
    auto field = line.substr(pos, end - pos);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.front()))) field.remove_prefix(1);
    while (!field.empty() && std::isspace(static_cast<unsigned char>(field.back()))) field.remove_suffix(1);
    if (first) {
      if (field.empty()) throw Error(ErrorCode::InvalidArgument, "target entry has an empty name");
      e.name = std::string(field);
      first = false;
    } else if (!field.empty()) {
      e.alternatives.emplace_back(field);
    }
    if (bar == std::string_view::npos) break;
    pos = bar + 1;
  }
  return e;
}

bool evaluate_guess(std::string_view guess, const TargetEntry& entry) {
  const auto g = normalize_key(guess);
  if (g.empty()) return false;
  if (g == normalize_key(entry.name)) return true;
  return std::any_of(entry.alternatives.begin(), entry.alternatives.end(),
                     [&](const std::string& alt) { return normalize_key(alt) == g; });
}

GameRecord run_game(const SessionConfig& cfg, const TargetEntry& target, Backend& questioner,
                    Backend& answerer, Game::TurnHook hook, std::string id) {
  if (&questioner == &answerer) {
    throw Error(ErrorCode::InvalidArgument, "questioner and answerer must be separate backends");
  }
  Game game(cfg, questioner, std::move(id), target.name);
  game.set_guess_judge([&target](const std::string& g) { return evaluate_guess(g, target); });
  if (hook) game.set_turn_hook(std::move(hook));
  const Hypothesis truth(target.name);

  game.start();
  while (auto q = game.prepare_turn()) {
    Answer a;
    try {
      if (q->is_guess()) {
        a = Answer{q->id, evaluate_guess(*q->guess_of, target) ? 0u : 1u};
      } else {
        a = answerer.simulate_answer(truth, *q, derive_seed(cfg.seed, game.record().turns.size() + 1));
      }
    } catch (const Error& e) {
      game.abort(e.what());
      break;
    }
    game.record_answer(a);
  }
  return game.record();
}

}  // namespace infogain
