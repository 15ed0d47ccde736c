#pragma once

// The sequential question-asking loop: candidate generation, scoring,
// selection, direct guesses, belief updates and per-turn evaluation.

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "infogain/acquisition.hpp"
#include "infogain/backend.hpp"
#include "infogain/belief.hpp"
#include "infogain/core.hpp"

namespace infogain {

inline constexpr int kRecordSchemaVersion = 1;

enum class StrategyKind { Eig, Entropy, NaiveQA, DataEstimation };

std::string_view to_string(StrategyKind s);
/// Accepts "eig", "entropy", "naive", "data_estimation" (and "data-estimation").
StrategyKind strategy_from_string(std::string_view s);

enum class GenerationMode { Conditional, Unconstrained, ConditionalWithFallback };

std::string_view to_string(GenerationMode m);
GenerationMode generation_mode_from_string(std::string_view s);

enum class SessionTask {
  Guessing,    // 20-Questions style: one hidden entity, direct guesses allowed
  Preference,  // elicitation: no exact-match target, no guesses
};

std::string_view to_string(SessionTask t);
SessionTask session_task_from_string(std::string_view s);

struct FieldError {
  std::string field;
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<FieldError> fields);
  const std::vector<FieldError>& fields() const { return fields_; }

 private:
  std::vector<FieldError> fields_;
};

struct SessionConfig {
  StrategyKind strategy = StrategyKind::Eig;
  SessionTask task = SessionTask::Guessing;
  QuestionKind question_kind = QuestionKind::Binary;
  int budget = 20;
  int candidates = 15;
  FilterConfig filter;
  GenerationMode generation = GenerationMode::ConditionalWithFallback;
  // Posterior samples per answer option for the data-estimation strategy.
  int data_estimation_k = 10;
  // Offer "Is it X?" for each belief member alongside generated candidates.
  bool guess_candidates = true;
  std::uint64_t seed = 0;

  static SessionConfig twenty_questions();
  static SessionConfig preference();

  /// Throws ValidationError listing every offending field.
  void validate() const;
};

nlohmann::json to_json(const SessionConfig& c);
/// Missing fields take the defaults of the task named by "task". Throws
/// ValidationError on unknown enum strings, wrong types or invalid values.
SessionConfig session_config_from_json(const nlohmann::json& j);

struct CandidateScore {
  Question question;
  std::optional<double> score;  // absent when the turn was not scored
};

struct TurnRecord {
  int turn = 0;
  std::vector<CandidateScore> candidates;
  std::optional<EstimatorKind> estimator;
  std::size_t chosen = 0;
  Question question;
  Answer answer;
  // "scored", "single_member", "naive", "empty_belief"
  std::string selection;
  bool is_guess = false;
  std::optional<FilterReport> filter;
  std::optional<std::string> eval_guess;
  std::optional<bool> eval_correct;
  bool eval_fallback = false;
  std::vector<std::string> recommendations;
  std::vector<std::optional<double>> ratings;
  bool recommendation_shortfall = false;
  double elapsed_ms = 0.0;
};

enum class Outcome { InProgress, Success, BudgetExhausted, Aborted };

std::string_view to_string(Outcome o);
Outcome outcome_from_string(std::string_view s);

struct GuessRecord {
  int turn = 0;
  std::string hypothesis;
  bool correct = false;
};

struct GameRecord {
  int schema_version = kRecordSchemaVersion;
  std::string id;
  std::string target;
  SessionConfig config;
  std::optional<FilterReport> initial_filter;
  std::vector<TurnRecord> turns;
  std::vector<GuessRecord> guesses;
  Outcome outcome = Outcome::InProgress;
  std::optional<int> success_turn;
  std::string error;
};

nlohmann::json to_json(const FilterReport& r);
FilterReport filter_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TurnRecord& t);
TurnRecord turn_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GameRecord& g);
GameRecord game_record_from_json(const nlohmann::json& j);

struct EvalGuess {
  std::optional<Hypothesis> guess;
  bool fallback = false;  // belief was empty; guessed from history alone
};

/// Most likely belief member per the backend, never added to history.
EvalGuess greedy_evaluation_guess(const BeliefState& belief, const History& history,
                                  Backend& backend);

/// "Is it X?" when the belief has collapsed to one member, or when the
/// selected candidate is itself a guess. Only meaningful for guessing tasks.
std::optional<Question> maybe_guess(const BeliefState& belief,
                                    std::span<const ScoredQuestion> scored);

/// One session of the loop. Drives only the questioner backend; answers come
/// from outside (a simulated answerer or a person).
class Game {
 public:
  using GuessJudge = std::function<bool(const std::string&)>;
  using TurnHook = std::function<void(const Game&, TurnRecord&)>;

  Game(SessionConfig cfg, Backend& questioner, std::string id = {}, std::string target = {});

  /// Builds the initial belief. Must be called once before prepare_turn.
  void start();

  /// Computes and returns the next question, or nullopt once finished.
  /// Backend failures end the game with outcome Aborted.
  std::optional<Question> prepare_turn();

  /// Applies the answer to the pending question, updates the belief and runs
  /// the evaluation guess. Throws Error(Conflict) with no pending question and
  /// Error(InvalidArgument) for an out-of-range option.
  void record_answer(const Answer& answer);

  /// Scores evaluation guesses; without one they are recorded unjudged.
  void set_guess_judge(GuessJudge judge) { judge_ = std::move(judge); }
  void set_turn_hook(TurnHook hook) { hook_ = std::move(hook); }

  bool finished() const { return record_.outcome != Outcome::InProgress; }
  const std::optional<Question>& pending() const { return pending_; }
  /// Selection details of the pending question; meaningful only while pending.
  const TurnRecord& pending_turn() const { return pending_turn_; }
  const GameRecord& record() const { return record_; }
  const History& history() const { return history_; }
  const BeliefState& belief() const { return belief_; }
  const SessionConfig& config() const { return record_.config; }
  Backend& questioner() const { return backend_; }

  void abort(const std::string& reason);

  nlohmann::json to_json() const;
  /// Restores a game saved by to_json. Hooks and the guess judge are not saved.
  static Game from_json(const nlohmann::json& j, Backend& questioner);

 private:
  bool guessing() const;
  std::vector<Question> generate_candidates();
  void finish(Outcome o);

  Backend& backend_;
  GameRecord record_;
  History history_;
  BeliefState belief_;
  std::optional<Question> pending_;
  TurnRecord pending_turn_;
  double pending_ms_ = 0.0;
  GuessJudge judge_;
  TurnHook hook_;
};

struct TargetEntry {
  std::string name;
  std::vector<std::string> alternatives;
};

/// Parses "Name | Alt1 | Alt2". Throws on an empty name.
TargetEntry parse_target_entry(std::string_view line);

/// Normalized exact match against the name or any alternative.
bool evaluate_guess(std::string_view guess, const TargetEntry& entry);

/// Plays one game to completion with a simulated answerer. The answerer sees
/// only the target and each question; direct guesses are answered by name
/// matching. Backend failures are recorded as an Aborted outcome.
GameRecord run_game(const SessionConfig& cfg, const TargetEntry& target, Backend& questioner,
                    Backend& answerer, Game::TurnHook hook = {}, std::string id = {});

}  // namespace infogain
