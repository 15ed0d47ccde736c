#pragma once

// Domain types shared by every module, plus exact discrete-probability
// primitives. All entropies are in nats.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace infogain {

enum class ErrorCode {
  InvalidArgument,
  Transport,
  Parse,
  QuestionGeneration,
  NotFound,
  Conflict,
  Backend,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Lowercase, accent-fold (Latin-1 and Latin Extended-A), collapse runs of
/// whitespace and trim. Idempotent.
std::string normalize_key(std::string_view text);

/// Stable 64-bit FNV-1a, used for question ids and per-game seeds.
std::uint64_t fnv1a64(std::string_view text);

struct Hypothesis {
  std::string text;
  std::string key;

  Hypothesis() = default;
  explicit Hypothesis(std::string t);

  friend bool operator==(const Hypothesis& a, const Hypothesis& b) {
    return a.key == b.key;
  }
};

struct AnswerOption {
  std::string label;
  std::string text;
};

enum class QuestionKind { Binary, MultipleChoice };

std::string_view to_string(QuestionKind kind);
QuestionKind question_kind_from_string(std::string_view s);

inline constexpr std::string_view kNoneOfTheAbove = "none of the above";

struct Question {
  std::string id;
  std::string text;
  std::vector<AnswerOption> options;
  QuestionKind kind = QuestionKind::Binary;
  // Set for direct "Is it X?" guesses built from a belief member. Backends
  // answer these structurally instead of querying a model.
  std::optional<std::string> guess_of;

  static Question binary(std::string id, std::string text);
  // Options A-D come from `choices`; option E is always "none of the above".
  static Question multiple_choice(std::string id, std::string text,
                                  std::vector<std::string> choices);
  static Question guess(const Hypothesis& h);

  /// Throws Error(InvalidArgument) if the option layout does not match `kind`.
  void validate() const;

  bool is_guess() const { return guess_of.has_value(); }
  std::optional<std::size_t> option_index(std::string_view label) const;
};

/// Id derived from the normalized text so that identical questions share
/// cache entries across candidate sets.
std::string question_id_for(std::string_view text);

struct Answer {
  std::string question_id;
  std::size_t option_index = 0;
};

class History {
 public:
  using Pair = std::pair<Question, Answer>;

  void append(Question q, Answer a);

  const std::vector<Pair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  bool empty() const { return pairs_.empty(); }
  const Pair& back() const { return pairs_.back(); }
  bool contains_question(std::string_view question_id) const;

  History prefix(std::size_t n) const;

 private:
  std::vector<Pair> pairs_;
};

class CategoricalDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  /// Throws Error(InvalidArgument) unless every entry is in [0, 1] and the
  /// entries sum to 1 within kSumTolerance.
  explicit CategoricalDistribution(std::vector<double> probs);

  /// Renormalizes non-negative weights. Throws on negative, non-finite or
  /// all-zero input.
  static CategoricalDistribution normalized(std::vector<double> weights);
  static CategoricalDistribution uniform(std::size_t k);
  static CategoricalDistribution point_mass(std::size_t k, std::size_t index);

  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  friend bool operator==(const CategoricalDistribution&,
                         const CategoricalDistribution&) = default;

 private:
  std::vector<double> probs_;
};

/// -sum p ln p with 0 ln 0 := 0.
double entropy(const CategoricalDistribution& dist);

/// Entropy of raw non-negative weights after normalization.
double entropy_of_weights(std::span<const double> weights);

/// Elementwise arithmetic mean. Throws on an empty list or mismatched sizes.
CategoricalDistribution mix(std::span<const CategoricalDistribution> dists);

class BeliefState {
 public:
  BeliefState() = default;
  explicit BeliefState(int turn) : turn_(turn) {}

  /// Adds `h` unless a member with the same key exists. Returns true if added.
  bool insert(Hypothesis h);
  bool contains(std::string_view key) const;

  const std::vector<Hypothesis>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  int turn() const { return turn_; }
  void set_turn(int t) { turn_ = t; }

 private:
  std::vector<Hypothesis> members_;
  int turn_ = 0;
};

}  // namespace infogain
