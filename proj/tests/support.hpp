#pragma once

// Model builders and a scripted chat-completions server shared by the unit
// suites and the acceptance runner.

#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "infogain/rng.hpp"
#include "infogain/tabular.hpp"

namespace infogain::testing {

/// Random probability vector over k options; some entries may be exactly 0.
CategoricalDistribution random_row(Rng& rng, std::size_t k, double zero_prob = 0.15);

struct RandomModelSpec {
  std::size_t min_hypotheses = 2;
  std::size_t max_hypotheses = 12;
  std::size_t questions = 6;
  // Deterministic binary questions used to carve out a posterior support.
  std::size_t deterministic_questions = 3;
  bool multiple_choice = false;
  // Prior weights are small integers so posteriors have exact multiplicities.
  bool integer_prior = true;
  // Multiple-choice answer mass falls on the first this-many options only.
  std::size_t mc_live_options = 5;
};

/// Random model; the first `deterministic_questions` bank entries have
/// point-mass rows, the rest random rows. With integer_prior, `counts`
/// receives the unnormalized prior weights.
TabularModel random_model(Rng& rng, const RandomModelSpec& spec = {},
                          std::vector<int>* counts = nullptr);

/// Hypotheses "item 00".."item NN" and one deterministic yes/no question per
/// index bit (a perfect balanced split), preceded by `noise` questions whose
/// rows are (0.5, 0.5) for everyone when `noise_first`.
TabularModel split_game(std::size_t n_bits = 4, std::size_t noise = 8, bool noise_first = true);

/// Four hypotheses and two multiple-choice questions: A has the same uniform
/// row over options A-D for everyone, B sends each hypothesis to its own
/// option. A is listed first.
TabularModel uniform_vs_split_model();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& p);

struct StubReply {
  int status = 200;
  nlohmann::json body;
};

/// OpenAI-shaped chat completion with one choice per content string.
nlohmann::json completion(const std::vector<std::string>& contents);
/// One choice whose first token carries the given top logprobs.
nlohmann::json logprob_completion(const std::string& content,
                                  const std::vector<std::pair<std::string, double>>& top);

/// Serves POST /v1/chat/completions from a queue of scripted replies on a
/// free localhost port. Once the queue is empty the fallback reply is used.
class StubChatServer {
 public:
  StubChatServer();
  ~StubChatServer();

  void push(StubReply r);
  void set_fallback(StubReply r);
  std::string endpoint() const;  // http://127.0.0.1:<port>/v1
  std::vector<nlohmann::json> requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace infogain::testing
