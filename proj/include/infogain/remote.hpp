#pragma once

// Backend over an OpenAI-compatible chat-completions endpoint.

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "infogain/backend.hpp"

namespace infogain {

enum class LogprobMode { Logits, SampleFrequency };

struct BackendConfig {
  std::string endpoint = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string api_key;  // resolved from api_key_env, never read from the file
  double temperature_hypotheses = 1.3;
  double temperature_questions = 1.3;
  double temperature_naive = 1.0;
  double temperature_answerer = 0.0;
  int max_tokens = 512;
  LogprobMode logprob_mode = LogprobMode::Logits;
  int sample_count = 32;
  int top_logprobs = 20;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
  int parse_reasks = 2;
  int question_attempts = 3;
  int max_in_flight = 8;
  // "entity" (20-Questions style targets) or "persona" (film-taste paragraphs).
  std::string task = "entity";
  std::string domain = "animal";

  void validate() const;
};

BackendConfig backend_config_from_json(const nlohmann::json& j);
BackendConfig load_backend_config(const std::filesystem::path& path);

/// Prompt texts with {placeholder} slots. The defaults are written for this
/// project; every operation checks its required slots at construction.
struct PromptTemplates {
  std::string system;
  std::string subject;
  std::string hypotheses;
  std::string likelihood;
  std::string predictive;
  std::string question_unconstrained;
  std::string question_conditional;
  std::string question_naive;
  std::string answerer;
  std::string judge;
  std::string greedy_rank;
  std::string greedy_generate;
  std::string posterior_sample;
  std::string recommend;
  std::string recommend_check;

  static PromptTemplates for_task(std::string_view task);
  /// Throws Error(InvalidArgument) naming the template and missing slot.
  void validate() const;
  void override_from_json(const nlohmann::json& j);
};

/// Replaces {name} slots. Throws on a slot with no value.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 1.0;
  int max_tokens = 256;
  int n = 1;
  std::optional<int> top_logprobs;  // set => logprobs requested
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

struct ChatChoice {
  std::string content;
  std::vector<TokenLogprob> first_token_top_logprobs;
};

struct ChatResponse {
  std::vector<ChatChoice> choices;
};

nlohmann::json build_request_body(std::string_view model, const ChatRequest& req);
ChatResponse parse_chat_response(const nlohmann::json& body);

class TransportError : public Error {
 public:
  TransportError(const std::string& message, bool retryable, int status = 0)
      : Error(ErrorCode::Transport, message), retryable_(retryable), status_(status) {}
  bool retryable() const { return retryable_; }
  int status() const { return status_; }

 private:
  bool retryable_;
  int status_;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// POSTs `body` to `<endpoint>/chat/completions`. Throws TransportError.
  virtual nlohmann::json post_chat(const nlohmann::json& body) = 0;
};

class HttpTransport final : public ChatTransport {
 public:
  HttpTransport(std::string endpoint, std::string api_key, std::chrono::milliseconds timeout);
  nlohmann::json post_chat(const nlohmann::json& body) override;

 private:
  std::string origin_;  // scheme://host[:port]
  std::string path_;    // prefix + /chat/completions
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

/// Retrying client with a bound on concurrent outstanding requests.
class ChatClient {
 public:
  ChatClient(BackendConfig cfg, std::unique_ptr<ChatTransport> transport);

  ChatResponse complete(const ChatRequest& req);
  const BackendConfig& config() const { return cfg_; }
  std::uint64_t attempts() const { return attempts_.load(); }

 private:
  BackendConfig cfg_;
  std::unique_ptr<ChatTransport> transport_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::uint64_t> attempts_{0};
};

// Output parsing. Each is a pure function of the model text.

/// Non-empty lines with list markers, numbering and wrapping quotes removed.
std::vector<std::string> parse_line_list(std::string_view text);
std::optional<Question> parse_question(std::string_view text, QuestionKind kind);
std::optional<std::size_t> map_reply_to_option(std::string_view reply, const Question& q);
/// Option masses from first-token candidates, renormalized over the options.
/// Tokens matching no label are discarded; nullopt if nothing matched.
std::optional<CategoricalDistribution> option_distribution_from_logprobs(
    std::span<const TokenLogprob> top, const Question& q);
/// Add-one smoothed label frequencies over the mapped replies.
CategoricalDistribution option_distribution_from_samples(std::span<const std::string> replies,
                                                         const Question& q);
std::optional<double> parse_rating(std::string_view reply);

class RemoteBackend final : public Backend {
 public:
  RemoteBackend(std::shared_ptr<ChatClient> client,
                PromptTemplates templates = PromptTemplates::for_task("entity"));

  std::string last_diagnostic() const;

 protected:
  std::vector<Hypothesis> do_sample_hypothesis_batch(
      const History& history, int n, std::span<const Hypothesis> prior_batches) override;
  CategoricalDistribution do_answer_distribution(const Hypothesis& hyp,
                                                 const Question& q) override;
  std::vector<Question> do_propose_unconstrained(const History& history, int m,
                                                 QuestionKind kind) override;
  std::vector<Question> do_propose_conditional(const History& history,
                                               std::span<const Hypothesis> hyps, int m,
                                               QuestionKind kind) override;
  Question do_propose_naive(const History& history, QuestionKind kind) override;
  Answer do_simulate_answer(const Hypothesis& target, const Question& q,
                            std::uint64_t seed) override;
  std::vector<std::optional<double>> do_judge(const Hypothesis& persona,
                                              std::span<const std::string> items) override;
  double do_posterior_hypothesis_entropy(const History& history, const Question& q,
                                         const Answer& a, int k) override;
  CategoricalDistribution do_predictive_answer_distribution(const History& history,
                                                            const Question& q) override;
  std::size_t do_most_likely_member(const History& history,
                                    std::span<const Hypothesis> candidates) override;
  std::optional<Hypothesis> do_greedy_generate(const History& history) override;
  std::vector<std::string> do_generate_recommendations(
      const History& history, std::span<const Hypothesis> belief, int count,
      std::span<const std::string> exclude) override;
  bool do_recommendation_consistent(const std::string& item, const History& history) override;

 private:
  ChatRequest make_request(std::string user_prompt, double temperature, int max_tokens,
                           int n = 1) const;
  std::map<std::string, std::string> base_vars() const;
  CategoricalDistribution option_distribution(const std::string& prompt, const Question& q);
  std::vector<Question> generate_questions(const std::string& prompt, int m, QuestionKind kind,
                                           double temperature);
  void set_diagnostic(std::string d);

  std::shared_ptr<ChatClient> client_;
  PromptTemplates templates_;
  mutable std::mutex diag_mutex_;
  std::string diagnostic_;
};

std::string render_history(const History& history, bool most_recent_first);

}  // namespace infogain
