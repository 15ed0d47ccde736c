#include <algorithm>
#include "support.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "httplib.h"

namespace infogain::testing {

using nlohmann::json;

CategoricalDistribution random_row(Rng& rng, std::size_t k, double zero_prob) {
  for (;;) {
    std::vector<double> w(k);
    double total = 0.0;
    for (auto& x : w) {
      x = rng.uniform() < zero_prob ? 0.0 : -std::log(1.0 - rng.uniform());
      total += x;
    }
    if (total > 0.0) return CategoricalDistribution::normalized(std::move(w));
  }
}

TabularModel random_model(Rng& rng, const RandomModelSpec& spec, std::vector<int>* counts) {
  TabularModel m;
  const std::size_t n = spec.min_hypotheses + rng.below(spec.max_hypotheses - spec.min_hypotheses + 1);
  for (std::size_t i = 0; i < n; ++i) m.hypotheses.emplace_back("hyp " + std::to_string(i));
  std::vector<double> prior(n);
  for (auto& p : prior) p = spec.integer_prior ? static_cast<double>(1 + rng.below(4)) : 0.1 + rng.uniform();
  if (counts) counts->assign(prior.begin(), prior.end());
  double total = 0.0;
  for (double p : prior) total += p;
  for (auto& p : prior) p /= total;
  m.prior = prior;

  for (std::size_t q = 0; q < spec.questions; ++q) {
    const bool det = q < spec.deterministic_questions;
    const std::string text = "question " + std::to_string(q) + "?";
    Question question = (spec.multiple_choice && !det)
        ? Question::multiple_choice("q" + std::to_string(q), text, {"w", "x", "y", "z"})
        : Question::binary("q" + std::to_string(q), text);
    std::vector<CategoricalDistribution> rows;
    const std::size_t k = question.options.size();
    const std::size_t live = question.kind == QuestionKind::Binary ? k : std::clamp<std::size_t>(spec.mc_live_options, 2, k);
    for (std::size_t h = 0; h < n; ++h) {
      if (det) {
        rows.push_back(CategoricalDistribution::point_mass(2, rng.below(2)));
        continue;
      }
      const auto row = random_row(rng, live);
      std::vector<double> w(row.probs().begin(), row.probs().end());
      w.resize(k, 0.0);
      rows.emplace_back(std::move(w));
    }
    m.question_bank.push_back(std::move(question));
    m.likelihood.push_back(std::move(rows));
  }
  m.validate();
  return m;
}

TabularModel split_game(std::size_t n_bits, std::size_t noise, bool noise_first) {
  TabularModel m;
  const std::size_t n = std::size_t{1} << n_bits;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "item %02zu", i);
    m.hypotheses.emplace_back(buf);
  }
  m.prior.assign(n, 1.0 / static_cast<double>(n));

  auto add_noise = [&] {
    for (std::size_t k = 0; k < noise; ++k) {
      m.question_bank.push_back(Question::binary("noise" + std::to_string(k),
                                                 "Noise question " + std::to_string(k) + "?"));
      m.likelihood.emplace_back(n, CategoricalDistribution({0.5, 0.5}));
    }
  };
  if (noise_first) add_noise();
  for (std::size_t b = 0; b < n_bits; ++b) {
    m.question_bank.push_back(Question::binary("split" + std::to_string(b),
                                               "Is bit " + std::to_string(b) + " of its index set?"));
    std::vector<CategoricalDistribution> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back(CategoricalDistribution::point_mass(2, (i >> b) & 1 ? 0 : 1));
    m.likelihood.push_back(std::move(rows));
  }
  if (!noise_first) add_noise();
  m.validate();
  return m;
}

TabularModel uniform_vs_split_model() {
  TabularModel m;
  for (const char* name : {"north", "east", "south", "west"}) m.hypotheses.emplace_back(name);
  m.prior.assign(4, 0.25);
  m.question_bank.push_back(Question::multiple_choice("A", "Question A?", {"a1", "a2", "a3", "a4"}));
  m.likelihood.emplace_back(4, CategoricalDistribution({0.25, 0.25, 0.25, 0.25, 0.0}));
  m.question_bank.push_back(Question::multiple_choice("B", "Question B?", {"b1", "b2", "b3", "b4"}));
  std::vector<CategoricalDistribution> rows;
  for (std::size_t i = 0; i < 4; ++i) rows.push_back(CategoricalDistribution::point_mass(5, i));
  m.likelihood.push_back(std::move(rows));
  m.validate();
  return m;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("infogain-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json completion(const std::vector<std::string>& contents) {
  json choices = json::array();
  for (std::size_t i = 0; i < contents.size(); ++i) {
    choices.push_back({{"index", i}, {"message", {{"role", "assistant"}, {"content", contents[i]}}}});
  }
  return {{"id", "stub"}, {"object", "chat.completion"}, {"choices", choices}};
}

json logprob_completion(const std::string& content, const std::vector<std::pair<std::string, double>>& top) {
  json tops = json::array();
  for (const auto& [tok, lp] : top) tops.push_back({{"token", tok}, {"logprob", lp}});
  json j = completion({content});
  j["choices"][0]["logprobs"] = {
      {"content", json::array({{{"token", top.empty() ? content : top.front().first},
                                {"logprob", top.empty() ? 0.0 : top.front().second},
                                {"top_logprobs", tops}}})}};
  return j;
}

struct StubChatServer::Impl {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  mutable std::mutex mu;
  std::deque<StubReply> queue;
  StubReply fallback{500, {{"error", "no scripted reply"}}};
  std::vector<json> requests;
};

StubChatServer::StubChatServer() : impl_(std::make_unique<Impl>()) {
  auto* impl = impl_.get();
  impl->server.Post("/v1/chat/completions", [impl](const httplib::Request& req, httplib::Response& res) {
    StubReply reply;
    {
      std::lock_guard lock(impl->mu);
      impl->requests.push_back(json::parse(req.body));
      if (impl->queue.empty()) {
        reply = impl->fallback;
      } else {
        reply = impl->queue.front();
        impl->queue.pop_front();
      }
    }
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  });
  impl->port = impl->server.bind_to_any_port("127.0.0.1");
  impl->thread = std::thread([impl] { impl->server.listen_after_bind(); });
  impl->server.wait_until_ready();
}

StubChatServer::~StubChatServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

void StubChatServer::push(StubReply r) {
  std::lock_guard lock(impl_->mu);
  impl_->queue.push_back(std::move(r));
}

void StubChatServer::set_fallback(StubReply r) {
  std::lock_guard lock(impl_->mu);
  impl_->fallback = std::move(r);
}

std::string StubChatServer::endpoint() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port) + "/v1";
}

std::vector<json> StubChatServer::requests() const {
  std::lock_guard lock(impl_->mu);
  return impl_->requests;
}

}  // namespace infogain::testing
