#include <cmath>
#include <cstdlib>

#include "doctest.h"

#include "support.hpp"

#include "infogain/remote.hpp"

using namespace infogain;
using namespace infogain::testing;
using nlohmann::json;

namespace {

BackendConfig stub_config(const StubChatServer& stub) {
  BackendConfig c;
  c.endpoint = stub.endpoint();
  c.model = "stub-model";
  c.backoff = std::chrono::milliseconds(1);
  c.max_retries = 2;
  c.timeout = std::chrono::milliseconds(5000);
  c.sample_count = 4;
  return c;
}

RemoteBackend stub_backend(const StubChatServer& stub, BackendConfig c) {
  return RemoteBackend(std::make_shared<ChatClient>(c, nullptr));
}

const Question kBinary = Question::binary("q", "Does it live in water?");

}  // namespace

TEST_SUITE("remote") {

TEST_CASE("render fills slots and rejects unknown ones") {
  CHECK(render("Is it {x}? {x}!", {{"x", "big"}}) == "Is it big? big!");
  CHECK_THROWS_AS(render("{missing}", {}), Error);
  CHECK(render("no slots {", {}) == "no slots {");
}

TEST_CASE("default templates validate for both tasks") {
  CHECK_NOTHROW(PromptTemplates::for_task("entity").validate());
  CHECK_NOTHROW(PromptTemplates::for_task("persona").validate());
  auto t = PromptTemplates::for_task("entity");
  t.answerer = "no slots at all";
  CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("config parsing") {
  auto c = backend_config_from_json({{"endpoint", "http://localhost:1/v1"},
                                     {"logprob_mode", "sample_frequency"},
                                     {"timeout_ms", 1500},
                                     {"api_key_env", "INFOGAIN_TEST_UNSET_KEY"}});
  CHECK(c.logprob_mode == LogprobMode::SampleFrequency);
  CHECK(c.timeout.count() == 1500);
  CHECK(c.api_key.empty());
  CHECK_THROWS_AS(backend_config_from_json({{"logprob_mode", "bogus"}}), Error);
}

TEST_CASE("line lists strip markers") {
  auto xs = parse_line_list("1. Dog\n- Cat\n\n  * \"Red Fox\"\n(4) Okapi\n");
  REQUIRE(xs.size() == 4);
  CHECK(xs[0] == "Dog");
  CHECK(xs[1] == "Cat");
  CHECK(xs[2] == "Red Fox");
  CHECK(xs[3] == "Okapi");
}

TEST_CASE("question parsing") {
  auto b = parse_question("Sure!\n1. Question: Does it have feathers? (think about it)", QuestionKind::Binary);
  REQUIRE(b);
  CHECK(b->text == "Does it have feathers?");
  CHECK_FALSE(parse_question("no question here", QuestionKind::Binary));

  auto mc = parse_question("Which genre do you prefer?\nA) Drama\nB) Comedy\nC. Horror\n(D) Documentary",
                           QuestionKind::MultipleChoice);
  REQUIRE(mc);
  CHECK(mc->text == "Which genre do you prefer?");
  CHECK(mc->options[2].text == "Horror");
  CHECK(mc->options[4].text == kNoneOfTheAbove);
  CHECK_FALSE(parse_question("Which?\nA) x\nB) y", QuestionKind::MultipleChoice));
}

TEST_CASE("reply mapping") {
  CHECK(map_reply_to_option("Yes.", kBinary) == 0u);
  CHECK(map_reply_to_option(" no", kBinary) == 1u);
  CHECK_FALSE(map_reply_to_option("perhaps", kBinary).has_value());
  auto mc = Question::multiple_choice("m", "Which?", {"Drama", "Comedy", "Horror", "Documentary"});
  CHECK(map_reply_to_option("Answer: C", mc) == 2u);
  CHECK(map_reply_to_option("(B)", mc) == 1u);
  CHECK(map_reply_to_option("documentary", mc) == 3u);
  CHECK(map_reply_to_option("None of the above", mc) == 4u);
}

TEST_CASE("logprob extraction renormalizes over option labels") {
  const std::vector<TokenLogprob> top{{"Yes", std::log(0.6)}, {" No", std::log(0.2)}, {"Maybe", std::log(0.2)}};
  auto d = option_distribution_from_logprobs(top, kBinary);
  REQUIRE(d);
  CHECK((*d)[0] == doctest::Approx(0.75));
  CHECK((*d)[1] == doctest::Approx(0.25));
  const std::vector<TokenLogprob> none{{"Hmm", -0.1}};
  CHECK_FALSE(option_distribution_from_logprobs(none, kBinary));
  // Case variants of one label pool their mass.
  const std::vector<TokenLogprob> cased{{"yes", std::log(0.3)}, {"YES", std::log(0.3)}, {"No", std::log(0.2)}};
  CHECK((*option_distribution_from_logprobs(cased, kBinary))[0] == doctest::Approx(0.75));
}

TEST_CASE("sample frequencies use add-one smoothing") {
  const std::vector<std::string> replies{"Yes", "yes", "No", "unclear"};
  auto d = option_distribution_from_samples(replies, kBinary);
  CHECK(d[0] == doctest::Approx(3.0 / 5.0));
  CHECK(d[1] == doctest::Approx(2.0 / 5.0));
}

TEST_CASE("rating parsing") {
  CHECK(parse_rating(R"({"rating": 4.5})") == 4.5);
  CHECK(parse_rating("Rating: 3") == 3.0);
  CHECK(parse_rating("I'd give it 2.5") == 2.5);
  CHECK_FALSE(parse_rating("between 2 and 4").has_value());
  CHECK_FALSE(parse_rating("no idea").has_value());
}

TEST_CASE("request body and response parsing") {
  ChatRequest r;
  r.messages = {{"user", "hi"}};
  r.temperature = 0.0;
  r.max_tokens = 1;
  r.n = 3;
  r.top_logprobs = 5;
  auto body = build_request_body("m", r);
  CHECK(body["model"] == "m");
  CHECK(body["logprobs"] == true);
  CHECK(body["top_logprobs"] == 5);
  CHECK(body["n"] == 3);
  CHECK(body["messages"][0]["content"] == "hi");
  ChatRequest plain;
  plain.messages = {{"user", "x"}};
  CHECK_FALSE(build_request_body("m", plain).contains("logprobs"));

  auto resp = parse_chat_response(logprob_completion("Yes", {{"Yes", -0.1}, {"No", -2.0}}));
  REQUIRE(resp.choices.size() == 1);
  CHECK(resp.choices[0].content == "Yes");
  REQUIRE(resp.choices[0].first_token_top_logprobs.size() == 2);
  CHECK(resp.choices[0].first_token_top_logprobs[1].token == "No");
  CHECK_THROWS_AS(parse_chat_response(json{{"nope", 1}}), Error);
}

TEST_CASE("history rendering order") {
  History h;
  h.append(Question::binary("a", "First?"), Answer{"a", 0});
  h.append(Question::binary("b", "Second?"), Answer{"b", 1});
  const auto fwd = render_history(h, false);
  const auto rev = render_history(h, true);
  CHECK(fwd.find("First?") < fwd.find("Second?"));
  CHECK(rev.find("Second?") < rev.find("First?"));
}

TEST_CASE("wire: likelihood from logprobs over http") {
  StubChatServer stub;
  stub.push({200, logprob_completion("Yes", {{"Yes", std::log(0.3)}, {"No", std::log(0.1)}, {"The", -0.5}})});
  auto b = stub_backend(stub, stub_config(stub));
  auto d = b.answer_distribution(Hypothesis("Dolphin"), kBinary);
  CHECK(d[0] == doctest::Approx(0.75));
  auto reqs = stub.requests();
  REQUIRE(reqs.size() == 1);
  CHECK(reqs[0]["model"] == "stub-model");
  CHECK(reqs[0]["logprobs"] == true);
  CHECK(reqs[0]["max_tokens"] == 1);
  CHECK(reqs[0]["messages"].dump().find("Dolphin") != std::string::npos);
}

TEST_CASE("wire: retry on 5xx and 429 then succeed") {
  StubChatServer stub;
  stub.push({503, {{"error", "busy"}}});
  stub.push({429, {{"error", "slow down"}}});
  stub.push({200, logprob_completion("No", {{"No", std::log(0.9)}, {"Yes", std::log(0.1)}})});
  auto cfg = stub_config(stub);
  auto client = std::make_shared<ChatClient>(cfg, nullptr);
  RemoteBackend b(client);
  auto d = b.answer_distribution(Hypothesis("Dolphin"), kBinary);
  CHECK(d[1] == doctest::Approx(0.9));
  CHECK(client->attempts() == 3);
  CHECK(stub.requests().size() == 3);
}

TEST_CASE("wire: retries are bounded") {
  StubChatServer stub;
  stub.set_fallback({500, {{"error", "down"}}});
  auto cfg = stub_config(stub);
  auto client = std::make_shared<ChatClient>(cfg, nullptr);
  ChatRequest r;
  r.messages = {{"user", "x"}};
  CHECK_THROWS_AS(client->complete(r), TransportError);
  CHECK(client->attempts() == 3);
}

TEST_CASE("wire: client errors are not retried") {
  StubChatServer stub;
  stub.set_fallback({400, {{"error", "bad request"}}});
  auto client = std::make_shared<ChatClient>(stub_config(stub), nullptr);
  ChatRequest r;
  r.messages = {{"user", "x"}};
  try {
    client->complete(r);
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK_FALSE(e.retryable());
    CHECK(e.status() == 400);
  }
  CHECK(client->attempts() == 1);
}

TEST_CASE("wire: sample-frequency fallback when logprobs are missing") {
  StubChatServer stub;
  stub.push({200, completion({"Yes"})});  // no logprobs block
  stub.push({200, completion({"Yes", "No", "Yes", "Yes"})});
  auto b = stub_backend(stub, stub_config(stub));
  auto d = b.answer_distribution(Hypothesis("Dolphin"), kBinary);
  CHECK(d[0] == doctest::Approx(4.0 / 6.0));
  CHECK(d[1] == doctest::Approx(2.0 / 6.0));
  CHECK_FALSE(b.last_diagnostic().empty());
  auto reqs = stub.requests();
  REQUIRE(reqs.size() == 2);
  CHECK(reqs[1]["n"] == 4);
  CHECK_FALSE(reqs[1].contains("logprobs"));
}

TEST_CASE("wire: sample-frequency mode never asks for logprobs") {
  StubChatServer stub;
  stub.push({200, completion({"No", "No", "No", "No"})});
  auto cfg = stub_config(stub);
  cfg.logprob_mode = LogprobMode::SampleFrequency;
  auto b = stub_backend(stub, cfg);
  auto d = b.answer_distribution(Hypothesis("Dolphin"), kBinary);
  CHECK(d[1] == doctest::Approx(5.0 / 6.0));
  CHECK(stub.requests().size() == 1);
}

TEST_CASE("wire: hypothesis batches and questions") {
  StubChatServer stub;
  stub.push({200, completion({"1. Dolphin\n2. Shark\n3. dolphin\n4. Octopus"})});
  stub.push({200, completion({"Does it have fins?", "Is it a mammal?", "Does it have fins?"})});
  // The duplicate is replaced by one more request, which only repeats itself.
  stub.push({200, completion({"Is it a mammal?"})});
  auto b = stub_backend(stub, stub_config(stub));
  auto hyps = b.sample_hypothesis_batch({}, 4, {});
  REQUIRE(hyps.size() >= 3);
  CHECK(hyps[0].text == "Dolphin");
  auto qs = b.propose_questions_unconstrained({}, 3, QuestionKind::Binary);
  CHECK(qs.size() == 2);
  const auto reqs = stub.requests();
  REQUIRE(reqs.size() == 3);
  CHECK(reqs[1]["n"] == 3);
  CHECK(reqs[2]["n"] == 1);
}

TEST_CASE("wire: answerer re-asks once and then fails") {
  StubChatServer stub;
  stub.push({200, completion({"Hmm, hard to say"})});
  stub.push({200, completion({"No."})});
  auto b = stub_backend(stub, stub_config(stub));
  CHECK(b.simulate_answer(Hypothesis("Dolphin"), kBinary, 0).option_index == 1);
  stub.push({200, completion({"???"})});
  stub.push({200, completion({"still unsure"})});
  CHECK_THROWS_AS(b.simulate_answer(Hypothesis("Dolphin"), kBinary, 0), Error);
  const auto reqs = stub.requests();
  // The answerer sees the target and the question, never a history.
  CHECK(reqs[0]["temperature"] == 0.0);
}

TEST_CASE("wire: guesses never reach the endpoint") {
  StubChatServer stub;
  auto b = stub_backend(stub, stub_config(stub));
  auto g = Question::guess(Hypothesis("Dolphin"));
  CHECK(b.answer_distribution(Hypothesis("dolphin"), g)[0] == 1.0);
  CHECK(b.answer_distribution(Hypothesis("Shark"), g)[1] == 1.0);
  CHECK(stub.requests().empty());
}

TEST_CASE("wire: unreachable endpoint is a retryable transport error") {
  BackendConfig c;
  c.endpoint = "http://127.0.0.1:1/v1";
  c.max_retries = 1;
  c.backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::milliseconds(500);
  ChatClient client(c, nullptr);
  ChatRequest r;
  r.messages = {{"user", "x"}};
  try {
    client.complete(r);
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.retryable());
  }
  CHECK(client.attempts() == 2);
}

}  // TEST_SUITE
