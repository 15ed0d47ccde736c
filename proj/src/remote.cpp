#include "infogain/remote.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace infogain {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> out;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::string strip_list_marker(const std::string& line) {
  static const std::regex bullet("^\\s*(?:[-*]|\xE2\x80\xA2|\\d+[.):]|\\(\\d+\\))\\s+");
  std::string s = std::regex_replace(line, bullet, "", std::regex_constants::format_first_only);
  s = trim(s);
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\''))) {
    s = trim(std::string_view(s).substr(1, s.size() - 2));
  }
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

std::string strip_label_punct(std::string s) {
  s = trim(s);
  while (!s.empty() && std::string_view("\"'*`([").find(s.front()) != std::string_view::npos) s.erase(s.begin());
  while (!s.empty() && std::string_view("\"'*`.,:;)]!").find(s.back()) != std::string_view::npos) s.pop_back();
  return s;
}

std::string labels_phrase(const Question& q) {
  std::string out;
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    if (i > 0) out += (i + 1 == q.options.size()) ? " or " : ", ";
    out += q.options[i].label;
  }
  return out;
}

std::string render_options(const Question& q) {
  if (q.kind == QuestionKind::Binary) return "Options: Yes / No";
  std::string out;
  for (const auto& o : q.options) out += o.label + ". " + o.text + "\n";
  if (!out.empty()) out.pop_back();
  return out;
}

std::string bullet_list(std::span<const Hypothesis> hyps) {
  if (hyps.empty()) return "(none)";
  std::string out;
  for (const auto& h : hyps) out += "- " + h.text + "\n";
  out.pop_back();
  return out;
}

constexpr std::string_view kBinaryFormat =
    "Reply with a single yes/no question on one line and nothing else.";
constexpr std::string_view kMultipleChoiceFormat =
    "Reply in exactly this format and nothing else:\n"
    "Question: <question text>\n"
    "A. <option>\n"
    "B. <option>\n"
    "C. <option>\n"
    "D. <option>\n"
    "E. none of the above";

std::string_view format_instructions(QuestionKind kind) {
  return kind == QuestionKind::Binary ? kBinaryFormat : kMultipleChoiceFormat;
}

std::vector<std::string> slots_in(std::string_view tmpl) {
  static const std::regex slot(R"(\{([a-z_]+)\})");
  std::vector<std::string> out;
  std::string s(tmpl);
  for (std::sregex_iterator it(s.begin(), s.end(), slot), end; it != end; ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void BackendConfig::validate() const {
  if (!(temperature_hypotheses > 0.0 && temperature_questions > 0.0 && temperature_naive > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sampling temperatures must be > 0");
  }
  if (temperature_answerer < 0.0) throw Error(ErrorCode::InvalidArgument, "temperature_answerer must be >= 0");
  if (sample_count < 1) throw Error(ErrorCode::InvalidArgument, "sample_count must be >= 1");
  if (top_logprobs < 1) throw Error(ErrorCode::InvalidArgument, "top_logprobs must be >= 1");
  if (max_tokens < 1) throw Error(ErrorCode::InvalidArgument, "max_tokens must be >= 1");
  if (max_retries < 0 || parse_reasks < 0) throw Error(ErrorCode::InvalidArgument, "retry counts must be >= 0");
  if (question_attempts < 1) throw Error(ErrorCode::InvalidArgument, "question_attempts must be >= 1");
  if (max_in_flight < 1 || max_in_flight > 1024) {
    throw Error(ErrorCode::InvalidArgument, "max_in_flight must be in [1, 1024]");
  }
  if (task != "entity" && task != "persona") throw Error(ErrorCode::InvalidArgument, "task must be entity or persona");
  if (endpoint.empty() || model.empty()) throw Error(ErrorCode::InvalidArgument, "endpoint and model are required");
}

BackendConfig backend_config_from_json(const json& j) {
  BackendConfig c;
  c.endpoint = j.value("endpoint", c.endpoint);
  c.model = j.value("model", c.model);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.temperature_hypotheses = j.value("temperature_hypotheses", c.temperature_hypotheses);
  c.temperature_questions = j.value("temperature_questions", c.temperature_questions);
  c.temperature_naive = j.value("temperature_naive", c.temperature_naive);
  c.temperature_answerer = j.value("temperature_answerer", c.temperature_answerer);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  const std::string mode = j.value("logprob_mode", std::string("logits"));
  if (mode == "logits") {
    c.logprob_mode = LogprobMode::Logits;
  } else if (mode == "sample_frequency") {
    c.logprob_mode = LogprobMode::SampleFrequency;
  } else {
    throw Error(ErrorCode::InvalidArgument, "logprob_mode must be logits or sample_frequency");
  }
  c.sample_count = j.value("sample_count", c.sample_count);
  c.top_logprobs = j.value("top_logprobs", c.top_logprobs);
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long>(c.timeout.count())));
  c.max_retries = j.value("max_retries", c.max_retries);
  c.backoff = std::chrono::milliseconds(j.value("backoff_ms", static_cast<long>(c.backoff.count())));
  c.parse_reasks = j.value("parse_reasks", c.parse_reasks);
  c.question_attempts = j.value("question_attempts", c.question_attempts);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.task = j.value("task", c.task);
  c.domain = j.value("domain", c.domain);
  if (const char* key = std::getenv(c.api_key_env.c_str())) c.api_key = key;
  c.validate();
  return c;
}

BackendConfig load_backend_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open backend config " + path.string());
  try {
    return backend_config_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed backend config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Prompts

PromptTemplates PromptTemplates::for_task(std::string_view task) {
  PromptTemplates t;
  const bool persona = task == "persona";
  if (!persona && task != "entity") throw Error(ErrorCode::InvalidArgument, "unknown task: " + std::string(task));

  t.system = persona
      ? "You are an assistant that learns about a user's film taste by asking questions."
      : "You are playing a guessing game. The hidden target is a single {domain}.";
  t.subject = persona
      ? "You are a person whose taste in films is described as follows:\n{hypothesis}"
      : "You are thinking of this {domain}: {hypothesis}.";
  t.hypotheses = persona
      ? "Question-answer pairs so far, most recent first:\n{history}\n\n"
        "Descriptions already proposed (propose different ones):\n{previous}\n\n"
        "Write {n} diverse and representative descriptions of this user's taste in films that are "
        "consistent with every answer above. Vary age group, favourite genres and viewing habits. "
        "Write each description as a short paragraph on its own single line, with no numbering."
      : "Question-answer pairs so far, most recent first:\n{history}\n\n"
        "Candidates already proposed (do not repeat them):\n{previous}\n\n"
        "List {n} diverse and representative candidate {domain}s that are consistent with every "
        "answer above. Spread them across different categories. Write one name per line with no "
        "numbering or commentary.";
  t.likelihood =
      "{subject}\n\nAnswer the following question truthfully.\nQuestion: {question}\n{options}\n"
      "Reply with only the option label ({labels}).";
  t.answerer = t.likelihood;
  t.predictive = persona
      ? "A user answered these questions about their film taste:\n{history}\n\n"
        "How would this user answer the next question?\nQuestion: {question}\n{options}\n"
        "Reply with only the option label ({labels})."
      : "Known question-answer pairs about a hidden {domain}:\n{history}\n\n"
        "How would the next question be answered for the hidden {domain}?\nQuestion: {question}\n"
        "{options}\nReply with only the option label ({labels}).";
  t.question_unconstrained = persona
      ? "Questions asked so far and the user's answers:\n{history}\n\n"
        "Propose one new multiple-choice question that would teach you the most about this "
        "user's taste in films.\n{format}"
      : "You are trying to identify a hidden {domain}. Questions asked so far and their answers:\n"
        "{history}\n\nPropose one new question that would help identify the {domain}.\n{format}";
  t.question_conditional =
      "Questions asked so far and their answers:\n{history}\n\n"
      "Current candidate {domain}s:\n{hypotheses}\n\n"
      "Propose one question whose possible answers would split these candidates into roughly "
      "balanced groups.\n{format}";
  t.question_naive = persona
      ? "Questions asked so far and the user's answers:\n{history}\n\n"
        "Ask the single most useful next question for learning this user's taste in films.\n{format}"
      : "You are trying to identify a hidden {domain}. Questions asked so far and their answers:\n"
        "{history}\n\nAsk the single most informative next question.\n{format}";
  t.judge =
      "{subject}\n\nRate how well the film \"{item}\" matches your taste on a scale from 1 to 5 "
      "in steps of 0.5. Reply with JSON of the form "
      "{\"justification\": \"<one sentence>\", \"rating\": <number>}.";
  t.greedy_rank =
      "Question-answer pairs so far:\n{history}\n\nWhich of these candidate {domain}s is most "
      "likely the hidden one?\n{hypotheses}\nReply with the candidate's number only.";
  t.greedy_generate =
      "Question-answer pairs so far:\n{history}\n\nWhat is your single best guess for the hidden "
      "{domain}? Reply with the name only.";
  t.posterior_sample =
      "Question-answer pairs so far:\n{history}\n\nReturn only the name of one randomly selected "
      "{domain} consistent with every answer above. Think of a broad pool first and avoid the most "
      "obvious choice. Output the name and nothing else.";
  t.recommend =
      "A user answered these questions about their film taste:\n{history}\n\nRecommend {n} films "
      "this user would enjoy. Do not recommend any of these: {exclude}. Write one film title per "
      "line with no numbering or commentary.";
  t.recommend_check =
      "A user answered these questions about their film taste:\n{history}\n\nIs recommending the "
      "film \"{item}\" consistent with every answer above? Reply Yes or No.";
  return t;
}

void PromptTemplates::validate() const {
  const std::pair<const std::string*, std::vector<std::string>> required[] = {
      {&subject, {"hypothesis"}},
      {&hypotheses, {"history", "previous", "n"}},
      {&likelihood, {"subject", "question", "options"}},
      {&predictive, {"history", "question", "options"}},
      {&question_unconstrained, {"history", "format"}},
      {&question_conditional, {"history", "hypotheses", "format"}},
      {&question_naive, {"history", "format"}},
      {&answerer, {"subject", "question", "options"}},
      {&judge, {"subject", "item"}},
      {&greedy_rank, {"history", "hypotheses"}},
      {&greedy_generate, {"history"}},
      {&posterior_sample, {"history"}},
      {&recommend, {"history", "n", "exclude"}},
      {&recommend_check, {"history", "item"}},
  };
  const char* names[] = {"subject", "hypotheses", "likelihood", "predictive", "question_unconstrained",
                         "question_conditional", "question_naive", "answerer", "judge", "greedy_rank",
                         "greedy_generate", "posterior_sample", "recommend", "recommend_check"};
  std::size_t i = 0;
  for (const auto& [tmpl, slots] : required) {
    const auto present = slots_in(*tmpl);
    for (const auto& s : slots) {
      if (std::find(present.begin(), present.end(), s) == present.end()) {
        throw Error(ErrorCode::InvalidArgument,
                    std::string("template ") + names[i] + " is missing slot {" + s + "}");
      }
    }
    ++i;
  }
}

void PromptTemplates::override_from_json(const json& j) {
  std::pair<const char*, std::string*> fields[] = {
      {"system", &system}, {"subject", &subject}, {"hypotheses", &hypotheses},
      {"likelihood", &likelihood}, {"predictive", &predictive},
      {"question_unconstrained", &question_unconstrained},
      {"question_conditional", &question_conditional}, {"question_naive", &question_naive},
      {"answerer", &answerer}, {"judge", &judge}, {"greedy_rank", &greedy_rank},
      {"greedy_generate", &greedy_generate}, {"posterior_sample", &posterior_sample},
      {"recommend", &recommend}, {"recommend_check", &recommend_check},
  };
  for (auto& [name, field] : fields) {
    if (j.contains(name)) *field = j.at(name).get<std::string>();
  }
  validate();
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& vars) {
  static const std::regex slot(R"(\{([a-z_]+)\})");
  std::string s(tmpl), out;
  std::size_t last = 0;
  for (std::sregex_iterator it(s.begin(), s.end(), slot), end; it != end; ++it) {
    const auto& m = *it;
    auto v = vars.find(m[1].str());
    if (v == vars.end()) throw Error(ErrorCode::InvalidArgument, "no value for template slot {" + m[1].str() + "}");
    out.append(s, last, static_cast<std::size_t>(m.position(0)) - last);
    out += v->second;
    last = static_cast<std::size_t>(m.position(0) + m.length(0));
  }
  out.append(s, last, std::string::npos);
  return out;
}

std::string render_history(const History& history, bool most_recent_first) {
  if (history.empty()) return "(none yet)";
  std::vector<std::string> lines;
  for (const auto& [q, a] : history.pairs()) {
    const auto& opt = q.options[a.option_index];
    std::string ans = q.kind == QuestionKind::Binary ? opt.label : opt.label + ". " + opt.text;
    std::string block = "Q: " + q.text;
    if (q.kind == QuestionKind::MultipleChoice) block += "\n" + render_options(q);
    block += "\nA: " + ans;
    lines.push_back(std::move(block));
  }
  if (most_recent_first) std::reverse(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  out.pop_back();
  return out;
}

// ---------------------------------------------------------------------------
// Wire format

json build_request_body(std::string_view model, const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  json body = {{"model", model},
               {"messages", messages},
               {"temperature", req.temperature},
               {"max_tokens", req.max_tokens},
               {"n", req.n}};
  if (req.top_logprobs) {
    body["logprobs"] = true;
    body["top_logprobs"] = *req.top_logprobs;
  }
  return body;
}

ChatResponse parse_chat_response(const json& body) {
  ChatResponse r;
  try {
    for (const auto& c : body.at("choices")) {
      ChatChoice choice;
      const auto& msg = c.at("message");
      if (msg.contains("content") && msg.at("content").is_string()) {
        choice.content = msg.at("content").get<std::string>();
      }
      if (c.contains("logprobs") && c.at("logprobs").is_object()) {
        const auto& lp = c.at("logprobs");
        if (lp.contains("content") && lp.at("content").is_array() && !lp.at("content").empty()) {
          const auto& first = lp.at("content").at(0);
          if (first.contains("top_logprobs")) {
            for (const auto& t : first.at("top_logprobs")) {
              choice.first_token_top_logprobs.push_back(
                  {t.at("token").get<std::string>(), t.at("logprob").get<double>()});
            }
          }
        }
      }
      r.choices.push_back(std::move(choice));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed chat completion: ") + e.what());
  }
  return r;
}

ChatClient::ChatClient(BackendConfig cfg, std::unique_ptr<ChatTransport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)), in_flight_(cfg_.max_in_flight) {
  cfg_.validate();
  if (!transport_) transport_ = std::make_unique<HttpTransport>(cfg_.endpoint, cfg_.api_key, cfg_.timeout);
}

ChatResponse ChatClient::complete(const ChatRequest& req) {
  const json body = build_request_body(cfg_.model, req);
  for (int attempt = 0;; ++attempt) {
    ++attempts_;
    try {
      in_flight_.acquire();
      json reply;
      try {
        reply = transport_->post_chat(body);
      } catch (...) {
        in_flight_.release();
        throw;
      }
      in_flight_.release();
      return parse_chat_response(reply);
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= cfg_.max_retries) throw;
      std::this_thread::sleep_for(cfg_.backoff * (1L << attempt));
    }
  }
}

// ---------------------------------------------------------------------------
// Output parsing

std::vector<std::string> parse_line_list(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& line : split_lines(text)) {
    auto s = strip_list_marker(line);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

std::optional<Question> parse_question(std::string_view text, QuestionKind kind) {
  static const std::regex question_prefix(R"(^\s*(?:question\s*[:.-]\s*))", std::regex::icase);
  static const std::regex option_line(R"(^\s*\(?([A-Ea-e])[.):]\s+(.+?)\s*$)");
  const auto lines = split_lines(text);

  if (kind == QuestionKind::Binary) {
    for (const auto& raw : lines) {
      std::string s = std::regex_replace(strip_list_marker(raw), question_prefix, "");
      s = trim(s);
      const auto qm = s.rfind('?');
      if (qm == std::string::npos || qm < 3) continue;
      s = s.substr(0, qm + 1);
      return Question::binary(question_id_for(s), s);
    }
    return std::nullopt;
  }

  std::string stem;
  std::vector<std::string> choices(4);
  for (const auto& raw : lines) {
    std::smatch m;
    if (std::regex_match(raw, m, option_line)) {
      const char label = static_cast<char>(std::toupper(static_cast<unsigned char>(m[1].str()[0])));
      if (label <= 'D') choices[static_cast<std::size_t>(label - 'A')] = trim(m[2].str());
      continue;
    }
    if (stem.empty()) {
      std::string s = trim(std::regex_replace(strip_list_marker(raw), question_prefix, ""));
      if (!s.empty()) stem = s;
    }
  }
  if (stem.empty() || std::any_of(choices.begin(), choices.end(), [](const auto& c) { return c.empty(); })) {
    return std::nullopt;
  }
  std::string id_basis = stem;
  for (const auto& c : choices) id_basis += "|" + c;
  return Question::multiple_choice(question_id_for(id_basis), stem, choices);
}

std::optional<std::size_t> map_reply_to_option(std::string_view reply, const Question& q) {
  std::string s = strip_label_punct(std::string(reply));
  if (s.empty()) return std::nullopt;
  auto leading_token = [](std::string_view v) {
    std::size_t e = 0;
    while (e < v.size() && std::isalnum(static_cast<unsigned char>(v[e]))) ++e;
    return std::string(v.substr(0, e));
  };
  std::string token = leading_token(s);
  if (iequals(token, "option") || iequals(token, "answer")) {
    std::string_view rest(s);
    rest.remove_prefix(token.size());
    while (!rest.empty() && !std::isalnum(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
    token = leading_token(rest);
  }
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    if (iequals(token, q.options[i].label)) return i;
  }
  const std::string whole = normalize_key(s);
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    if (normalize_key(q.options[i].text) == whole) return i;
  }
  return std::nullopt;
}

std::optional<CategoricalDistribution> option_distribution_from_logprobs(
    std::span<const TokenLogprob> top, const Question& q) {
  std::vector<double> mass(q.options.size(), 0.0);
  bool any = false;
  for (const auto& t : top) {
    const std::string tok = strip_label_punct(t.token);
    for (std::size_t i = 0; i < q.options.size(); ++i) {
      if (iequals(tok, q.options[i].label)) {
        mass[i] += std::exp(t.logprob);
        any = true;
        break;
      }
    }
  }
  if (!any) return std::nullopt;
  double total = 0.0;
  for (double m : mass) total += m;
  if (!(total > 0.0)) return std::nullopt;
  return CategoricalDistribution::normalized(std::move(mass));
}

CategoricalDistribution option_distribution_from_samples(std::span<const std::string> replies,
                                                         const Question& q) {
  std::vector<double> counts(q.options.size(), 1.0);
  for (const auto& r : replies) {
    if (auto idx = map_reply_to_option(r, q)) counts[*idx] += 1.0;
  }
  return CategoricalDistribution::normalized(std::move(counts));
}

std::optional<double> parse_rating(std::string_view reply) {
  const std::string s(reply);
  const auto open = s.find('{');
  const auto close = s.rfind('}');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    try {
      const auto j = json::parse(s.substr(open, close - open + 1));
      if (j.contains("rating")) {
        const auto& r = j.at("rating");
        if (r.is_number()) return r.get<double>();
        if (r.is_string()) return std::stod(r.get<std::string>());
      }
    } catch (const std::exception&) {
      // fall through to the textual forms
    }
  }
  static const std::regex labelled(R"((?:rating|score)\s*[:=]?\s*(\d+(?:\.\d+)?))", std::regex::icase);
  std::smatch m;
  if (std::regex_search(s, m, labelled)) return std::stod(m[1].str());
  static const std::regex number(R"(\d+(?:\.\d+)?)");
  std::vector<std::string> nums;
  for (std::sregex_iterator it(s.begin(), s.end(), number), end; it != end; ++it) nums.push_back(it->str());
  if (nums.size() == 1) return std::stod(nums.front());
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// RemoteBackend

RemoteBackend::RemoteBackend(std::shared_ptr<ChatClient> client, PromptTemplates templates)
    : client_(std::move(client)), templates_(std::move(templates)) {
  if (!client_) throw Error(ErrorCode::InvalidArgument, "null chat client");
  templates_.validate();
}

std::string RemoteBackend::last_diagnostic() const {
  std::lock_guard lock(diag_mutex_);
  return diagnostic_;
}

void RemoteBackend::set_diagnostic(std::string d) {
  std::lock_guard lock(diag_mutex_);
  diagnostic_ = std::move(d);
}

std::map<std::string, std::string> RemoteBackend::base_vars() const {
  return {{"domain", client_->config().domain}};
}

ChatRequest RemoteBackend::make_request(std::string user_prompt, double temperature,
                                        int max_tokens, int n) const {
  ChatRequest req;
  const auto system = render(templates_.system, base_vars());
  if (!system.empty()) req.messages.push_back({"system", system});
  req.messages.push_back({"user", std::move(user_prompt)});
  req.temperature = temperature;
  req.max_tokens = max_tokens;
  req.n = n;
  return req;
}

std::vector<Hypothesis> RemoteBackend::do_sample_hypothesis_batch(
    const History& history, int n, std::span<const Hypothesis> prior_batches) {
  auto vars = base_vars();
  vars["history"] = render_history(history, /*most_recent_first=*/true);
  vars["previous"] = bullet_list(prior_batches);
  vars["n"] = std::to_string(n);
  const auto& cfg = client_->config();
  auto resp = client_->complete(
      make_request(render(templates_.hypotheses, vars), cfg.temperature_hypotheses, cfg.max_tokens));
  std::vector<Hypothesis> out;
  if (!resp.choices.empty()) {
    for (auto& line : parse_line_list(resp.choices.front().content)) {
      if (static_cast<int>(out.size()) >= n) break;
      out.emplace_back(std::move(line));
    }
  }
  if (out.empty()) set_diagnostic("hypothesis batch: no parseable lines in model output");
  return out;
}

CategoricalDistribution RemoteBackend::option_distribution(const std::string& prompt,
                                                           const Question& q) {
  const auto& cfg = client_->config();
  if (cfg.logprob_mode == LogprobMode::Logits) {
    auto req = make_request(prompt, 1.0, 1);
    req.top_logprobs = cfg.top_logprobs;
    auto resp = client_->complete(req);
    if (!resp.choices.empty()) {
      if (auto d = option_distribution_from_logprobs(resp.choices.front().first_token_top_logprobs, q)) {
        return *d;
      }
    }
    set_diagnostic("no option label among the top logprobs; using sample frequencies");
  }
  std::vector<std::string> replies;
  for (int round = 0; round <= cfg.parse_reasks && static_cast<int>(replies.size()) < cfg.sample_count; ++round) {
    auto resp = client_->complete(make_request(prompt, 1.0, 4, cfg.sample_count - static_cast<int>(replies.size())));
    if (resp.choices.empty()) break;
    for (auto& c : resp.choices) replies.push_back(std::move(c.content));
  }
  return option_distribution_from_samples(replies, q);
}

CategoricalDistribution RemoteBackend::do_answer_distribution(const Hypothesis& hyp,
                                                              const Question& q) {
  auto vars = base_vars();
  vars["hypothesis"] = hyp.text;
  vars["subject"] = render(templates_.subject, vars);
  vars["question"] = q.text;
  vars["options"] = render_options(q);
  vars["labels"] = labels_phrase(q);
  return option_distribution(render(templates_.likelihood, vars), q);
}

std::vector<Question> RemoteBackend::generate_questions(const std::string& prompt, int m,
                                                        QuestionKind kind, double temperature) {
  const auto& cfg = client_->config();
  std::vector<Question> out;
  int malformed = 0;
  for (int attempt = 0; attempt < cfg.question_attempts && static_cast<int>(out.size()) < m; ++attempt) {
    auto resp = client_->complete(
        make_request(prompt, temperature, cfg.max_tokens, m - static_cast<int>(out.size())));
    std::size_t before = out.size();
    for (const auto& c : resp.choices) {
      if (auto q = parse_question(c.content, kind)) {
        out.push_back(std::move(*q));
      } else {
        ++malformed;
      }
    }
    out = dedup_questions(std::move(out));
    if (out.size() == before && resp.choices.size() > 0 && malformed == 0) break;
  }
  if (malformed > 0) set_diagnostic(std::to_string(malformed) + " malformed question generation(s) dropped");
  if (static_cast<int>(out.size()) > m) out.resize(static_cast<std::size_t>(m));
  return out;
}

std::vector<Question> RemoteBackend::do_propose_unconstrained(const History& history, int m,
                                                              QuestionKind kind) {
  auto vars = base_vars();
  vars["history"] = render_history(history, false);
  vars["format"] = std::string(format_instructions(kind));
  return generate_questions(render(templates_.question_unconstrained, vars), m, kind,
                            client_->config().temperature_questions);
}

std::vector<Question> RemoteBackend::do_propose_conditional(const History& history,
                                                            std::span<const Hypothesis> hyps,
                                                            int m, QuestionKind kind) {
  auto vars = base_vars();
  vars["history"] = render_history(history, false);
  vars["hypotheses"] = bullet_list(hyps);
  vars["format"] = std::string(format_instructions(kind));
  return generate_questions(render(templates_.question_conditional, vars), m, kind,
                            client_->config().temperature_questions);
}

Question RemoteBackend::do_propose_naive(const History& history, QuestionKind kind) {
  auto vars = base_vars();
  vars["history"] = render_history(history, false);
  vars["format"] = std::string(format_instructions(kind));
  auto qs = generate_questions(render(templates_.question_naive, vars), 1, kind,
                               client_->config().temperature_naive);
  if (qs.empty()) throw Error(ErrorCode::QuestionGeneration, "no parseable question was generated");
  return std::move(qs.front());
}

Answer RemoteBackend::do_simulate_answer(const Hypothesis& target, const Question& q,
                                         std::uint64_t /*seed*/) {
  auto vars = base_vars();
  vars["hypothesis"] = target.text;
  vars["subject"] = render(templates_.subject, vars);
  vars["question"] = q.text;
  vars["options"] = render_options(q);
  vars["labels"] = labels_phrase(q);
  const auto prompt = render(templates_.answerer, vars);
  // One re-ask on an unmappable reply.
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto resp = client_->complete(make_request(prompt, client_->config().temperature_answerer, 8));
    if (!resp.choices.empty()) {
      if (auto idx = map_reply_to_option(resp.choices.front().content, q)) return Answer{q.id, *idx};
    }
  }
  throw Error(ErrorCode::Parse, "answerer reply could not be mapped to an option");
}

std::vector<std::optional<double>> RemoteBackend::do_judge(const Hypothesis& persona,
                                                           std::span<const std::string> items) {
  std::vector<std::optional<double>> out;
  for (const auto& item : items) {
    auto vars = base_vars();
    vars["hypothesis"] = persona.text;
    vars["subject"] = render(templates_.subject, vars);
    vars["item"] = item;
    const auto prompt = render(templates_.judge, vars);
    std::optional<double> rating;
    for (int attempt = 0; attempt < 2 && !rating; ++attempt) {
      auto resp = client_->complete(make_request(prompt, client_->config().temperature_answerer, 200));
      if (!resp.choices.empty()) rating = parse_rating(resp.choices.front().content);
    }
    out.push_back(rating);
  }
  return out;
}

double RemoteBackend::do_posterior_hypothesis_entropy(const History& history, const Question& q,
                                                      const Answer& a, int k) {
  History extended = history;
  extended.append(q, a);
  auto vars = base_vars();
  vars["history"] = render_history(extended, true);
  const auto prompt = render(templates_.posterior_sample, vars);
  std::unordered_map<std::string, double> counts;
  int got = 0;
  for (int round = 0; round <= client_->config().parse_reasks && got < k; ++round) {
    auto resp = client_->complete(make_request(prompt, 1.0, 32, k - got));
    if (resp.choices.empty()) break;
    for (const auto& c : resp.choices) {
      auto lines = parse_line_list(c.content);
      if (lines.empty()) continue;
      counts[normalize_key(lines.front())] += 1.0;
      ++got;
    }
  }
  if (got == 0) throw Error(ErrorCode::Parse, "no parseable hypothesis samples");
  std::vector<double> w;
  for (const auto& [key, c] : counts) w.push_back(c);
  return entropy_of_weights(w);
}

CategoricalDistribution RemoteBackend::do_predictive_answer_distribution(const History& history,
                                                                         const Question& q) {
  auto vars = base_vars();
  vars["history"] = render_history(history, false);
  vars["question"] = q.text;
  vars["options"] = render_options(q);
  vars["labels"] = labels_phrase(q);
  return option_distribution(render(templates_.predictive, vars), q);
}

std::size_t RemoteBackend::do_most_likely_member(const History& history,
                                                 std::span<const Hypothesis> candidates) {
  auto vars = base_vars();
  vars["history"] = render_history(history, false);
  std::string list;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    list += std::to_string(i + 1) + ". " + candidates[i].text + "\n";
  }
  vars["hypotheses"] = list;
  auto resp = client_->complete(make_request(render(templates_.greedy_rank, vars), 0.0, 16));
  if (resp.choices.empty()) return 0;
  const std::string reply = strip_label_punct(resp.choices.front().content);
  static const std::regex leading_number(R"(^\s*(\d+))");
  std::smatch m;
  if (std::regex_search(reply, m, leading_number)) {
    const auto idx = std::stoul(m[1].str());
    if (idx >= 1 && idx <= candidates.size()) return idx - 1;
  }
  const auto key = normalize_key(reply);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].key == key) return i;
  }
  return 0;
}

std::optional<Hypothesis> RemoteBackend::do_greedy_generate(const History& history) {
  auto vars = base_vars();
  vars["history"] = render_history(history, true);
  auto resp = client_->complete(make_request(render(templates_.greedy_generate, vars), 0.0, 32));
  if (resp.choices.empty()) return std::nullopt;
  auto lines = parse_line_list(resp.choices.front().content);
  if (lines.empty()) return std::nullopt;
  return Hypothesis(strip_label_punct(lines.front()));
}

std::vector<std::string> RemoteBackend::do_generate_recommendations(
    const History& history, std::span<const Hypothesis> /*belief*/, int count,
    std::span<const std::string> exclude) {
  auto vars = base_vars();
  vars["history"] = render_history(history, false);
  vars["n"] = std::to_string(count);
  std::string ex;
  for (const auto& e : exclude) ex += (ex.empty() ? "" : "; ") + e;
  vars["exclude"] = ex.empty() ? "(none)" : ex;
  auto resp = client_->complete(
      make_request(render(templates_.recommend, vars), client_->config().temperature_naive,
                   client_->config().max_tokens));
  if (resp.choices.empty()) return {};
  auto items = parse_line_list(resp.choices.front().content);
  if (static_cast<int>(items.size()) > count) items.resize(static_cast<std::size_t>(count));
  return items;
}

bool RemoteBackend::do_recommendation_consistent(const std::string& item, const History& history) {
  auto vars = base_vars();
  vars["history"] = render_history(history, false);
  vars["item"] = item;
  auto resp = client_->complete(make_request(render(templates_.recommend_check, vars), 0.0, 4));
  if (resp.choices.empty()) return false;
  const auto yes_no = Question::binary("check", "consistent?");
  auto idx = map_reply_to_option(resp.choices.front().content, yes_no);
  return idx && *idx == 0;
}

}  // namespace infogain
