#include "infogain/service.hpp"

#include <condition_variable>
#include <cstdio>
#include <fstream>
#include <future>
#include <random>
#include <sstream>
#include <vector>

#include "httplib.h"

#include "infogain/rng.hpp"
#include "infogain/serialization.hpp"

namespace infogain {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::AwaitingAnswer: return "awaiting_answer";
    case SessionStatus::Computing: return "computing";
    case SessionStatus::Finished: return "finished";
  }
  return "unknown";
}

namespace {

SessionStatus status_from_string(std::string_view s) {
  if (s == "awaiting_answer") return SessionStatus::AwaitingAnswer;
  if (s == "computing") return SessionStatus::Computing;
  if (s == "finished") return SessionStatus::Finished;
  throw Error(ErrorCode::Parse, "unknown session status: " + std::string(s));
}

json candidates_json(const std::vector<CandidateScore>& cands) {
  json out = json::array();
  for (const auto& c : cands) {
    out.push_back({{"question_id", c.question.id},
                   {"question", c.question.text},
                   {"score", c.score ? json(*c.score) : json(nullptr)},
                   {"is_guess", c.question.is_guess()}});
  }
  return out;
}

std::optional<std::size_t> match_option(const Question& q, const std::string& label) {
  if (auto i = q.option_index(label)) return i;
  const auto key = normalize_key(label);
  for (std::size_t i = 0; i < q.options.size(); ++i) {
    if (normalize_key(q.options[i].text) == key) return i;
  }
  return std::nullopt;
}

}  // namespace

struct SessionManager::Session {
  std::string id;
  mutable std::mutex mu;
  mutable std::condition_variable cv;
  SessionStatus status = SessionStatus::Computing;
  std::unique_ptr<Backend> backend;
  std::unique_ptr<Game> game;
  // Answer being applied while computing; saved so a restart can redo it.
  std::optional<std::string> applying_label;
  // Last snapshot taken outside a computation, served while computing.
  json view;
};

SessionManager::SessionManager(ServiceOptions opts) : opts_(std::move(opts)) {
  if (!opts_.backend_factory) throw Error(ErrorCode::InvalidArgument, "backend factory is required");
  if (!opts_.run_dir.empty()) fs::create_directories(opts_.run_dir / "sessions");
}

SessionManager::~SessionManager() {
  std::vector<std::future<void>> tasks;
  {
    std::lock_guard lock(tasks_mutex_);
    tasks.swap(tasks_);
  }
  for (auto& t : tasks) t.wait();
}

std::string SessionManager::new_id() {
  static thread_local std::random_device rd;
  std::lock_guard lock(mutex_);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(derive_seed((static_cast<std::uint64_t>(rd()) << 32) ^ rd(), ++counter_)));
  return buf;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session with id " + id);
  return it->second;
}

std::size_t SessionManager::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

json SessionManager::snapshot_locked(const Session& s) const {
  const Game& g = *s.game;
  const auto& rec = g.record();
  const bool awaiting = s.status == SessionStatus::AwaitingAnswer;
  json scores = json::array();
  std::optional<EstimatorKind> estimator;
  if (awaiting && g.pending()) {
    scores = candidates_json(g.pending_turn().candidates);
    estimator = g.pending_turn().estimator;
  } else if (!rec.turns.empty()) {
    scores = candidates_json(rec.turns.back().candidates);
    estimator = rec.turns.back().estimator;
  }
  json hyps = json::array();
  for (const auto& h : g.belief().members()) hyps.push_back(h.text);
  return {{"id", s.id},
          {"status", to_string(s.status)},
          {"turn", rec.turns.size()},
          {"budget", rec.config.budget},
          {"pending_question", awaiting && g.pending() ? to_json(*g.pending()) : json(nullptr)},
          {"history", to_json(g.history())},
          {"belief", {{"count", g.belief().size()}, {"hypotheses", hyps}}},
          {"scores", scores},
          {"estimator", estimator ? json(to_string(*estimator)) : json(nullptr)},
          {"outcome", s.status == SessionStatus::Finished ? json(to_string(rec.outcome)) : json(nullptr)},
          {"success_turn", rec.success_turn ? json(*rec.success_turn) : json(nullptr)},
          {"error", rec.error.empty() ? json(nullptr) : json(rec.error)},
          {"config", to_json(rec.config)}};
}

void SessionManager::persist(const Session& s) const {
  if (opts_.run_dir.empty()) return;
  const fs::path path = opts_.run_dir / "sessions" / (s.id + ".json");
  const json j = {{"id", s.id},
                  {"status", to_string(s.status)},
                  {"applying_label", s.applying_label ? json(*s.applying_label) : json(nullptr)},
                  {"game", s.game->to_json()}};
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << j.dump() << "\n";
  }
  fs::rename(tmp, path);
}

void SessionManager::launch(const std::shared_ptr<Session>& s, std::function<void()> work) {
  auto task = std::async(std::launch::async, [this, s, work = std::move(work)] {
    try {
      work();
    } catch (const std::exception& e) {
      // Backend errors are turned into Aborted outcomes by the game itself;
      // anything reaching here is a bug or a bad restore.
      s->game->abort(e.what());
    }
    std::lock_guard lock(s->mu);
    s->status = s->game->finished() ? SessionStatus::Finished : SessionStatus::AwaitingAnswer;
    s->applying_label.reset();
    s->view = snapshot_locked(*s);
    persist(*s);
    s->cv.notify_all();
  });
  std::lock_guard lock(tasks_mutex_);
  std::erase_if(tasks_, [](const std::future<void>& f) {
    return f.wait_for(std::chrono::seconds(0)) == std::future_status::ready;
  });
  tasks_.push_back(std::move(task));
}

std::string SessionManager::create(const json& body) {
  json merged = to_json(opts_.defaults);
  if (!body.is_object()) throw ValidationError(std::vector<FieldError>{{"", "body must be a JSON object"}});
  const json& fields = body.contains("config") ? body.at("config") : body;
  if (!fields.is_object()) throw ValidationError(std::vector<FieldError>{{"config", "must be an object"}});
  if (fields.contains("task") && fields.at("task") != merged.at("task")) {
    // Switching task swaps the whole default set before applying overrides.
    merged = json::object();
  }
  for (const auto& [k, v] : fields.items()) {
    if (k == "filter" && v.is_object() && merged.contains("filter")) {
      merged["filter"].update(v);
    } else {
      merged[k] = v;
    }
  }
  const SessionConfig cfg = session_config_from_json(merged);

  auto s = std::make_shared<Session>();
  s->id = new_id();
  s->backend = opts_.backend_factory(cfg);
  s->game = std::make_unique<Game>(cfg, *s->backend, s->id);
  {
    std::lock_guard lock(s->mu);
    s->status = SessionStatus::Computing;
    s->view = snapshot_locked(*s);
    persist(*s);
  }
  {
    std::lock_guard lock(mutex_);
    sessions_.emplace(s->id, s);
  }
  launch(s, [s] {
    s->game->start();
    s->game->prepare_turn();
  });
  return s->id;
}

json SessionManager::snapshot(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (s->status == SessionStatus::Computing) return s->view;
  return snapshot_locked(*s);
}

json SessionManager::submit_answer(const std::string& id, const std::string& label, bool wait) {
  auto s = find(id);
  {
    std::lock_guard lock(s->mu);
    if (s->status != SessionStatus::AwaitingAnswer || !s->game->pending()) {
      throw Error(ErrorCode::Conflict,
                  "session is " + std::string(to_string(s->status)) + ", not awaiting an answer");
    }
    const auto& q = *s->game->pending();
    const auto idx = match_option(q, label);
    if (!idx) {
      std::string labels;
      for (const auto& o : q.options) labels += (labels.empty() ? "" : ", ") + o.label;
      throw ValidationError(std::vector<FieldError>{{"label", "must be one of: " + labels}});
    }
    s->status = SessionStatus::Computing;
    s->applying_label = q.options[*idx].label;
    s->view = snapshot_locked(*s);
    persist(*s);
    const Answer answer{q.id, *idx};
    launch(s, [s, answer] {
      s->game->record_answer(answer);
      s->game->prepare_turn();
    });
  }
  if (!wait) return snapshot(id);
  wait_idle(id);
  return snapshot(id);
}

void SessionManager::wait_idle(const std::string& id) const {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  s->cv.wait(lock, [&] { return s->status != SessionStatus::Computing; });
}

json SessionManager::transcript(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  if (s->status == SessionStatus::Computing) {
    throw Error(ErrorCode::Conflict, "session is computing; retry once it settles");
  }
  json j = to_json(s->game->record());
  j["history"] = to_json(s->game->history());
  j["status"] = to_string(s->status);
  return j;
}

std::size_t SessionManager::restore() {
  if (opts_.run_dir.empty()) return 0;
  std::size_t n = 0;
  for (const auto& entry : fs::directory_iterator(opts_.run_dir / "sessions")) {
    if (entry.path().extension() != ".json") continue;
    std::ifstream in(entry.path());
    const json j = json::parse(in);
    auto s = std::make_shared<Session>();
    s->id = j.at("id").get<std::string>();
    {
      std::lock_guard lock(mutex_);
      if (sessions_.count(s->id)) continue;
    }
    const auto& gj = j.at("game");
    const auto cfg = session_config_from_json(gj.at("record").at("config"));
    s->backend = opts_.backend_factory(cfg);
    s->game = std::make_unique<Game>(Game::from_json(gj, *s->backend));
    const auto saved = status_from_string(j.at("status").get<std::string>());
    std::optional<std::string> label;
    if (!j.at("applying_label").is_null()) label = j.at("applying_label").get<std::string>();

    std::function<void()> resume;
    if (s->game->finished()) {
      s->status = SessionStatus::Finished;
    } else if (s->game->pending() && saved == SessionStatus::Computing && label) {
      const auto idx = match_option(*s->game->pending(), *label);
      if (!idx) throw Error(ErrorCode::Parse, "saved answer does not match the pending question");
      const Answer answer{s->game->pending()->id, *idx};
      resume = [s, answer] {
        s->game->record_answer(answer);
        s->game->prepare_turn();
      };
    } else if (s->game->pending()) {
      s->status = SessionStatus::AwaitingAnswer;
    } else {
      const bool fresh = s->game->record().turns.empty() && !s->game->record().initial_filter;
      resume = [s, fresh] {
        if (fresh) s->game->start();
        s->game->prepare_turn();
      };
    }
    {
      std::lock_guard lock(s->mu);
      if (resume) s->status = SessionStatus::Computing;
      s->applying_label = label;
      s->view = snapshot_locked(*s);
    }
    {
      std::lock_guard lock(mutex_);
      sessions_.emplace(s->id, s);
    }
    if (resume) launch(s, std::move(resume));
    ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------
// HTTP

struct HttpService::Impl {
  SessionManager& sessions;
  httplib::Server server;

  explicit Impl(SessionManager& s) : sessions(s) {}
};

namespace {

std::string_view error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Parse: return "bad_request";
    default: return "internal";
  }
}

int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Parse: return 400;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    default: return 500;
  }
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message,
                const std::vector<FieldError>& fields = {}) {
  json err = {{"code", code}, {"message", message}};
  if (!fields.empty()) {
    json fs = json::array();
    for (const auto& f : fields) fs.push_back({{"field", f.field}, {"message", f.message}});
    err["fields"] = fs;
  }
  send_json(res, status, {{"error", err}});
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    send_error(res, 400, "validation_failed", e.what(), e.fields());
  } catch (const Error& e) {
    send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, "bad_request", std::string("malformed JSON: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return json::parse(req.body);
}

}  // namespace

HttpService::HttpService(SessionManager& sessions) : impl_(std::make_unique<Impl>(sessions)) {
  auto& svr = impl_->server;
  auto& mgr = impl_->sessions;

  svr.Post("/sessions", [&mgr](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto id = mgr.create(parse_body(req));
      send_json(res, 201, {{"id", id}, {"snapshot", mgr.snapshot(id)}});
    });
  });
  svr.Get(R"(/sessions/([0-9a-f]+))", [&mgr](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, mgr.snapshot(req.matches[1].str())); });
  });
  svr.Post(R"(/sessions/([0-9a-f]+)/answer)", [&mgr](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      if (!body.is_object() || !body.contains("label") || !body.at("label").is_string()) {
        throw ValidationError(std::vector<FieldError>{{"label", "required string"}});
      }
      bool wait = true;
      if (body.contains("wait")) {
        if (!body.at("wait").is_boolean()) throw ValidationError(std::vector<FieldError>{{"wait", "must be a boolean"}});
        wait = body.at("wait").get<bool>();
      }
      send_json(res, 200, mgr.submit_answer(req.matches[1].str(), body.at("label").get<std::string>(), wait));
    });
  });
  svr.Get(R"(/sessions/([0-9a-f]+)/transcript)", [&mgr](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, mgr.transcript(req.matches[1].str())); });
  });
  svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "not_found" : "bad_request", "no such route");
    }
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p <= 0) throw Error(ErrorCode::InvalidArgument, "cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCode::InvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpService::serve() { impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace infogain
