#pragma once

// Interactive sessions with a person as the answerer, and the HTTP API that
// exposes them.

#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"

#include "infogain/backend.hpp"
#include "infogain/controller.hpp"

namespace infogain {

enum class SessionStatus { AwaitingAnswer, Computing, Finished };

std::string_view to_string(SessionStatus s);

using SessionBackendFactory = std::function<std::unique_ptr<Backend>(const SessionConfig&)>;

struct ServiceOptions {
  // Sessions are saved under <run_dir>/sessions; empty disables persistence.
  std::filesystem::path run_dir;
  SessionBackendFactory backend_factory;
  // Applied to create requests before the body's own fields.
  SessionConfig defaults = SessionConfig::twenty_questions();
};

class SessionManager {
 public:
  explicit SessionManager(ServiceOptions opts);
  ~SessionManager();

  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// Validates the config, starts the first turn in the background and
  /// returns the new id. Throws ValidationError.
  std::string create(const nlohmann::json& body);

  /// Throws Error(NotFound).
  nlohmann::json snapshot(const std::string& id) const;

  /// Throws Error(NotFound), Error(Conflict) unless awaiting an answer, and
  /// ValidationError for a label that matches no pending option. With `wait`
  /// the call returns once the next question or the outcome is ready.
  nlohmann::json submit_answer(const std::string& id, const std::string& label, bool wait = true);

  nlohmann::json transcript(const std::string& id) const;

  /// Blocks until the session is no longer computing.
  void wait_idle(const std::string& id) const;

  /// Loads saved sessions from the run directory; returns how many.
  std::size_t restore();

  std::size_t size() const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  void launch(const std::shared_ptr<Session>& s, std::function<void()> work);
  void persist(const Session& s) const;
  nlohmann::json snapshot_locked(const Session& s) const;
  std::string new_id();

  ServiceOptions opts_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
  std::mutex tasks_mutex_;
  std::vector<std::future<void>> tasks_;
};

/// HTTP+JSON front end:
///   POST /sessions                  create, 201 {"id", "snapshot"}
///   GET  /sessions/{id}             snapshot
///   POST /sessions/{id}/answer      {"label", "wait"?: bool}
///   GET  /sessions/{id}/transcript  full game record
/// Errors are {"error": {"code", "message", "fields"?}}.
class HttpService {
 public:
  explicit HttpService(SessionManager& sessions);
  ~HttpService();

  /// Binds to host:port (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace infogain
