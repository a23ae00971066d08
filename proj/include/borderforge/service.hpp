#pragma once

#include "borderforge/harness.hpp"
#include "borderforge/interaction.hpp"
#include "borderforge/scenario.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

namespace borderforge {

/// Request failure carried to clients as {code, message, field?} with an HTTP status.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message,
               std::optional<std::string> field = std::nullopt);
  [[nodiscard]] int status() const { return status_; }
  [[nodiscard]] const std::string& code() const { return code_; }
  [[nodiscard]] const std::optional<std::string>& field() const { return field_; }
  /// Extra members merged into the error body (e.g. bounds).
  nlohmann::json details = nlohmann::json::object();

  [[nodiscard]] nlohmann::json to_json() const;

 private:
  int status_;
  std::string code_;
  std::optional<std::string> field_;
};

struct SessionHandle {
  std::string id;
  std::chrono::system_clock::time_point created;
  std::string scenario;
  InteractionMode mode = InteractionMode::NRS;
};

[[nodiscard]] nlohmann::json to_json(const SessionHandle& h);

/// Owns live sessions. Every mutation of one session runs under that session's
/// lock, so commands, spots and ticks apply in a single total order.
class SessionManager {
 public:
  SessionManager() = default;
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  /// `scenario_ref` is "builtin:N" or an inline scenario document.
  SessionHandle create(const nlohmann::json& scenario_ref, InteractionMode mode,
                       std::uint64_t seed = 0);
  SessionHandle create(const Scenario& sc, InteractionMode mode, std::uint64_t seed = 0);

  /// Returns {"state", "events"}.
  nlohmann::json command(const std::string& id, Command cmd);
  /// Returns {"detections", "state", "events"}; rejects spots outside the scenario bounds.
  nlohmann::json spot(const std::string& id, Point2 p, std::optional<double> client_time = {});
  [[nodiscard]] nlohmann::json state(const std::string& id) const;
  /// PGM bytes of the prior or the latest posterior.
  [[nodiscard]] std::string map_pgm(const std::string& id, const std::string& which) const;
  /// Events with seq > cursor.
  [[nodiscard]] std::vector<Event> events_after(const std::string& id, std::uint64_t cursor) const;
  void remove(const std::string& id);

  void tick(const std::string& id, double dt);
  void tick_all(double dt);
  [[nodiscard]] std::vector<std::string> ids() const;

  /// Advances every session by `period` of simulated time per `period` of wall time.
  void start_ticker(std::chrono::milliseconds period = std::chrono::milliseconds(40));
  void stop_ticker();

 private:
  struct Live;
  [[nodiscard]] std::shared_ptr<Live> find(const std::string& id) const;
  SessionHandle insert(Scenario sc, InteractionMode mode, std::uint64_t seed, std::string ref);

  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Live>> sessions_;
  std::uint64_t created_ = 0;
  std::jthread ticker_;
};

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

/// Routes one HTTP request (without the WebSocket upgrade) against `manager`.
[[nodiscard]] HttpReply handle_http(SessionManager& manager, const std::string& method,
                                    const std::string& target, const std::string& body);

/// HTTP/1.1 + WebSocket front end.
class Server {
 public:
  Server(SessionManager& manager, const std::string& address, unsigned short port,
         unsigned threads = 2);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Bound port; useful when constructed with port 0.
  [[nodiscard]] unsigned short port() const;
  void start();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace borderforge
