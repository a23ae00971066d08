#include "borderforge/service.hpp"

#include "borderforge/map_io.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <charconv>
#include <condition_variable>
#include <deque>
#include <iomanip>
#include <random>
#include <sstream>

namespace borderforge {

ServiceError::ServiceError(int status, std::string code, const std::string& message,
                           std::optional<std::string> field)
    : Error(message), status_(status), code_(std::move(code)), field_(std::move(field)) {}

nlohmann::json ServiceError::to_json() const {
  nlohmann::json j = {{"code", code_}, {"message", what()}};
  if (field_) j["field"] = *field_;
  for (const auto& [k, v] : details.items()) j[k] = v;
  return j;
}

nlohmann::json to_json(const SessionHandle& h) {
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(h.created.time_since_epoch()).count();
  return {{"id", h.id}, {"created", ms}, {"scenario", h.scenario}, {"mode", to_string(h.mode)}};
}

namespace {

ServiceError not_found(const std::string& id) {
  return ServiceError(404, "not_found", "no session '" + id + "'");
}

nlohmann::json events_json(const std::vector<Event>& events) {
  nlohmann::json out = nlohmann::json::array();
  for (const Event& e : events) out.push_back(to_json(e));
  return out;
}

}  // namespace

struct SessionManager::Live {
  Live(SessionHandle h, Scenario s, const OccupancyGrid& prior, std::uint64_t seed)
      : handle(std::move(h)),
        scenario(std::move(s)),
        session(session_config(scenario, prior, handle.mode)),
        base_seed(splitmix64(seed)) {}

  std::mutex mutex;
  SessionHandle handle;
  Scenario scenario;
  InteractionSession session;
  std::uint64_t base_seed;
  std::uint64_t spots = 0;
};

SessionManager::~SessionManager() { stop_ticker(); }

SessionHandle SessionManager::create(const nlohmann::json& scenario_ref, InteractionMode mode,
                                     std::uint64_t seed) {
  Scenario sc;
  std::string ref;
  try {
    if (scenario_ref.is_string()) {
      ref = scenario_ref.get<std::string>();
      if (ref.rfind("builtin:", 0) != 0)
        throw ServiceError(400, "invalid_scenario", "scenario must be builtin:N or an inline document",
                           "scenario");
      sc = resolve_scenario(ref);
    } else if (scenario_ref.is_object()) {
      sc = scenario_from_json(scenario_ref);
      ref = sc.name;
    } else {
      throw ServiceError(400, "invalid_scenario", "scenario is required", "scenario");
    }
    sc.validate();
  } catch (const ScenarioError& e) {
    throw ServiceError(400, "invalid_scenario", e.what(), "scenario." + e.field());
  } catch (const ServiceError&) {
    throw;
  } catch (const Error& e) {
    throw ServiceError(400, "invalid_scenario", e.what(), "scenario");
  }
  return insert(std::move(sc), mode, seed, std::move(ref));
}

SessionHandle SessionManager::create(const Scenario& sc, InteractionMode mode, std::uint64_t seed) {
  try {
    sc.validate();
  } catch (const ScenarioError& e) {
    throw ServiceError(400, "invalid_scenario", e.what(), "scenario." + e.field());
  }
  return insert(sc, mode, seed, sc.name);
}

SessionHandle SessionManager::insert(Scenario sc, InteractionMode mode, std::uint64_t seed,
                                     std::string ref) {
  const OccupancyGrid prior = build_prior(sc);
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  std::unique_lock lock(mutex_);
  std::string id;
  do {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << splitmix64(rng() + ++created_);
    id = out.str();
  } while (sessions_.contains(id));
  SessionHandle handle{id, std::chrono::system_clock::now(), std::move(ref), mode};
  sessions_.emplace(id, std::make_shared<Live>(handle, std::move(sc), prior, seed));
  return handle;
}

std::shared_ptr<SessionManager::Live> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw not_found(id);
  return it->second;
}

nlohmann::json SessionManager::command(const std::string& id, Command cmd) {
  const auto live = find(id);
  std::lock_guard lock(live->mutex);
  const std::vector<Event> events = live->session.handle_command(cmd);
  return {{"state", to_string(live->session.state())}, {"events", events_json(events)}};
}

nlohmann::json SessionManager::spot(const std::string& id, Point2 p,
                                    std::optional<double> client_time) {
  const auto live = find(id);
  std::lock_guard lock(live->mutex);
  const Scenario& sc = live->scenario;
  if (!p.finite() || p.x < 0.0 || p.y < 0.0 || p.x > sc.width || p.y > sc.height) {
    ServiceError e(400, "out_of_bounds", "spot lies outside the scenario bounds",
                   !(p.x >= 0.0 && p.x <= sc.width) ? "x" : "y");
    e.details["bounds"] = {{"width", sc.width}, {"height", sc.height}};
    throw e;
  }
  InteractionSession& s = live->session;
  const std::vector<Event> events =
      s.on_laser_spot(p, s.sim_time(), splitmix64(live->base_seed + live->spots++));
  nlohmann::json out = {{"detections", s.last_detection_count()},
                        {"state", to_string(s.state())},
                        {"events", events_json(events)}};
  if (client_time) out["client_time"] = *client_time;
  return out;
}

nlohmann::json SessionManager::state(const std::string& id) const {
  const auto live = find(id);
  std::lock_guard lock(live->mutex);
  const InteractionSession& s = live->session;
  const Pose2& pose = s.robot().pose();
  return {{"id", id},
          {"state", to_string(s.state())},
          {"mode", to_string(s.mode())},
          {"robot", {{"x", pose.position.x}, {"y", pose.position.y}, {"theta", pose.theta}}},
          {"border_buffer", s.border_buffer().size()},
          {"seed_buffer", s.seed_buffer().size()},
          {"map_version", s.map_version()},
          {"map",
           {{"resolution", s.working_map().resolution()},
            {"origin",
             {s.working_map().origin().position.x, s.working_map().origin().position.y,
              s.working_map().origin().theta}}}},
          {"sim_time", s.sim_time()},
          {"events", s.events().size()}};
}

std::string SessionManager::map_pgm(const std::string& id, const std::string& which) const {
  const auto live = find(id);
  std::lock_guard lock(live->mutex);
  if (which == "prior") return encode_pgm(live->session.config().prior);
  if (which == "posterior") {
    if (!live->session.posterior())
      throw ServiceError(409, "not_ready", "no posterior before the first Save");
    return encode_pgm(*live->session.posterior());
  }
  throw ServiceError(404, "not_found", "unknown map '" + which + "'", "which");
}

std::vector<Event> SessionManager::events_after(const std::string& id, std::uint64_t cursor) const {
  const auto live = find(id);
  std::lock_guard lock(live->mutex);
  const std::vector<Event>& log = live->session.events();
  // seq is 1-based and gapless, so the log index of seq n is n - 1.
  if (cursor >= log.size()) return {};
  return {log.begin() + static_cast<std::ptrdiff_t>(cursor), log.end()};
}

void SessionManager::remove(const std::string& id) {
  std::unique_lock lock(mutex_);
  if (sessions_.erase(id) == 0) throw not_found(id);
}

void SessionManager::tick(const std::string& id, double dt) {
  const auto live = find(id);
  std::lock_guard lock(live->mutex);
  live->session.tick(dt);
}

void SessionManager::tick_all(double dt) {
  std::vector<std::shared_ptr<Live>> all;
  {
    std::shared_lock lock(mutex_);
    for (const auto& [id, live] : sessions_) all.push_back(live);
  }
  for (const auto& live : all) {
    std::lock_guard lock(live->mutex);
    live->session.tick(dt);
  }
}

std::vector<std::string> SessionManager::ids() const {
  std::shared_lock lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, live] : sessions_) out.push_back(id);
  return out;
}

void SessionManager::start_ticker(std::chrono::milliseconds period) {
  stop_ticker();
  ticker_ = std::jthread([this, period](std::stop_token stop) {
    const double dt = std::chrono::duration<double>(period).count();
    auto next = std::chrono::steady_clock::now();
    std::mutex m;
    std::condition_variable_any cv;
    while (!stop.stop_requested()) {
      next += period;
      tick_all(dt);
      std::unique_lock lock(m);
      cv.wait_until(lock, stop, next, [] { return false; });
    }
  });
}

void SessionManager::stop_ticker() {
  if (ticker_.joinable()) {
    ticker_.request_stop();
    ticker_.join();
  }
}

namespace {

struct Target {
  std::vector<std::string> parts;
  std::map<std::string, std::string> query;
};

Target parse_target(const std::string& target) {
  Target t;
  const std::size_t q = target.find('?');
  const std::string path = target.substr(0, q);
  std::size_t i = 0;
  while (i < path.size()) {
    const std::size_t j = path.find('/', i);
    const std::string part = path.substr(i, j == std::string::npos ? std::string::npos : j - i);
    if (!part.empty()) t.parts.push_back(part);
    if (j == std::string::npos) break;
    i = j + 1;
  }
  if (q != std::string::npos) {
    std::istringstream in(target.substr(q + 1));
    std::string kv;
    while (std::getline(in, kv, '&')) {
      const std::size_t eq = kv.find('=');
      t.query[kv.substr(0, eq)] = eq == std::string::npos ? "" : kv.substr(eq + 1);
    }
  }
  return t;
}

std::uint64_t parse_cursor(const Target& t) {
  const auto it = t.query.find("cursor");
  if (it == t.query.end() || it->second.empty()) return 0;
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
  if (ec != std::errc() || ptr != it->second.data() + it->second.size())
    throw ServiceError(400, "bad_request", "cursor must be a nonnegative integer", "cursor");
  return v;
}

nlohmann::json parse_body(const std::string& body) {
  if (body.empty()) return nlohmann::json::object();
  try {
    nlohmann::json j = nlohmann::json::parse(body);
    if (!j.is_object()) throw ServiceError(400, "bad_request", "body must be an object");
    return j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ServiceError(400, "bad_request", std::string("malformed body: ") + e.what());
  }
}

double number_field(const nlohmann::json& j, const char* name) {
  if (!j.contains(name) || !j[name].is_number())
    throw ServiceError(400, "bad_request", std::string(name) + " must be a number", name);
  return j[name].get<double>();
}

HttpReply json_reply(int status, const nlohmann::json& j) {
  return {status, "application/json", j.dump(), {}};
}

HttpReply route(SessionManager& m, const std::string& method, const Target& t,
                const std::string& body) {
  const auto& p = t.parts;
  if (p.empty() || p[0] != "sessions") throw ServiceError(404, "not_found", "no such route");
  const auto wrong_method = [&] {
    return ServiceError(405, "method_not_allowed", method + " is not supported here");
  };

  if (p.size() == 1) {
    if (method == "GET") return json_reply(200, {{"sessions", m.ids()}});
    if (method != "POST") throw wrong_method();
    const nlohmann::json j = parse_body(body);
    InteractionMode mode = InteractionMode::NRS;
    if (j.contains("mode")) {
      try {
        mode = parse_mode(j.at("mode").get<std::string>());
      } catch (const std::exception& e) {
        throw ServiceError(400, "bad_request", e.what(), "mode");
      }
    }
    std::uint64_t seed = 0;
    if (j.contains("seed")) {
      if (!j["seed"].is_number_unsigned())
        throw ServiceError(400, "bad_request", "seed must be a nonnegative integer", "seed");
      seed = j["seed"].get<std::uint64_t>();
    }
    const SessionHandle h =
        m.create(j.contains("scenario") ? j["scenario"] : nlohmann::json(), mode, seed);
    nlohmann::json out = to_json(h);
    out["state"] = m.state(h.id);
    return json_reply(201, out);
  }

  const std::string& id = p[1];
  if (p.size() == 2) {
    if (method == "DELETE") {
      m.remove(id);
      return {204, "application/json", "", {}};
    }
    if (method == "GET") return json_reply(200, m.state(id));
    throw wrong_method();
  }

  const std::string& leaf = p[2];
  if (p.size() == 3 && leaf == "commands") {
    if (method != "POST") throw wrong_method();
    const nlohmann::json j = parse_body(body);
    if (!j.contains("command") || !j["command"].is_string())
      throw ServiceError(400, "bad_request", "command must be a string", "command");
    Command cmd{};
    try {
      cmd = parse_command(j["command"].get<std::string>());
    } catch (const Error& e) {
      throw ServiceError(400, "bad_request", e.what(), "command");
    }
    return json_reply(200, m.command(id, cmd));
  }
  if (p.size() == 3 && leaf == "spots") {
    if (method != "POST") throw wrong_method();
    const nlohmann::json j = parse_body(body);
    const Point2 spot{number_field(j, "x"), number_field(j, "y")};
    std::optional<double> client_time;
    if (j.contains("client_time") && j["client_time"].is_number())
      client_time = j["client_time"].get<double>();
    return json_reply(200, m.spot(id, spot, client_time));
  }
  if (p.size() == 3 && leaf == "state") {
    if (method != "GET") throw wrong_method();
    return json_reply(200, m.state(id));
  }
  if (p.size() == 3 && leaf == "events") {
    if (method != "GET") throw wrong_method();
    std::string lines;
    for (const Event& e : m.events_after(id, parse_cursor(t))) lines += to_line(e) + "\n";
    return {200, "application/x-ndjson", std::move(lines), {}};
  }
  if (p.size() == 4 && leaf == "maps") {
    if (method != "GET") throw wrong_method();
    HttpReply reply{200, "image/x-portable-graymap", m.map_pgm(id, p[3]), {}};
    const nlohmann::json meta = m.state(id).at("map");
    reply.headers = {{"X-Map-Resolution", meta.at("resolution").dump()},
                     {"X-Map-Origin", meta.at("origin").dump()}};
    return reply;
  }
  throw ServiceError(404, "not_found", "no such route");
}

}  // namespace

HttpReply handle_http(SessionManager& manager, const std::string& method,
                      const std::string& target, const std::string& body) {
  try {
    return route(manager, method, parse_target(target), body);
  } catch (const ServiceError& e) {
    return json_reply(e.status(), e.to_json());
  } catch (const Error& e) {
    return json_reply(400, {{"code", "rejected"}, {"message", e.what()}});
  } catch (const nlohmann::json::exception& e) {
    return json_reply(400, {{"code", "bad_request"}, {"message", e.what()}});
  }
}

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

constexpr auto kEventPoll = std::chrono::milliseconds(10);

/// Streams one session's events to a WebSocket client, starting after `cursor`.
class EventStream : public std::enable_shared_from_this<EventStream> {
 public:
  EventStream(tcp::socket&& socket, SessionManager& manager, std::string id, std::uint64_t cursor)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        manager_(manager),
        id_(std::move(id)),
        cursor_(cursor) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->ws_.text(true);
      self->read();
      self->poll();
    });
  }

 private:
  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->done_ = true;
        self->timer_.cancel();
        return;
      }
      self->in_.clear();
      self->read();
    });
  }

  void poll() {
    if (done_) return;
    try {
      for (const Event& e : manager_.events_after(id_, cursor_)) {
        queue_.push_back(to_line(e));
        cursor_ = e.seq;
      }
    } catch (const ServiceError&) {
      finish();
      return;
    }
    write();
    timer_.expires_after(kEventPoll);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->poll();
    });
  }

  void write() {
    if (writing_ || queue_.empty() || done_) return;
    writing_ = true;
    ws_.async_write(net::buffer(queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->writing_ = false;
                      if (ec) {
                        self->done_ = true;
                        self->timer_.cancel();
                        return;
                      }
                      self->queue_.pop_front();
                      if (self->closing_ && self->queue_.empty()) {
                        self->finish();
                        return;
                      }
                      self->write();
                    });
  }

  /// Session gone: flush what is queued, then close.
  void finish() {
    closing_ = true;
    if (writing_ || !queue_.empty()) {
      write();
      return;
    }
    done_ = true;
    timer_.cancel();
    ws_.async_close(websocket::close_code::going_away,
                    [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  SessionManager& manager_;
  std::string id_;
  std::uint64_t cursor_;
  beast::flat_buffer in_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  bool closing_ = false;
  bool done_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, SessionManager& manager)
      : stream_(std::move(socket)), manager_(manager) {}

  void run() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read(); });
  }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) {
                         self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                         return;
                       }
                       self->respond();
                     });
  }

  void respond() {
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_)) {
      const Target t = parse_target(target);
      try {
        if (t.parts.size() != 3 || t.parts[0] != "sessions" || t.parts[2] != "events")
          throw ServiceError(404, "not_found", "no such stream");
        const std::uint64_t cursor = parse_cursor(t);
        (void)manager_.state(t.parts[1]);
        stream_.expires_never();
        std::make_shared<EventStream>(stream_.release_socket(), manager_, t.parts[1], cursor)
            ->run(std::move(req_));
        return;
      } catch (const ServiceError& e) {
        send({e.status(), "application/json", e.to_json().dump(), {}});
        return;
      }
    }
    send(handle_http(manager_, std::string(req_.method_string()), target, req_.body()));
  }

  void send(const HttpReply& reply) {
    auto res = std::make_shared<http::response<http::string_body>>(
        static_cast<http::status>(reply.status), req_.version());
    res->set(http::field::server, "borderforge");
    res->set(http::field::content_type, reply.content_type);
    for (const auto& [k, v] : reply.headers) res->set(k, v);
    res->keep_alive(req_.keep_alive());
    res->body() = reply.body;
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (!res->keep_alive()) {
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
                          return;
                        }
                        self->read();
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  SessionManager& manager_;
};

}  // namespace

struct Server::Impl {
  Impl(SessionManager& m, const std::string& address, unsigned short port, unsigned n)
      : manager(m), threads(std::max(1u, n)), ioc(static_cast<int>(threads)), acceptor(ioc) {
    const tcp::endpoint endpoint(net::ip::make_address(address), port);
    acceptor.open(endpoint.protocol());
    acceptor.set_option(net::socket_base::reuse_address(true));
    acceptor.bind(endpoint);
    acceptor.listen(net::socket_base::max_listen_connections);
  }

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConnection>(std::move(socket), manager)->run();
      accept();
    });
  }

  SessionManager& manager;
  unsigned threads;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::vector<std::thread> workers;
  std::mutex mutex;
  std::condition_variable stopped_cv;
  bool stopped = false;
};

Server::Server(SessionManager& manager, const std::string& address, unsigned short port,
               unsigned threads)
    : impl_(std::make_unique<Impl>(manager, address, port, threads)) {}

Server::~Server() { stop(); }

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::start() {
  impl_->accept();
  for (unsigned i = 0; i < impl_->threads; ++i)
    impl_->workers.emplace_back([this] { impl_->ioc.run(); });
}

void Server::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [this] { return impl_->stopped; });
}

void Server::stop() {
  {
    std::lock_guard lock(impl_->mutex);
    if (impl_->stopped) return;
    impl_->stopped = true;
  }
  impl_->ioc.stop();
  for (std::thread& t : impl_->workers)
    if (t.joinable()) t.join();
  impl_->workers.clear();
  impl_->stopped_cv.notify_all();
}

}  // namespace borderforge
