#pragma once

#include <chrono>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "fusegraph/engine.hpp"
#include "fusegraph/error.hpp"
#include "fusegraph/graph_io.hpp"
#include "fusegraph/retrieval.hpp"

namespace fusegraph {

/// Today's date in UTC as YYYY-MM-DD.
inline std::string today_utc() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
  return buf;
}

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownNode:
    case ErrorCode::UnknownEndpoint: return 404;
    case ErrorCode::DuplicateId:
    case ErrorCode::DuplicateEdge: return 409;
    case ErrorCode::Busy:
    case ErrorCode::IndexNotBuilt: return 503;
    case ErrorCode::RemoteUnavailable: return 502;
    case ErrorCode::SnapshotCorrupt:
    case ErrorCode::BindFailure: return 500;
    default: return 400;
  }
}

inline std::string error_document(std::string_view code, std::string_view message) {
  nlohmann::ordered_json j;
  j["error"] = {{"code", code}, {"message", message}};
  return j.dump();
}

/// Bounded FIFO of mutation jobs drained by one worker thread. A full queue
/// rejects with Busy instead of blocking the caller.
class WriterQueue {
 public:
  explicit WriterQueue(std::size_t capacity) : capacity_(capacity), worker_([this] { run(); }) {}

  WriterQueue(const WriterQueue&) = delete;
  WriterQueue& operator=(const WriterQueue&) = delete;

  ~WriterQueue() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }

  template <typename F>
  auto submit(F&& job) -> std::future<decltype(job())> {
    using R = decltype(job());
    auto task = std::make_shared<std::packaged_task<R()>>(std::forward<F>(job));
    auto fut = task->get_future();
    {
      std::lock_guard lock(mu_);
      if (jobs_.size() >= capacity_) throw Error(ErrorCode::Busy, "mutation queue is full, retry later");
      jobs_.emplace_back([task] { (*task)(); });
    }
    cv_.notify_one();
    return fut;
  }

 private:
  void run() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      job();
    }
  }

  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> jobs_;
  bool stopping_ = false;
  std::thread worker_;
};

struct ServiceOptions {
  std::string reference_date;  // empty: today (UTC) per request
  std::string persist_path;    // empty: no snapshot writes
};

/// HTTP front end. Queries take a shared lock on the engine; mutations are
/// funneled through the WriterQueue and take the exclusive lock.
class Service {
 public:
  explicit Service(Engine engine, ServiceOptions options = {})
      : engine_(std::move(engine)),
        options_(std::move(options)),
        writer_(engine_.config().writer_queue_capacity) {
    // SO_REUSEADDR only: the library default of SO_REUSEPORT would let a
    // second server silently share a port that is already in use.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    routes();
  }

  ~Service() { stop(); }

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
      bound = server_.bind_to_any_port(host);
      if (bound < 0) throw Error(ErrorCode::BindFailure, host);
    } else if (!server_.bind_to_port(host, port)) {
      throw Error(ErrorCode::BindFailure, host + ":" + std::to_string(port));
    }
    return bound;
  }

  /// Blocks serving requests until stop().
  void serve() { server_.listen_after_bind(); }

  void start_background() {
    thread_ = std::thread([this] { serve(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  /// Runs f with shared access to the engine.
  template <typename F>
  auto read(F&& f) const {
    std::shared_lock lock(mu_);
    return f(engine_);
  }

 private:
  std::string reference_date(const nlohmann::json& body) const {
    if (body.contains("reference_date")) {
      if (!body["reference_date"].is_string())
        throw Error(ErrorCode::InvalidArgument, "reference_date must be a string");
      return body["reference_date"].get<std::string>();
    }
    return options_.reference_date.empty() ? today_utc() : options_.reference_date;
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    try {
      auto j = nlohmann::json::parse(req.body);
      if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
      return j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, std::string("malformed JSON: ") + e.what());
    }
  }

  static void handle(httplib::Response& res, const std::function<std::string()>& body) {
    try {
      res.set_content(body(), "application/json");
      res.status = 200;
    } catch (const Error& e) {
      res.status = http_status(e.code());
      res.set_content(error_document(e.code_name(), e.detail()), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(error_document("Internal", e.what()), "application/json");
    }
  }

  std::string mutate(std::vector<Node> nodes, std::vector<Edge> edges) {
    auto fut = writer_.submit([this, nodes = std::move(nodes), edges = std::move(edges)] {
      std::unique_lock lock(mu_);
      auto summary = engine_.update(nodes, edges);
      if (!options_.persist_path.empty()) engine_.save(options_.persist_path);
      return summary.to_json().dump();
    });
    return fut.get();
  }

  void routes() {
    server_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      handle(res, [&] {
        return read([](const Engine& e) {
          nlohmann::ordered_json j;
          j["status"] = "ok";
          j["nodes"] = e.graph().node_count();
          j["active_dim"] = e.index().built() ? e.index().active_dim() : e.config().projection_dim;
          return j.dump();
        });
      });
    });

    server_.Post("/v1/search", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const auto body = parse_body(req);
        if (body.contains("keywords")) {
          const auto intent = intent_from_json(body);
          return read([&](const Engine& e) { return to_programmable_format(e.search(intent)); });
        }
        if (!body.contains("text") || !body["text"].is_string())
          throw Error(ErrorCode::EmptyQuery, "expected \"text\" or an intent document");
        const auto text = body["text"].get<std::string>();
        const auto ref = reference_date(body);
        return read([&](const Engine& e) { return to_programmable_format(e.search_text(text, ref)); });
      });
    });

    server_.Post("/v1/intent", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        const auto body = parse_body(req);
        if (!body.contains("text") || !body["text"].is_string()) throw Error(ErrorCode::EmptyQuery, "missing text");
        const auto text = body["text"].get<std::string>();
        const auto ref = reference_date(body);
        auto outcome = read([&](const Engine& e) { return e.parse_intent(text, ref); });
        if (outcome.warning) res.set_header("X-Fusegraph-Warning", *outcome.warning);
        return to_json(outcome.intent).dump();
      });
    });

    server_.Post("/v1/nodes", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        Node node = node_from_json(parse_body(req));
        return mutate({std::move(node)}, {});
      });
    });

    server_.Post("/v1/edges", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&] {
        Edge edge = edge_from_json(parse_body(req));
        return mutate({}, {std::move(edge)});
      });
    });
  }

  Engine engine_;
  ServiceOptions options_;
  mutable std::shared_mutex mu_;
  WriterQueue writer_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace fusegraph
