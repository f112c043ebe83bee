// Live episodes with a human controlling Alice: transport-independent session state and the network server.
#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "wah/bench.hpp"

namespace wah {

/// JSON-lines persistence under one data directory: traces/, sessions.jsonl, ratings.jsonl.
class SessionStore {
 public:
  explicit SessionStore(std::string dir);

  void save_trace(const std::string& session_id, const EpisodeTrace& trace);
  void append_record(const std::string& session_id, const MetricsRecord& rec, const std::string& baseline);
  void append_rating(const RatingRecord& r);
  std::vector<RatingRecord> ratings() const;
  /// Mean length of successful solo (baseline "none") sessions on the task, if any.
  std::optional<double> solo_length(int task_id) const;
  const std::string& dir() const { return dir_; }

 private:
  std::string dir_;
  mutable std::mutex mu_;
};

struct SessionOptions {
  int step_limit = kDefaultStepLimit;
  PlannerConfig planner;
  std::uint64_t seed = 0;
};

/// One human-paced episode. Every call is a message in, messages out; the caller serializes calls.
class Session {
 public:
  /// baseline is one of the benchmark baselines other than alice_alone, or "none" for a solo human.
  /// Throws Error for an unknown task or baseline.
  Session(const Dataset& ds, int task_id, const std::string& baseline, std::string id, SessionStore* store,
          SessionOptions opts = {});

  /// hello (goal, floorplan), observation, available_actions.
  std::vector<nlohmann::json> start();
  /// Handles action and rating messages; anything else yields an error message.
  std::vector<nlohmann::json> handle(const nlohmann::json& msg);
  /// Persists the trace as abandoned when the episode has not ended.
  void disconnect();

  bool ended() const { return ended_; }
  const EpisodeTrace& trace() const { return trace_; }
  const SceneGraph& scene() const { return scene_; }
  const std::string& id() const { return id_; }
  const std::vector<Action>& available() const { return available_; }

 private:
  std::vector<nlohmann::json> observe_messages();
  std::vector<nlohmann::json> on_action(const nlohmann::json& msg);
  std::vector<nlohmann::json> on_rating(const nlohmann::json& msg);
  std::vector<nlohmann::json> finish(EpisodeStatus status);

  const TaskInstance task_;
  std::string baseline_;
  std::string id_;
  SessionStore* store_;
  SessionOptions opts_;
  SceneGraph scene_;
  NodeId alice_ = kNoNode;
  BobSetup bob_;
  std::vector<Action> available_;
  EpisodeTrace trace_;
  bool ended_ = false;
  bool rated_ = false;
};

nlohmann::json error_message(const std::string& text, int tick = -1);

struct ServerOptions {
  int port = 8080;  // 0 picks a free port
  std::string data_dir = "sessions";
  std::string dataset_dir;
  std::string static_dir;
  SessionOptions session;
};

/// HTTP + WebSocket server: /ws session channel, GET /tasks, GET /ratings, static files otherwise.
/// One thread per connection.
class Server {
 public:
  explicit Server(ServerOptions opts);
  ~Server();
  /// Binds and starts accepting in the background; returns the bound port.
  int start();
  void stop();
  /// start() then block until stop().
  void run();

 private:
  void accept_loop();
  void serve_connection(void* socket);

  ServerOptions opts_;
  Dataset dataset_;
  SessionStore store_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::atomic<bool> stopping_{false};
  std::atomic<long> next_session_{0};
  std::thread acceptor_;
};

}  // namespace wah
