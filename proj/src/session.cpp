#include "wah/session.hpp"

#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace wah {

namespace fs = std::filesystem;
using json = nlohmann::json;

SessionStore::SessionStore(std::string dir) : dir_(std::move(dir)) { fs::create_directories(fs::path(dir_) / "traces"); }

void SessionStore::save_trace(const std::string& session_id, const EpisodeTrace& trace) {
  std::lock_guard lk(mu_);
  wah::save_trace((fs::path(dir_) / "traces" / (session_id + ".jsonl")).string(), trace);
}

void SessionStore::append_record(const std::string& session_id, const MetricsRecord& rec, const std::string& baseline) {
  std::lock_guard lk(mu_);
  std::ofstream out(fs::path(dir_) / "sessions.jsonl", std::ios::app);
  out << json{{"session", session_id}, {"baseline", baseline}, {"record", record_to_json(rec)}}.dump() << '\n';
}

void SessionStore::append_rating(const RatingRecord& r) {
  std::lock_guard lk(mu_);
  std::ofstream out(fs::path(dir_) / "ratings.jsonl", std::ios::app);
  out << rating_to_json(r).dump() << '\n';
}

std::vector<RatingRecord> SessionStore::ratings() const {
  std::lock_guard lk(mu_);
  std::vector<RatingRecord> out;
  std::ifstream in(fs::path(dir_) / "ratings.jsonl");
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(rating_from_json(json::parse(line)));
  }
  return out;
}

std::optional<double> SessionStore::solo_length(int task_id) const {
  std::lock_guard lk(mu_);
  std::ifstream in(fs::path(dir_) / "sessions.jsonl");
  std::string line;
  double sum = 0;
  int n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    if (j.value("baseline", "") != "none") continue;
    auto r = record_from_json(j.at("record"));
    if (r.task_id == task_id && r.success) {
      sum += r.T;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

json error_message(const std::string& text, int tick) {
  json j{{"type", "error"}, {"message", text}};
  if (tick >= 0) j["tick"] = tick;
  return j;
}

static TaskInstance find_task(const Dataset& ds, int id) { return ds.task(id); }

Session::Session(const Dataset& ds, int task_id, const std::string& baseline, std::string id, SessionStore* store,
                 SessionOptions opts)
    : task_(find_task(ds, task_id)), baseline_(baseline), id_(std::move(id)), store_(store), opts_(std::move(opts)) {
  if (baseline_ != "none" && (baseline_ == "alice_alone" || !is_baseline(baseline_)))
    throw Error("unknown baseline '" + baseline_ + "'");
  scene_ = help_scene(task_);
  alice_ = alice_id(scene_);
  if (baseline_ != "none") {
    std::optional<Demonstration> demo;
    if (baseline_ == "hp_inferred") demo = load_demonstration((fs::path(ds.dir) / task_.demo_file).string());
    bob_ = make_bob(baseline_, task_, scene_, demo ? &*demo : nullptr, opts_.planner, derive_seed(opts_.seed, 0xb0b));
  }
  trace_.initial = scene_;
  trace_.goal = task_.goal;
  trace_.step_limit = opts_.step_limit;
  trace_.engine = opts_.planner.engine;
  trace_.header_extra = {{"session", id_}, {"task", task_.id}, {"baseline", baseline_}};
}

std::vector<json> Session::observe_messages() {
  const auto obs = visible_set(scene_, alice_, opts_.planner.engine.interaction_radius);
  available_ = legal_actions(scene_, alice_, opts_.planner.engine, true);
  json progress = json::array();
  for (const auto& [p, need] : task_.goal.counts)
    progress.push_back({{"predicate", to_string(p)}, {"need", need}, {"have", std::min(eval_predicate(scene_, p), need)}});
  json acts = json::array();
  for (const auto& a : available_) acts.push_back(action_to_json(a));
  return {json{{"type", "observation"}, {"tick", scene_.tick}, {"observation", observation_to_json(obs)}, {"goal_progress", progress}},
          json{{"type", "available_actions"}, {"tick", scene_.tick}, {"actions", acts}}};
}

std::vector<json> Session::start() {
  json goal = json::array();
  for (const auto& [p, need] : task_.goal.counts) goal.push_back({{"predicate", to_string(p)}, {"count", need}});
  json hello{{"type", "hello"},
             {"session", id_},
             {"task", task_.id},
             {"baseline", baseline_},
             {"activity", activity_name(task_.activity)},
             {"goal", goal},
             {"goal_text", goal_text(task_.goal)},
             {"apartment", apartment_to_json(*scene_.apartment)},
             {"alice", alice_},
             {"step_limit", opts_.step_limit}};
  if (auto b = bob_id(scene_); b && bob_.policy) hello["bob"] = *b;
  std::vector<json> out{hello};
  if (goal_satisfied(scene_, task_.goal)) return finish(EpisodeStatus::success);
  auto obs = observe_messages();
  out.insert(out.end(), obs.begin(), obs.end());
  return out;
}

std::vector<json> Session::handle(const json& msg) {
  const std::string type = msg.is_object() ? msg.value("type", "") : "";
  try {
    if (type == "action") return on_action(msg);
    if (type == "rating") return on_rating(msg);
  } catch (const std::exception& e) {
    return {error_message(e.what(), scene_.tick)};
  }
  return {error_message("unexpected message type '" + type + "'", scene_.tick)};
}

std::vector<json> Session::on_action(const json& msg) {
  if (ended_) return {error_message("episode has ended", scene_.tick)};
  if (msg.contains("tick") && msg.at("tick").get<int>() != scene_.tick)
    return {error_message(fmt::format("stale action for tick {}", msg.at("tick").get<int>()), scene_.tick)};
  Action human = action_from_json(msg.at("action"));
  if (human.actor != alice_) return {error_message("actions may only control Alice", scene_.tick)};

  TickRecord rec;
  rec.tick = scene_.tick;
  rec.actions[alice_] = human;
  if (bob_.policy) {
    const NodeId b = *bob_id(scene_);
    auto obs = bob_.participant.full_observability ? full_observation(scene_, b, opts_.planner.engine.interaction_radius)
                                                   : visible_set(scene_, b, opts_.planner.engine.interaction_radius);
    if (bob_.participant.wants_available) obs.available = legal_actions(scene_, b, opts_.planner.engine);
    try {
      Action a = bob_.policy->act(obs);
      rec.actions[b] = a.actor == b ? a : Action::noop(b);
    } catch (const std::exception& e) {
      spdlog::error("session {}: Bob failed at tick {}: {}", id_, scene_.tick, e.what());
      rec.actions[b] = Action::noop(b);
    }
  }
  rec.events = step(scene_, rec.actions, opts_.planner.engine);
  rec.hash = scene_.hash();

  json result{{"type", "tick_result"}, {"tick", rec.tick}};
  for (const auto& ev : rec.events) {
    if (ev.actor != alice_) continue;
    result["outcome"] = ev.ok() ? std::string("ok") : std::string(fail_reason_name(ev.reason));
    result["event"] = tick_event_to_json(ev);
  }
  trace_.ticks.push_back(std::move(rec));

  std::vector<json> out{result};
  if (goal_satisfied(scene_, task_.goal)) {
    auto end = finish(EpisodeStatus::success);
    out.insert(out.end(), end.begin(), end.end());
  } else if (scene_.tick >= opts_.step_limit) {
    auto end = finish(EpisodeStatus::timeout);
    out.insert(out.end(), end.begin(), end.end());
  } else {
    auto obs = observe_messages();
    out.insert(out.end(), obs.begin(), obs.end());
  }
  return out;
}

std::vector<json> Session::finish(EpisodeStatus status) {
  ended_ = true;
  available_.clear();
  trace_.status = status;
  trace_.end_tick = scene_.tick;
  trace_.final_scene = scene_;

  int L = kDefaultStepLimit;
  if (store_) {
    if (auto solo = store_->solo_length(task_.id)) L = static_cast<int>(std::lround(*solo));
  }
  if (baseline_ == "none") L = trace_.length();
  MetricsRecord rec = compute_metrics(trace_, L);
  rec.task_id = task_.id;
  rec.baseline = baseline_;
  if (bob_.policy) rec.undo_events = static_cast<int>(detect_conflicts(trace_, task_.goal, bob_.goal).events.size());
  if (store_) {
    store_->save_trace(id_, trace_);
    store_->append_record(id_, rec, baseline_);
  }
  return {json{{"type", "episode_end"},
               {"tick", scene_.tick},
               {"status", episode_status_name(status)},
               {"T", trace_.length()},
               {"trace_hash", fmt::format("{:016x}", scene_.hash())},
               {"record", record_to_json(rec)},
               {"rate", baseline_ != "none"}}};
}

std::vector<json> Session::on_rating(const json& msg) {
  if (!ended_) return {error_message("ratings are accepted only after the episode ends", scene_.tick)};
  if (baseline_ == "none") return {error_message("solo episodes have no partner to rate", scene_.tick)};
  if (rated_) return {error_message("this session was already rated", scene_.tick)};
  json j = msg;
  j["session"] = id_;
  j["task"] = task_.id;
  j["baseline"] = baseline_;
  RatingRecord r = rating_from_json(j);
  if (store_) store_->append_rating(r);
  rated_ = true;
  return {json{{"type", "rating"}, {"status", "stored"}, {"rating", rating_to_json(r)}}};
}

void Session::disconnect() {
  if (ended_) return;
  ended_ = true;
  trace_.status = EpisodeStatus::abandoned;
  trace_.end_tick = scene_.tick;
  trace_.final_scene = scene_;
  trace_.diagnostic = "client disconnected";
  if (store_) store_->save_trace(id_, trace_);
}

}  // namespace wah
