#include "wah/episode.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace wah {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kStatusNames = {"success", "timeout", "aborted", "abandoned"};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) { return std::stoull(s, nullptr, 16); }

}  // namespace

std::string_view episode_status_name(EpisodeStatus s) { return kStatusNames.at(static_cast<std::size_t>(s)); }

EpisodeStatus episode_status_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kStatusNames.size(); ++i) {
    if (kStatusNames[i] == name) return static_cast<EpisodeStatus>(i);
  }
  throw ParseError("unknown episode status '" + std::string(name) + "'");
}

NodeId alice_id(const SceneGraph& scene) {
  for (const auto& a : scene.agents) {
    if (a.role == Role::alice) return a.id;
  }
  throw Error("scene has no Alice");
}

std::optional<NodeId> bob_id(const SceneGraph& scene) {
  for (const auto& a : scene.agents) {
    if (a.role == Role::bob) return a.id;
  }
  return std::nullopt;
}

namespace {

Observation observe(const SceneGraph& scene, NodeId id, const Participant& p, const EngineConfig& cfg) {
  auto obs = p.full_observability ? full_observation(scene, id, cfg.interaction_radius)
                                  : visible_set(scene, id, cfg.interaction_radius);
  if (p.wants_available) obs.available = legal_actions(scene, id, cfg);
  return obs;
}

Action query(Policy& policy, const Observation& obs) {
  Action a = policy.act(obs);
  if (a.actor != obs.observer) {
    throw Error(policy.name() + " returned an action for agent " + std::to_string(a.actor) + " instead of " +
                std::to_string(obs.observer));
  }
  return a;
}

}  // namespace

EpisodeTrace run_episode(SceneGraph scene, const GoalSpec& goal, const Participant& alice, const Participant* bob,
                         const EpisodeOptions& opts) {
  if (!alice.policy) throw Error("run_episode: Alice has no policy");
  EpisodeTrace trace;
  trace.initial = scene;
  trace.goal = goal;
  trace.step_limit = opts.step_limit;
  trace.engine = opts.engine;
  const NodeId a_id = alice_id(scene);
  const auto b_id = bob_id(scene);
  if (bob && bob->policy && !b_id) throw Error("run_episode: Bob policy given but scene has no Bob");
  const bool with_bob = bob && bob->policy && b_id;

  while (true) {
    if (goal_satisfied(scene, goal)) {
      trace.status = EpisodeStatus::success;
      break;
    }
    if (scene.tick >= opts.step_limit) {
      trace.status = EpisodeStatus::timeout;
      break;
    }
    TickRecord rec;
    rec.tick = scene.tick;
    if (opts.record_legal_counts) rec.legal_count = static_cast<int>(legal_actions(scene, a_id, opts.engine).size());
    try {
      auto obs_a = observe(scene, a_id, alice, opts.engine);
      if (alice.receives_partner_subgoal && with_bob) obs_a.partner_subgoal = bob->policy->current_subgoal();
      rec.actions[a_id] = query(*alice.policy, obs_a);
      if (with_bob) {
        auto obs_b = observe(scene, *b_id, *bob, opts.engine);
        if (bob->receives_partner_subgoal) obs_b.partner_subgoal = alice.policy->current_subgoal();
        rec.actions[*b_id] = query(*bob->policy, obs_b);
      }
    } catch (const std::exception& e) {
      trace.status = EpisodeStatus::aborted;
      trace.diagnostic = std::string("policy failure at tick ") + std::to_string(scene.tick) + ": " + e.what();
      break;
    }
    rec.events = step(scene, rec.actions, opts.engine);
    rec.hash = scene.hash();
    trace.ticks.push_back(std::move(rec));
  }
  trace.end_tick = scene.tick;
  trace.final_scene = std::move(scene);
  return trace;
}

void write_trace(std::ostream& out, const EpisodeTrace& trace, bool include_goal) {
  json header = trace.header_extra;
  header["type"] = "header";
  header["scene"] = scene_to_json(trace.initial);
  if (include_goal) header["goal"] = goal_to_json(trace.goal);
  header["step_limit"] = trace.step_limit;
  header["interaction_radius"] = trace.engine.interaction_radius;
  out << header.dump() << '\n';
  for (const auto& rec : trace.ticks) {
    json j{{"type", "tick"}, {"tick", rec.tick}, {"hash", hex64(rec.hash)}};
    j["actions"] = json::array();
    for (const auto& [id, a] : rec.actions) j["actions"].push_back(action_to_json(a));
    j["events"] = json::array();
    for (const auto& ev : rec.events) j["events"].push_back(tick_event_to_json(ev));
    if (rec.legal_count >= 0) j["legal"] = rec.legal_count;
    out << j.dump() << '\n';
  }
  json end{{"type", "end"}, {"status", episode_status_name(trace.status)}, {"tick", trace.end_tick}};
  if (!trace.diagnostic.empty()) end["diagnostic"] = trace.diagnostic;
  out << end.dump() << '\n';
}

EpisodeTrace read_trace(std::istream& in) {
  EpisodeTrace trace;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  bool have_end = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = json::parse(line);
      auto type = j.at("type").get<std::string>();
      if (type == "header") {
        trace.initial = scene_from_json(j.at("scene"));
        if (j.contains("goal")) trace.goal = goal_from_json(j.at("goal"));
        trace.step_limit = j.value("step_limit", kDefaultStepLimit);
        trace.engine.interaction_radius = j.value("interaction_radius", kDefaultInteractionRadius);
        for (const auto& [k, v] : j.items()) {
          if (k != "type" && k != "scene" && k != "goal" && k != "step_limit" &&
              k != "interaction_radius") trace.header_extra[k] = v;
        }
        have_header = true;
      } else if (type == "tick") {
        if (!have_header) throw ParseError("tick before header");
        TickRecord rec;
        rec.tick = j.at("tick").get<int>();
        rec.hash = parse_hex64(j.at("hash").get<std::string>());
        for (const auto& a : j.at("actions")) {
          auto act = action_from_json(a);
          rec.actions[act.actor] = act;
        }
        for (const auto& ev : j.at("events")) rec.events.push_back(tick_event_from_json(ev));
        rec.legal_count = j.value("legal", -1);
        trace.ticks.push_back(std::move(rec));
      } else if (type == "end") {
        trace.status = episode_status_from_name(j.at("status").get<std::string>());
        trace.end_tick = j.at("tick").get<int>();
        trace.diagnostic = j.value("diagnostic", std::string());
        have_end = true;
      } else {
        throw ParseError("unknown record type '" + type + "'");
      }
    } catch (const json::exception& e) {
      throw ParseError("trace line " + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError("trace has no header line");
  if (!have_end) {
    trace.status = EpisodeStatus::abandoned;
    trace.end_tick = trace.initial.tick + static_cast<int>(trace.ticks.size());
  }
  auto states = replay_states(trace);
  trace.final_scene = states.back();
  return trace;
}

void save_trace(const std::string& path, const EpisodeTrace& trace, bool include_goal) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file " + path);
  write_trace(out, trace, include_goal);
}

EpisodeTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file " + path);
  return read_trace(in);
}

std::vector<SceneGraph> replay_states(const EpisodeTrace& trace) {
  const auto& cfg = trace.engine;
  std::vector<SceneGraph> states;
  states.reserve(trace.ticks.size() + 1);
  SceneGraph s = trace.initial;
  states.push_back(s);
  for (const auto& rec : trace.ticks) {
    step(s, rec.actions, cfg);
    states.push_back(s);
  }
  return states;
}

std::optional<std::string> verify_replay(const EpisodeTrace& trace) {
  const auto& cfg = trace.engine;
  SceneGraph s = trace.initial;
  SceneGraph from_deltas = trace.initial;
  for (const auto& rec : trace.ticks) {
    if (rec.tick != s.tick) return "tick " + std::to_string(rec.tick) + ": expected tick " + std::to_string(s.tick);
    auto events = step(s, rec.actions, cfg);
    if (events != rec.events) return "tick " + std::to_string(rec.tick) + ": events differ";
    if (s.hash() != rec.hash) return "tick " + std::to_string(rec.tick) + ": state hash differs";
    for (const auto& ev : rec.events) apply_delta(from_deltas, ev.delta);
    ++from_deltas.tick;
    if (from_deltas.hash() != rec.hash) return "tick " + std::to_string(rec.tick) + ": delta replay diverges";
  }
  if (s.tick != trace.end_tick) return "end tick mismatch";
  if (trace.status == EpisodeStatus::success && !goal_satisfied(s, trace.goal)) return "success recorded but goal unmet";
  return std::nullopt;
}

ConflictReport detect_conflicts(const EpisodeTrace& trace, const GoalSpec& alice_goal, const GoalSpec& bob_goal) {
  ConflictReport report;
  const auto& scene = trace.initial;
  const NodeId a_id = alice_id(scene);
  const auto states = replay_states(trace);
  for (std::size_t k = 0; k < trace.ticks.size(); ++k) {
    const auto& rec = trace.ticks[k];
    const SceneGraph& before = states[k];
    for (const auto& ev : rec.events) {
      if (!ev.ok()) continue;
      const GoalSpec& victim_goal = ev.actor == a_id ? bob_goal : alice_goal;
      NodeId victim = ev.actor == a_id ? bob_id(scene).value_or(kNoNode) : a_id;
      for (const auto& c : ev.delta) {
        if (c.kind != Change::Kind::edge_removed) continue;
        const auto& e = c.edge;
        Predicate p;
        switch (e.relation) {
          case Relation::on:
            p = {PredRel::on, scene.node(e.from).cls, scene.node(e.to).cls};
            break;
          case Relation::inside:
            p = {PredRel::in, scene.node(e.from).cls, scene.node(e.to).cls};
            break;
          case Relation::hold:
            p = {PredRel::hold, ObjectClass::character, scene.node(e.to).cls};
            break;
          case Relation::sit:
            p = {PredRel::sit, ObjectClass::character, scene.node(e.to).cls};
            break;
          default:
            continue;
        }
        auto need = victim_goal.counts.find(p);
        if (need == victim_goal.counts.end()) continue;
        // a surplus instance beyond the required count does not contribute
        if (eval_predicate(before, p) > need->second) continue;
        if ((e.relation == Relation::hold || e.relation == Relation::sit) && e.from != victim) continue;
        report.events.push_back({rec.tick, ev.actor, victim, p, e.from, e.to});
      }
    }
  }
  return report;
}

}  // namespace wah
