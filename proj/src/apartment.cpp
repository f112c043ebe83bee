#include "wah/apartment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>

namespace wah {

using nlohmann::json;

double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool Rect::on_boundary(Vec2 p, double eps) const {
  if (!contains(p, eps)) return false;
  return std::abs(p.x - x0) <= eps || std::abs(p.x - x1) <= eps || std::abs(p.y - y0) <= eps ||
         std::abs(p.y - y1) <= eps;
}

namespace {

bool overlap(const Rect& a, const Rect& b) {
  double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return w > 1e-9 && h > 1e-9;
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

void Apartment::validate() const {
  if (id < 1 || id > 7) throw ParseError("apartment id must be in 1..7");
  if (rooms.empty()) throw ParseError("apartment has no rooms");
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    const auto& r = rooms[i];
    if (!is_room(r.cls)) throw ParseError("rooms[" + std::to_string(i) + "]: class is not a room");
    if (!(r.rect.x1 > r.rect.x0 && r.rect.y1 > r.rect.y0)) {
      throw ParseError("rooms[" + std::to_string(i) + "]: degenerate rect");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (overlap(r.rect, rooms[j].rect)) {
        throw ParseError("rooms overlap: rooms[" + std::to_string(j) + "] and rooms[" + std::to_string(i) + "]");
      }
    }
  }
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    for (std::size_t d = 0; d < rooms[i].doors.size(); ++d) {
      const auto& door = rooms[i].doors[d];
      std::string where = "rooms[" + std::to_string(i) + "].doors[" + std::to_string(d) + "]";
      if (door.to_room < 0 || door.to_room >= static_cast<int>(rooms.size()) || door.to_room == static_cast<int>(i)) {
        throw ParseError(where + ": invalid to_room");
      }
      const auto& other = rooms[door.to_room];
      if (!rooms[i].rect.on_boundary(door.pos) || !other.rect.on_boundary(door.pos)) {
        throw ParseError(where + ": door is not on the shared wall");
      }
      bool reciprocal = std::any_of(other.doors.begin(), other.doors.end(), [&](const Door& o) {
        return o.to_room == static_cast<int>(i) && distance(o.pos, door.pos) < 1e-6;
      });
      if (!reciprocal) throw ParseError(where + ": door has no matching door in the other room");
    }
  }
  for (std::size_t i = 0; i < furniture.size(); ++i) {
    const auto& f = furniture[i];
    std::string where = "furniture[" + std::to_string(i) + "]";
    if (is_room(f.cls) || is_grabbable(f.cls) || f.cls == ObjectClass::character) {
      throw ParseError(where + ": class '" + std::string(class_name(f.cls)) + "' is not furniture");
    }
    if (f.room < 0 || f.room >= static_cast<int>(rooms.size())) throw ParseError(where + ": invalid room");
    if (!rooms[f.room].rect.contains(f.pos)) throw ParseError(where + ": position outside its room");
  }
  for (const auto& [cls, entries] : priors) {
    std::string where = "priors." + std::string(class_name(cls));
    if (!is_grabbable(cls)) throw ParseError(where + ": class is not grabbable");
    if (entries.empty()) throw ParseError(where + ": empty candidate list");
    for (const auto& e : entries) {
      if (!(e.weight > 0)) throw ParseError(where + ": weights must be positive");
      if (e.loc.is_room) {
        if (e.loc.index < 0 || e.loc.index >= static_cast<int>(rooms.size())) {
          throw ParseError(where + ": invalid room ref");
        }
      } else {
        if (e.loc.index < 0 || e.loc.index >= static_cast<int>(furniture.size())) {
          throw ParseError(where + ": invalid furniture ref");
        }
        auto fc = furniture[e.loc.index].cls;
        if (!is_container(fc) && !is_surface(fc)) throw ParseError(where + ": location is neither container nor surface");
      }
    }
  }
}

int Apartment::room_at(Vec2 p) const {
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    if (rooms[i].rect.contains(p) && !rooms[i].rect.on_boundary(p)) return static_cast<int>(i);
  }
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    if (rooms[i].rect.contains(p)) return static_cast<int>(i);
  }
  return -1;
}

std::vector<Waypoint> Apartment::path(Vec2 from, int from_room, Vec2 to, int to_room) const {
  if (from_room == to_room) return {Waypoint{to, to_room}};
  // Dijkstra over (room, door) crossings. Node k = door k of the flattened door list,
  // reached while standing in rooms[door.room] and leading into door.to_room.
  struct Crossing {
    int room;
    int into;
    Vec2 pos;
  };
  std::vector<Crossing> cross;
  for (std::size_t r = 0; r < rooms.size(); ++r) {
    for (const auto& d : rooms[r].doors) cross.push_back({static_cast<int>(r), d.to_room, d.pos});
  }
  const std::size_t n = cross.size();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, kInf);
  std::vector<int> prev(n, -1);
  std::vector<char> done(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (cross[k].room == from_room) dist[k] = distance(from, cross[k].pos);
  }
  double best = kInf;
  int best_k = -1;
  for (;;) {
    int u = -1;
    for (std::size_t k = 0; k < n; ++k) {
      if (!done[k] && dist[k] < kInf && (u < 0 || dist[k] < dist[u])) u = static_cast<int>(k);
    }
    if (u < 0 || dist[u] >= best) break;
    done[u] = 1;
    int room = cross[u].into;
    if (room == to_room) {
      double total = dist[u] + distance(cross[u].pos, to);
      if (total < best) {
        best = total;
        best_k = u;
      }
      continue;
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (done[k] || cross[k].room != room) continue;
      double nd = dist[u] + distance(cross[u].pos, cross[k].pos);
      if (nd < dist[k]) {
        dist[k] = nd;
        prev[k] = u;
      }
    }
  }
  if (best_k < 0) return {};
  std::vector<Waypoint> out;
  out.push_back({to, to_room});
  for (int k = best_k; k >= 0; k = prev[k]) out.push_back({cross[k].pos, cross[k].into});
  std::reverse(out.begin(), out.end());
  return out;
}

double Apartment::path_length(Vec2 from, int from_room, Vec2 to, int to_room) const {
  auto wps = path(from, from_room, to, to_room);
  if (wps.empty()) return std::numeric_limits<double>::infinity();
  double len = 0;
  Vec2 cur = from;
  for (const auto& w : wps) {
    len += distance(cur, w.pos);
    cur = w.pos;
  }
  return len;
}

Waypoint advance_towards(const Apartment& apt, Vec2 from, int from_room, Vec2 to, int to_room, double max_dist) {
  auto wps = apt.path(from, from_room, to, to_room);
  Waypoint cur{from, from_room};
  double left = max_dist;
  for (const auto& w : wps) {
    double d = distance(cur.pos, w.pos);
    if (d <= left + 1e-12) {
      left -= d;
      cur = w;
      continue;
    }
    double t = left / d;
    cur.pos = cur.pos + (w.pos - cur.pos) * t;
    break;
  }
  return cur;
}

Apartment apartment_from_json(const json& doc) {
  if (doc.is_null() || (doc.is_object() && doc.empty())) throw ParseError("empty apartment document");
  if (!doc.is_object()) throw ParseError("apartment document must be an object");
  Apartment apt;
  apt.id = field<int>(doc, "id", "apartment");
  apt.test_only = doc.value("test_only", false);
  auto rooms = field<json>(doc, "rooms", "apartment");
  if (!rooms.is_array()) throw ParseError("apartment.rooms: expected array");
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    std::string where = "rooms[" + std::to_string(i) + "]";
    Room r;
    r.cls = class_from_name_or_throw(field<std::string>(rooms[i], "class", where));
    auto rect = field<std::vector<double>>(rooms[i], "rect", where);
    if (rect.size() != 4) throw ParseError(where + ".rect: expected [x0,y0,x1,y1]");
    r.rect = {rect[0], rect[1], rect[2], rect[3]};
    if (rooms[i].contains("doors")) {
      const auto& doors = rooms[i].at("doors");
      for (std::size_t d = 0; d < doors.size(); ++d) {
        std::string dw = where + ".doors[" + std::to_string(d) + "]";
        r.doors.push_back({field<int>(doors[d], "to_room", dw), {field<double>(doors[d], "x", dw), field<double>(doors[d], "y", dw)}});
      }
    }
    apt.rooms.push_back(std::move(r));
  }
  if (doc.contains("furniture")) {
    const auto& furn = doc.at("furniture");
    for (std::size_t i = 0; i < furn.size(); ++i) {
      std::string where = "furniture[" + std::to_string(i) + "]";
      Furniture f;
      f.cls = class_from_name_or_throw(field<std::string>(furn[i], "class", where));
      f.room = field<int>(furn[i], "room", where);
      f.pos = {field<double>(furn[i], "x", where), field<double>(furn[i], "y", where)};
      apt.furniture.push_back(f);
    }
  }
  if (doc.contains("priors")) {
    for (const auto& [name, entries] : doc.at("priors").items()) {
      std::string where = "priors." + name;
      auto cls = class_from_name_or_throw(name);
      std::vector<PriorEntry> list;
      for (const auto& e : entries) {
        PriorEntry pe;
        if (e.contains("furniture")) {
          pe.loc = {false, field<int>(e, "furniture", where)};
        } else if (e.contains("room")) {
          pe.loc = {true, field<int>(e, "room", where)};
        } else {
          throw ParseError(where + ": entry needs 'furniture' or 'room'");
        }
        pe.weight = field<double>(e, "weight", where);
        list.push_back(pe);
      }
      apt.priors[cls] = std::move(list);
    }
  }
  apt.validate();
  return apt;
}

json apartment_to_json(const Apartment& apt) {
  json doc;
  doc["id"] = apt.id;
  doc["test_only"] = apt.test_only;
  doc["rooms"] = json::array();
  for (const auto& r : apt.rooms) {
    json jr;
    jr["class"] = class_name(r.cls);
    jr["rect"] = {r.rect.x0, r.rect.y0, r.rect.x1, r.rect.y1};
    jr["doors"] = json::array();
    for (const auto& d : r.doors) jr["doors"].push_back({{"to_room", d.to_room}, {"x", d.pos.x}, {"y", d.pos.y}});
    doc["rooms"].push_back(jr);
  }
  doc["furniture"] = json::array();
  for (const auto& f : apt.furniture) {
    doc["furniture"].push_back({{"class", class_name(f.cls)}, {"room", f.room}, {"x", f.pos.x}, {"y", f.pos.y}});
  }
  doc["priors"] = json::object();
  for (const auto& [cls, entries] : apt.priors) {
    json list = json::array();
    for (const auto& e : entries) {
      json je;
      je[e.loc.is_room ? "room" : "furniture"] = e.loc.index;
      je["weight"] = e.weight;
      list.push_back(je);
    }
    doc["priors"][std::string(class_name(cls))] = list;
  }
  return doc;
}

Apartment parse_apartment(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("apartment document is not valid JSON: ") + e.what());
  }
  return apartment_from_json(doc);
}

Apartment load_apartment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open apartment file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_apartment(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string default_apartment_dir() {
  if (const char* env = std::getenv("WAH_DATA_DIR")) return std::string(env) + "/apartments";
#ifdef WAH_DATA_DIR
  return std::string(WAH_DATA_DIR) + "/apartments";
#else
  return "data/apartments";
#endif
}

std::shared_ptr<const Apartment> bundled_apartment(int id) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const Apartment>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(id);
  if (it != cache.end()) return it->second;
  auto apt = std::make_shared<const Apartment>(
      load_apartment(default_apartment_dir() + "/apartment_" + std::to_string(id) + ".json"));
  if (apt->id != id) throw ParseError("apartment file id mismatch for apartment " + std::to_string(id));
  cache[id] = apt;
  return apt;
}

}  // namespace wah
