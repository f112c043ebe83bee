// Floorplans: rooms, doors, fixed furniture, placement priors, and door-graph navigation.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wah/vocab.hpp"

namespace wah {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
double distance(Vec2 a, Vec2 b);

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(Vec2 p, double eps = 1e-9) const {
    return p.x >= x0 - eps && p.x <= x1 + eps && p.y >= y0 - eps && p.y <= y1 + eps;
  }
  bool on_boundary(Vec2 p, double eps = 1e-6) const;
  Vec2 center() const { return {(x0 + x1) / 2, (y0 + y1) / 2}; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Door {
  int to_room = -1;
  Vec2 pos;
  friend bool operator==(const Door&, const Door&) = default;
};

struct Room {
  ObjectClass cls = ObjectClass::kitchen;
  Rect rect;
  std::vector<Door> doors;
  friend bool operator==(const Room&, const Room&) = default;
};

struct Furniture {
  ObjectClass cls = ObjectClass::kitchencounter;
  int room = 0;
  Vec2 pos;
  friend bool operator==(const Furniture&, const Furniture&) = default;
};

/// A placement candidate: a furniture index, or a room floor when `is_room`.
struct LocationRef {
  bool is_room = false;
  int index = 0;
  friend auto operator<=>(const LocationRef&, const LocationRef&) = default;
};

struct PriorEntry {
  LocationRef loc;
  double weight = 1.0;
  friend bool operator==(const PriorEntry&, const PriorEntry&) = default;
};

/// One waypoint of a navigation path; `room` is the room the walker is in after reaching it.
struct Waypoint {
  Vec2 pos;
  int room = 0;
};

struct Apartment {
  int id = 0;
  bool test_only = false;
  std::vector<Room> rooms;
  std::vector<Furniture> furniture;
  std::map<ObjectClass, std::vector<PriorEntry>> priors;

  friend bool operator==(const Apartment& a, const Apartment& b) {
    return a.id == b.id && a.test_only == b.test_only && a.rooms == b.rooms && a.furniture == b.furniture &&
           a.priors == b.priors;
  }

  /// Throws ParseError describing the first violated invariant.
  void validate() const;

  int room_at(Vec2 p) const;

  /// Shortest door-to-door path; the first waypoint is the first point after `from`.
  std::vector<Waypoint> path(Vec2 from, int from_room, Vec2 to, int to_room) const;
  double path_length(Vec2 from, int from_room, Vec2 to, int to_room) const;
};

/// Moves along the shortest path by at most `max_dist`; returns the new position and room.
Waypoint advance_towards(const Apartment& apt, Vec2 from, int from_room, Vec2 to, int to_room, double max_dist);

Apartment apartment_from_json(const nlohmann::json& doc);
nlohmann::json apartment_to_json(const Apartment& apt);
Apartment load_apartment(const std::string& path);
Apartment parse_apartment(const std::string& text);

/// Directory holding the bundled floorplans (configured at build time, overridable via WAH_DATA_DIR).
std::string default_apartment_dir();
std::shared_ptr<const Apartment> bundled_apartment(int id);

}  // namespace wah
