// Closed object vocabulary, relations, and the goal predicate taxonomy.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wah {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

enum class ObjectClass : std::uint8_t {
  // grabbable
  plate,
  fork,
  waterglass,
  wineglass,
  cupcake,
  pancake,
  poundcake,
  pudding,
  apple,
  juice,
  wine,
  coffeepot,
  book,
  remotecontrol,
  towel,
  cellphone,
  // furniture
  fridge,
  dishwasher,
  kitchencabinet,
  bathroomcabinet,
  microwave,
  dinnertable,
  coffeetable,
  kitchencounter,
  bookshelf,
  desk,
  nightstand,
  bed,
  sofa,
  // rooms
  kitchen,
  livingroom,
  bedroom,
  bathroom,
  // agents
  character,
};

inline constexpr std::size_t kNumClasses = static_cast<std::size_t>(ObjectClass::character) + 1;

namespace flag {
inline constexpr std::uint8_t grabbable = 1U << 0;
inline constexpr std::uint8_t container = 1U << 1;
inline constexpr std::uint8_t surface = 1U << 2;
inline constexpr std::uint8_t sittable = 1U << 3;
inline constexpr std::uint8_t openable = 1U << 4;
inline constexpr std::uint8_t room = 1U << 5;
}  // namespace flag

struct ClassInfo {
  std::string_view name;
  std::uint8_t flags;
  int slots;  // surface capacity, 0 when not a surface
};

const ClassInfo& class_info(ObjectClass c);
std::string_view class_name(ObjectClass c);
std::optional<ObjectClass> class_from_name(std::string_view name);
ObjectClass class_from_name_or_throw(std::string_view name);

inline bool has_flag(ObjectClass c, std::uint8_t f) { return (class_info(c).flags & f) != 0; }
inline bool is_grabbable(ObjectClass c) { return has_flag(c, flag::grabbable); }
inline bool is_container(ObjectClass c) { return has_flag(c, flag::container); }
inline bool is_surface(ObjectClass c) { return has_flag(c, flag::surface); }
inline bool is_sittable(ObjectClass c) { return has_flag(c, flag::sittable); }
inline bool is_openable(ObjectClass c) { return has_flag(c, flag::openable); }
inline bool is_room(ObjectClass c) { return has_flag(c, flag::room); }
inline int surface_slots(ObjectClass c) { return class_info(c).slots; }

/// Relations stored in the scene graph.
enum class Relation : std::uint8_t { none, inside, on, hold, sit, close };
std::string_view relation_name(Relation r);
Relation relation_from_name(std::string_view name);

/// Relations usable in goal predicates.
enum class PredRel : std::uint8_t { on, in, hold, sit };
std::string_view pred_rel_name(PredRel r);

struct Predicate {
  PredRel relation;
  ObjectClass subject;
  ObjectClass target;

  friend auto operator<=>(const Predicate&, const Predicate&) = default;
};

/// Text form, e.g. "ON(plate,dinnertable)".
std::string to_string(const Predicate& p);
Predicate parse_predicate(std::string_view text);

enum class ActivitySet : std::uint8_t { setup_table, put_groceries, prepare_meal, wash_dishes, read_book };
inline constexpr std::array<ActivitySet, 5> kActivitySets = {ActivitySet::setup_table, ActivitySet::put_groceries,
                                                             ActivitySet::prepare_meal, ActivitySet::wash_dishes,
                                                             ActivitySet::read_book};
std::string_view activity_name(ActivitySet a);
ActivitySet activity_from_name(std::string_view name);

/// All predicate types, in table order (31 entries).
std::span<const Predicate> taxonomy();
std::span<const Predicate> predicate_set(ActivitySet a);
bool in_taxonomy(const Predicate& p);
std::optional<ActivitySet> activity_of(const Predicate& p);

}  // namespace wah
