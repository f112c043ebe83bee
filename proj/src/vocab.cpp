#include "wah/vocab.hpp"

#include <algorithm>

namespace wah {
namespace {

using namespace flag;

constexpr std::array<ClassInfo, kNumClasses> kClasses = {{
    {"plate", grabbable, 0},
    {"fork", grabbable, 0},
    {"waterglass", grabbable, 0},
    {"wineglass", grabbable, 0},
    {"cupcake", grabbable, 0},
    {"pancake", grabbable, 0},
    {"poundcake", grabbable, 0},
    {"pudding", grabbable, 0},
    {"apple", grabbable, 0},
    {"juice", grabbable, 0},
    {"wine", grabbable, 0},
    {"coffeepot", grabbable, 0},
    {"book", grabbable, 0},
    {"remotecontrol", grabbable, 0},
    {"towel", grabbable, 0},
    {"cellphone", grabbable, 0},
    {"fridge", container | openable, 0},
    {"dishwasher", container | openable, 0},
    {"kitchencabinet", container | openable, 0},
    {"bathroomcabinet", container | openable, 0},
    {"microwave", container | openable, 0},
    {"dinnertable", surface, 12},
    {"coffeetable", surface, 8},
    {"kitchencounter", surface, 12},
    {"bookshelf", surface, 8},
    {"desk", surface, 6},
    {"nightstand", surface, 4},
    {"bed", surface | sittable, 6},
    {"sofa", sittable, 0},
    {"kitchen", room, 0},
    {"livingroom", room, 0},
    {"bedroom", room, 0},
    {"bathroom", room, 0},
    {"character", 0, 0},
}};

using P = Predicate;
using C = ObjectClass;
constexpr auto ON = PredRel::on;
constexpr auto IN = PredRel::in;

// Five activity sets; "pundcake" in the source table is normalized to poundcake.
constexpr std::array<Predicate, 31> kTaxonomy = {{
    // setup_table [0,4)
    P{ON, C::plate, C::dinnertable},
    P{ON, C::fork, C::dinnertable},
    P{ON, C::waterglass, C::dinnertable},
    P{ON, C::wineglass, C::dinnertable},
    // put_groceries [4,11)
    P{IN, C::cupcake, C::fridge},
    P{IN, C::pancake, C::fridge},
    P{IN, C::poundcake, C::fridge},
    P{IN, C::pudding, C::fridge},
    P{IN, C::apple, C::fridge},
    P{IN, C::juice, C::fridge},
    P{IN, C::wine, C::fridge},
    // prepare_meal [11,19)
    P{ON, C::coffeepot, C::dinnertable},
    P{ON, C::cupcake, C::dinnertable},
    P{ON, C::pancake, C::dinnertable},
    P{ON, C::poundcake, C::dinnertable},
    P{ON, C::pudding, C::dinnertable},
    P{ON, C::apple, C::dinnertable},
    P{ON, C::juice, C::dinnertable},
    P{ON, C::wine, C::dinnertable},
    // wash_dishes [19,23)
    P{IN, C::plate, C::dishwasher},
    P{IN, C::fork, C::dishwasher},
    P{IN, C::waterglass, C::dishwasher},
    P{IN, C::wineglass, C::dishwasher},
    // read_book [23,31)
    P{PredRel::hold, C::character, C::book},
    P{PredRel::sit, C::character, C::sofa},
    P{ON, C::cupcake, C::coffeetable},
    P{ON, C::pudding, C::coffeetable},
    P{ON, C::apple, C::coffeetable},
    P{ON, C::juice, C::coffeetable},
    P{ON, C::wine, C::coffeetable},
}};

constexpr std::array<std::pair<std::size_t, std::size_t>, 5> kSetRanges = {{{0, 4}, {4, 11}, {11, 19}, {19, 23}, {23, 31}}};

}  // namespace

const ClassInfo& class_info(ObjectClass c) { return kClasses.at(static_cast<std::size_t>(c)); }

std::string_view class_name(ObjectClass c) { return class_info(c).name; }

std::optional<ObjectClass> class_from_name(std::string_view name) {
  if (name == "pundcake") name = "poundcake";
  for (std::size_t i = 0; i < kClasses.size(); ++i) {
    if (kClasses[i].name == name) return static_cast<ObjectClass>(i);
  }
  return std::nullopt;
}

ObjectClass class_from_name_or_throw(std::string_view name) {
  auto c = class_from_name(name);
  if (!c) throw ParseError("unknown object class '" + std::string(name) + "'");
  return *c;
}

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::none:
      return "NONE";
    case Relation::inside:
      return "INSIDE";
    case Relation::on:
      return "ON";
    case Relation::hold:
      return "HOLD";
    case Relation::sit:
      return "SIT";
    case Relation::close:
      return "CLOSE";
  }
  return "NONE";
}

Relation relation_from_name(std::string_view name) {
  for (auto r : {Relation::none, Relation::inside, Relation::on, Relation::hold, Relation::sit, Relation::close}) {
    if (relation_name(r) == name) return r;
  }
  throw ParseError("unknown relation '" + std::string(name) + "'");
}

std::string_view pred_rel_name(PredRel r) {
  switch (r) {
    case PredRel::on:
      return "ON";
    case PredRel::in:
      return "IN";
    case PredRel::hold:
      return "HOLD";
    case PredRel::sit:
      return "SIT";
  }
  return "ON";
}

std::string to_string(const Predicate& p) {
  std::string s(pred_rel_name(p.relation));
  s += '(';
  s += class_name(p.subject);
  s += ',';
  s += class_name(p.target);
  s += ')';
  return s;
}

Predicate parse_predicate(std::string_view text) {
  auto open = text.find('(');
  auto comma = text.find(',');
  auto close = text.find(')');
  if (open == std::string_view::npos || comma == std::string_view::npos || close == std::string_view::npos ||
      !(open < comma && comma < close)) {
    throw ParseError("malformed predicate '" + std::string(text) + "'");
  }
  auto rel = text.substr(0, open);
  auto subj = text.substr(open + 1, comma - open - 1);
  auto targ = text.substr(comma + 1, close - comma - 1);
  Predicate p{};
  if (rel == "ON") {
    p.relation = PredRel::on;
  } else if (rel == "IN") {
    p.relation = PredRel::in;
  } else if (rel == "HOLD") {
    p.relation = PredRel::hold;
  } else if (rel == "SIT") {
    p.relation = PredRel::sit;
  } else {
    throw ParseError("unknown predicate relation '" + std::string(rel) + "'");
  }
  // The table writes the acting agent as "Alice"; the class is character.
  if (subj == "Alice") subj = "character";
  p.subject = class_from_name_or_throw(subj);
  p.target = class_from_name_or_throw(targ);
  if (!in_taxonomy(p)) throw ParseError("predicate '" + std::string(text) + "' is not in the taxonomy");
  return p;
}

std::string_view activity_name(ActivitySet a) {
  switch (a) {
    case ActivitySet::setup_table:
      return "setup_table";
    case ActivitySet::put_groceries:
      return "put_groceries";
    case ActivitySet::prepare_meal:
      return "prepare_meal";
    case ActivitySet::wash_dishes:
      return "wash_dishes";
    case ActivitySet::read_book:
      return "read_book";
  }
  return "setup_table";
}

ActivitySet activity_from_name(std::string_view name) {
  for (auto a : kActivitySets) {
    if (activity_name(a) == name) return a;
  }
  throw ParseError("unknown activity set '" + std::string(name) + "'");
}

std::span<const Predicate> taxonomy() { return kTaxonomy; }

std::span<const Predicate> predicate_set(ActivitySet a) {
  auto [b, e] = kSetRanges.at(static_cast<std::size_t>(a));
  return std::span<const Predicate>(kTaxonomy).subspan(b, e - b);
}

bool in_taxonomy(const Predicate& p) { return std::find(kTaxonomy.begin(), kTaxonomy.end(), p) != kTaxonomy.end(); }

std::optional<ActivitySet> activity_of(const Predicate& p) {
  for (auto a : kActivitySets) {
    auto set = predicate_set(a);
    if (std::find(set.begin(), set.end(), p) != set.end()) return a;
  }
  return std::nullopt;
}

}  // namespace wah
