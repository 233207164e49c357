#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace fairex {

// Attribute values are finite scalars; the map keeps names unique and in a
// canonical order for encoding.
using AttrValue = std::variant<std::int64_t, std::string, bool>;

struct AttributeSet {
    std::map<std::string, AttrValue> entries;
    auto operator<=>(const AttributeSet&) const = default;
};

// One atomic predicate of an audience criterion.
struct AtomEquals {
    std::string name;
    AttrValue value;
    auto operator<=>(const AtomEquals&) const = default;
};

struct AtomInRange {
    std::string name;
    std::int64_t lo = 0;
    std::int64_t hi = 0; // inclusive
    auto operator<=>(const AtomInRange&) const = default;
};

struct AtomMemberOf {
    std::string name;
    std::vector<AttrValue> values; // sorted, unique (canonical)
    auto operator<=>(const AtomMemberOf&) const = default;
};

using Atom = std::variant<AtomEquals, AtomInRange, AtomMemberOf>;

// Conjunction of atoms; the empty conjunction matches every attribute set.
struct Criterion {
    std::vector<Atom> atoms;
    auto operator<=>(const Criterion&) const = default;
};

// The audience-matching predicate: 1 iff every atom holds over s. An atom
// naming a missing attribute evaluates false, as does a type mismatch.
bool eval_criterion(const AttributeSet& s, const Criterion& b);

} // namespace fairex
