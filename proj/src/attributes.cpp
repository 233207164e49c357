#include "fairex/attributes.hpp"

#include <algorithm>

namespace fairex {

namespace {

struct AtomEval {
    const AttributeSet& s;

    const AttrValue* lookup(const std::string& name) const {
        auto it = s.entries.find(name);
        return it == s.entries.end() ? nullptr : &it->second;
    }

    bool operator()(const AtomEquals& a) const {
        const AttrValue* v = lookup(a.name);
        return v != nullptr && *v == a.value;
    }

    bool operator()(const AtomInRange& a) const {
        const AttrValue* v = lookup(a.name);
        if (v == nullptr)
            return false;
        const std::int64_t* n = std::get_if<std::int64_t>(v);
        return n != nullptr && a.lo <= *n && *n <= a.hi;
    }

    bool operator()(const AtomMemberOf& a) const {
        const AttrValue* v = lookup(a.name);
        if (v == nullptr)
            return false;
        return std::find(a.values.begin(), a.values.end(), *v) != a.values.end();
    }
};

} // namespace

bool eval_criterion(const AttributeSet& s, const Criterion& b) {
    AtomEval ev{s};
    for (const Atom& atom : b.atoms) {
        if (!std::visit(ev, atom))
            return false;
    }
    return true;
}

} // namespace fairex
