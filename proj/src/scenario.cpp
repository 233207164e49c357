#include "fairex/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <vector>

#include "fairex/crypto.hpp"

namespace fairex {
namespace {

struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

struct Section {
    std::string kind;
    std::string arg;
    std::size_t line = 0;
    std::vector<Entry> entries;
};

struct Context {
    std::string origin;

    [[noreturn]] void parse_fail(std::size_t line, const std::string& msg) const {
        throw ParseError(origin + ":" + std::to_string(line) + ": " + msg);
    }
    [[noreturn]] void validate_fail(std::size_t line, const std::string& msg) const {
        throw ValidationError(origin + ":" + std::to_string(line) + ": " + msg);
    }
};

std::string trim(std::string_view s) {
    const char* ws = " \t\r";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

std::vector<Section> split_sections(const Context& ctx, const std::string& text) {
    std::vector<Section> sections;
    std::istringstream is(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(is, raw)) {
        ++lineno;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line[0] == '[') {
            if (line.back() != ']') ctx.parse_fail(lineno, "unterminated section header");
            std::string inside = trim(line.substr(1, line.size() - 2));
            if (inside.empty()) ctx.parse_fail(lineno, "empty section header");
            Section s;
            s.line = lineno;
            auto sp = inside.find_first_of(" \t");
            if (sp == std::string::npos) {
                s.kind = inside;
            } else {
                s.kind = inside.substr(0, sp);
                s.arg = trim(inside.substr(sp));
                if (s.arg.find_first_of(" \t") != std::string::npos)
                    ctx.parse_fail(lineno, "section name cannot contain whitespace");
            }
            sections.push_back(std::move(s));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) ctx.parse_fail(lineno, "expected key = value");
        if (sections.empty()) ctx.parse_fail(lineno, "entry before any section");
        Entry e;
        e.key = trim(line.substr(0, eq));
        e.value = trim(line.substr(eq + 1));
        e.line = lineno;
        if (e.key.empty()) ctx.parse_fail(lineno, "empty key");
        for (const Entry& prev : sections.back().entries)
            if (prev.key == e.key) ctx.parse_fail(lineno, "duplicate key: " + e.key);
        sections.back().entries.push_back(std::move(e));
    }
    return sections;
}

std::uint64_t parse_u64(const Context& ctx, const Entry& e) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || p != e.value.data() + e.value.size())
        ctx.parse_fail(e.line, e.key + ": expected an unsigned integer, got '" + e.value + "'");
    return v;
}

std::int64_t parse_i64(const Context& ctx, const Entry& e) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || p != e.value.data() + e.value.size())
        ctx.parse_fail(e.line, e.key + ": expected an integer, got '" + e.value + "'");
    return v;
}

bool parse_bool(const Context& ctx, const Entry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    ctx.parse_fail(e.line, e.key + ": expected true or false, got '" + e.value + "'");
}

Bytes parse_octets(const Context& ctx, std::size_t line, const std::string& s) {
    if (s.starts_with("utf8:")) return to_bytes(std::string_view(s).substr(5));
    if (s.starts_with("hex:")) {
        try {
            return hex_decode(std::string_view(s).substr(4));
        } catch (const std::invalid_argument& ex) {
            ctx.parse_fail(line, std::string("bad hex literal: ") + ex.what());
        }
    }
    ctx.parse_fail(line, "octet string must be utf8:... or hex:..., got '" + s + "'");
}

AttrValue parse_attr_value(const Context& ctx, std::size_t line, const std::string& s) {
    auto colon = s.find(':');
    if (colon == std::string::npos)
        ctx.parse_fail(line, "attribute value must be int:, str: or bool:, got '" + s + "'");
    std::string type = s.substr(0, colon);
    std::string rest = s.substr(colon + 1);
    if (type == "str") return rest;
    if (type == "bool") {
        if (rest == "true") return true;
        if (rest == "false") return false;
        ctx.parse_fail(line, "bad bool literal: '" + rest + "'");
    }
    if (type == "int") {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), v);
        if (ec != std::errc() || p != rest.data() + rest.size())
            ctx.parse_fail(line, "bad int literal: '" + rest + "'");
        return v;
    }
    ctx.parse_fail(line, "unknown attribute type: '" + type + "'");
}

std::vector<std::string> split_on(const std::string& s, const std::string& sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(trim(std::string_view(s).substr(start)));
            return parts;
        }
        parts.push_back(trim(std::string_view(s).substr(start, pos - start)));
        start = pos + sep.size();
    }
}

AttributeSet parse_attrs(const Context& ctx, const Entry& e) {
    AttributeSet out;
    if (e.value.empty()) return out;
    for (const std::string& item : split_on(e.value, ",")) {
        auto colon = item.find(':');
        if (colon == std::string::npos || colon == 0)
            ctx.parse_fail(e.line, "attrs entry must be name:type:value, got '" + item + "'");
        std::string name = trim(std::string_view(item).substr(0, colon));
        AttrValue value = parse_attr_value(ctx, e.line, trim(std::string_view(item).substr(colon + 1)));
        if (out.entries.contains(name)) ctx.parse_fail(e.line, "duplicate attribute: " + name);
        out.entries[name] = std::move(value);
    }
    return out;
}

Criterion parse_criterion(const Context& ctx, const Entry& e) {
    Criterion out;
    for (const std::string& atom : split_on(e.value, "&&")) {
        if (auto eq = atom.find(" == "); eq != std::string::npos) {
            std::string name = trim(std::string_view(atom).substr(0, eq));
            if (name.empty()) ctx.parse_fail(e.line, "criterion atom with empty name");
            out.atoms.push_back(
                AtomEquals{name, parse_attr_value(ctx, e.line, trim(std::string_view(atom).substr(eq + 4)))});
            continue;
        }
        auto in = atom.find(" in ");
        if (in == std::string::npos)
            ctx.parse_fail(e.line, "criterion atom must use == or in, got '" + atom + "'");
        std::string name = trim(std::string_view(atom).substr(0, in));
        if (name.empty()) ctx.parse_fail(e.line, "criterion atom with empty name");
        std::string rhs = trim(std::string_view(atom).substr(in + 4));
        if (rhs.starts_with("{")) {
            if (!rhs.ends_with("}")) ctx.parse_fail(e.line, "unterminated member set");
            AtomMemberOf mo{name, {}};
            for (const std::string& item : split_on(rhs.substr(1, rhs.size() - 2), ","))
                mo.values.push_back(parse_attr_value(ctx, e.line, item));
            if (mo.values.empty()) ctx.parse_fail(e.line, "empty member set");
            // member-of is a set; canonicalize so the wire encoding accepts it
            std::sort(mo.values.begin(), mo.values.end());
            mo.values.erase(std::unique(mo.values.begin(), mo.values.end()), mo.values.end());
            out.atoms.push_back(std::move(mo));
        } else {
            auto dots = rhs.find("..");
            if (dots == std::string::npos)
                ctx.parse_fail(e.line, "range must be lo..hi, got '" + rhs + "'");
            Entry lo{e.key, trim(std::string_view(rhs).substr(0, dots)), e.line};
            Entry hi{e.key, trim(std::string_view(rhs).substr(dots + 2)), e.line};
            out.atoms.push_back(AtomInRange{name, parse_i64(ctx, lo), parse_i64(ctx, hi)});
        }
    }
    return out;
}

std::array<std::uint8_t, 8> label_suffix(const std::string& label) {
    Digest d = hash(to_bytes(label));
    std::array<std::uint8_t, 8> out{};
    std::copy_n(d.bytes.begin(), out.size(), out.begin());
    return out;
}

Role parse_role(const Context& ctx, const Entry& e) {
    if (e.value == "notary") return Role::Notary;
    if (e.value == "seller") return Role::Seller;
    if (e.value == "buyer") return Role::Buyer;
    ctx.parse_fail(e.line, "role must be notary, seller or buyer, got '" + e.value + "'");
}

struct RawCert {
    std::string label, notary, seller;
    Bytes data;
    AttributeSet attrs;
    std::uint64_t at = 0;
    std::size_t line = 0;
};
struct RawOffer {
    std::string label, buyer;
    Criterion criterion;
    TokenCount amount = 1;
    std::uint64_t at = 0;
    std::size_t line = 0;
};
struct RawSell {
    std::string cert_label, offer_label, seller;
    std::optional<std::uint64_t> when;
    std::size_t line = 0;
};
struct RawCorrupt {
    std::string id, behavior;
    std::optional<Bytes> data;
    std::optional<std::uint64_t> count;
    std::optional<bool> then_correct;
    std::size_t line = 0;
};

} // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
    Context ctx{origin};
    Scenario sc;
    Setup& setup = sc.setup;
    setup.policy_name = "eager";

    bool seen_run = false, seen_seed = false;
    std::size_t run_line = 0;
    std::vector<RawCert> certs;
    std::vector<RawOffer> offers;
    std::vector<RawSell> sells;
    std::vector<RawCorrupt> corrupts;

    for (const Section& s : split_sections(ctx, text)) {
        if (s.kind == "run") {
            if (seen_run) ctx.parse_fail(s.line, "second [run] section");
            if (!s.arg.empty()) ctx.parse_fail(s.line, "[run] takes no name");
            seen_run = true;
            run_line = s.line;
            for (const Entry& e : s.entries) {
                if (e.key == "seed") {
                    setup.seed = parse_u64(ctx, e);
                    seen_seed = true;
                } else if (e.key == "step_budget") {
                    setup.step_budget = parse_u64(ctx, e);
                    sc.budget_explicit = true;
                } else if (e.key == "policy") {
                    setup.policy_name = e.value;
                } else if (e.key.starts_with("policy.")) {
                    setup.policy_params[e.key.substr(7)] = e.value;
                } else {
                    ctx.parse_fail(e.line, "unknown [run] key: " + e.key);
                }
            }
        } else if (s.kind == "party") {
            if (s.arg.empty()) ctx.parse_fail(s.line, "[party] needs a name");
            if (s.arg == kChainId) ctx.validate_fail(s.line, "the chain is not a party");
            PartySetup p;
            p.id = s.arg;
            bool seen_role = false;
            for (const Entry& e : s.entries) {
                if (e.key == "role") {
                    p.role = parse_role(ctx, e);
                    seen_role = true;
                } else if (e.key == "balance") {
                    p.balance = parse_i64(ctx, e);
                    if (p.balance < 0) ctx.validate_fail(e.line, "negative balance");
                } else {
                    ctx.parse_fail(e.line, "unknown [party] key: " + e.key);
                }
            }
            if (!seen_role) ctx.validate_fail(s.line, "party " + p.id + " has no role");
            for (const PartySetup& q : setup.parties)
                if (q.id == p.id) ctx.validate_fail(s.line, "duplicate party: " + p.id);
            setup.parties.push_back(std::move(p));
        } else if (s.kind == "certificate") {
            if (s.arg.empty()) ctx.parse_fail(s.line, "[certificate] needs a label");
            RawCert c;
            c.label = s.arg;
            c.line = s.line;
            for (const Entry& e : s.entries) {
                if (e.key == "notary") c.notary = e.value;
                else if (e.key == "seller") c.seller = e.value;
                else if (e.key == "data") c.data = parse_octets(ctx, e.line, e.value);
                else if (e.key == "attrs") c.attrs = parse_attrs(ctx, e);
                else if (e.key == "at") c.at = parse_u64(ctx, e);
                else ctx.parse_fail(e.line, "unknown [certificate] key: " + e.key);
            }
            if (c.notary.empty()) ctx.validate_fail(s.line, "certificate without a notary");
            if (c.seller.empty()) ctx.validate_fail(s.line, "certificate without a seller");
            for (const RawCert& prev : certs)
                if (prev.label == c.label) ctx.validate_fail(s.line, "duplicate certificate: " + c.label);
            certs.push_back(std::move(c));
        } else if (s.kind == "offer") {
            if (s.arg.empty()) ctx.parse_fail(s.line, "[offer] needs a label");
            RawOffer o;
            o.label = s.arg;
            o.line = s.line;
            for (const Entry& e : s.entries) {
                if (e.key == "buyer") o.buyer = e.value;
                else if (e.key == "criterion") o.criterion = parse_criterion(ctx, e);
                else if (e.key == "amount") o.amount = parse_u64(ctx, e);
                else if (e.key == "at") o.at = parse_u64(ctx, e);
                else ctx.parse_fail(e.line, "unknown [offer] key: " + e.key);
            }
            if (o.buyer.empty()) ctx.validate_fail(s.line, "offer without a buyer");
            for (const RawOffer& prev : offers)
                if (prev.label == o.label) ctx.validate_fail(s.line, "duplicate offer: " + o.label);
            offers.push_back(std::move(o));
        } else if (s.kind == "sell") {
            if (!s.arg.empty()) ctx.parse_fail(s.line, "[sell] takes no name");
            RawSell sl;
            sl.line = s.line;
            for (const Entry& e : s.entries) {
                if (e.key == "certificate") sl.cert_label = e.value;
                else if (e.key == "offer") sl.offer_label = e.value;
                else if (e.key == "seller") sl.seller = e.value;
                else if (e.key == "when") {
                    if (e.value != "ready") sl.when = parse_u64(ctx, e);
                } else ctx.parse_fail(e.line, "unknown [sell] key: " + e.key);
            }
            if (sl.cert_label.empty()) ctx.validate_fail(s.line, "sell without a certificate");
            if (sl.offer_label.empty()) ctx.validate_fail(s.line, "sell without an offer");
            sells.push_back(std::move(sl));
        } else if (s.kind == "corrupt") {
            if (s.arg.empty()) ctx.parse_fail(s.line, "[corrupt] needs a party");
            RawCorrupt c;
            c.id = s.arg;
            c.line = s.line;
            for (const Entry& e : s.entries) {
                if (e.key == "behavior") c.behavior = e.value;
                else if (e.key == "data") c.data = parse_octets(ctx, e.line, e.value);
                else if (e.key == "count") c.count = parse_u64(ctx, e);
                else if (e.key == "then_correct") c.then_correct = parse_bool(ctx, e);
                else ctx.parse_fail(e.line, "unknown [corrupt] key: " + e.key);
            }
            if (c.behavior.empty()) ctx.validate_fail(s.line, "corrupt section without a behavior");
            for (const RawCorrupt& prev : corrupts)
                if (prev.id == c.id) ctx.validate_fail(s.line, "party corrupted twice: " + c.id);
            corrupts.push_back(std::move(c));
        } else {
            ctx.parse_fail(s.line, "unknown section: " + s.kind);
        }
    }

    if (!seen_run) ctx.validate_fail(1, "missing [run] section");
    if (!seen_seed) ctx.validate_fail(run_line, "missing seed");
    if (setup.parties.empty()) ctx.validate_fail(run_line, "no parties declared");

    auto party = [&](const std::string& id) -> PartySetup* {
        for (PartySetup& p : setup.parties)
            if (p.id == id) return &p;
        return nullptr;
    };
    auto require_role = [&](const std::string& id, Role role, std::size_t line,
                            const std::string& what) {
        PartySetup* p = party(id);
        if (p == nullptr) ctx.validate_fail(line, what + " names unknown party: " + id);
        if (p->role != role)
            ctx.validate_fail(line, what + " names " + id + ", whose role is " +
                                        role_name(p->role) + ", not " + role_name(role));
    };

    for (const RawCert& c : certs) {
        require_role(c.notary, Role::Notary, c.line, "certificate " + c.label);
        require_role(c.seller, Role::Seller, c.line, "certificate " + c.label);
        SessionId sid{c.notary, label_suffix(c.label)};
        sc.certificates[c.label] = sid;
        setup.certifies.push_back({sid, c.seller, c.data, c.attrs, c.at});
    }
    for (const RawOffer& o : offers) {
        require_role(o.buyer, Role::Buyer, o.line, "offer " + o.label);
        OfferId bid{o.buyer, label_suffix(o.label)};
        sc.offers[o.label] = bid;
        setup.buys.push_back({bid, o.criterion, o.amount, o.at});
    }
    for (const RawSell& sl : sells) {
        auto cit = sc.certificates.find(sl.cert_label);
        if (cit == sc.certificates.end())
            ctx.validate_fail(sl.line, "sell names unknown certificate: " + sl.cert_label);
        auto oit = sc.offers.find(sl.offer_label);
        if (oit == sc.offers.end())
            ctx.validate_fail(sl.line, "sell names unknown offer: " + sl.offer_label);
        std::string seller = sl.seller;
        if (seller.empty()) {
            for (const RawCert& c : certs)
                if (c.label == sl.cert_label) seller = c.seller;
        } else {
            require_role(seller, Role::Seller, sl.line, "sell");
        }
        setup.sells.push_back({seller, cit->second, oit->second, sl.when});
    }
    for (const RawCorrupt& c : corrupts) {
        PartySetup* p = party(c.id);
        if (p == nullptr) ctx.validate_fail(c.line, "corrupt names unknown party: " + c.id);
        if (c.behavior == "wrong_keys") {
            if (p->role != Role::Seller)
                ctx.validate_fail(c.line, "wrong_keys applies to sellers; " + c.id + " is a " +
                                              role_name(p->role));
            if (c.data) ctx.validate_fail(c.line, "data does not apply to wrong_keys");
            CorruptSellerSpec spec;
            spec.wrong_keys = static_cast<std::uint32_t>(c.count.value_or(1));
            spec.then_correct = c.then_correct.value_or(true);
            p->corrupt_seller = spec;
        } else {
            NotaryMisbehavior kind;
            if (c.behavior == "consistent_false") kind = NotaryMisbehavior::ConsistentFalse;
            else if (c.behavior == "bad_y") kind = NotaryMisbehavior::BadY;
            else if (c.behavior == "bad_x") kind = NotaryMisbehavior::BadX;
            else if (c.behavior == "bad_sig") kind = NotaryMisbehavior::BadSig;
            else if (c.behavior == "wrong_m") kind = NotaryMisbehavior::WrongM;
            else ctx.parse_fail(c.line, "unknown behavior: " + c.behavior);
            if (p->role != Role::Notary)
                ctx.validate_fail(c.line, c.behavior + " applies to notaries; " + c.id + " is a " +
                                              role_name(p->role));
            if (c.count || c.then_correct)
                ctx.validate_fail(c.line, "count and then_correct apply to wrong_keys");
            p->corrupt_notary = CorruptNotarySpec{kind, c.data.value_or(Bytes{})};
        }
    }

    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot read scenario: " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_scenario(buf.str(), path);
}

} // namespace fairex
