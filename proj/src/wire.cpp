#include "fairex/wire.hpp"

#include <limits>

namespace fairex {

namespace {

constexpr std::size_t kMaxVarField = std::size_t{1} << 24;
constexpr std::size_t kMaxShortField = std::size_t{1} << 16;
constexpr std::size_t kMaxCount = std::size_t{1} << 16;

constexpr std::uint8_t kCertBodyTag = 0x10;

// Attribute value type tags follow the variant's alternative order.
constexpr std::uint8_t kAttrInt = 0;
constexpr std::uint8_t kAttrString = 1;
constexpr std::uint8_t kAttrBool = 2;

constexpr std::uint8_t kAtomEquals = 0;
constexpr std::uint8_t kAtomInRange = 1;
constexpr std::uint8_t kAtomMemberOf = 2;

class Writer {
public:
    Bytes take() { return std::move(out_); }

    void u8(std::uint8_t v) { out_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int i = 3; i >= 0; --i)
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void u64(std::uint64_t v) {
        for (int i = 7; i >= 0; --i)
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

    void raw(ByteSpan b) { out_.insert(out_.end(), b.begin(), b.end()); }

    template <std::size_t N>
    void fixed(const std::array<std::uint8_t, N>& a) {
        out_.insert(out_.end(), a.begin(), a.end());
    }

    void var(ByteSpan b) {
        if (b.size() > kMaxVarField)
            throw std::invalid_argument("wire: variable field too long");
        u32(static_cast<std::uint32_t>(b.size()));
        raw(b);
    }

    void str(const std::string& s) {
        if (s.size() > kMaxShortField)
            throw std::invalid_argument("wire: string too long");
        u32(static_cast<std::uint32_t>(s.size()));
        out_.insert(out_.end(), s.begin(), s.end());
    }

    void party(const PartyId& id) {
        if (id.empty())
            throw std::invalid_argument("wire: empty party identifier");
        str(id);
    }

    void sid(const SessionId& v) {
        party(v.notary_id);
        fixed(v.suffix);
    }

    void bid(const OfferId& v) {
        party(v.buyer_id);
        fixed(v.suffix);
    }

    void attr_value(const AttrValue& v) {
        u8(static_cast<std::uint8_t>(v.index()));
        switch (v.index()) {
        case kAttrInt: i64(std::get<std::int64_t>(v)); break;
        case kAttrString: str(std::get<std::string>(v)); break;
        case kAttrBool: u8(std::get<bool>(v) ? 1 : 0); break;
        }
    }

    void attrs(const AttributeSet& s) {
        if (s.entries.size() > kMaxCount)
            throw std::invalid_argument("wire: attribute set too large");
        u32(static_cast<std::uint32_t>(s.entries.size()));
        for (const auto& [name, value] : s.entries) {
            str(name);
            attr_value(value);
        }
    }

    void criterion(const Criterion& c) {
        if (c.atoms.size() > kMaxCount)
            throw std::invalid_argument("wire: criterion too large");
        u32(static_cast<std::uint32_t>(c.atoms.size()));
        for (const Atom& atom : c.atoms) {
            if (const auto* eq = std::get_if<AtomEquals>(&atom)) {
                u8(kAtomEquals);
                str(eq->name);
                attr_value(eq->value);
            } else if (const auto* rg = std::get_if<AtomInRange>(&atom)) {
                u8(kAtomInRange);
                str(rg->name);
                i64(rg->lo);
                i64(rg->hi);
            } else {
                const auto& mo = std::get<AtomMemberOf>(atom);
                u8(kAtomMemberOf);
                str(mo.name);
                if (mo.values.size() > kMaxCount)
                    throw std::invalid_argument("wire: member set too large");
                u32(static_cast<std::uint32_t>(mo.values.size()));
                const AttrValue* prev = nullptr;
                for (const AttrValue& v : mo.values) {
                    if (prev != nullptr && !(*prev < v))
                        throw std::invalid_argument("wire: member set not sorted-unique");
                    attr_value(v);
                    prev = &v;
                }
            }
        }
    }

    void cipher(const Ciphertext& c) {
        fixed(c.nonce);
        var(c.body);
    }

private:
    Bytes out_;
};

class Reader {
public:
    explicit Reader(ByteSpan b) : data_(b) {}

    bool done() const { return pos_ == data_.size(); }

    void require_done() const {
        if (!done())
            throw MalformedEncoding("trailing octets");
    }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v = (v << 8) | data_[pos_++];
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v = (v << 8) | data_[pos_++];
        return v;
    }

    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

    template <std::size_t N>
    std::array<std::uint8_t, N> fixed() {
        need(N);
        std::array<std::uint8_t, N> a;
        std::copy(data_.begin() + pos_, data_.begin() + pos_ + N, a.begin());
        pos_ += N;
        return a;
    }

    Bytes var(std::size_t cap = kMaxVarField) {
        std::uint32_t n = u32();
        if (n > cap)
            throw MalformedEncoding("length prefix exceeds cap");
        need(n);
        Bytes b(data_.begin() + pos_, data_.begin() + pos_ + n);
        pos_ += n;
        return b;
    }

    std::string str() {
        Bytes b = var(kMaxShortField);
        return std::string(b.begin(), b.end());
    }

    PartyId party() {
        std::string id = str();
        if (id.empty())
            throw MalformedEncoding("empty party identifier");
        return id;
    }

    SessionId sid() {
        SessionId v;
        v.notary_id = party();
        v.suffix = fixed<8>();
        return v;
    }

    OfferId bid() {
        OfferId v;
        v.buyer_id = party();
        v.suffix = fixed<8>();
        return v;
    }

    AttrValue attr_value() {
        switch (u8()) {
        case kAttrInt: return AttrValue(i64());
        case kAttrString: return AttrValue(str());
        case kAttrBool: {
            std::uint8_t b = u8();
            if (b > 1)
                throw MalformedEncoding("non-canonical boolean");
            return AttrValue(b == 1);
        }
        default: throw MalformedEncoding("unknown attribute type tag");
        }
    }

    AttributeSet attrs() {
        std::uint32_t n = u32();
        if (n > kMaxCount)
            throw MalformedEncoding("attribute count exceeds cap");
        AttributeSet s;
        std::string prev;
        for (std::uint32_t i = 0; i < n; ++i) {
            std::string name = str();
            if (i > 0 && !(prev < name))
                throw MalformedEncoding("attribute names not strictly ascending");
            prev = name;
            s.entries.emplace(std::move(name), attr_value());
        }
        return s;
    }

    Criterion criterion() {
        std::uint32_t n = u32();
        if (n > kMaxCount)
            throw MalformedEncoding("atom count exceeds cap");
        Criterion c;
        c.atoms.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            switch (u8()) {
            case kAtomEquals: {
                AtomEquals a;
                a.name = str();
                a.value = attr_value();
                c.atoms.emplace_back(std::move(a));
                break;
            }
            case kAtomInRange: {
                AtomInRange a;
                a.name = str();
                a.lo = i64();
                a.hi = i64();
                c.atoms.emplace_back(std::move(a));
                break;
            }
            case kAtomMemberOf: {
                AtomMemberOf a;
                a.name = str();
                std::uint32_t k = u32();
                if (k > kMaxCount)
                    throw MalformedEncoding("member set count exceeds cap");
                for (std::uint32_t j = 0; j < k; ++j) {
                    AttrValue v = attr_value();
                    if (!a.values.empty() && !(a.values.back() < v))
                        throw MalformedEncoding("member set not sorted-unique");
                    a.values.emplace_back(std::move(v));
                }
                c.atoms.emplace_back(std::move(a));
                break;
            }
            default: throw MalformedEncoding("unknown atom kind");
            }
        }
        return c;
    }

    Ciphertext cipher() {
        Ciphertext c;
        c.nonce = fixed<kNonceLen>();
        c.body = var();
        return c;
    }

    Digest digest() {
        Digest d;
        d.bytes = fixed<kDigestLen>();
        return d;
    }

    SymKey key() {
        SymKey k;
        k.bytes = fixed<kSymKeyLen>();
        return k;
    }

    Signature sig() {
        Signature s;
        s.bytes = fixed<kSignatureLen>();
        return s;
    }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n)
            throw MalformedEncoding("truncated");
    }

    ByteSpan data_;
    std::size_t pos_ = 0;
};

struct Encoder {
    Writer& w;

    void operator()(const MsgCertifyInput& m) {
        w.u8(static_cast<std::uint8_t>(MessageTag::CertifyInput));
        w.sid(m.sid);
        w.party(m.seller_id);
        w.var(m.data);
        w.attrs(m.attrs);
    }

    void operator()(const MsgCert& m) {
        w.u8(static_cast<std::uint8_t>(MessageTag::Cert));
        w.sid(m.sid);
        w.fixed(m.key.bytes);
        w.var(m.data);
        w.cipher(m.cipher);
        w.attrs(m.attrs);
        w.fixed(m.y.bytes);
        w.fixed(m.x.bytes);
        w.fixed(m.sig.bytes);
    }

    void operator()(const MsgBuying& m) {
        w.u8(static_cast<std::uint8_t>(MessageTag::Buying));
        w.bid(m.bid);
        w.criterion(m.criterion);
    }

    void operator()(const MsgSelling& m) {
        w.u8(static_cast<std::uint8_t>(MessageTag::Selling));
        w.bid(m.bid);
        w.party(m.notary_id);
        w.cipher(m.cipher);
        w.attrs(m.attrs);
        w.fixed(m.y.bytes);
        w.fixed(m.x.bytes);
        w.fixed(m.sig.bytes);
    }

    void operator()(const MsgContractOpen& m) {
        w.u8(static_cast<std::uint8_t>(MessageTag::ContractOpen));
        w.bid(m.bid);
        w.fixed(m.condition.bytes);
        w.u64(m.amount);
    }

    void operator()(const MsgContractClose& m) {
        w.u8(static_cast<std::uint8_t>(MessageTag::ContractClose));
        w.bid(m.bid);
        w.fixed(m.key.bytes);
    }

    void operator()(const MsgLedgerUpdate& m) {
        w.u8(static_cast<std::uint8_t>(MessageTag::LedgerUpdate));
        w.bid(m.bid);
        if (m.balances.size() > kMaxCount)
            throw std::invalid_argument("wire: balance snapshot too large");
        w.u32(static_cast<std::uint32_t>(m.balances.size()));
        for (const auto& [id, amount] : m.balances) {
            w.party(id);
            w.u64(amount);
        }
    }
};

} // namespace

std::string SessionId::display() const {
    return notary_id + ":" + hex_encode(suffix);
}

std::string OfferId::display() const {
    return buyer_id + ":" + hex_encode(suffix);
}

MessageTag message_tag(const Message& m) {
    return std::visit([](const auto& v) -> MessageTag {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, MsgCertifyInput>) return MessageTag::CertifyInput;
        else if constexpr (std::is_same_v<T, MsgCert>) return MessageTag::Cert;
        else if constexpr (std::is_same_v<T, MsgBuying>) return MessageTag::Buying;
        else if constexpr (std::is_same_v<T, MsgSelling>) return MessageTag::Selling;
        else if constexpr (std::is_same_v<T, MsgContractOpen>) return MessageTag::ContractOpen;
        else if constexpr (std::is_same_v<T, MsgContractClose>) return MessageTag::ContractClose;
        else return MessageTag::LedgerUpdate;
    }, m);
}

const char* tag_name(MessageTag t) {
    switch (t) {
    case MessageTag::CertifyInput: return "CertifyInput";
    case MessageTag::Cert: return "Cert";
    case MessageTag::Buying: return "Buying";
    case MessageTag::Selling: return "Selling";
    case MessageTag::ContractOpen: return "ContractOpen";
    case MessageTag::ContractClose: return "ContractClose";
    case MessageTag::LedgerUpdate: return "LedgerUpdate";
    }
    return "Unknown";
}

Bytes encode(const Message& m) {
    Writer w;
    std::visit(Encoder{w}, m);
    return w.take();
}

Message decode(ByteSpan bytes) {
    Reader r(bytes);
    Message m = [&]() -> Message {
        switch (r.u8()) {
        case static_cast<std::uint8_t>(MessageTag::CertifyInput): {
            MsgCertifyInput v;
            v.sid = r.sid();
            v.seller_id = r.party();
            v.data = r.var();
            v.attrs = r.attrs();
            return v;
        }
        case static_cast<std::uint8_t>(MessageTag::Cert): {
            MsgCert v;
            v.sid = r.sid();
            v.key = r.key();
            v.data = r.var();
            v.cipher = r.cipher();
            v.attrs = r.attrs();
            v.y = r.digest();
            v.x = r.digest();
            v.sig = r.sig();
            return v;
        }
        case static_cast<std::uint8_t>(MessageTag::Buying): {
            MsgBuying v;
            v.bid = r.bid();
            v.criterion = r.criterion();
            return v;
        }
        case static_cast<std::uint8_t>(MessageTag::Selling): {
            MsgSelling v;
            v.bid = r.bid();
            v.notary_id = r.party();
            v.cipher = r.cipher();
            v.attrs = r.attrs();
            v.y = r.digest();
            v.x = r.digest();
            v.sig = r.sig();
            return v;
        }
        case static_cast<std::uint8_t>(MessageTag::ContractOpen): {
            MsgContractOpen v;
            v.bid = r.bid();
            v.condition = r.digest();
            v.amount = r.u64();
            return v;
        }
        case static_cast<std::uint8_t>(MessageTag::ContractClose): {
            MsgContractClose v;
            v.bid = r.bid();
            v.key = r.key();
            return v;
        }
        case static_cast<std::uint8_t>(MessageTag::LedgerUpdate): {
            MsgLedgerUpdate v;
            v.bid = r.bid();
            std::uint32_t n = r.u32();
            if (n > kMaxCount)
                throw MalformedEncoding("balance count exceeds cap");
            std::string prev;
            for (std::uint32_t i = 0; i < n; ++i) {
                PartyId id = r.party();
                if (i > 0 && !(prev < id))
                    throw MalformedEncoding("balances not strictly ascending");
                prev = id;
                TokenCount amount = r.u64();
                v.balances.emplace(std::move(id), amount);
            }
            return v;
        }
        default:
            throw MalformedEncoding("unknown message tag");
        }
    }();
    r.require_done();
    return m;
}

Bytes encode_cert_body(const CertBody& body) {
    Writer w;
    w.u8(kCertBodyTag);
    w.attrs(body.s);
    w.fixed(body.y.bytes);
    w.fixed(body.x.bytes);
    return w.take();
}

} // namespace fairex
