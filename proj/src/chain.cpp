#include "fairex/chain.hpp"

#include <cassert>

namespace fairex {

const char* chain_ignore_name(ChainIgnore r) {
    switch (r) {
    case ChainIgnore::None: return "none";
    case ChainIgnore::DuplicateContract: return "duplicate_contract";
    case ChainIgnore::InsufficientBalance: return "insufficient_balance";
    case ChainIgnore::NoSuchContract: return "no_such_contract";
    case ChainIgnore::AlreadyClosed: return "already_closed";
    case ChainIgnore::HashMismatch: return "hash_mismatch";
    case ChainIgnore::UnhandledMessage: return "unhandled_message";
    }
    return "unknown";
}

Chain Chain::init(const std::map<PartyId, std::int64_t>& initial) {
    Chain c;
    for (const auto& [id, count] : initial) {
        if (count < 0)
            throw NegativeBalance(id);
        c.balances_[id] = static_cast<TokenCount>(count);
        c.initial_supply_ += static_cast<TokenCount>(count);
    }
    return c;
}

ChainResult Chain::submit_open(const PartyId& sender, const MsgContractOpen& m) {
    if (contracts_.count(m.bid) != 0)
        return {false, ChainIgnore::DuplicateContract};
    if (balance_of(sender) < m.amount)
        return {false, ChainIgnore::InsufficientBalance};

    balances_[sender] -= m.amount;
    Contract c;
    c.id = m.bid;
    c.payer = sender;
    c.condition = m.condition;
    c.amount = m.amount;
    contracts_.emplace(m.bid, std::move(c));
    append(m);
    assert(conserved());
    return {true, ChainIgnore::None};
}

ChainResult Chain::submit_close(const PartyId& sender, const MsgContractClose& m) {
    auto it = contracts_.find(m.bid);
    if (it == contracts_.end())
        return {false, ChainIgnore::NoSuchContract};
    Contract& c = it->second;
    if (c.closed)
        return {false, ChainIgnore::AlreadyClosed};
    if (!skip_close_hash_check_ && hash(m.key.bytes) != c.condition)
        return {false, ChainIgnore::HashMismatch};

    // Settlement is one atomic step: the key becomes public on the tape in
    // the same transition that releases the escrow to the close sender.
    c.closed = true;
    c.payee = sender;
    c.key = m.key;
    balances_[sender] += c.amount;
    append(m);
    append(MsgLedgerUpdate{m.bid, balances_});
    assert(conserved());
    return {true, ChainIgnore::None};
}

std::vector<TapeEvent> Chain::read_tape(std::uint64_t from_index) const {
    std::vector<TapeEvent> out;
    for (std::uint64_t i = from_index; i < tape_.size(); ++i)
        out.push_back(tape_[i]);
    return out;
}

TokenCount Chain::balance_of(const PartyId& p) const {
    auto it = balances_.find(p);
    return it == balances_.end() ? 0 : it->second;
}

const Contract* Chain::contract(const OfferId& id) const {
    auto it = contracts_.find(id);
    return it == contracts_.end() ? nullptr : &it->second;
}

TokenCount Chain::immobilized_total() const {
    TokenCount total = 0;
    for (const auto& [id, c] : contracts_)
        if (!c.closed)
            total += c.amount;
    return total;
}

bool Chain::conserved() const {
    TokenCount total = immobilized_total();
    for (const auto& [id, b] : balances_)
        total += b;
    return total == initial_supply_;
}

TokenCount Chain::effective_balance_of(const PartyId& p) const {
    TokenCount total = balance_of(p);
    for (const auto& [id, c] : contracts_)
        if (!c.closed && c.payer == p)
            total += c.amount;
    return total;
}

void Chain::append(Message payload) {
    TapeEvent ev;
    ev.index = tape_.size();
    ev.payload = std::move(payload);
    tape_.push_back(std::move(ev));
}

} // namespace fairex
