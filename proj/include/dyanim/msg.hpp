#pragma once
#ifndef DYANIM_MSG_HPP
#define DYANIM_MSG_HPP

// Symbolic messages and Dolev-Yao intruder inference.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace dyanim::msg {

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Atoms
//
enum class Agent : std::uint8_t { Alice, Bob, Intruder, Server };

inline constexpr std::array<Agent, 4> kAllAgents = {Agent::Alice, Agent::Bob, Agent::Intruder, Agent::Server};

inline std::string_view name(Agent a)
{
    switch (a) {
        case Agent::Alice: return "Alice";
        case Agent::Bob: return "Bob";
        case Agent::Intruder: return "Intruder";
        case Agent::Server: return "Server";
    }
    return "?";
}

inline std::optional<Agent> agent_from_name(std::string_view s)
{
    for (Agent a : kAllAgents) {
        if (name(a) == s) return a;
    }
    return std::nullopt;
}

struct Nonce {
    Agent owner;
    friend auto operator<=>(const Nonce&, const Nonce&) = default;
};

struct PubKey {
    Agent owner;
    friend auto operator<=>(const PubKey&, const PubKey&) = default;
};

struct PrivKey {
    Agent owner;
    friend auto operator<=>(const PrivKey&, const PrivKey&) = default;
};

// Either half of an asymmetric key pair.
struct Key {
    bool is_public;
    Agent owner;

    static Key pub(PubKey k) { return {true, k.owner}; }
    static Key priv(PrivKey k) { return {false, k.owner}; }

    Key inverse() const { return {!is_public, owner}; }

    friend auto operator<=>(const Key&, const Key&) = default;
};

inline std::string to_string(Agent a) { return std::string{name(a)}; }
inline std::string to_string(Nonce n) { return "N " + to_string(n.owner); }
inline std::string to_string(PubKey k) { return "PK " + to_string(k.owner); }
inline std::string to_string(PrivKey k) { return "SK " + to_string(k.owner); }

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Message
//
enum class Tag : std::uint8_t { Ag, Non, Kp, Ks, Cmp, Enc, Sig, SEnc, Expg, ModExp };

class Message {
public:
    static Message agent(Agent a) { return make(Tag::Ag, a, {}, {}); }
    static Message nonce(Nonce n) { return make(Tag::Non, n.owner, {}, {}); }
    static Message pub(PubKey k) { return make(Tag::Kp, k.owner, {}, {}); }
    static Message priv(PrivKey k) { return make(Tag::Ks, k.owner, {}, {}); }
    static Message pair(const Message& a, const Message& b) { return make(Tag::Cmp, Agent{}, a.node_, b.node_); }
    static Message enc(const Message& m, PubKey k) { return make(Tag::Enc, k.owner, m.node_, {}); }
    static Message sig(const Message& m, PrivKey k) { return make(Tag::Sig, k.owner, m.node_, {}); }
    static Message senc(const Message& m, const Message& key) { return make(Tag::SEnc, Agent{}, m.node_, key.node_); }
    static Message expg() { return make(Tag::Expg, Agent{}, {}, {}); }
    static Message modexp(const Message& base, Nonce n) { return make(Tag::ModExp, n.owner, base.node_, {}); }

    // Right-nested tuple: <a, b, c> is <a, <b, c>>.
    static Message tuple(std::span<const Message> parts)
    {
        if (parts.empty()) throw std::invalid_argument("empty tuple");
        Message acc = parts.back();
        for (std::size_t i = parts.size() - 1; i-- > 0;) acc = pair(parts[i], acc);
        return acc;
    }
    static Message tuple(std::initializer_list<Message> parts)
    {
        return tuple(std::span<const Message>{parts.begin(), parts.size()});
    }

    Tag tag() const { return node_->tag; }

    // Owner of the atom, key or exponent nonce, depending on the tag.
    Agent owner() const { return node_->owner; }

    // Payload of Enc/Sig/SEnc, base of ModExp, first component of Cmp.
    Message body() const { return Message{node_->a}; }

    // Second component of Cmp, key of SEnc.
    Message second() const { return Message{node_->b}; }

    Nonce as_nonce() const { return Nonce{owner()}; }
    PubKey as_pub() const { return PubKey{owner()}; }
    PrivKey as_priv() const { return PrivKey{owner()}; }

    bool is(Tag t) const { return tag() == t; }

    // Leaf count; encryptions, signatures and exponentiations add one to
    // their payload. Keys and exponents are not counted.
    std::size_t size() const { return node_->size; }

    std::size_t hash() const { return node_->hash; }

    friend std::strong_ordering operator<=>(const Message& x, const Message& y) { return compare(x.node_.get(), y.node_.get()); }
    friend bool operator==(const Message& x, const Message& y) { return compare(x.node_.get(), y.node_.get()) == 0; }

private:
    struct Node {
        Tag tag;
        Agent owner;
        std::shared_ptr<const Node> a;
        std::shared_ptr<const Node> b;
        std::size_t size;
        std::size_t hash;
    };

    explicit Message(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    static Message make(Tag t, Agent owner, std::shared_ptr<const Node> a, std::shared_ptr<const Node> b)
    {
        std::size_t size = 1;
        if (t == Tag::Cmp) size = a->size + b->size;
        else if (a) size = 1 + a->size;

        std::size_t h = static_cast<std::size_t>(t) * 0x9e3779b97f4a7c15ULL ^ (static_cast<std::size_t>(owner) + 0x51);
        auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2); };
        if (a) mix(a->hash);
        if (b) mix(b->hash);
        return Message{std::make_shared<const Node>(Node{t, owner, std::move(a), std::move(b), size, h})};
    }

    static std::strong_ordering compare(const Node* x, const Node* y)
    {
        if (x == y) return std::strong_ordering::equal;
        if (auto c = x->tag <=> y->tag; c != 0) return c;
        switch (x->tag) {
            case Tag::Ag:
            case Tag::Non:
            case Tag::Kp:
            case Tag::Ks: return x->owner <=> y->owner;
            case Tag::Expg: return std::strong_ordering::equal;
            case Tag::Cmp:
            case Tag::SEnc:
                if (auto c = compare(x->a.get(), y->a.get()); c != 0) return c;
                return compare(x->b.get(), y->b.get());
            case Tag::Enc:
            case Tag::Sig:
            case Tag::ModExp:
                if (auto c = compare(x->a.get(), y->a.get()); c != 0) return c;
                return x->owner <=> y->owner;
        }
        return std::strong_ordering::equal;
    }

    std::shared_ptr<const Node> node_;
};

struct MessageHash {
    std::size_t operator()(const Message& m) const { return m.hash(); }
};

using MessageList = std::vector<Message>;

// Shorthands used throughout the protocol models.
inline Message mag(Agent a) { return Message::agent(a); }
inline Message mnon(Agent a) { return Message::nonce(Nonce{a}); }
inline Message mpk(Agent a) { return Message::pub(PubKey{a}); }
inline Message msk(Agent a) { return Message::priv(PrivKey{a}); }
inline Message g_pow(Agent a) { return Message::modexp(Message::expg(), Nonce{a}); }
inline Message g_pow(Agent a, Agent b) { return Message::modexp(g_pow(a), Nonce{b}); }

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Rendering
//
//   agent "Alice"   nonce "N a"   pubkey "PK a"   privkey "SK a"
//   pair "<m, m>"   asym "{m}_PK a"   sig "{m}^d_SK a"   sym "{m}^S_k"
//   base "g"        modexp "m^N a"
//
// A modexp whose base is neither g nor another modexp is parenthesised; the
// grammar would be ambiguous otherwise.
inline void render_to(std::string& out, const Message& m)
{
    switch (m.tag()) {
        case Tag::Ag: out += name(m.owner()); return;
        case Tag::Non: out += "N "; out += name(m.owner()); return;
        case Tag::Kp: out += "PK "; out += name(m.owner()); return;
        case Tag::Ks: out += "SK "; out += name(m.owner()); return;
        case Tag::Expg: out += "g"; return;
        case Tag::Cmp:
            out += '<';
            render_to(out, m.body());
            out += ", ";
            render_to(out, m.second());
            out += '>';
            return;
        case Tag::Enc:
            out += '{';
            render_to(out, m.body());
            out += "}_PK ";
            out += name(m.owner());
            return;
        case Tag::Sig:
            out += '{';
            render_to(out, m.body());
            out += "}^d_SK ";
            out += name(m.owner());
            return;
        case Tag::SEnc:
            out += '{';
            render_to(out, m.body());
            out += "}^S_";
            render_to(out, m.second());
            return;
        case Tag::ModExp: {
            Message base = m.body();
            bool bare = base.is(Tag::Expg) || base.is(Tag::ModExp);
            if (!bare) out += '(';
            render_to(out, base);
            if (!bare) out += ')';
            out += "^N ";
            out += name(m.owner());
            return;
        }
    }
}

inline std::string render(const Message& m)
{
    std::string out;
    render_to(out, m);
    return out;
}

inline std::string to_string(const Message& m) { return render(m); }

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Parsing (inverse of render)
//
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t pos)
        : std::runtime_error(what + " at offset " + std::to_string(pos)), pos_(pos)
    {
    }
    std::size_t position() const { return pos_; }

private:
    std::size_t pos_;
};

class TextCursor {
public:
    explicit TextCursor(std::string_view text) : text_(text) {}

    bool done() const { return pos_ >= text_.size(); }
    std::size_t pos() const { return pos_; }
    std::string_view rest() const { return text_.substr(pos_); }

    bool accept(std::string_view lit)
    {
        if (rest().substr(0, lit.size()) == lit) {
            pos_ += lit.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view lit)
    {
        if (!accept(lit)) fail("expected '" + std::string{lit} + "'");
    }

    Agent agent()
    {
        for (Agent a : kAllAgents) {
            if (accept(name(a))) return a;
        }
        fail("expected an agent name");
    }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

inline Message parse_message(TextCursor& in);

namespace detail {

inline Message parse_primary(TextCursor& in)
{
    if (in.accept("N ")) return Message::nonce(Nonce{in.agent()});
    if (in.accept("PK ")) return Message::pub(PubKey{in.agent()});
    if (in.accept("SK ")) return Message::priv(PrivKey{in.agent()});
    if (in.accept("<")) {
        Message a = parse_message(in);
        in.expect(", ");
        Message b = parse_message(in);
        in.expect(">");
        return Message::pair(a, b);
    }
    if (in.accept("{")) {
        Message body = parse_message(in);
        if (in.accept("}_PK ")) return Message::enc(body, PubKey{in.agent()});
        if (in.accept("}^d_SK ")) return Message::sig(body, PrivKey{in.agent()});
        if (in.accept("}^S_")) return Message::senc(body, parse_message(in));
        in.fail("expected a key after encrypted payload");
    }
    if (in.accept("(")) {
        Message inner = parse_message(in);
        in.expect(")");
        if (inner.is(Tag::Expg) || inner.is(Tag::ModExp)) in.fail("redundant parentheses");
        if (!in.accept("^N ")) in.fail("parentheses only wrap the base of an exponentiation");
        return Message::modexp(inner, Nonce{in.agent()});
    }
    if (in.accept("g")) return Message::expg();
    return Message::agent(in.agent());
}

}  // namespace detail

inline Message parse_message(TextCursor& in)
{
    Message m = detail::parse_primary(in);
    while ((m.is(Tag::Expg) || m.is(Tag::ModExp)) && in.accept("^N ")) {
        m = Message::modexp(m, Nonce{in.agent()});
    }
    return m;
}

inline Message parse_message(std::string_view text)
{
    TextCursor in{text};
    Message m = parse_message(in);
    if (!in.done()) in.fail("trailing characters");
    return m;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Duplicate-free lists in first-occurrence order.
//
class UniqueList {
public:
    UniqueList() = default;
    explicit UniqueList(std::span<const Message> init)
    {
        for (const Message& m : init) insert(m);
    }

    // Appends iff absent.
    bool insert(const Message& m)
    {
        if (!seen_.insert(m).second) return false;
        items_.push_back(m);
        return true;
    }

    void insert_all(std::span<const Message> ms)
    {
        for (const Message& m : ms) insert(m);
    }

    bool contains(const Message& m) const { return seen_.count(m) != 0; }
    std::size_t size() const { return items_.size(); }
    const MessageList& items() const { return items_; }
    MessageList take() && { return std::move(items_); }

private:
    MessageList items_;
    std::unordered_set<Message, MessageHash> seen_;
};

// xs followed by the elements of ys that are not already present.
inline MessageList list_union(std::span<const Message> xs, std::span<const Message> ys)
{
    UniqueList out{xs};
    out.insert_all(ys);
    return std::move(out).take();
}

inline MessageList remdups(std::span<const Message> xs) { return std::move(UniqueList{xs}).take(); }

// Knowledge of the intruder: duplicate-free, insertion ordered.
class Knowledge {
public:
    Knowledge() = default;
    explicit Knowledge(std::span<const Message> init) : list_(init) {}
    Knowledge(std::initializer_list<Message> init) : list_(std::span<const Message>{init.begin(), init.size()}) {}

    Knowledge inserted(const Message& m) const
    {
        Knowledge k = *this;
        k.list_.insert(m);
        return k;
    }

    bool contains(const Message& m) const { return list_.contains(m); }
    std::size_t size() const { return list_.size(); }
    const MessageList& messages() const { return list_.items(); }

    friend bool operator==(const Knowledge& a, const Knowledge& b) { return a.messages() == b.messages(); }

private:
    UniqueList list_;
};

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Break-down rules
//
inline std::set<PrivKey> extract_skey(std::span<const Message> msgs)
{
    std::set<PrivKey> out;
    for (const Message& m : msgs) {
        if (m.is(Tag::Ks)) out.insert(m.as_priv());
    }
    return out;
}

inline std::set<PubKey> extract_pkey(std::span<const Message> msgs)
{
    std::set<PubKey> out;
    for (const Message& m : msgs) {
        if (m.is(Tag::Kp)) out.insert(m.as_pub());
    }
    return out;
}

// The payload of a symmetric encryption under a modular-exponentiation key
// g^a^b can be recovered when the knowledge holds g^a and b, or g^b and a,
// or g, a and b.
inline std::optional<Message> dh_break_key(const Message& cipher, std::span<const Message> known)
{
    if (!cipher.is(Tag::SEnc)) return std::nullopt;
    const Message key = cipher.second();
    if (!key.is(Tag::ModExp) || !key.body().is(Tag::ModExp) || !key.body().body().is(Tag::Expg)) {
        return std::nullopt;
    }
    const Nonce a = key.body().as_nonce();
    const Nonce b = key.as_nonce();
    auto knows = [&known](const Message& m) {
        for (const Message& k : known) {
            if (k == m) return true;
        }
        return false;
    };
    const Message g = Message::expg();
    const Message na = Message::nonce(a);
    const Message nb = Message::nonce(b);
    if ((knows(Message::modexp(g, a)) && knows(nb)) || (knows(Message::modexp(g, b)) && knows(na)) ||
        (knows(g) && knows(na) && knows(nb))) {
        return cipher.body();
    }
    return std::nullopt;
}

namespace detail {

struct BreakContext {
    const std::set<PrivKey>& sks;
    const std::set<PubKey>& pks;
    std::span<const Message> known;
};

inline bool symmetric_open(const Message& cipher, const BreakContext& ctx)
{
    const Message key = cipher.second();
    for (const Message& k : ctx.known) {
        if (k == key) return true;
    }
    return dh_break_key(cipher, ctx.known).has_value();
}

inline void break_into(UniqueList& out, const Message& m, const BreakContext& ctx)
{
    switch (m.tag()) {
        case Tag::Cmp:
            break_into(out, m.body(), ctx);
            break_into(out, m.second(), ctx);
            return;
        case Tag::Enc:
            out.insert(m);
            if (ctx.sks.count(PrivKey{m.owner()})) break_into(out, m.body(), ctx);
            return;
        case Tag::Sig:
            out.insert(m);
            if (ctx.pks.count(PubKey{m.owner()})) break_into(out, m.body(), ctx);
            return;
        case Tag::SEnc:
            out.insert(m);
            if (symmetric_open(m, ctx)) break_into(out, m.body(), ctx);
            return;
        default: out.insert(m); return;
    }
}

}  // namespace detail

// One pass of the break-down rules: pairs are split (and not kept),
// ciphertexts and signatures are kept and opened when the matching key is
// available, everything else is kept as is. `pks` enables signature
// verification; `known` enables symmetric and exponentiation-key decryption.
inline MessageList break_down(std::span<const Message> msgs, const std::set<PrivKey>& sks,
                              const std::set<PubKey>& pks = {}, std::span<const Message> known = {})
{
    UniqueList out;
    detail::BreakContext ctx{sks, pks, known};
    for (const Message& m : msgs) detail::break_into(out, m, ctx);
    return std::move(out).take();
}

// break_down with keys drawn from the list itself, repeated until stable so
// that keys and exponents released on one pass are used on the next.
inline MessageList breakm(std::span<const Message> msgs)
{
    MessageList cur{msgs.begin(), msgs.end()};
    for (;;) {
        MessageList next = break_down(cur, extract_skey(cur), extract_pkey(cur), cur);
        if (next == cur) return cur;
        cur = std::move(next);
    }
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Build-up rules
//
inline MessageList pair2(std::span<const Message> xs, std::span<const Message> ys, std::size_t l)
{
    UniqueList out;
    for (const Message& x : xs) {
        for (const Message& y : ys) {
            if (x == y || x.size() + y.size() > l) continue;
            out.insert(Message::pair(x, y));
        }
    }
    return std::move(out).take();
}

inline MessageList enc_1(std::span<const Message> xs, std::span<const PubKey> ks)
{
    UniqueList out;
    for (const Message& x : xs) {
        for (PubKey k : ks) out.insert(Message::enc(x, k));
    }
    return std::move(out).take();
}

// Bounded build-up: `nc` pairing rounds, `ne` encryption rounds, pairs no
// longer than `l`. Both rules are tried first when both budgets remain.
inline MessageList build_n(std::span<const Message> xs, std::span<const PubKey> ks, std::size_t nc, std::size_t ne,
                           std::size_t l)
{
    if (nc == 0 && ne == 0) return MessageList{xs.begin(), xs.end()};
    if (ne == 0) return build_n(list_union(xs, pair2(xs, xs, l)), ks, nc - 1, 0, l);
    if (nc == 0) return build_n(list_union(xs, enc_1(xs, ks)), ks, 0, ne - 1, l);
    return list_union(build_n(list_union(xs, pair2(xs, xs, l)), ks, nc - 1, ne, l),
                      build_n(list_union(xs, enc_1(xs, ks)), ks, nc, ne - 1, l));
}

// depth 1: g^n for every n; depth 2 adds g^n^n' for distinct n, n'.
inline MessageList mod_exp_build(std::span<const Nonce> nonces, int depth)
{
    if (depth != 1 && depth != 2) throw std::invalid_argument("mod_exp_build depth must be 1 or 2");
    UniqueList out;
    const Message g = Message::expg();
    for (Nonce n : nonces) out.insert(Message::modexp(g, n));
    if (depth == 2) {
        for (Nonce n : nonces) {
            for (Nonce m : nonces) {
                if (n != m) out.insert(Message::modexp(Message::modexp(g, n), m));
            }
        }
    }
    return std::move(out).take();
}

// Build set for the exponentiation models: the knowledge itself, every
// exponential the intruder can compute (from g or from a known g^x, with
// its own nonces), and every known message symmetrically encrypted under any
// computable two-level key. No pairing.
inline MessageList dh_build(std::span<const Message> known)
{
    std::vector<Nonce> nonces;
    bool has_g = false;
    for (const Message& m : known) {
        if (m.is(Tag::Non)) nonces.push_back(m.as_nonce());
        if (m.is(Tag::Expg)) has_g = true;
    }

    UniqueList out{known};
    UniqueList keys;
    if (has_g) {
        for (const Message& m : mod_exp_build(nonces, 2)) {
            out.insert(m);
            if (m.body().is(Tag::ModExp)) keys.insert(m);
        }
    }
    for (const Message& m : known) {
        if (!m.is(Tag::ModExp) || !m.body().is(Tag::Expg)) continue;
        for (Nonce n : nonces) {
            if (n == m.as_nonce()) continue;
            Message k = Message::modexp(m, n);
            out.insert(k);
            keys.insert(k);
        }
    }
    for (const Message& m : known) {
        for (const Message& k : keys.items()) out.insert(Message::senc(m, k));
    }
    return std::move(out).take();
}

}  // namespace dyanim::msg

template <>
struct std::hash<dyanim::msg::Message> {
    std::size_t operator()(const dyanim::msg::Message& m) const { return m.hash(); }
};

#endif  // DYANIM_MSG_HPP
