#pragma once
#ifndef DYANIM_PROTO_HPP
#define DYANIM_PROTO_HPP

// Protocol models: Needham-Schroeder public key (3- and 7-message forms,
// Lowe's fix) and Diffie-Hellman (plain and with signatures), as processes
// composed with a Dolev-Yao intruder.

#include "dyanim/event.hpp"
#include "dyanim/itree.hpp"
#include "dyanim/msg.hpp"

#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dyanim::proto {

using itree::Unit;
using Proc = itree::Process<Event, Unit>;
using Events = itree::EventSet<Event>;
using msg::Knowledge;
using msg::MessageList;
using msg::PrivKey;
using msg::PubKey;

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Small process-building helpers for the Event alphabet.
//
namespace build {

inline Proc out(Event e, std::function<Proc()> k)
{
    return itree::then(itree::outp(std::move(e)), std::move(k));
}

// One event per accepted message on the given directed channel, continuing
// with the received message.
inline Proc in(Channel c, Agent from, Agent to, const MessageList& accepted, std::function<Proc(const Message&)> k)
{
    std::function<Event(const Message&)> chan = [c, from, to](const Message& m) {
        return Event{c, from, to, m, std::nullopt};
    };
    return itree::seq(itree::inp(chan, msg::remdups(accepted)), std::move(k));
}

inline Proc terminate_then_skip()
{
    return out(Event::terminate(), [] { return itree::skip<Event>(); });
}

inline Proc sig(Signal s, std::function<Proc()> k) { return out(Event::signal(std::move(s)), std::move(k)); }

}  // namespace build

inline Events on_channels(std::vector<Channel> cs)
{
    return Events::where([cs = std::move(cs)](const Event& e) {
        return std::find(cs.begin(), cs.end(), e.channel) != cs.end();
    });
}

inline Events term_event() { return Events::of({Event::terminate()}); }

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Protocol universes
//
struct Universe {
    std::vector<Agent> agents;  // declaration order

    std::vector<Nonce> nonces() const
    {
        std::vector<Nonce> out;
        for (Agent a : agents) out.push_back(Nonce{a});
        return out;
    }

    // Agents that can be the peer of an honest role.
    std::vector<Agent> peers_of(Agent self) const
    {
        std::vector<Agent> out;
        for (Agent a : agents) {
            if (a != self && a != Agent::Server) out.push_back(a);
        }
        return out;
    }

    MessageList agent_msgs() const
    {
        MessageList out;
        for (Agent a : agents) out.push_back(msg::mag(a));
        return out;
    }

    MessageList pk_msgs() const
    {
        MessageList out;
        for (Agent a : agents) out.push_back(msg::mpk(a));
        return out;
    }

    MessageList nonce_msgs() const
    {
        MessageList out;
        for (Agent a : agents) out.push_back(msg::mnon(a));
        return out;
    }
};

inline const Universe& nspk3_universe()
{
    static const Universe u{{Agent::Alice, Agent::Bob, Agent::Intruder}};
    return u;
}

inline const Universe& nspk7_universe()
{
    static const Universe u{{Agent::Alice, Agent::Bob, Agent::Intruder, Agent::Server}};
    return u;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Needham-Schroeder roles
//
enum class NsVariant { Nspk3, Nslpk3, Nspk7 };

namespace detail {

inline Message msg3(Nonce na, Agent a, Agent b)
{
    return Message::enc(Message::pair(Message::nonce(na), msg::mag(a)), PubKey{b});
}

// Responder's reply; Lowe's fix adds the responder's identity.
inline Message msg6(NsVariant v, Nonce na, Nonce nb, Agent responder, Agent initiator)
{
    Message body = v == NsVariant::Nslpk3
                       ? Message::tuple({Message::nonce(na), Message::nonce(nb), msg::mag(responder)})
                       : Message::pair(Message::nonce(na), Message::nonce(nb));
    return Message::enc(body, PubKey{initiator});
}

inline Message msg7(Nonce nb, Agent b) { return Message::enc(Message::nonce(nb), PubKey{b}); }

inline Message key_cert(Agent who)
{
    return Message::sig(Message::pair(msg::mpk(who), msg::mag(who)), PrivKey{Agent::Server});
}

// Public-key retrieval over the secure channels, NSPK7 only.
inline Proc fetch_key(NsVariant v, Agent self, Agent peer, std::function<Proc()> k)
{
    if (v != NsVariant::Nspk7) return k();
    return build::out(Event::send_s(self, Agent::Server, Message::pair(msg::mag(self), msg::mag(peer))),
                      [self, peer, k] {
                          return build::in(Channel::RecvS, Agent::Server, self, {key_cert(peer)},
                                           [k](const Message&) { return k(); });
                      });
}

}  // namespace detail

inline Proc initiator(NsVariant v, const Universe& u, Agent a, Nonce na)
{
    std::vector<Agent> peers = u.peers_of(a);
    std::function<Event(const Agent&)> env = [a](const Agent& b) { return Event::env(a, b); };
    return itree::seq(itree::inp(env, peers), [v, u, a, na](const Agent& b) {
        return detail::fetch_key(v, a, b, [v, u, a, na, b] {
            return build::sig(Signal::claim_secret(a, na, {b}), [v, u, a, na, b] {
                return build::out(Event::send(a, Agent::Intruder, detail::msg3(na, a, b)), [v, u, a, na, b] {
                    MessageList replies;
                    for (Nonce nb : u.nonces()) replies.push_back(detail::msg6(v, na, nb, b, a));
                    return build::in(Channel::Recv, Agent::Intruder, a, replies, [a, na, b](const Message& m) {
                        Nonce nb = m.body().is(msg::Tag::Cmp) && m.body().second().is(msg::Tag::Cmp)
                                       ? m.body().second().body().as_nonce()
                                       : m.body().second().as_nonce();
                        return build::sig(Signal::start_prot(a, b, na, nb), [a, na, nb, b] {
                            return build::out(Event::send(a, Agent::Intruder, detail::msg7(nb, b)), [a, na, nb, b] {
                                return build::sig(Signal::end_prot(a, b, na, nb),
                                                  [] { return build::terminate_then_skip(); });
                            });
                        });
                    });
                });
            });
        });
    });
}

inline Proc responder(NsVariant v, const Universe& u, Agent b, Nonce nb)
{
    MessageList accepted;
    for (Nonce na : u.nonces()) {
        for (Agent a : u.peers_of(b)) accepted.push_back(detail::msg3(na, a, b));
    }
    return build::in(Channel::Recv, Agent::Intruder, b, accepted, [v, b, nb](const Message& m) {
        Nonce na = m.body().body().as_nonce();
        Agent a = m.body().second().owner();
        return detail::fetch_key(v, b, a, [v, b, nb, na, a] {
            return build::sig(Signal::claim_secret(b, nb, {a}), [v, b, nb, na, a] {
                return build::sig(Signal::start_prot(b, a, na, nb), [v, b, nb, na, a] {
                    return build::out(Event::send(b, Agent::Intruder, detail::msg6(v, na, nb, b, a)), [b, nb, na, a] {
                        return build::in(Channel::Recv, Agent::Intruder, b, {detail::msg7(nb, b)},
                                         [b, nb, na, a](const Message&) {
                                             return build::sig(Signal::end_prot(b, a, na, nb),
                                                               [] { return build::terminate_then_skip(); });
                                         });
                    });
                });
            });
        });
    });
}

// Key server: answers (X, Y) requests with Y's certified public key until
// the run terminates.
inline Proc key_server(const Universe& u)
{
    std::vector<std::pair<Agent, Agent>> requests;
    for (Agent x : u.agents) {
        if (x == Agent::Server) continue;
        for (Agent y : u.agents) {
            if (y != x && y != Agent::Server) requests.emplace_back(x, y);
        }
    }
    std::function<itree::Process<Event, bool>(const bool&)> round = [requests](const bool&) {
        std::vector<itree::Process<Event, bool>> options;
        for (auto [x, y] : requests) {
            Event req = Event::send_s(x, Agent::Server, Message::pair(msg::mag(x), msg::mag(y)));
            Event rep = Event::recv_s(Agent::Server, x, detail::key_cert(y));
            options.push_back(itree::seq(itree::outp(req), [rep](const Unit&) {
                return itree::fmap(itree::outp(rep), [](const Unit&) { return true; });
            }));
        }
        options.push_back(itree::fmap(itree::outp(Event::terminate()), [](const Unit&) { return false; }));
        return itree::ext_choice_all(options);
    };
    return itree::discard(itree::iterate<Event, bool>([](const bool& running) { return running; }, round, true));
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Intruder
//
// Exponentiation builds no pairs; the signed variant pairs known messages
// because its first message is a pair.
enum class BuildRule { Bounded, Exponentiation, ExponentiationPairs };

struct BuildBounds {
    std::size_t nc = 1;
    std::size_t ne = 1;
    std::size_t l = 2;
};

// The messages an intruder can build from `known` for a model.
inline MessageList intruder_build(BuildRule rule, const BuildBounds& b, std::span<const Message> known)
{
    if (rule == BuildRule::Exponentiation) return msg::dh_build(known);
    if (rule == BuildRule::ExponentiationPairs) {
        return msg::list_union(msg::dh_build(known), msg::pair2(known, known, std::numeric_limits<std::size_t>::max()));
    }
    std::vector<PubKey> pks;
    for (PubKey k : msg::extract_pkey(known)) pks.push_back(k);
    return msg::build_n(known, pks, b.nc, b.ne, b.l);
}

// Network vocabulary: what honest agents may put on, and accept from, the
// network. The intruder only offers hear/fake events inside it; anything
// outside would be blocked by the network synchronisation anyway.
struct Vocabulary {
    std::vector<std::pair<Agent, Message>> sendable;    // (sender, message)
    std::vector<std::pair<Agent, Message>> receivable;  // (recipient, message)
    std::vector<Agent> key_queries;                     // NSPK7: whose key the intruder may ask for
};

struct IntruderSpec {
    Knowledge initial;
    MessageList secrets;
    BuildRule rule = BuildRule::Bounded;
    BuildBounds bounds;
    Vocabulary vocabulary;
};

namespace detail {

// Shared cache of intruder states keyed by knowledge; states recur along
// every fake and leak event.
class IntruderStates : public std::enable_shared_from_this<IntruderStates> {
public:
    explicit IntruderStates(IntruderSpec spec) : spec_(std::move(spec))
    {
        dedup(spec_.vocabulary.sendable);
        dedup(spec_.vocabulary.receivable);
    }

    Proc at(const Knowledge& k)
    {
        {
            std::lock_guard<std::mutex> lock{mu_};
            if (auto it = cache_.find(k.messages()); it != cache_.end()) return it->second;
        }
        Proc p = make(k);
        std::lock_guard<std::mutex> lock{mu_};
        return cache_.emplace(k.messages(), p).first->second;
    }

    const IntruderSpec& spec() const { return spec_; }

private:
    static void dedup(std::vector<std::pair<Agent, Message>>& v)
    {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    Proc make(const Knowledge& k)
    {
        std::weak_ptr<IntruderStates> self = weak_from_this();
        auto state = [self](Knowledge next) {
            return itree::Continuation<Event, Unit>{[self, next] { return self.lock()->at(next); }};
        };
        auto learn = [&k](const Message& m) { return Knowledge{msg::breakm(k.inserted(m).messages())}; };

        itree::Choices<Event, Unit> c;
        for (const auto& [from, m] : spec_.vocabulary.sendable) {
            c.emplace_back(Event::hear(from, Agent::Intruder, m), state(learn(m)));
        }
        msg::UniqueList built{intruder_build(spec_.rule, spec_.bounds, k.messages())};
        for (const auto& [to, m] : spec_.vocabulary.receivable) {
            if (built.contains(m)) c.emplace_back(Event::fake(Agent::Intruder, to, m), state(k));
        }
        for (const Message& s : spec_.secrets) {
            if (k.contains(s)) c.emplace_back(Event::leak(s), state(k));
        }
        for (Agent who : spec_.vocabulary.key_queries) {
            Message req = Message::pair(msg::mag(Agent::Intruder), msg::mag(who));
            c.emplace_back(Event::send_s(Agent::Intruder, Agent::Server, req), state(k));
            Message cert = key_cert(who);
            c.emplace_back(Event::recv_s(Agent::Server, Agent::Intruder, cert), state(learn(cert)));
        }
        c.emplace_back(Event::terminate(), itree::Continuation<Event, Unit>::now(itree::skip<Event>()));
        return Proc::vis(std::move(c));
    }

    IntruderSpec spec_;
    std::mutex mu_;
    std::map<MessageList, Proc> cache_;
};

}  // namespace detail

// The recursive intruder before leak restriction and renaming.
inline Proc intruder_core(std::shared_ptr<detail::IntruderStates> states)
{
    Proc p = states->at(states->spec().initial);
    // Keep the cache alive for as long as the process is reachable.
    return Proc::sil([p, states] { return p; });
}

// Each secret can be leaked once.
inline Proc leak_once(const MessageList& secrets)
{
    std::vector<Proc> each;
    for (const Message& s : secrets) each.push_back(itree::outp(Event::leak(s)));
    return itree::interleave_all(each);
}

inline Event intruder_rename(const Event& e)
{
    if (e.channel == Channel::Hear) return e.with_channel(Channel::Send);
    if (e.channel == Channel::Fake) return e.with_channel(Channel::Recv);
    return e;
}

inline Proc intruder_process(const IntruderSpec& spec)
{
    auto states = std::make_shared<detail::IntruderStates>(spec);
    Events leaks = Events::where([](const Event& e) { return e.channel == Channel::Leak; });
    Proc restricted = itree::discard(itree::par(intruder_core(states), leaks, leak_once(spec.secrets)));
    Proc terminable = itree::exception(restricted, term_event(), itree::skip<Event>());
    return itree::rename<Event, Unit>(terminable, intruder_rename);
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Models
//
struct ProtocolModel {
    std::string name;
    Proc root;
    Universe universe;
    IntruderSpec intruder;

    MessageList secrets() const { return intruder.secrets; }

    // Intruder knowledge after a trace, replaying what it heard.
    Knowledge knowledge_after(const Trace& t) const
    {
        Knowledge k = intruder.initial;
        for (const Event& e : t) {
            bool heard = (e.channel == Channel::Send && e.dst == Agent::Intruder) ||
                         (e.channel == Channel::RecvS && e.dst == Agent::Intruder);
            if (heard) k = Knowledge{msg::breakm(k.inserted(*e.msg).messages())};
        }
        return k;
    }
};

namespace detail {

inline Proc network(const Proc& alice, const Proc& bob, const Proc& intruder)
{
    Proc agents = itree::discard(itree::par(alice, term_event(), bob));
    return itree::discard(itree::par(agents, on_channels({Channel::Send, Channel::Recv, Channel::Terminate}), intruder));
}

inline MessageList all_nonces_but_intruder(const Universe& u)
{
    MessageList out;
    for (Agent a : u.agents) {
        if (a != Agent::Intruder) out.push_back(msg::mnon(a));
    }
    return out;
}

inline Vocabulary ns_vocabulary(NsVariant v, const Universe& u)
{
    Vocabulary voc;
    const Agent alice = Agent::Alice;
    const Agent bob = Agent::Bob;
    for (Agent peer : u.peers_of(alice)) voc.sendable.emplace_back(alice, msg3(Nonce{alice}, alice, peer));
    for (Agent peer : u.peers_of(alice)) {
        for (Nonce nb : u.nonces()) voc.sendable.emplace_back(alice, msg7(nb, peer));
    }
    for (Agent peer : u.peers_of(bob)) {
        for (Nonce na : u.nonces()) voc.sendable.emplace_back(bob, msg6(v, na, Nonce{bob}, bob, peer));
    }
    for (Agent peer : u.peers_of(alice)) {
        for (Nonce nb : u.nonces()) voc.receivable.emplace_back(alice, msg6(v, Nonce{alice}, nb, peer, alice));
    }
    for (Nonce na : u.nonces()) {
        for (Agent a : u.peers_of(bob)) voc.receivable.emplace_back(bob, msg3(na, a, bob));
    }
    voc.receivable.emplace_back(bob, msg7(Nonce{bob}, bob));
    if (v == NsVariant::Nspk7) voc.key_queries = {Agent::Alice, Agent::Bob};
    return voc;
}

inline ProtocolModel needham_schroeder(NsVariant v, std::string name)
{
    const Universe& u = v == NsVariant::Nspk7 ? nspk7_universe() : nspk3_universe();

    IntruderSpec spec;
    MessageList init = u.agent_msgs();
    if (v == NsVariant::Nspk7) {
        init.push_back(msg::mpk(Agent::Server));
        init.push_back(msg::mpk(Agent::Intruder));
    } else {
        for (const Message& pk : u.pk_msgs()) init.push_back(pk);
    }
    init.push_back(msg::mnon(Agent::Intruder));
    init.push_back(msg::msk(Agent::Intruder));
    spec.initial = Knowledge{init};
    spec.secrets = all_nonces_but_intruder(u);
    spec.rule = BuildRule::Bounded;
    spec.bounds = BuildBounds{1, 1, 2};
    spec.vocabulary = ns_vocabulary(v, u);

    Proc alice = initiator(v, u, Agent::Alice, Nonce{Agent::Alice});
    Proc bob = responder(v, u, Agent::Bob, Nonce{Agent::Bob});
    Proc root = network(alice, bob, intruder_process(spec));
    if (v == NsVariant::Nspk7) {
        root = itree::discard(itree::par(root, on_channels({Channel::SendS, Channel::RecvS, Channel::Terminate}),
                                         key_server(u)));
    }
    return ProtocolModel{std::move(name), root, u, std::move(spec)};
}

}  // namespace detail

inline ProtocolModel nspk3() { return detail::needham_schroeder(NsVariant::Nspk3, "NSPK3"); }
inline ProtocolModel nslpk3() { return detail::needham_schroeder(NsVariant::Nslpk3, "NSLPK3"); }
inline ProtocolModel nspk7() { return detail::needham_schroeder(NsVariant::Nspk7, "NSPK7"); }

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Diffie-Hellman
//
namespace detail {

// Payloads an honest recipient accepts inside a symmetric encryption.
inline MessageList dh_payloads(const Universe& u)
{
    MessageList out = u.agent_msgs();
    for (const Message& m : u.nonce_msgs()) out.push_back(m);
    for (const Message& m : u.pk_msgs()) out.push_back(m);
    return out;
}

// Both spellings of the key shared through g^own and g^peer.
inline MessageList dh_keys(Nonce own, Nonce peer)
{
    return msg::remdups(std::vector<Message>{msg::g_pow(peer.owner, own.owner), msg::g_pow(own.owner, peer.owner)});
}

inline MessageList dh_final(const Universe& u, Nonce own, Nonce peer)
{
    MessageList out;
    for (const Message& s : dh_payloads(u)) {
        for (const Message& k : dh_keys(own, peer)) out.push_back(Message::senc(s, k));
    }
    return out;
}

inline MessageList exponentials(const Universe& u)
{
    MessageList out;
    for (Nonce n : u.nonces()) out.push_back(msg::g_pow(n.owner));
    return out;
}

inline MessageList signed_exponentials(const Universe& u, Agent signer)
{
    MessageList out;
    for (Nonce n : u.nonces()) out.push_back(Message::sig(msg::g_pow(n.owner), PrivKey{signer}));
    return out;
}

inline Message dhds_msg1(Nonce n, Agent a)
{
    return Message::pair(Message::sig(msg::g_pow(n.owner), PrivKey{a}), msg::mpk(a));
}

// Initiator sends g^na, receives g^x and sends the secret under (g^x)^na.
inline Proc dh_initiator(const Universe& u, Agent a, const Message& secret)
{
    Nonce na{a};
    return build::out(Event::send(a, Agent::Intruder, msg::g_pow(a)), [u, a, na, secret] {
        return build::in(Channel::Recv, Agent::Intruder, a, exponentials(u), [a, na, secret](const Message& gx) {
            Message key = Message::modexp(gx, na);
            return build::out(Event::send(a, Agent::Intruder, Message::senc(secret, key)),
                              [] { return build::terminate_then_skip(); });
        });
    });
}

// Responder sends g^nb, receives g^y and then a payload under the shared key.
inline Proc dh_responder(const Universe& u, Agent b)
{
    Nonce nb{b};
    return build::out(Event::send(b, Agent::Intruder, msg::g_pow(b)), [u, b, nb] {
        return build::in(Channel::Recv, Agent::Intruder, b, exponentials(u), [u, b, nb](const Message& gy) {
            return build::in(Channel::Recv, Agent::Intruder, b, dh_final(u, nb, gy.as_nonce()),
                             [](const Message&) { return build::terminate_then_skip(); });
        });
    });
}

// Signed variant: the initiator waits for the responder's signed g^nb
// (verified with the responder's key it already holds), then sends its own
// signed g^na with its public key, then the secret.
inline Proc dhds_initiator(const Universe& u, Agent a, Agent b, const Message& secret)
{
    Nonce na{a};
    return build::in(Channel::Recv, Agent::Intruder, a, signed_exponentials(u, b), [a, na, secret](const Message& m) {
        Message gx = m.body();
        return build::out(Event::send(a, Agent::Intruder, dhds_msg1(na, a)), [a, na, gx, secret] {
            return build::out(Event::send(a, Agent::Intruder, Message::senc(secret, Message::modexp(gx, na))),
                              [] { return build::terminate_then_skip(); });
        });
    });
}

inline Proc dhds_responder(const Universe& u, Agent b, Agent a)
{
    Nonce nb{b};
    MessageList firsts;
    for (Nonce n : u.nonces()) firsts.push_back(dhds_msg1(n, a));
    return build::out(Event::send(b, Agent::Intruder, Message::sig(msg::g_pow(b), PrivKey{b})), [u, b, nb, firsts] {
        return build::in(Channel::Recv, Agent::Intruder, b, firsts, [u, nb, b](const Message& m) {
            Nonce y = m.body().body().as_nonce();
            return build::in(Channel::Recv, Agent::Intruder, b, dh_final(u, nb, y),
                             [](const Message&) { return build::terminate_then_skip(); });
        });
    });
}

inline IntruderSpec dh_intruder(const Universe& u, MessageList secrets)
{
    IntruderSpec spec;
    MessageList init = u.agent_msgs();
    init.push_back(Message::expg());
    init.push_back(msg::mnon(Agent::Intruder));
    spec.initial = Knowledge{init};
    spec.secrets = std::move(secrets);
    spec.rule = BuildRule::Exponentiation;
    return spec;
}

}  // namespace detail

inline ProtocolModel dh()
{
    const Universe& u = nspk3_universe();
    const Message secret = msg::mpk(Agent::Alice);
    IntruderSpec spec = detail::dh_intruder(u, {secret});

    Vocabulary& voc = spec.vocabulary;
    voc.sendable.emplace_back(Agent::Alice, msg::g_pow(Agent::Alice));
    for (Nonce x : u.nonces()) {
        voc.sendable.emplace_back(Agent::Alice, Message::senc(secret, msg::g_pow(x.owner, Agent::Alice)));
    }
    voc.sendable.emplace_back(Agent::Bob, msg::g_pow(Agent::Bob));
    for (const Message& gx : detail::exponentials(u)) {
        voc.receivable.emplace_back(Agent::Alice, gx);
        voc.receivable.emplace_back(Agent::Bob, gx);
    }
    for (Nonce y : u.nonces()) {
        for (const Message& m : detail::dh_final(u, Nonce{Agent::Bob}, y)) voc.receivable.emplace_back(Agent::Bob, m);
    }

    Proc root = detail::network(detail::dh_initiator(u, Agent::Alice, secret), detail::dh_responder(u, Agent::Bob),
                                intruder_process(spec));
    return ProtocolModel{"DH", root, u, std::move(spec)};
}

inline ProtocolModel dhds()
{
    const Universe& u = nspk3_universe();
    const Message secret = msg::mpk(Agent::Bob);
    IntruderSpec spec = detail::dh_intruder(u, {secret});
    spec.rule = BuildRule::ExponentiationPairs;

    Vocabulary& voc = spec.vocabulary;
    voc.sendable.emplace_back(Agent::Alice, detail::dhds_msg1(Nonce{Agent::Alice}, Agent::Alice));
    for (Nonce x : u.nonces()) {
        voc.sendable.emplace_back(Agent::Alice, Message::senc(secret, msg::g_pow(x.owner, Agent::Alice)));
    }
    voc.sendable.emplace_back(Agent::Bob, Message::sig(msg::g_pow(Agent::Bob), PrivKey{Agent::Bob}));
    for (const Message& m : detail::signed_exponentials(u, Agent::Bob)) voc.receivable.emplace_back(Agent::Alice, m);
    for (Nonce n : u.nonces()) voc.receivable.emplace_back(Agent::Bob, detail::dhds_msg1(n, Agent::Alice));
    for (Nonce y : u.nonces()) {
        for (const Message& m : detail::dh_final(u, Nonce{Agent::Bob}, y)) voc.receivable.emplace_back(Agent::Bob, m);
    }

    Proc root = detail::network(detail::dhds_initiator(u, Agent::Alice, Agent::Bob, secret),
                                detail::dhds_responder(u, Agent::Bob, Agent::Alice), intruder_process(spec));
    return ProtocolModel{"DHDS", root, u, std::move(spec)};
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Registry
//
inline const std::vector<std::string>& model_names()
{
    static const std::vector<std::string> names = {"NSPK3", "NSLPK3", "NSPK7", "DH", "DHDS"};
    return names;
}

inline std::optional<ProtocolModel> make_model(std::string_view name)
{
    if (name == "NSPK3") return nspk3();
    if (name == "NSLPK3") return nslpk3();
    if (name == "NSPK7") return nspk7();
    if (name == "DH") return dh();
    if (name == "DHDS") return dhds();
    return std::nullopt;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Authenticity (non-injective agreement on both nonces)
//
// `claimant` finishing a run it believes is with an honest peer Y is a
// violation unless Y earlier started a run with `claimant` on the same nonces.
inline bool is_agreement_failure(std::span<const Event> history, const Event& e, Agent claimant)
{
    if (e.channel != Channel::Sig || e.sig->kind != Signal::Kind::EndProt) return false;
    const Signal& end = *e.sig;
    if (end.self != claimant || end.peer == Agent::Intruder) return false;
    for (const Event& h : history) {
        if (h.channel == Channel::Sig && h.sig->kind == Signal::Kind::StartProt && h.sig->self == end.peer &&
            h.sig->peer == claimant && h.sig->na == end.na && h.sig->nb == end.nb) {
            return false;
        }
    }
    return true;
}

// A leaked secret that its owner claimed to share only with honest agents.
// Leaks from sessions an agent deliberately ran with the intruder do not
// count.
inline bool is_secrecy_failure(std::span<const Event> history, const Event& e)
{
    if (e.channel != Channel::Leak || !e.msg->is(msg::Tag::Non)) return false;
    const Nonce n = e.msg->as_nonce();
    for (const Event& h : history) {
        if (h.channel != Channel::Sig || h.sig->kind != Signal::Kind::ClaimSecret || h.sig->na != n) continue;
        const auto& ps = h.sig->parties;
        if (std::find(ps.begin(), ps.end(), Agent::Intruder) == ps.end()) return true;
    }
    return false;
}

inline bool violates_authenticity(const Trace& t, Agent claimant)
{
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (is_agreement_failure(std::span<const Event>{t.data(), i}, t[i], claimant)) return true;
    }
    return false;
}

}  // namespace dyanim::proto

#endif  // DYANIM_PROTO_HPP
