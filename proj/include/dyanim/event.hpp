#pragma once
#ifndef DYANIM_EVENT_HPP
#define DYANIM_EVENT_HPP

// Channels, signals and events of the protocol models, with their textual
// form as shown by the animator.

#include "dyanim/msg.hpp"

#include <algorithm>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dyanim::proto {

using msg::Agent;
using msg::Message;
using msg::Nonce;

enum class Channel : std::uint8_t { Env, Send, Recv, Hear, Fake, SendS, RecvS, Leak, Sig, Terminate };

inline std::string_view name(Channel c)
{
    switch (c) {
        case Channel::Env: return "env";
        case Channel::Send: return "send";
        case Channel::Recv: return "recv";
        case Channel::Hear: return "hear";
        case Channel::Fake: return "fake";
        case Channel::SendS: return "send_s";
        case Channel::RecvS: return "recv_s";
        case Channel::Leak: return "leak";
        case Channel::Sig: return "sig";
        case Channel::Terminate: return "terminate";
    }
    return "?";
}

inline std::optional<Channel> channel_from_name(std::string_view s)
{
    for (int i = 0; i <= static_cast<int>(Channel::Terminate); ++i) {
        auto c = static_cast<Channel>(i);
        if (name(c) == s) return c;
    }
    return std::nullopt;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
//
struct Signal {
    enum class Kind : std::uint8_t { StartProt, EndProt, ClaimSecret };

    Kind kind{};
    Agent self{};
    Agent peer{};
    Nonce na{};
    Nonce nb{};
    std::vector<Agent> parties;  // ClaimSecret only; sorted, unique

    static Signal start_prot(Agent a, Agent b, Nonce na, Nonce nb) { return {Kind::StartProt, a, b, na, nb, {}}; }
    static Signal end_prot(Agent a, Agent b, Nonce na, Nonce nb) { return {Kind::EndProt, a, b, na, nb, {}}; }
    static Signal claim_secret(Agent a, Nonce n, std::vector<Agent> parties)
    {
        std::sort(parties.begin(), parties.end());
        parties.erase(std::unique(parties.begin(), parties.end()), parties.end());
        return {Kind::ClaimSecret, a, Agent{}, n, Nonce{}, std::move(parties)};
    }

    friend auto operator<=>(const Signal&, const Signal&) = default;
    friend bool operator==(const Signal&, const Signal&) = default;
};

inline std::string render(const Signal& s)
{
    auto nonce = [](Nonce n) { return "(" + msg::to_string(n) + ")"; };
    switch (s.kind) {
        case Signal::Kind::StartProt:
        case Signal::Kind::EndProt:
            return std::string{s.kind == Signal::Kind::StartProt ? "StartProt " : "EndProt "} +
                   msg::to_string(s.self) + " " + msg::to_string(s.peer) + " " + nonce(s.na) + " " + nonce(s.nb);
        case Signal::Kind::ClaimSecret: {
            std::string out = "ClaimSecret " + msg::to_string(s.self) + " " + nonce(s.na) + " (Set [ ";
            for (std::size_t i = 0; i < s.parties.size(); ++i) {
                if (i) out += ", ";
                out += msg::to_string(s.parties[i]);
            }
            if (!s.parties.empty()) out += ' ';
            return out + "])";
        }
    }
    return "?";
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Event: a channel with its payload. Fields unused by a channel stay at their
// defaults so that the derived ordering is channel first, then payload.
//
struct Event {
    Channel channel{};
    Agent src{};
    Agent dst{};
    std::optional<Message> msg;
    std::optional<Signal> sig;

    static Event env(Agent a, Agent b) { return {Channel::Env, a, b, std::nullopt, std::nullopt}; }
    static Event send(Agent from, Agent to, Message m) { return {Channel::Send, from, to, std::move(m), std::nullopt}; }
    static Event recv(Agent from, Agent to, Message m) { return {Channel::Recv, from, to, std::move(m), std::nullopt}; }
    static Event hear(Agent from, Agent to, Message m) { return {Channel::Hear, from, to, std::move(m), std::nullopt}; }
    static Event fake(Agent from, Agent to, Message m) { return {Channel::Fake, from, to, std::move(m), std::nullopt}; }
    static Event send_s(Agent from, Agent to, Message m) { return {Channel::SendS, from, to, std::move(m), std::nullopt}; }
    static Event recv_s(Agent from, Agent to, Message m) { return {Channel::RecvS, from, to, std::move(m), std::nullopt}; }
    static Event leak(Message m) { return {Channel::Leak, Agent{}, Agent{}, std::move(m), std::nullopt}; }
    static Event signal(Signal s) { return {Channel::Sig, Agent{}, Agent{}, std::nullopt, std::move(s)}; }
    static Event terminate() { return {Channel::Terminate, Agent{}, Agent{}, std::nullopt, std::nullopt}; }

    Event with_channel(Channel c) const
    {
        Event e = *this;
        e.channel = c;
        return e;
    }

    friend std::strong_ordering operator<=>(const Event& a, const Event& b)
    {
        if (auto c = a.channel <=> b.channel; c != 0) return c;
        if (auto c = a.src <=> b.src; c != 0) return c;
        if (auto c = a.dst <=> b.dst; c != 0) return c;
        if (auto c = a.msg <=> b.msg; c != 0) return c;
        if (a.sig == b.sig) return std::strong_ordering::equal;
        if (!a.sig) return std::strong_ordering::less;
        if (!b.sig) return std::strong_ordering::greater;
        return *a.sig < *b.sig ? std::strong_ordering::less : std::strong_ordering::greater;
    }
    friend bool operator==(const Event& a, const Event& b) { return (a <=> b) == 0; }
};

inline std::string render(const Event& e)
{
    auto arrow = [&e](std::string_view label, bool outgoing) {
        std::string out{label};
        out += " [";
        if (outgoing) {
            out += msg::to_string(e.src) + "=>" + msg::to_string(e.dst);
        } else {
            out += msg::to_string(e.dst) + "<=" + msg::to_string(e.src);
        }
        return out + "] " + msg::render(*e.msg);
    };
    switch (e.channel) {
        case Channel::Env: return "Env [" + msg::to_string(e.src) + "] " + msg::to_string(e.dst);
        case Channel::Send: return arrow("Send", true);
        case Channel::Recv: return arrow("Recv", false);
        case Channel::Hear: return arrow("Hear", true);
        case Channel::Fake: return arrow("Fake", false);
        case Channel::SendS: return arrow("Send_s", true);
        case Channel::RecvS: return arrow("Recv_s", false);
        case Channel::Leak: return "Leak " + msg::render(*e.msg);
        case Channel::Sig: return "Sig " + render(*e.sig);
        case Channel::Terminate: return "Terminate";
    }
    return "?";
}

inline std::string to_string(const Event& e) { return render(e); }

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Parsing (inverse of render)
//
namespace detail {

inline Nonce paren_nonce(msg::TextCursor& in)
{
    in.expect("(N ");
    Agent a = in.agent();
    in.expect(")");
    return Nonce{a};
}

inline Signal parse_signal(msg::TextCursor& in)
{
    for (auto kind : {Signal::Kind::StartProt, Signal::Kind::EndProt}) {
        if (in.accept(kind == Signal::Kind::StartProt ? "StartProt " : "EndProt ")) {
            Agent a = in.agent();
            in.expect(" ");
            Agent b = in.agent();
            in.expect(" ");
            Nonce na = paren_nonce(in);
            in.expect(" ");
            Nonce nb = paren_nonce(in);
            return Signal{kind, a, b, na, nb, {}};
        }
    }
    in.expect("ClaimSecret ");
    Agent a = in.agent();
    in.expect(" ");
    Nonce n = paren_nonce(in);
    in.expect(" (Set [ ");
    std::vector<Agent> parties;
    if (!in.accept("])")) {
        parties.push_back(in.agent());
        while (in.accept(", ")) parties.push_back(in.agent());
        in.expect(" ])");
    }
    Signal s = Signal::claim_secret(a, n, parties);
    if (s.parties != parties) in.fail("claim parties must be sorted and distinct");
    return s;
}

}  // namespace detail

inline Event parse_event(std::string_view text)
{
    msg::TextCursor in{text};
    auto arrowed = [&in](Channel c, bool outgoing) {
        in.expect(" [");
        Agent first = in.agent();
        in.expect(outgoing ? "=>" : "<=");
        Agent second = in.agent();
        in.expect("] ");
        Message m = msg::parse_message(in);
        return outgoing ? Event{c, first, second, m, std::nullopt} : Event{c, second, first, m, std::nullopt};
    };

    Event e;
    if (in.accept("Env [")) {
        Agent a = in.agent();
        in.expect("] ");
        e = Event::env(a, in.agent());
    } else if (in.accept("Send_s")) {
        e = arrowed(Channel::SendS, true);
    } else if (in.accept("Recv_s")) {
        e = arrowed(Channel::RecvS, false);
    } else if (in.accept("Send")) {
        e = arrowed(Channel::Send, true);
    } else if (in.accept("Recv")) {
        e = arrowed(Channel::Recv, false);
    } else if (in.accept("Hear")) {
        e = arrowed(Channel::Hear, true);
    } else if (in.accept("Fake")) {
        e = arrowed(Channel::Fake, false);
    } else if (in.accept("Leak ")) {
        e = Event::leak(msg::parse_message(in));
    } else if (in.accept("Sig ")) {
        e = Event::signal(detail::parse_signal(in));
    } else if (in.accept("Terminate")) {
        e = Event::terminate();
    } else {
        in.fail("unknown event");
    }
    if (!in.done()) in.fail("trailing characters");
    return e;
}

using Trace = std::vector<Event>;

// "[e1, e2, ..., ]" as printed by the animator.
inline std::string render(const Trace& t)
{
    std::string out = "[";
    for (const Event& e : t) {
        out += render(e);
        out += ", ";
    }
    return out + "]";
}

}  // namespace dyanim::proto

#endif  // DYANIM_EVENT_HPP
