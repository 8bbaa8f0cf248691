#pragma once
#ifndef DYANIM_WIRE_HPP
#define DYANIM_WIRE_HPP

// Structured encoding of messages and events for the line-delimited wire
// protocol, and the command grammar shared by the prompt and the wire.

#include "dyanim/event.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dyanim::wire {

using json = nlohmann::json;
using msg::Agent;
using msg::Message;
using msg::Tag;
using proto::Channel;
using proto::Event;
using proto::Signal;

class WireError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Messages
//
inline Agent agent_of(const json& j)
{
    if (!j.is_string()) throw WireError("agent must be a string");
    auto a = msg::agent_from_name(j.get<std::string>());
    if (!a) throw WireError("unknown agent '" + j.get<std::string>() + "'");
    return *a;
}

inline json agent_json(Agent a) { return std::string{msg::name(a)}; }

inline json to_json(const Message& m)
{
    json j;
    switch (m.tag()) {
        case Tag::Ag: j = {{"tag", "agent"}, {"agent", agent_json(m.owner())}}; break;
        case Tag::Non: j = {{"tag", "nonce"}, {"of", agent_json(m.owner())}}; break;
        case Tag::Kp: j = {{"tag", "pk"}, {"of", agent_json(m.owner())}}; break;
        case Tag::Ks: j = {{"tag", "sk"}, {"of", agent_json(m.owner())}}; break;
        case Tag::Cmp: j = {{"tag", "pair"}, {"first", to_json(m.body())}, {"second", to_json(m.second())}}; break;
        case Tag::Enc: j = {{"tag", "enc"}, {"body", to_json(m.body())}, {"pk", agent_json(m.owner())}}; break;
        case Tag::Sig: j = {{"tag", "sig"}, {"body", to_json(m.body())}, {"sk", agent_json(m.owner())}}; break;
        case Tag::SEnc: j = {{"tag", "senc"}, {"body", to_json(m.body())}, {"key", to_json(m.second())}}; break;
        case Tag::Expg: j = {{"tag", "g"}}; break;
        case Tag::ModExp: j = {{"tag", "modexp"}, {"base", to_json(m.body())}, {"nonce", agent_json(m.owner())}}; break;
    }
    j["text"] = msg::render(m);
    return j;
}

namespace detail {

// Reports missing or mistyped fields as WireError.
template <typename F>
auto decoding(const char* what, F f) -> decltype(f())
{
    try {
        return f();
    } catch (const json::exception& e) {
        throw WireError(std::string{"malformed "} + what + ": " + e.what());
    }
}

}  // namespace detail

inline Message message_from_json(const json& j);

inline Message message_from_json_fields(const json& j)
{
    if (!j.is_object() || !j.contains("tag")) throw WireError("message must be an object with a tag");
    const std::string tag = j.at("tag").get<std::string>();
    auto owner = [&j](const char* field) { return agent_of(j.at(field)); };
    if (tag == "agent") return msg::mag(owner("agent"));
    if (tag == "nonce") return msg::mnon(owner("of"));
    if (tag == "pk") return msg::mpk(owner("of"));
    if (tag == "sk") return msg::msk(owner("of"));
    if (tag == "pair") return Message::pair(message_from_json(j.at("first")), message_from_json(j.at("second")));
    if (tag == "enc") return Message::enc(message_from_json(j.at("body")), msg::PubKey{owner("pk")});
    if (tag == "sig") return Message::sig(message_from_json(j.at("body")), msg::PrivKey{owner("sk")});
    if (tag == "senc") return Message::senc(message_from_json(j.at("body")), message_from_json(j.at("key")));
    if (tag == "g") return Message::expg();
    if (tag == "modexp") return Message::modexp(message_from_json(j.at("base")), msg::Nonce{owner("nonce")});
    throw WireError("unknown message tag '" + tag + "'");
}

inline Message message_from_json(const json& j)
{
    return detail::decoding("message", [&j] { return message_from_json_fields(j); });
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Events
//
inline std::string_view kind_name(Signal::Kind k)
{
    switch (k) {
        case Signal::Kind::StartProt: return "StartProt";
        case Signal::Kind::EndProt: return "EndProt";
        case Signal::Kind::ClaimSecret: return "ClaimSecret";
    }
    return "?";
}

inline json to_json(const Signal& s)
{
    json j = {{"kind", kind_name(s.kind)}, {"agent", agent_json(s.self)}};
    if (s.kind == Signal::Kind::ClaimSecret) {
        j["nonce"] = agent_json(s.na.owner);
        json parties = json::array();
        for (Agent a : s.parties) parties.push_back(agent_json(a));
        j["parties"] = parties;
    } else {
        j["peer"] = agent_json(s.peer);
        j["na"] = agent_json(s.na.owner);
        j["nb"] = agent_json(s.nb.owner);
    }
    return j;
}

inline Signal signal_from_json(const json& j)
{
    const std::string kind = j.at("kind").get<std::string>();
    Agent self = agent_of(j.at("agent"));
    if (kind == "ClaimSecret") {
        std::vector<Agent> parties;
        for (const json& p : j.at("parties")) parties.push_back(agent_of(p));
        return Signal::claim_secret(self, msg::Nonce{agent_of(j.at("nonce"))}, parties);
    }
    msg::Nonce na{agent_of(j.at("na"))};
    msg::Nonce nb{agent_of(j.at("nb"))};
    if (kind == "StartProt") return Signal::start_prot(self, agent_of(j.at("peer")), na, nb);
    if (kind == "EndProt") return Signal::end_prot(self, agent_of(j.at("peer")), na, nb);
    throw WireError("unknown signal kind '" + kind + "'");
}

inline bool has_endpoints(Channel c)
{
    return c != Channel::Leak && c != Channel::Sig && c != Channel::Terminate;
}

inline json to_json(const Event& e)
{
    json j = {{"channel", proto::name(e.channel)}};
    if (has_endpoints(e.channel)) {
        j["src"] = agent_json(e.src);
        j["dst"] = agent_json(e.dst);
    }
    if (e.msg) j["msg"] = to_json(*e.msg);
    if (e.sig) j["signal"] = to_json(*e.sig);
    j["text"] = proto::render(e);
    return j;
}

inline Event event_from_json_fields(const json& j)
{
    if (!j.is_object()) throw WireError("event must be an object");
    auto c = proto::channel_from_name(j.at("channel").get<std::string>());
    if (!c) throw WireError("unknown channel");
    Event e;
    e.channel = *c;
    if (has_endpoints(*c)) {
        e.src = agent_of(j.at("src"));
        e.dst = agent_of(j.at("dst"));
    }
    if (j.contains("msg")) e.msg = message_from_json(j.at("msg"));
    if (j.contains("signal")) e.sig = signal_from_json(j.at("signal"));
    return e;
}

inline Event event_from_json(const json& j)
{
    return detail::decoding("event", [&j] { return event_from_json_fields(j); });
}

inline json to_json(const proto::Trace& t)
{
    json arr = json::array();
    for (const Event& e : t) arr.push_back(to_json(e));
    return arr;
}

inline json events_json(const std::vector<Event>& es) { return to_json(es); }

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// WireMessage: {"kind": ..., "body": {...}}
//
namespace kind {
inline constexpr std::string_view menu = "menu";
inline constexpr std::string_view chosen = "chosen";
inline constexpr std::string_view trace = "trace";
inline constexpr std::string_view reach_result = "reach_result";
inline constexpr std::string_view error = "error";
inline constexpr std::string_view deadlock = "deadlock";
inline constexpr std::string_view terminated = "terminated";
inline constexpr std::string_view model_list = "model_list";
inline constexpr std::string_view progress = "progress";
inline constexpr std::string_view knowledge = "knowledge";
}  // namespace kind

struct WireMessage {
    std::string kind;
    json body = json::object();

    json to_json() const { return {{"kind", kind}, {"body", body}}; }
    std::string dump() const { return to_json().dump(); }

    static WireMessage parse(std::string_view line)
    {
        json j = json::parse(line.begin(), line.end(), nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
            throw WireError("malformed message: expected {\"kind\": ..., \"body\": {...}}");
        }
        WireMessage m{j["kind"].get<std::string>(), j.value("body", json::object())};
        if (!m.body.is_object()) throw WireError("malformed message: body must be an object");
        return m;
    }
};

inline WireMessage error_message(std::string text, std::optional<std::size_t> line = std::nullopt)
{
    WireMessage m{std::string{kind::error}, {{"message", std::move(text)}}};
    if (line) m.body["line"] = *line;
    return m;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Command grammar
//
//   <n> | Auto <depth> | Rand <depth> [seed]
//   AReach <depth> %e%[,%e%...] [monitor %e%[,%e%...]]
//   RReach <depth> <tries> [seed] %e%[,%e%...] [monitor ...]
//   Check <trace-file> | Knows | Undo | Reset | Quit
//
// Inside %...% an event is written as rendered; "%@name%" names a preset of
// the model (e.g. %@Auth Bob%).
//
class CommandError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TargetSpec {
    std::string text;  // as written between the % signs
    bool preset = false;
    std::optional<Event> event;  // set when not a preset

    friend bool operator==(const TargetSpec&, const TargetSpec&) = default;
};

namespace cmd {
struct Choose { std::size_t index; };
struct Auto { std::size_t depth; };
struct Rand { std::size_t depth; std::optional<std::uint64_t> seed; };
struct AReach { std::size_t depth; std::vector<TargetSpec> targets; std::vector<TargetSpec> monitors; };
struct RReach {
    std::size_t depth;
    std::size_t tries;
    std::optional<std::uint64_t> seed;
    std::vector<TargetSpec> targets;
    std::vector<TargetSpec> monitors;
};
struct Check { std::string path; };
struct Knows {};
struct Undo {};
struct Reset {};
struct Quit {};
struct Cancel {};
}  // namespace cmd

using Command = std::variant<cmd::Choose, cmd::Auto, cmd::Rand, cmd::AReach, cmd::RReach, cmd::Check, cmd::Knows,
                             cmd::Undo, cmd::Reset, cmd::Quit, cmd::Cancel>;

namespace detail {

class Tokens {
public:
    explicit Tokens(std::string_view s) : s_(s) {}

    void skip_ws()
    {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == ',')) ++pos_;
    }

    bool done()
    {
        skip_ws();
        return pos_ >= s_.size();
    }

    char peek()
    {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    std::string_view word()
    {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != ',') ++pos_;
        return s_.substr(start, pos_ - start);
    }

    std::string_view rest()
    {
        skip_ws();
        std::string_view r = s_.substr(pos_);
        pos_ = s_.size();
        while (!r.empty() && (r.back() == ' ' || r.back() == '\t' || r.back() == '\r')) r.remove_suffix(1);
        return r;
    }

    // The text between a pair of % signs.
    std::string_view quoted()
    {
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != '%') throw CommandError("expected %<event>%");
        std::size_t close = s_.find('%', pos_ + 1);
        if (close == std::string_view::npos) throw CommandError("unterminated %<event>%");
        std::string_view inner = s_.substr(pos_ + 1, close - pos_ - 1);
        pos_ = close + 1;
        return inner;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

template <typename T>
T number(std::string_view w, const char* what)
{
    T v{};
    auto [p, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (w.empty() || ec != std::errc{} || p != w.data() + w.size()) {
        throw CommandError(std::string{what} + " must be a non-negative integer, got '" + std::string{w} + "'");
    }
    return v;
}

inline TargetSpec target(std::string_view text)
{
    TargetSpec t{std::string{text}, false, std::nullopt};
    if (!text.empty() && text.front() == '@') {
        t.preset = true;
        t.text = std::string{text.substr(1)};
        return t;
    }
    try {
        t.event = proto::parse_event(text);
    } catch (const msg::ParseError& e) {
        throw CommandError("cannot parse event '" + std::string{text} + "': " + e.what());
    }
    return t;
}

inline void targets_and_monitors(Tokens& in, std::vector<TargetSpec>& targets, std::vector<TargetSpec>& monitors)
{
    while (in.peek() == '%') targets.push_back(target(in.quoted()));
    if (targets.empty()) throw CommandError("expected at least one %<event>% target");
    if (in.done()) return;
    if (in.word() != "monitor") throw CommandError("expected 'monitor' or end of command");
    while (in.peek() == '%') monitors.push_back(target(in.quoted()));
    if (monitors.empty()) throw CommandError("expected at least one %<event>% after 'monitor'");
    if (!in.done()) throw CommandError("trailing input after monitors");
}

}  // namespace detail

inline Command parse_command(std::string_view line)
{
    using namespace cmd;
    detail::Tokens in{line};
    if (in.done()) throw CommandError("empty command");
    std::string_view head = in.word();
    auto finish = [&in](Command c) {
        if (!in.done()) throw CommandError("unexpected trailing input");
        return c;
    };
    auto depth = [&in] {
        if (in.done()) throw CommandError("missing depth");
        return detail::number<std::size_t>(in.word(), "depth");
    };

    if (!head.empty() && head.front() >= '0' && head.front() <= '9') {
        return finish(Choose{detail::number<std::size_t>(head, "choice")});
    }
    if (head == "Auto") return finish(Auto{depth()});
    if (head == "Rand") {
        Rand r{depth(), std::nullopt};
        if (!in.done()) r.seed = detail::number<std::uint64_t>(in.word(), "seed");
        return finish(r);
    }
    if (head == "AReach") {
        AReach r{depth(), {}, {}};
        detail::targets_and_monitors(in, r.targets, r.monitors);
        return r;
    }
    if (head == "RReach") {
        RReach r{depth(), 0, std::nullopt, {}, {}};
        if (in.done()) throw CommandError("missing tries");
        r.tries = detail::number<std::size_t>(in.word(), "tries");
        if (r.tries == 0) throw CommandError("tries must be at least 1");
        if (in.peek() != '%') r.seed = detail::number<std::uint64_t>(in.word(), "seed");
        detail::targets_and_monitors(in, r.targets, r.monitors);
        return r;
    }
    if (head == "Check") {
        std::string_view path = in.rest();
        if (path.empty()) throw CommandError("missing trace file");
        return Check{std::string{path}};
    }
    if (head == "Knows") return finish(Knows{});
    if (head == "Undo") return finish(Undo{});
    if (head == "Reset") return finish(Reset{});
    if (head == "Quit") return finish(Quit{});
    if (head == "Cancel") return finish(Cancel{});
    throw CommandError("unknown command '" + std::string{head} + "'");
}

inline bool is_search(const Command& c)
{
    return std::holds_alternative<cmd::Auto>(c) || std::holds_alternative<cmd::AReach>(c) ||
           std::holds_alternative<cmd::RReach>(c);
}

}  // namespace dyanim::wire

#endif  // DYANIM_WIRE_HPP
