#pragma once
#ifndef DYANIM_SERVICE_HPP
#define DYANIM_SERVICE_HPP

// The animator session service. Commands produce WireMessages; the CLI
// prints them as text (or JSON) and the wire service writes them one per
// line, so both front ends share every result.

#include "dyanim/explore.hpp"
#include "dyanim/proto.hpp"
#include "dyanim/wire.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace dyanim::facade {

using proto::Event;
using wire::json;
using wire::WireMessage;
using Emit = std::function<void(const WireMessage&)>;
using Predicate = explore::EventPredicate<Event>;

struct ServiceOptions {
    std::optional<std::size_t> depth_budget;  // searches deeper than this are refused
    unsigned workers = 1;
    std::size_t auto_listing_limit = 100;     // traces listed by Auto; the count is always exact
    std::size_t progress_every = 50000;
    std::filesystem::path base_dir;           // for relative Check paths
};

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Human-readable text for each WireMessage.
//
namespace text {

inline std::string quoted_list(const json& labels)
{
    std::string out = "[";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ",";
        out += "\"" + labels[i].get<std::string>() + "\"";
    }
    return out + "]";
}

inline std::string trace_line(const json& events)
{
    std::string out = "Trace: [";
    for (const json& e : events) out += e.at("text").get<std::string>() + ", ";
    return out + "]\n";
}

inline std::string format(const WireMessage& m)
{
    const json& b = m.body;
    std::ostringstream out;
    if (m.kind == wire::kind::menu) {
        const json& es = b.at("events");
        out << "Events:\n";
        for (std::size_t i = 0; i < es.size(); ++i) out << " (" << i + 1 << ") " << es[i].at("text").get<std::string>() << ";\n";
        out << "[Choose: 1-" << es.size() << "]: ";
    } else if (m.kind == wire::kind::chosen) {
        // The choice is already visible as the user's input.
    } else if (m.kind == wire::kind::deadlock) {
        out << "Deadlock: no events are enabled (Undo or Reset to continue).\n";
    } else if (m.kind == wire::kind::terminated) {
        out << "Terminated.\n";
    } else if (m.kind == wire::kind::error) {
        out << "Error";
        if (b.contains("line")) out << " (line " << b.at("line").get<std::size_t>() << ")";
        out << ": " << b.at("message").get<std::string>() << "\n";
    } else if (m.kind == wire::kind::model_list) {
        out << "Models:";
        for (const json& n : b.at("models")) out << " " << n.get<std::string>();
        out << "\n";
    } else if (m.kind == wire::kind::knowledge) {
        out << "Intruder knows: [";
        const json& ms = b.at("messages");
        for (std::size_t i = 0; i < ms.size(); ++i) out << (i ? ", " : "") << ms[i].at("text").get<std::string>();
        out << "]\n";
    } else if (m.kind == wire::kind::progress) {
        out << "  ... explored " << b.at("explored_count").get<std::size_t>() << " states\n";
    } else if (m.kind == wire::kind::reach_result) {
        out << "Reachability by " << (b.at("mode") == "RReach" ? "Rand" : "Auto") << ": " << b.at("depth").get<std::size_t>()
            << "\n";
        out << "  Events for reachability check: " << quoted_list(b.at("targets")) << "\n";
        out << "  Events for monitoring: " << quoted_list(b.at("monitors")) << "\n";
        for (const json& f : b.at("found")) {
            out << "*** These events [\"" << f.at("matched").at("text").get<std::string>() << "\"] are reached! ***\n";
            out << trace_line(f.at("trace"));
        }
        for (const json& h : b.at("monitored_hits")) {
            out << "*** Monitored event [\"" << h.at("event").at("text").get<std::string>() << "\"] is seen ***\n";
            out << trace_line(h.at("trace"));
        }
        if (b.at("found").empty()) out << "*** These events " << quoted_list(b.at("targets")) << " are not reached ***\n";
        out << "  " << b.at("found").size() << " trace(s) found, " << b.at("explored_count").get<std::size_t>()
            << " states explored" << (b.at("truncated_at_depth").get<bool>() ? ", search cut at depth" : "") << "\n";
    } else if (m.kind == wire::kind::trace) {
        const std::string mode = b.at("mode").get<std::string>();
        if (mode == "Auto") {
            out << "Exploration by Auto: " << b.at("depth").get<std::size_t>() << "\n";
            out << "  " << b.at("count").get<std::size_t>() << " trace(s), " << b.at("explored_count").get<std::size_t>()
                << " states explored\n";
            for (const json& t : b.at("traces")) out << trace_line(t);
            std::size_t shown = b.at("traces").size();
            if (shown < b.at("count").get<std::size_t>()) {
                out << "  ... " << b.at("count").get<std::size_t>() - shown << " more trace(s) not listed\n";
            }
        } else if (mode == "Rand") {
            out << "Exploration by Rand: " << b.at("depth").get<std::size_t>() << " (seed " << b.at("seed").get<std::uint64_t>()
                << ")\n";
            out << trace_line(b.at("trace"));
        } else {
            if (b.at("feasible").get<bool>()) {
                out << "The trace is feasible.\n";
            } else {
                std::size_t i = b.at("failing_index").get<std::size_t>();
                out << "The trace is infeasible at event " << i + 1 << ": "
                    << b.at("trace").at(i).at("text").get<std::string>() << "\n";
                out << "  Enabled there: [";
                const json& menu = b.at("menu");
                for (std::size_t k = 0; k < menu.size(); ++k) out << (k ? ", " : "") << menu[k].at("text").get<std::string>();
                out << "]\n";
            }
        }
    }
    return out.str();
}

}  // namespace text

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Targets
//
// Named predicates available as %@name% in AReach/RReach.
inline std::optional<Predicate> preset(std::string_view name)
{
    using msg::Agent;
    if (name == "Auth Alice" || name == "Auth Bob") {
        Agent who = name == "Auth Alice" ? Agent::Alice : Agent::Bob;
        return Predicate{[who](std::span<const Event> h, const Event& e) { return proto::is_agreement_failure(h, e, who); }};
    }
    if (name == "Secrecy") return Predicate{[](std::span<const Event> h, const Event& e) { return proto::is_secrecy_failure(h, e); }};
    if (name == "Leak") return Predicate{[](std::span<const Event>, const Event& e) { return e.channel == proto::Channel::Leak; }};
    return std::nullopt;
}

inline const std::vector<std::string>& preset_names()
{
    static const std::vector<std::string> names = {"Auth Alice", "Auth Bob", "Secrecy", "Leak"};
    return names;
}

// The predicates see the full trace from the root, including the session's
// history.
inline Predicate compile_targets(const std::vector<wire::TargetSpec>& specs, std::vector<Event> prefix)
{
    if (specs.empty()) return {};
    std::vector<Event> events;
    std::vector<Predicate> named;
    for (const auto& s : specs) {
        if (!s.preset) {
            events.push_back(*s.event);
            continue;
        }
        auto p = preset(s.text);
        if (!p) throw wire::CommandError("unknown preset '@" + s.text + "'");
        named.push_back(*p);
    }
    return [events = std::move(events), named = std::move(named), prefix = std::move(prefix)](std::span<const Event> h,
                                                                                              const Event& e) {
        for (const Event& t : events) {
            if (t == e) return true;
        }
        if (named.empty()) return false;
        std::vector<Event> full = prefix;
        full.insert(full.end(), h.begin(), h.end());
        for (const auto& p : named) {
            if (p(full, e)) return true;
        }
        return false;
    };
}

inline json labels(const std::vector<wire::TargetSpec>& specs)
{
    json out = json::array();
    for (const auto& s : specs) out.push_back(s.preset ? "@" + s.text : proto::render(*s.event));
    return out;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// One animation session over a model.
//
class AnimatorSession {
public:
    using Session = explore::Session<Event, itree::Unit>;

    AnimatorSession(proto::ProtocolModel model, ServiceOptions options)
        : model_(std::move(model)), options_(std::move(options)), session_(model_.root)
    {
    }

    const proto::ProtocolModel& model() const { return model_; }
    const Session& session() const { return session_; }
    const ServiceOptions& options() const { return options_; }

    // menu, deadlock or terminated for the current state.
    WireMessage view() const
    {
        json history = wire::to_json(session_.history());
        std::vector<Event> menu = session_.menu();
        if (!menu.empty()) return {std::string{wire::kind::menu}, {{"events", wire::to_json(menu)}, {"history", history}}};
        if (session_.current().is_ret()) return {std::string{wire::kind::terminated}, {{"history", history}}};
        return {std::string{wire::kind::deadlock}, {{"history", history}}};
    }

    // Runs one command. Errors become error messages and leave the session as
    // it was. Returns false once the session should end.
    bool execute(const wire::Command& c, const Emit& emit, const std::atomic<bool>* cancel = nullptr)
    {
        try {
            return std::visit([&](const auto& cmd) { return run(cmd, emit, cancel); }, c);
        } catch (const explore::Cancelled&) {
            emit(wire::error_message("search cancelled"));
        } catch (const std::exception& e) {
            emit(wire::error_message(e.what()));
        }
        emit(view());
        return true;
    }

    bool execute_line(std::string_view line, const Emit& emit, const std::atomic<bool>* cancel = nullptr)
    {
        wire::Command c;
        try {
            c = wire::parse_command(line);
        } catch (const wire::CommandError& e) {
            emit(wire::error_message(e.what()));
            return true;
        }
        return execute(c, emit, cancel);
    }

private:
    void check_depth(std::size_t depth) const
    {
        if (options_.depth_budget && depth > *options_.depth_budget) {
            throw wire::CommandError("depth " + std::to_string(depth) + " exceeds the depth budget of " +
                                     std::to_string(*options_.depth_budget));
        }
    }

    explore::SearchControl control(const Emit& emit, const std::atomic<bool>* cancel) const
    {
        explore::SearchControl c;
        c.cancel = cancel;
        c.workers = options_.workers;
        c.progress_every = options_.progress_every;
        c.budget = session_.budget();
        c.progress = [emit](std::size_t n) {
            emit(WireMessage{std::string{wire::kind::progress}, {{"explored_count", n}}});
        };
        return c;
    }

    json with_history(const std::vector<Event>& suffix) const
    {
        std::vector<Event> t = session_.history();
        t.insert(t.end(), suffix.begin(), suffix.end());
        return wire::to_json(t);
    }

    bool run(const wire::cmd::Choose& c, const Emit& emit, const std::atomic<bool>*)
    {
        const Event& e = session_.choose(c.index);
        emit(WireMessage{std::string{wire::kind::chosen}, {{"index", c.index}, {"event", wire::to_json(e)}}});
        emit(view());
        return true;
    }

    bool run(const wire::cmd::Auto& c, const Emit& emit, const std::atomic<bool>* cancel)
    {
        check_depth(c.depth);
        json listed = json::array();
        const std::size_t limit = options_.auto_listing_limit;
        auto sink = [&](const std::vector<Event>& t) {
            if (listed.size() < limit) listed.push_back(with_history(t));
        };
        explore::TraceStats stats = explore::for_each_trace<Event, itree::Unit>(session_.current(), c.depth, sink,
                                                                               control(emit, cancel));
        emit(WireMessage{std::string{wire::kind::trace},
                         {{"mode", "Auto"},
                          {"depth", c.depth},
                          {"count", stats.traces},
                          {"explored_count", stats.explored_count},
                          {"truncated_at_depth", stats.truncated_at_depth},
                          {"traces", listed}}});
        emit(view());
        return true;
    }

    bool run(const wire::cmd::Rand& c, const Emit& emit, const std::atomic<bool>*)
    {
        check_depth(c.depth);
        std::uint64_t seed = c.seed.value_or(next_seed_++);
        auto t = explore::rand_explore(session_.current(), c.depth, seed, session_.budget());
        emit(WireMessage{std::string{wire::kind::trace},
                         {{"mode", "Rand"}, {"depth", c.depth}, {"seed", seed}, {"trace", with_history(t)}}});
        emit(view());
        return true;
    }

    json reach_body(const char* mode, std::size_t depth, const std::vector<wire::TargetSpec>& targets,
                    const std::vector<wire::TargetSpec>& monitors, const explore::ReachResult<Event>& r) const
    {
        json found = json::array();
        for (const auto& f : r.found) found.push_back({{"trace", with_history(f.trace)}, {"matched", wire::to_json(f.matched)}});
        json hits = json::array();
        for (const auto& h : r.monitored_hits) hits.push_back({{"event", wire::to_json(h.event)}, {"trace", with_history(h.trace)}});
        return {{"mode", mode},
                {"depth", depth},
                {"targets", labels(targets)},
                {"monitors", labels(monitors)},
                {"found", found},
                {"monitored_hits", hits},
                {"explored_count", r.explored_count},
                {"truncated_at_depth", r.truncated_at_depth}};
    }

    bool run(const wire::cmd::AReach& c, const Emit& emit, const std::atomic<bool>* cancel)
    {
        check_depth(c.depth);
        Predicate targets = compile_targets(c.targets, session_.history());
        Predicate monitors = compile_targets(c.monitors, session_.history());
        auto r = explore::areach<Event, itree::Unit>(session_.current(), c.depth, targets, monitors, control(emit, cancel));
        emit(WireMessage{std::string{wire::kind::reach_result}, reach_body("AReach", c.depth, c.targets, c.monitors, r)});
        emit(view());
        return true;
    }

    bool run(const wire::cmd::RReach& c, const Emit& emit, const std::atomic<bool>* cancel)
    {
        check_depth(c.depth);
        Predicate targets = compile_targets(c.targets, session_.history());
        Predicate monitors = compile_targets(c.monitors, session_.history());
        std::uint64_t seed = c.seed.value_or(next_seed_++);
        auto r = explore::rreach<Event, itree::Unit>(session_.current(), c.depth, targets, monitors, seed, c.tries,
                                                     control(emit, cancel));
        json body = reach_body("RReach", c.depth, c.targets, c.monitors, r);
        body["seed"] = seed;
        body["tries"] = c.tries;
        emit(WireMessage{std::string{wire::kind::reach_result}, body});
        emit(view());
        return true;
    }

    std::filesystem::path resolve(const std::string& p) const
    {
        std::filesystem::path path{p};
        if (path.is_relative() && !options_.base_dir.empty() && !std::filesystem::exists(path)) {
            return options_.base_dir / path;
        }
        return path;
    }

    bool run(const wire::cmd::Check& c, const Emit& emit, const std::atomic<bool>*)
    {
        std::ifstream in{resolve(c.path)};
        if (!in) throw wire::CommandError("cannot open trace file '" + c.path + "'");
        proto::Trace t;
        std::string line;
        for (std::size_t n = 1; std::getline(in, line); ++n) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            try {
                t.push_back(proto::parse_event(line));
            } catch (const msg::ParseError& e) {
                throw wire::CommandError(c.path + ":" + std::to_string(n) + ": " + e.what());
            }
        }
        auto f = explore::check_trace<Event, itree::Unit>(model_.root, t, session_.budget());
        json body = {{"mode", "Check"}, {"file", c.path}, {"trace", wire::to_json(t)}, {"feasible", explore::is_feasible(f)}};
        if (const auto* bad = std::get_if<explore::Infeasible<Event>>(&f)) {
            body["failing_index"] = bad->index;
            body["menu"] = wire::to_json(bad->menu);
        }
        emit(WireMessage{std::string{wire::kind::trace}, body});
        emit(view());
        return true;
    }

    bool run(const wire::cmd::Knows&, const Emit& emit, const std::atomic<bool>*)
    {
        json ms = json::array();
        const msg::Knowledge known = model_.knowledge_after(session_.history());
        for (const auto& m : known.messages()) ms.push_back(wire::to_json(m));
        emit(WireMessage{std::string{wire::kind::knowledge}, {{"messages", ms}}});
        emit(view());
        return true;
    }

    bool run(const wire::cmd::Undo&, const Emit& emit, const std::atomic<bool>*)
    {
        if (!session_.undo()) throw wire::CommandError("nothing to undo");
        emit(view());
        return true;
    }

    bool run(const wire::cmd::Reset&, const Emit& emit, const std::atomic<bool>*)
    {
        session_.reset();
        emit(view());
        return true;
    }

    bool run(const wire::cmd::Quit&, const Emit&, const std::atomic<bool>*) { return false; }

    bool run(const wire::cmd::Cancel&, const Emit&, const std::atomic<bool>*)
    {
        throw wire::CommandError("no search is running");
    }

    proto::ProtocolModel model_;
    ServiceOptions options_;
    Session session_;
    std::uint64_t next_seed_ = 1;
};

inline WireMessage model_list_message()
{
    json names = json::array();
    for (const auto& n : proto::model_names()) names.push_back(n);
    return {std::string{wire::kind::model_list}, {{"models", names}}};
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Wire connection: one session per connection, searches in the background.
//
// Client messages:
//   {"kind":"list_models"}
//   {"kind":"open","body":{"model":"NSPK3"}}
//   {"kind":"command","body":{"text":"AReach 15 %Leak N Bob%"}}
//   {"kind":"cancel"}
//
class Connection {
public:
    Connection(Emit emit, ServiceOptions options) : emit_(std::move(emit)), options_(std::move(options)) {}

    Connection(const Connection&) = delete;
    Connection& operator=(const Connection&) = delete;

    ~Connection()
    {
        cancel_ = true;
        join();
    }

    // Handles one line. Returns false when the client asked to quit.
    bool on_line(std::string_view line)
    {
        WireMessage in;
        try {
            in = WireMessage::parse(line);
        } catch (const wire::WireError& e) {
            send(wire::error_message(e.what()));
            return true;
        }

        if (in.kind == "cancel" || (in.kind == "command" && is_cancel(in.body))) {
            if (busy_) {
                cancel_ = true;
            } else {
                send(wire::error_message("no search is running"));
            }
            return true;
        }
        if (busy_) {
            send(wire::error_message("busy: a search is running; send cancel first"));
            return true;
        }
        join();

        if (in.kind == "list_models") {
            send(model_list_message());
            return true;
        }
        if (in.kind == "open") {
            std::string name = in.body.value("model", "");
            auto model = proto::make_model(name);
            if (!model) {
                send(wire::error_message("unknown model '" + name + "'"));
                send(model_list_message());
                return true;
            }
            session_ = std::make_unique<AnimatorSession>(std::move(*model), options_);
            send(session_->view());
            return true;
        }
        if (in.kind != "command") {
            send(wire::error_message("unknown message kind '" + in.kind + "'"));
            return true;
        }
        if (!session_) {
            send(wire::error_message("no open session; send {\"kind\":\"open\",\"body\":{\"model\":...}} first"));
            return true;
        }
        if (!in.body.contains("text") || !in.body["text"].is_string()) {
            send(wire::error_message("command needs a text field"));
            return true;
        }
        std::string text = in.body["text"].get<std::string>();
        wire::Command c;
        try {
            c = wire::parse_command(text);
        } catch (const wire::CommandError& e) {
            send(wire::error_message(e.what()));
            return true;
        }
        if (std::holds_alternative<wire::cmd::Quit>(c)) return false;
        Emit out = [this](const WireMessage& m) { send(m); };
        if (!wire::is_search(c)) {
            session_->execute(c, out);
            return true;
        }
        cancel_ = false;
        busy_ = true;
        worker_ = std::thread([this, c, out] {
            session_->execute(c, out, &cancel_);
            busy_ = false;
        });
        return true;
    }

    bool busy() const { return busy_; }

    // Blocks until any background search has finished.
    void wait_idle() { join(); }

    const AnimatorSession* session() const { return session_.get(); }

private:
    static bool is_cancel(const json& body)
    {
        return body.contains("text") && body["text"].is_string() && body["text"].get<std::string>() == "Cancel";
    }

    void send(const WireMessage& m)
    {
        std::lock_guard<std::mutex> lock{out_mu_};
        emit_(m);
    }

    void join()
    {
        if (worker_.joinable()) worker_.join();
    }

    Emit emit_;
    ServiceOptions options_;
    std::unique_ptr<AnimatorSession> session_;
    std::mutex out_mu_;
    std::atomic<bool> busy_{false};
    std::atomic<bool> cancel_{false};
    std::thread worker_;
};

}  // namespace dyanim::facade

#endif  // DYANIM_SERVICE_HPP
