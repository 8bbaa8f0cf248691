#pragma once
#ifndef DYANIM_EXPLORE_HPP
#define DYANIM_EXPLORE_HPP

// Stepping sessions and bounded search over processes: exhaustive and random
// exploration, reachability and trace feasibility.

#include "dyanim/itree.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

namespace dyanim::explore {

using itree::Process;

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// SplitMix64 (Steele, Lea and Flood). Small, seedable and splittable; the
// output sequence is fixed by the algorithm so traces replay on any platform.
//
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n)
    {
        if (n == 0) throw std::invalid_argument("below(0)");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = next();
        } while (x >= limit);
        return x % n;
    }

    // An independent generator; advances this one.
    SplitMix64 split() { return SplitMix64{next() ^ 0x6a09e667f3bcc909ULL}; }

private:
    std::uint64_t state_;
};

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Sessions
//
template <typename E, typename R>
class Session {
public:
    using process_type = Process<E, R>;
    using view_type = itree::StepView<E, R>;

    explicit Session(process_type root, std::size_t budget = itree::kDefaultSilentBudget)
        : root_(std::move(root)), budget_(budget), current_(itree::settle(root_, budget_))
    {
    }

    view_type enabled() const { return view_of(current_); }

    const std::vector<E>& history() const { return history_; }
    const process_type& current() const { return current_; }
    const process_type& root() const { return root_; }

    // Menu entries for the current state; empty when terminated or deadlocked.
    std::vector<E> menu() const
    {
        std::vector<E> out;
        if (current_.is_vis()) {
            for (const auto& c : current_.choices()) out.push_back(c.first);
        }
        return out;
    }

    // 1-based, as displayed. Throws std::out_of_range and leaves the session
    // unchanged when the index is not on the menu.
    const E& choose(std::size_t index)
    {
        std::size_t n = current_.is_vis() ? current_.choices().size() : 0;
        if (index < 1 || index > n) {
            throw std::out_of_range("choice " + std::to_string(index) + " is not in 1-" + std::to_string(n));
        }
        const auto& [e, k] = current_.choices()[index - 1];
        process_type next = itree::settle(k.force(), budget_);
        stack_.push_back(current_);
        history_.push_back(e);
        current_ = std::move(next);
        return history_.back();
    }

    // Chooses by event rather than index; false if it is not enabled.
    bool choose_event(const E& e)
    {
        if (auto i = index_of(e)) {
            choose(*i);
            return true;
        }
        return false;
    }

    std::optional<std::size_t> index_of(const E& e) const
    {
        if (!current_.is_vis()) return std::nullopt;
        const auto& cs = current_.choices();
        for (std::size_t i = 0; i < cs.size(); ++i) {
            if (cs[i].first == e) return i + 1;
        }
        return std::nullopt;
    }

    bool undo()
    {
        if (stack_.empty()) return false;
        current_ = stack_.back();
        stack_.pop_back();
        history_.pop_back();
        return true;
    }

    void reset()
    {
        stack_.clear();
        history_.clear();
        current_ = itree::settle(root_, budget_);
    }

    std::size_t budget() const { return budget_; }

    static view_type view_of(const process_type& settled)
    {
        if (settled.is_ret()) return itree::Terminated<E, R>{settled.value()};
        if (settled.choices().empty()) return itree::Deadlock{};
        return itree::Menu<E, R>{settled.choices()};
    }

private:
    process_type root_;
    std::size_t budget_;
    process_type current_;
    std::vector<E> history_;
    std::vector<process_type> stack_;
};

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Search configuration and results
//
struct SearchControl {
    const std::atomic<bool>* cancel = nullptr;
    // Called with the running count of expanded states, every `progress_every`.
    std::function<void(std::size_t)> progress;
    std::size_t progress_every = 50000;
    // Parallel workers for the first level of the search; results do not
    // depend on it.
    unsigned workers = 1;
    std::size_t budget = itree::kDefaultSilentBudget;
};

class Cancelled : public std::runtime_error {
public:
    Cancelled() : std::runtime_error("search cancelled") {}
};

// A target or monitor: decides on an enabled event given the trace so far.
template <typename E>
using EventPredicate = std::function<bool(std::span<const E> history, const E& event)>;

template <typename E>
EventPredicate<E> any_of_events(std::vector<E> events)
{
    return [events = std::move(events)](std::span<const E>, const E& e) {
        for (const E& t : events) {
            if (t == e) return true;
        }
        return false;
    };
}

template <typename E>
struct Found {
    std::vector<E> trace;  // ends with `matched`
    E matched;

    friend bool operator==(const Found&, const Found&) = default;
};

template <typename E>
struct MonitorHit {
    E event;
    std::vector<E> trace;  // ends with `event`

    friend bool operator==(const MonitorHit&, const MonitorHit&) = default;
};

template <typename E>
struct ReachResult {
    std::vector<Found<E>> found;
    std::vector<MonitorHit<E>> monitored_hits;
    std::size_t explored_count = 0;
    bool truncated_at_depth = false;

    friend bool operator==(const ReachResult&, const ReachResult&) = default;
};

struct TraceStats {
    std::size_t traces = 0;
    std::size_t explored_count = 0;
    bool truncated_at_depth = false;

    friend bool operator==(const TraceStats&, const TraceStats&) = default;
};

namespace detail {

class Ticker {
public:
    explicit Ticker(const SearchControl& c) : c_(c) {}

    void tick()
    {
        if (c_.cancel && c_.cancel->load(std::memory_order_relaxed)) throw Cancelled{};
        std::size_t n = count_.fetch_add(1, std::memory_order_relaxed) + 1;
        if (c_.progress && c_.progress_every && n % c_.progress_every == 0) c_.progress(n);
    }

private:
    const SearchControl& c_;
    std::atomic<std::size_t> count_{0};
};

// Runs `task(i)` for i in [0, n) on up to `workers` threads. Exceptions are
// rethrown in index order after every thread has joined.
template <typename F>
void run_indexed(std::size_t n, unsigned workers, F task)
{
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(workers, n); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Depth-first enumeration of maximal traces. `on_trace` receives each trace
// at termination, deadlock or the depth cutoff.
template <typename E, typename R>
class TraceWalker {
public:
    using P = Process<E, R>;
    using Sink = std::function<void(const std::vector<E>&)>;

    TraceWalker(std::size_t depth, const SearchControl& c, Ticker& ticker) : depth_(depth), c_(c), ticker_(ticker) {}

    void walk(const P& settled, std::vector<E>& trace, TraceStats& stats, const Sink& sink) const
    {
        ticker_.tick();
        ++stats.explored_count;
        if (!settled.is_vis() || settled.choices().empty() || trace.size() >= depth_) {
            if (settled.is_vis() && !settled.choices().empty()) stats.truncated_at_depth = true;
            ++stats.traces;
            if (sink) sink(trace);
            return;
        }
        for (const auto& [e, k] : settled.choices()) {
            trace.push_back(e);
            walk(itree::settle(k.force(), c_.budget), trace, stats, sink);
            trace.pop_back();
        }
    }

private:
    std::size_t depth_;
    const SearchControl& c_;
    Ticker& ticker_;
};

template <typename E, typename R>
class ReachWalker {
public:
    using P = Process<E, R>;

    ReachWalker(std::size_t depth, const EventPredicate<E>& targets, const EventPredicate<E>& monitors,
                const SearchControl& c, Ticker& ticker)
        : depth_(depth), targets_(targets), monitors_(monitors), c_(c), ticker_(ticker)
    {
    }

    // Returns true when the state is a hit (and so was not expanded).
    bool visit(const P& settled, std::vector<E>& trace, ReachResult<E>& out) const
    {
        ticker_.tick();
        ++out.explored_count;
        if (!settled.is_vis() || settled.choices().empty()) return false;
        std::span<const E> history{trace};
        if (monitors_ && trace.size() < depth_) {
            for (const auto& c : settled.choices()) {
                if (monitors_(history, c.first)) record_monitor(out, trace, c.first);
            }
        }
        if (trace.size() >= depth_) {
            out.truncated_at_depth = true;
            return false;
        }
        bool hit = false;
        for (const auto& c : settled.choices()) {
            if (targets_(history, c.first)) {
                std::vector<E> t = trace;
                t.push_back(c.first);
                out.found.push_back(Found<E>{std::move(t), c.first});
                hit = true;
            }
        }
        return hit;
    }

    void walk(const P& settled, std::vector<E>& trace, ReachResult<E>& out) const
    {
        if (visit(settled, trace, out) || !settled.is_vis() || trace.size() >= depth_) return;
        for (const auto& [e, k] : settled.choices()) {
            trace.push_back(e);
            walk(itree::settle(k.force(), c_.budget), trace, out);
            trace.pop_back();
        }
    }

    // First sighting of each monitored event, in search order.
    static void record_monitor(ReachResult<E>& out, const std::vector<E>& trace, const E& e)
    {
        for (const auto& h : out.monitored_hits) {
            if (h.event == e) return;
        }
        std::vector<E> t = trace;
        t.push_back(e);
        out.monitored_hits.push_back(MonitorHit<E>{e, std::move(t)});
    }

private:
    std::size_t depth_;
    const EventPredicate<E>& targets_;
    const EventPredicate<E>& monitors_;
    const SearchControl& c_;
    Ticker& ticker_;
};

template <typename E>
void merge_into(ReachResult<E>& acc, ReachResult<E>&& part)
{
    for (auto& f : part.found) acc.found.push_back(std::move(f));
    for (auto& h : part.monitored_hits) {
        bool seen = false;
        for (const auto& a : acc.monitored_hits) seen = seen || a.event == h.event;
        if (!seen) acc.monitored_hits.push_back(std::move(h));
    }
    acc.explored_count += part.explored_count;
    acc.truncated_at_depth = acc.truncated_at_depth || part.truncated_at_depth;
}

}  // namespace detail

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Exhaustive exploration
//
// Every maximal trace of at most `depth` visible events, passed to `sink` in
// depth-first menu order. The sink runs on the calling thread.
template <typename E, typename R>
TraceStats for_each_trace(const Process<E, R>& root, std::size_t depth,
                          const std::function<void(const std::vector<E>&)>& sink, const SearchControl& c = {})
{
    detail::Ticker ticker{c};
    detail::TraceWalker<E, R> walker{depth, c, ticker};
    TraceStats stats;
    Process<E, R> s = itree::settle(root, c.budget);
    std::vector<E> trace;
    if (c.workers <= 1 || !s.is_vis() || s.choices().empty() || depth == 0) {
        walker.walk(s, trace, stats, sink);
        return stats;
    }
    // Fan out below the root; each branch collects its traces and they are
    // replayed to the sink in menu order.
    ticker.tick();
    stats.explored_count = 1;
    const auto& cs = s.choices();
    std::vector<TraceStats> part(cs.size());
    std::vector<std::vector<std::vector<E>>> traces(cs.size());
    detail::run_indexed(cs.size(), c.workers, [&](std::size_t i) {
        std::vector<E> t{cs[i].first};
        typename detail::TraceWalker<E, R>::Sink collect;
        if (sink) collect = [&traces, i](const std::vector<E>& tr) { traces[i].push_back(tr); };
        walker.walk(itree::settle(cs[i].second.force(), c.budget), t, part[i], collect);
    });
    for (std::size_t i = 0; i < cs.size(); ++i) {
        stats.traces += part[i].traces;
        stats.explored_count += part[i].explored_count;
        stats.truncated_at_depth = stats.truncated_at_depth || part[i].truncated_at_depth;
        if (sink) {
            for (const auto& t : traces[i]) sink(t);
        }
    }
    return stats;
}

template <typename E, typename R>
std::vector<std::vector<E>> auto_explore(const Process<E, R>& root, std::size_t depth, const SearchControl& c = {})
{
    std::vector<std::vector<E>> out;
    for_each_trace<E, R>(root, depth, [&out](const std::vector<E>& t) { out.push_back(t); }, c);
    return out;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Random exploration: uniform choice at each menu.
//
template <typename E, typename R>
std::vector<E> rand_explore(const Process<E, R>& root, std::size_t depth, std::uint64_t seed,
                            std::size_t budget = itree::kDefaultSilentBudget)
{
    SplitMix64 rng{seed};
    std::vector<E> trace;
    Process<E, R> s = itree::settle(root, budget);
    while (trace.size() < depth && s.is_vis() && !s.choices().empty()) {
        const auto& c = s.choices()[rng.below(s.choices().size())];
        trace.push_back(c.first);
        s = itree::settle(c.second.force(), budget);
    }
    return trace;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Reachability
//
// A state whose menu offers a target event is a hit: one entry per enabled
// target (the path to the state followed by that event), and the state is
// not expanded further. Monitors are recorded at their first sighting and
// never stop the search.
template <typename E, typename R>
ReachResult<E> areach(const Process<E, R>& root, std::size_t depth, const EventPredicate<E>& targets,
                      const EventPredicate<E>& monitors = {}, const SearchControl& c = {})
{
    detail::Ticker ticker{c};
    detail::ReachWalker<E, R> walker{depth, targets, monitors, c, ticker};
    ReachResult<E> out;
    Process<E, R> s = itree::settle(root, c.budget);
    std::vector<E> trace;
    if (c.workers <= 1) {
        walker.walk(s, trace, out);
        return out;
    }
    if (walker.visit(s, trace, out) || !s.is_vis() || depth == 0) return out;
    const auto& cs = s.choices();
    std::vector<ReachResult<E>> part(cs.size());
    detail::run_indexed(cs.size(), c.workers, [&](std::size_t i) {
        std::vector<E> t{cs[i].first};
        walker.walk(itree::settle(cs[i].second.force(), c.budget), t, part[i]);
    });
    for (auto& p : part) detail::merge_into(out, std::move(p));
    return out;
}

// `tries` random walks, each with its own generator split from `seed`. A walk
// stops at its first hit.
template <typename E, typename R>
ReachResult<E> rreach(const Process<E, R>& root, std::size_t depth, const EventPredicate<E>& targets,
                      const EventPredicate<E>& monitors, std::uint64_t seed, std::size_t tries,
                      const SearchControl& c = {})
{
    if (tries < 1) throw std::invalid_argument("rreach needs at least one try");
    detail::Ticker ticker{c};
    detail::ReachWalker<E, R> walker{depth, targets, monitors, c, ticker};
    SplitMix64 master{seed};
    ReachResult<E> out;
    for (std::size_t t = 0; t < tries; ++t) {
        SplitMix64 rng = master.split();
        std::vector<E> trace;
        Process<E, R> s = itree::settle(root, c.budget);
        while (!walker.visit(s, trace, out) && s.is_vis() && !s.choices().empty() && trace.size() < depth) {
            const auto& ch = s.choices()[rng.below(s.choices().size())];
            trace.push_back(ch.first);
            s = itree::settle(ch.second.force(), c.budget);
        }
    }
    return out;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Feasibility
//
template <typename E>
struct Feasible {};

template <typename E>
struct Infeasible {
    std::size_t index = 0;   // 0-based position of the first event not on offer
    std::vector<E> menu;     // what was on offer there
};

template <typename E>
using Feasibility = std::variant<Feasible<E>, Infeasible<E>>;

template <typename E, typename R>
Feasibility<E> check_trace(const Process<E, R>& root, std::span<const E> trace,
                           std::size_t budget = itree::kDefaultSilentBudget)
{
    Process<E, R> s = itree::settle(root, budget);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto* next = s.is_vis() ? itree::detail::find_choice(s.choices(), trace[i]) : nullptr;
        if (!next) {
            Infeasible<E> bad{i, {}};
            if (s.is_vis()) {
                for (const auto& c : s.choices()) bad.menu.push_back(c.first);
            }
            return bad;
        }
        s = itree::settle(next->force(), budget);
    }
    return Feasible<E>{};
}

template <typename E>
bool is_feasible(const Feasibility<E>& f)
{
    return std::holds_alternative<Feasible<E>>(f);
}

}  // namespace dyanim::explore

#endif  // DYANIM_EXPLORE_HPP
