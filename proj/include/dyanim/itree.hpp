#pragma once
#ifndef DYANIM_ITREE_HPP
#define DYANIM_ITREE_HPP

// Deterministic interaction trees and the CSP-style operators built on them.
//
// A Process is one of
//   Ret v   -- terminated with value v
//   Sil P   -- a silent step to P
//   Vis F   -- a finite partial function from events to continuations
//
// Every operator only inspects the head of its operands; continuations are
// lazy, so recursive and infinite processes are cheap to build.
// Operators marked "blocking" drop any event that would otherwise have two
// distinct continuations.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dyanim::itree {

struct Unit {
    friend constexpr bool operator==(Unit, Unit) { return true; }
    friend constexpr auto operator<=>(Unit, Unit) = default;
};

class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NondeterminismError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultSilentBudget = 10000;

template <typename E, typename R>
class Process;

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Continuation: a thunk producing a process. Not memoised: an explorer that
// holds the root would otherwise keep every visited node alive.
//
template <typename E, typename R>
class Continuation {
public:
    using process_type = Process<E, R>;

    explicit Continuation(std::function<process_type()> make)
        : make_(std::make_shared<const std::function<process_type()>>(std::move(make)))
    {
    }

    static Continuation now(process_type p)
    {
        return Continuation{[p = std::move(p)] { return p; }};
    }

    process_type force() const { return (*make_)(); }

private:
    std::shared_ptr<const std::function<process_type()>> make_;
};

template <typename E, typename R>
using Choice = std::pair<E, Continuation<E, R>>;

template <typename E, typename R>
using Choices = std::vector<Choice<E, R>>;

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Process
//
template <typename E, typename R>
class Process {
public:
    using event_type = E;
    using value_type = R;
    using continuation_type = Continuation<E, R>;
    using choices_type = Choices<E, R>;

    static Process ret(R value) { return Process{Node{RetNode{std::move(value)}}}; }

    static Process sil(continuation_type next) { return Process{Node{SilNode{std::move(next)}}}; }

    static Process sil(std::function<Process()> next) { return sil(continuation_type{std::move(next)}); }

    // Sorts by event. Duplicate keys violate the partial-function invariant.
    static Process vis(choices_type choices)
    {
        std::stable_sort(choices.begin(), choices.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < choices.size(); ++i) {
            if (!(choices[i - 1].first < choices[i].first)) {
                throw NondeterminismError("duplicate event in a visible choice");
            }
        }
        return Process{Node{VisNode{std::move(choices)}}};
    }

    // Caller guarantees `choices` is strictly sorted.
    static Process vis_sorted(choices_type choices) { return Process{Node{VisNode{std::move(choices)}}}; }

    bool is_ret() const { return node_->kind.index() == 0; }
    bool is_sil() const { return node_->kind.index() == 1; }
    bool is_vis() const { return node_->kind.index() == 2; }

    const R& value() const { return std::get<0>(node_->kind).value; }
    Process next() const { return std::get<1>(node_->kind).next.force(); }
    const choices_type& choices() const { return std::get<2>(node_->kind).choices; }

    // Identity of the underlying node, not structural equality.
    bool same_node(const Process& other) const { return node_ == other.node_; }

private:
    struct RetNode {
        R value;
    };
    struct SilNode {
        continuation_type next;
    };
    struct VisNode {
        choices_type choices;
    };
    struct Node {
        std::variant<RetNode, SilNode, VisNode> kind;
    };

    explicit Process(Node node) : node_(std::make_shared<const Node>(std::move(node))) {}

    std::shared_ptr<const Node> node_;
};

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Event sets: predicates over events, since many synchronisation sets are
// infinite (e.g. "every send event").
//
template <typename E>
class EventSet {
public:
    EventSet() = default;

    static EventSet none() { return EventSet{}; }

    static EventSet all()
    {
        return EventSet{[](const E&) { return true; }};
    }

    static EventSet where(std::function<bool(const E&)> pred) { return EventSet{std::move(pred)}; }

    static EventSet of(std::vector<E> events)
    {
        std::sort(events.begin(), events.end());
        events.erase(std::unique(events.begin(), events.end()), events.end());
        return EventSet{[events = std::move(events)](const E& e) {
            return std::binary_search(events.begin(), events.end(), e);
        }};
    }

    bool contains(const E& e) const { return pred_ && pred_(e); }

    bool empty_by_construction() const { return !pred_; }

    friend EventSet operator|(EventSet a, EventSet b)
    {
        if (!a.pred_) return b;
        if (!b.pred_) return a;
        return EventSet{[a = std::move(a), b = std::move(b)](const E& e) {
            return a.contains(e) || b.contains(e);
        }};
    }

private:
    explicit EventSet(std::function<bool(const E&)> pred) : pred_(std::move(pred)) {}

    std::function<bool(const E&)> pred_;
};

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Stabilisation
//
template <typename E, typename R>
struct Terminated {
    R value;
};

struct Deadlock {};

template <typename E, typename R>
struct Menu {
    Choices<E, R> entries;

    std::size_t size() const { return entries.size(); }
    const E& event(std::size_t i) const { return entries.at(i).first; }
    Process<E, R> after(std::size_t i) const { return entries.at(i).second.force(); }
};

template <typename E, typename R>
using StepView = std::variant<Terminated<E, R>, Deadlock, Menu<E, R>>;

// Strips leading silent steps. Throws DivergenceError once `budget`
// consecutive silent steps have been taken.
template <typename E, typename R>
Process<E, R> settle(Process<E, R> p, std::size_t budget = kDefaultSilentBudget)
{
    std::size_t steps = 0;
    while (p.is_sil()) {
        if (steps++ == budget) {
            throw DivergenceError("process took more than " + std::to_string(budget) +
                                  " consecutive silent steps");
        }
        Process<E, R> n = p.next();
        p = std::move(n);
    }
    return p;
}

template <typename E, typename R>
StepView<E, R> stabilize(const Process<E, R>& p, std::size_t budget = kDefaultSilentBudget)
{
    Process<E, R> s = settle(p, budget);
    if (s.is_ret()) return Terminated<E, R>{s.value()};
    if (s.choices().empty()) return Deadlock{};
    return Menu<E, R>{s.choices()};
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Basic processes
//
template <typename E>
Process<E, Unit> skip()
{
    return Process<E, Unit>::ret(Unit{});
}

template <typename E, typename R = Unit>
Process<E, R> stop()
{
    return Process<E, R>::vis_sorted({});
}

template <typename E>
Process<E, Unit> outp(E e)
{
    Choices<E, Unit> c;
    c.emplace_back(std::move(e), Continuation<E, Unit>::now(skip<E>()));
    return Process<E, Unit>::vis_sorted(std::move(c));
}

// Restricted input: one event per accepted payload, returning the payload.
template <typename E, typename V>
Process<E, V> inp(const std::function<E(const V&)>& channel, const std::vector<V>& accepted)
{
    Choices<E, V> c;
    c.reserve(accepted.size());
    for (const V& v : accepted) {
        c.emplace_back(channel(v), Continuation<E, V>::now(Process<E, V>::ret(v)));
    }
    return Process<E, V>::vis(std::move(c));
}

template <typename E>
Process<E, Unit> guard(bool b)
{
    return b ? skip<E>() : stop<E>();
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Sequential composition (monadic bind)
//
template <typename E, typename R, typename F>
auto seq(const Process<E, R>& p, F k) -> decltype(k(std::declval<const R&>()))
{
    using Out = decltype(k(std::declval<const R&>()));
    using R2 = typename Out::value_type;
    if (p.is_ret()) return k(p.value());
    if (p.is_sil()) {
        return Out::sil([p, k] { return seq(p.next(), k); });
    }
    Choices<E, R2> out;
    out.reserve(p.choices().size());
    for (const auto& [e, cont] : p.choices()) {
        out.emplace_back(e, Continuation<E, R2>{[cont, k] { return seq(cont.force(), k); }});
    }
    return Out::vis_sorted(std::move(out));
}

// p ; q
template <typename E, typename R, typename R2>
Process<E, R2> then(const Process<E, R>& p, Process<E, R2> q)
{
    return seq(p, [q = std::move(q)](const R&) { return q; });
}

template <typename E, typename R, typename R2>
Process<E, R2> then(const Process<E, R>& p, std::function<Process<E, R2>()> q)
{
    return seq(p, [q = std::move(q)](const R&) { return q(); });
}

template <typename E, typename R, typename F>
auto fmap(const Process<E, R>& p, F f) -> Process<E, decltype(f(std::declval<const R&>()))>
{
    using R2 = decltype(f(std::declval<const R&>()));
    return seq(p, [f](const R& v) { return Process<E, R2>::ret(f(v)); });
}

template <typename E, typename R>
Process<E, Unit> discard(const Process<E, R>& p)
{
    return fmap(p, [](const R&) { return Unit{}; });
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
namespace detail {

// Merge two sorted choice lists. Keys present on both sides are dropped.
template <typename E, typename R, typename L, typename Rt>
Choices<E, R> merge_blocking(const Choices<E, R>& a, const Choices<E, R>& b, L from_a, Rt from_b)
{
    Choices<E, R> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.emplace_back(a[i].first, from_a(a[i].second));
            ++i;
        } else if (i == a.size() || b[j].first < a[i].first) {
            out.emplace_back(b[j].first, from_b(b[j].second));
            ++j;
        } else {
            ++i;
            ++j;
        }
    }
    return out;
}

template <typename E, typename R>
const Continuation<E, R>* find_choice(const Choices<E, R>& c, const E& e)
{
    auto it = std::lower_bound(c.begin(), c.end(), e,
                               [](const auto& entry, const E& key) { return entry.first < key; });
    if (it != c.end() && !(e < it->first)) return &it->second;
    return nullptr;
}

}  // namespace detail

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// External choice (blocking). Sil before Ret before Vis; a Ret on either side
// resolves the choice, left side first.
//
template <typename E, typename R>
Process<E, R> ext_choice(const Process<E, R>& p, const Process<E, R>& q)
{
    using P = Process<E, R>;
    if (p.is_sil()) return P::sil([p, q] { return ext_choice(p.next(), q); });
    if (q.is_sil()) return P::sil([p, q] { return ext_choice(p, q.next()); });
    if (p.is_ret()) return p;
    if (q.is_ret()) return q;
    auto id = [](const Continuation<E, R>& c) { return c; };
    return P::vis_sorted(detail::merge_blocking(p.choices(), q.choices(), id, id));
}

template <typename E, typename R>
Process<E, R> ext_choice_all(const std::vector<Process<E, R>>& ps)
{
    if (ps.empty()) return stop<E, R>();
    Process<E, R> acc = ps.front();
    for (std::size_t i = 1; i < ps.size(); ++i) acc = ext_choice(acc, ps[i]);
    return acc;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Parallel composition (blocking). Terminates with the pair of both values
// once both sides have terminated; a terminated side offers no events.
//
template <typename E, typename R1, typename R2>
Process<E, std::pair<R1, R2>> par(const Process<E, R1>& p, const EventSet<E>& sync, const Process<E, R2>& q)
{
    using Out = Process<E, std::pair<R1, R2>>;
    using C = Continuation<E, std::pair<R1, R2>>;
    if (p.is_sil()) return Out::sil([p, sync, q] { return par(p.next(), sync, q); });
    if (q.is_sil()) return Out::sil([p, sync, q] { return par(p, sync, q.next()); });
    if (p.is_ret() && q.is_ret()) return Out::ret({p.value(), q.value()});

    static const Choices<E, R1> no_p;
    static const Choices<E, R2> no_q;
    const Choices<E, R1>& a = p.is_vis() ? p.choices() : no_p;
    const Choices<E, R2>& b = q.is_vis() ? q.choices() : no_q;

    Choices<E, std::pair<R1, R2>> out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            const auto& [e, k] = a[i++];
            if (!sync.contains(e)) {
                out.emplace_back(e, C{[k = k, sync, q] { return par(k.force(), sync, q); }});
            }
        } else if (i == a.size() || b[j].first < a[i].first) {
            const auto& [e, k] = b[j++];
            if (!sync.contains(e)) {
                out.emplace_back(e, C{[p, sync, k = k] { return par(p, sync, k.force()); }});
            }
        } else {
            const auto& [e, ka] = a[i++];
            const auto& kb = b[j++].second;
            if (sync.contains(e)) {
                out.emplace_back(e, C{[ka = ka, sync, kb = kb] { return par(ka.force(), sync, kb.force()); }});
            }
        }
    }
    return Out::vis_sorted(std::move(out));
}

template <typename E, typename R1, typename R2>
Process<E, std::pair<R1, R2>> interleave(const Process<E, R1>& p, const Process<E, R2>& q)
{
    return par(p, EventSet<E>::none(), q);
}

// Indexed interleaving, discarding the values.
template <typename E, typename R>
Process<E, Unit> interleave_all(const std::vector<Process<E, R>>& ps)
{
    Process<E, Unit> acc = skip<E>();
    for (auto it = ps.rbegin(); it != ps.rend(); ++it) acc = discard(interleave(*it, acc));
    return acc;
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Hiding. An enabled hidden event becomes a silent step and, by maximal
// progress, pre-empts every visible alternative. Two enabled hidden events
// would make the result nondeterministic.
//
template <typename E, typename R>
Process<E, R> hide(const Process<E, R>& p, const EventSet<E>& hidden)
{
    using P = Process<E, R>;
    if (p.is_ret()) return p;
    if (p.is_sil()) return P::sil([p, hidden] { return hide(p.next(), hidden); });
    if (hidden.empty_by_construction()) return p;

    const Continuation<E, R>* taken = nullptr;
    for (const auto& [e, k] : p.choices()) {
        if (hidden.contains(e)) {
            if (taken) throw NondeterminismError("more than one hidden event enabled at once");
            taken = &k;
        }
    }
    if (taken) {
        return P::sil([k = *taken, hidden] { return hide(k.force(), hidden); });
    }
    Choices<E, R> out;
    out.reserve(p.choices().size());
    for (const auto& [e, k] : p.choices()) {
        out.emplace_back(e, Continuation<E, R>{[k = k, hidden] { return hide(k.force(), hidden); }});
    }
    return P::vis_sorted(std::move(out));
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Renaming. `rho` must be injective on every menu it meets.
//
template <typename E, typename R>
Process<E, R> rename(const Process<E, R>& p, const std::function<E(const E&)>& rho)
{
    using P = Process<E, R>;
    if (p.is_ret()) return p;
    if (p.is_sil()) return P::sil([p, rho] { return rename(p.next(), rho); });
    Choices<E, R> out;
    out.reserve(p.choices().size());
    for (const auto& [e, k] : p.choices()) {
        out.emplace_back(rho(e), Continuation<E, R>{[k = k, rho] { return rename(k.force(), rho); }});
    }
    try {
        return P::vis(std::move(out));
    } catch (const NondeterminismError&) {
        throw NondeterminismError("renaming maps two enabled events to the same event");
    }
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Exception: behave as p until p performs a trigger event, then as q. The
// trigger event itself is visible.
//
template <typename E, typename R>
Process<E, R> exception(const Process<E, R>& p, const EventSet<E>& trigger, const Process<E, R>& q)
{
    using P = Process<E, R>;
    if (p.is_ret()) return p;
    if (p.is_sil()) return P::sil([p, trigger, q] { return exception(p.next(), trigger, q); });
    Choices<E, R> out;
    out.reserve(p.choices().size());
    for (const auto& [e, k] : p.choices()) {
        if (trigger.contains(e)) {
            out.emplace_back(e, Continuation<E, R>::now(q));
        } else {
            out.emplace_back(e, Continuation<E, R>{[k = k, trigger, q] { return exception(k.force(), trigger, q); }});
        }
    }
    return P::vis_sorted(std::move(out));
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Interrupt (blocking): q's initial events stay on offer until p terminates;
// taking one abandons p.
//
template <typename E, typename R>
Process<E, R> interrupt(const Process<E, R>& p, const Process<E, R>& q)
{
    using P = Process<E, R>;
    if (p.is_sil()) return P::sil([p, q] { return interrupt(p.next(), q); });
    if (q.is_sil()) return P::sil([p, q] { return interrupt(p, q.next()); });
    if (p.is_ret()) return p;
    if (q.is_ret()) return q;
    auto keep_q = [q](const Continuation<E, R>& k) {
        return Continuation<E, R>{[k, q] { return interrupt(k.force(), q); }};
    };
    auto take_q = [](const Continuation<E, R>& k) { return k; };
    return P::vis_sorted(detail::merge_blocking(p.choices(), q.choices(), keep_q, take_q));
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Iteration. Each round is guarded by a silent step so that unbounded
// recursion stays lazy.
//
template <typename E, typename S>
Process<E, S> iterate(std::function<bool(const S&)> cond, std::function<Process<E, S>(const S&)> body, S state)
{
    using P = Process<E, S>;
    if (!cond(state)) return P::ret(std::move(state));
    return seq(body(state), [cond, body](const S& next) {
        return P::sil([cond, body, next] { return iterate(cond, body, next); });
    });
}

// Never terminates; the return type only exists to fit any context.
template <typename E, typename R = Unit>
Process<E, R> loop(std::function<Process<E, Unit>()> body)
{
    return seq(iterate<E, Unit>([](const Unit&) { return true; },
                                [body](const Unit&) { return body(); }, Unit{}),
               [](const Unit&) { return stop<E, R>(); });
}

}  // namespace dyanim::itree

#endif  // DYANIM_ITREE_HPP
