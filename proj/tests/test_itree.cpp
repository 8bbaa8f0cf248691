#include "dyanim/itree.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

using namespace dyanim::itree;

namespace {

using P = Process<int, int>;
using PU = Process<int, Unit>;

// Observable behaviour to a depth: silent steps vanish, "0" is deadlock,
// "R<v>" termination, "{e:...}" a menu; "~" marks the cut.
template <typename R, typename Show>
std::string obs(const Process<int, R>& p, int depth, Show show)
{
    Process<int, R> s = settle(p);
    if (s.is_ret()) return "R" + show(s.value());
    if (s.choices().empty()) return "0";
    if (depth == 0) return "~";
    std::string out = "{";
    for (const auto& [e, k] : s.choices()) out += std::to_string(e) + ":" + obs(k.force(), depth - 1, show) + ",";
    return out + "}";
}

std::string show_int(int v) { return std::to_string(v); }
std::string show_unit(Unit) { return ""; }

std::string obs(const P& p, int depth = 6) { return obs(p, depth, show_int); }
std::string obs(const PU& p, int depth = 6) { return obs(p, depth, show_unit); }

std::set<int> menu(const P& p)
{
    P s = settle(p);
    std::set<int> out;
    if (s.is_vis()) {
        for (const auto& c : s.choices()) out.insert(c.first);
    }
    return out;
}

P vis_of(std::vector<std::pair<int, P>> cs)
{
    Choices<int, int> out;
    for (auto& [e, p] : cs) out.emplace_back(e, Continuation<int, int>::now(p));
    return P::vis(std::move(out));
}

// Random process over events 0..3 and values 0..2, with silent steps mixed in.
P random_process(std::mt19937& rng, int depth)
{
    std::uniform_int_distribution<int> coin(0, 9);
    int c = coin(rng);
    if (depth == 0 || c < 2) return P::ret(static_cast<int>(rng() % 3));
    if (c == 2) return stop<int, int>();
    if (c == 3) {
        P inner = random_process(rng, depth - 1);
        return P::sil([inner] { return inner; });
    }
    std::vector<std::pair<int, P>> cs;
    for (int e = 0; e < 4; ++e) {
        if (rng() % 2) cs.emplace_back(e, random_process(rng, depth - 1));
    }
    return vis_of(std::move(cs));
}

std::vector<P> random_processes(std::size_t n, int depth, unsigned seed)
{
    std::mt19937 rng{seed};
    std::vector<P> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(random_process(rng, depth));
    return out;
}

// Every process over events {0,1} and values {0,1} up to the given height.
std::vector<P> enumerate(int height)
{
    std::vector<P> level = {P::ret(0), P::ret(1), stop<int, int>()};
    for (int h = 0; h < height; ++h) {
        std::vector<P> next = level;
        for (const P& a : level) {
            next.push_back(vis_of({{0, a}}));
            next.push_back(vis_of({{1, a}}));
            for (const P& b : level) next.push_back(vis_of({{0, a}, {1, b}}));
        }
        level = std::move(next);
    }
    return level;
}

bool shares_all_three(const P& a, const P& b, const P& c)
{
    for (int e : menu(a)) {
        if (menu(b).count(e) && menu(c).count(e)) return true;
    }
    return false;
}

// Kleisli arrows picked by value.
std::function<P(const int&)> arrow(const std::vector<P>& table, int salt)
{
    return [table, salt](const int& v) { return table[static_cast<std::size_t>(v + salt) % table.size()]; };
}

}  // namespace

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Monad laws
//
TEST(Kernel, MonadLawsOnRandomProcesses)
{
    auto ps = random_processes(1000, 5, 1);
    auto table = random_processes(7, 3, 2);
    auto f = arrow(table, 0), g = arrow(table, 3);
    for (int v = 0; v < 3; ++v) EXPECT_EQ(obs(seq(P::ret(v), f)), obs(f(v)));
    for (const P& p : ps) {
        EXPECT_EQ(obs(seq(p, [](const int& v) { return P::ret(v); })), obs(p));
        EXPECT_EQ(obs(seq(seq(p, f), g)), obs(seq(p, [f, g](const int& v) { return seq(f(v), g); })));
    }
}

TEST(Kernel, MonadLawsOnEnumeratedProcesses)
{
    auto ps = enumerate(2);
    ASSERT_GT(ps.size(), 300u);
    auto f = arrow(enumerate(1), 5), g = arrow(enumerate(1), 11);
    for (const P& p : ps) {
        EXPECT_EQ(obs(seq(p, [](const int& v) { return P::ret(v); })), obs(p));
        EXPECT_EQ(obs(seq(seq(p, f), g)), obs(seq(p, [f, g](const int& v) { return seq(f(v), g); })));
    }
}

TEST(Kernel, FmapComposes)
{
    for (const P& p : random_processes(300, 5, 3)) {
        auto inc = [](const int& v) { return v + 1; };
        auto dbl = [](const int& v) { return v * 2; };
        EXPECT_EQ(obs(fmap(fmap(p, inc), dbl)), obs(fmap(p, [&](const int& v) { return dbl(inc(v)); })));
    }
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// External choice
//
TEST(Kernel, ExternalChoiceLaws)
{
    auto ps = random_processes(1000, 5, 4);
    std::size_t triples = 0;
    for (std::size_t i = 0; i + 2 < ps.size(); ++i) {
        const P &p = ps[i], &q = ps[i + 1], &r = ps[i + 2];
        EXPECT_EQ(obs(ext_choice(p, stop<int, int>())), obs(p));
        EXPECT_EQ(obs(ext_choice(stop<int, int>(), p)), obs(p));
        if (!(settle(p).is_ret() && settle(q).is_ret())) {
            EXPECT_EQ(obs(ext_choice(p, q)), obs(ext_choice(q, p)));
        }
        // A three-way shared event keeps the outermost side's branch, so
        // associativity holds only without one.
        if (!shares_all_three(p, q, r)) {
            EXPECT_EQ(obs(ext_choice(ext_choice(p, q), r)), obs(ext_choice(p, ext_choice(q, r))));
            ++triples;
        }
    }
    EXPECT_GT(triples, 500u);
}

TEST(Kernel, ExternalChoiceLawsOnEnumeratedProcesses)
{
    auto ps = enumerate(1);
    for (const P& p : ps) {
        for (const P& q : ps) {
            if (!(settle(p).is_ret() && settle(q).is_ret())) {
                EXPECT_EQ(obs(ext_choice(p, q)), obs(ext_choice(q, p)));
            }
            for (const P& r : ps) {
                if (!shares_all_three(p, q, r)) {
                    EXPECT_EQ(obs(ext_choice(ext_choice(p, q), r)), obs(ext_choice(p, ext_choice(q, r))));
                }
            }
        }
    }
}

TEST(Kernel, ExternalChoiceBlocksSharedEvents)
{
    P p = vis_of({{0, P::ret(1)}, {1, P::ret(2)}});
    P q = vis_of({{1, P::ret(3)}, {2, P::ret(4)}});
    EXPECT_EQ(menu(ext_choice(p, q)), (std::set<int>{0, 2}));
    EXPECT_EQ(obs(ext_choice(P::ret(5), q)), "R5");
    EXPECT_EQ(obs(ext_choice_all<int, int>({})), "0");
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Parallel composition
//
TEST(Kernel, ParallelMenusFollowSynchronisation)
{
    auto ps = random_processes(1000, 4, 5);
    auto evens = EventSet<int>::where([](const int& e) { return e % 2 == 0; });
    for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
        const P &p = ps[i], &q = ps[i + 1];
        std::set<int> a = menu(p), b = menu(q), expect;
        for (int e = 0; e < 4; ++e) {
            bool in_a = a.count(e), in_b = b.count(e);
            if (e % 2 == 0 ? (in_a && in_b) : (in_a != in_b)) expect.insert(e);
        }
        auto both = par(p, evens, q);
        std::set<int> got;
        auto s = settle(both);
        if (s.is_vis()) {
            for (const auto& c : s.choices()) got.insert(c.first);
        }
        EXPECT_EQ(got, expect);
    }
}

TEST(Kernel, ParallelIsSymmetric)
{
    auto ps = random_processes(600, 4, 6);
    auto sync = EventSet<int>::of({1, 2});
    auto swap = [](const std::pair<int, int>& v) { return v.second * 10 + v.first; };
    auto flat = [](const std::pair<int, int>& v) { return v.first * 10 + v.second; };
    for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
        EXPECT_EQ(obs(fmap(par(ps[i], sync, ps[i + 1]), flat)), obs(fmap(par(ps[i + 1], sync, ps[i]), swap)));
    }
}

TEST(Kernel, ParallelTerminatesWithBothValues)
{
    P p = vis_of({{0, P::ret(1)}});
    P q = vis_of({{0, P::ret(2)}});
    auto r = settle(settle(par(p, EventSet<int>::all(), q)).choices().front().second.force());
    ASSERT_TRUE(r.is_ret());
    EXPECT_EQ(r.value(), (std::pair<int, int>{1, 2}));
    // a side that has terminated offers nothing, so the other runs alone
    auto s = settle(interleave(P::ret(7), vis_of({{3, P::ret(8)}})));
    ASSERT_TRUE(s.is_vis());
    EXPECT_EQ(s.choices().size(), 1u);
}

TEST(Kernel, InterleaveAllRunsEveryComponent)
{
    std::vector<PU> parts = {outp(1), outp(2), outp(3)};
    PU all = interleave_all(parts);
    // 3! orders, each ending in termination
    std::function<int(const PU&)> count = [&](const PU& p) {
        PU s = settle(p);
        if (s.is_ret()) return 1;
        int n = 0;
        for (const auto& c : s.choices()) n += count(c.second.force());
        return n;
    };
    EXPECT_EQ(count(all), 6);
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Hiding and renaming
//
TEST(Kernel, HidingAndRenamingIdentities)
{
    auto ps = random_processes(1000, 5, 7);
    std::function<int(const int&)> id = [](const int& e) { return e; };
    std::function<int(const int&)> rot = [](const int& e) { return (e + 1) % 4; };
    std::function<int(const int&)> flip = [](const int& e) { return 3 - e; };
    std::function<int(const int&)> both = [&](const int& e) { return flip(rot(e)); };
    for (const P& p : ps) {
        EXPECT_EQ(obs(hide(p, EventSet<int>::none())), obs(p));
        EXPECT_EQ(obs(rename(p, id)), obs(p));
        EXPECT_EQ(obs(rename(rename(p, rot), flip)), obs(rename(p, both)));
    }
}

TEST(Kernel, HidingGivesMaximalProgress)
{
    P after = vis_of({{2, P::ret(9)}});
    P p = vis_of({{0, after}, {1, P::ret(1)}});
    // the hidden 0 pre-empts the visible 1
    EXPECT_EQ(obs(hide(p, EventSet<int>::of({0}))), obs(after));
    P two = vis_of({{0, P::ret(0)}, {1, P::ret(1)}});
    EXPECT_THROW(settle(hide(two, EventSet<int>::of({0, 1}))), NondeterminismError);
}

TEST(Kernel, HidingRandomProcessesRemovesHiddenEvents)
{
    std::size_t checked = 0;
    for (const P& p : random_processes(1000, 5, 8)) {
        std::function<void(const P&, int)> walk = [&](const P& q, int d) {
            if (d == 0) return;
            P s = settle(q);
            if (!s.is_vis()) return;
            for (const auto& c : s.choices()) {
                EXPECT_NE(c.first, 0);
                walk(c.second.force(), d - 1);
            }
        };
        try {
            walk(hide(p, EventSet<int>::of({0})), 5);
            ++checked;
        } catch (const NondeterminismError&) {
        }
    }
    EXPECT_GT(checked, 900u);
}

TEST(Kernel, RenamingCollisionIsRejected)
{
    P p = vis_of({{0, P::ret(0)}, {1, P::ret(1)}});
    std::function<int(const int&)> squash = [](const int&) { return 5; };
    EXPECT_THROW(settle(rename(p, squash)), NondeterminismError);
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Other combinators
//
TEST(Kernel, VisRejectsDuplicateEvents)
{
    EXPECT_THROW(vis_of({{0, P::ret(0)}, {0, P::ret(1)}}), NondeterminismError);
}

TEST(Kernel, DivergenceIsReported)
{
    std::function<P()> spin = [&spin] { return P::sil(spin); };
    EXPECT_THROW(settle(spin()), DivergenceError);
    EXPECT_THROW(settle(spin(), 50), DivergenceError);
    P deep = P::ret(3);
    for (int i = 0; i < 40; ++i) deep = P::sil([deep] { return deep; });
    EXPECT_NO_THROW(settle(deep, 40));
    EXPECT_THROW(settle(deep, 39), DivergenceError);
}

TEST(Kernel, StabilizeViews)
{
    using T = Terminated<int, int>;
    using M = Menu<int, int>;
    EXPECT_TRUE(std::holds_alternative<T>(stabilize(P::ret(1))));
    EXPECT_TRUE(std::holds_alternative<Deadlock>(stabilize(stop<int, int>())));
    auto v = stabilize(vis_of({{2, P::ret(1)}, {1, P::ret(0)}}));
    ASSERT_TRUE(std::holds_alternative<M>(v));
    EXPECT_EQ(std::get<M>(v).event(0), 1);
    EXPECT_EQ(settle(std::get<M>(v).after(1)).value(), 1);
}

TEST(Kernel, InputAndGuard)
{
    auto p = inp<int, int>(std::function<int(const int&)>{[](const int& v) { return 10 + v; }}, {3, 1, 2});
    EXPECT_EQ(obs(p, 1, show_int), "{11:R1,12:R2,13:R3,}");
    EXPECT_EQ(obs(guard<int>(true)), "R");
    EXPECT_EQ(obs(guard<int>(false)), "0");
}

TEST(Kernel, ExceptionHandsOverAfterTrigger)
{
    P q = vis_of({{3, P::ret(30)}});
    P p = vis_of({{0, vis_of({{1, P::ret(1)}})}, {2, P::ret(2)}});
    EXPECT_EQ(obs(exception(p, EventSet<int>::of({2}), q)), "{0:{1:R1,},2:{3:R30,},}");
}

TEST(Kernel, InterruptOffersBothUntilTermination)
{
    P q = vis_of({{9, P::ret(90)}});
    P p = vis_of({{0, vis_of({{1, P::ret(1)}})}});
    EXPECT_EQ(obs(interrupt(p, q)), "{0:{1:R1,9:R90,},9:R90,}");
}

TEST(Kernel, IterateAndLoop)
{
    auto body = [](const int& n) { return then(outp<int>(n), P::ret(n + 1)); };
    P counted = iterate<int, int>([](const int& n) { return n < 3; }, body, 0);
    EXPECT_EQ(obs(counted), "{0:{1:{2:R3,},},}");
    PU forever = loop<int>([] { return outp<int>(4); });
    EXPECT_EQ(obs(forever, 3), "{4:{4:{4:~,},},}");
}
