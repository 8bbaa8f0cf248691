#include "dyanim/msg.hpp"
#include "dyanim/proto.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

using namespace dyanim::msg;

namespace {

const std::vector<Agent> kAgents = {Agent::Alice, Agent::Bob, Agent::Intruder};

std::vector<Message> atoms()
{
    std::vector<Message> out;
    for (Agent a : kAgents) {
        out.push_back(mag(a));
        out.push_back(mnon(a));
        out.push_back(mpk(a));
        out.push_back(msk(a));
    }
    return out;
}

std::set<Message> as_set(const MessageList& l) { return {l.begin(), l.end()}; }

bool no_duplicates(const MessageList& l) { return as_set(l).size() == l.size(); }

// Leaf count, defined here independently of Message::size.
std::size_t leaves(const Message& m)
{
    switch (m.tag()) {
        case Tag::Cmp: return leaves(m.body()) + leaves(m.second());
        case Tag::Enc:
        case Tag::Sig:
        case Tag::SEnc:
        case Tag::ModExp: return 1 + leaves(m.body());
        default: return 1;
    }
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Oracle for bounded build-up with one pairing round, one encryption round
// and pair length l, written as a membership test: m is buildable iff it is
// known, an encryption of a known message or a known-parts pair, or a pair of
// parts each of which is known or a one-step encryption of something known.
//
struct BuildOracle {
    std::set<Message> known;
    std::set<Agent> keys;
    std::size_t l;

    bool in_x(const Message& m) const { return known.count(m) != 0; }
    bool in_enc_x(const Message& m) const { return m.is(Tag::Enc) && keys.count(m.owner()) && in_x(m.body()); }
    bool pair_of(const Message& m, bool allow_enc) const
    {
        if (!m.is(Tag::Cmp)) return false;
        const Message a = m.body(), b = m.second();
        if (a == b || leaves(a) + leaves(b) > l) return false;
        auto ok = [&](const Message& x) { return in_x(x) || (allow_enc && in_enc_x(x)); };
        return ok(a) && ok(b);
    }
    bool operator()(const Message& m) const
    {
        if (in_x(m)) return true;
        if (pair_of(m, true)) return true;
        if (m.is(Tag::Enc) && keys.count(m.owner())) return in_x(m.body()) || pair_of(m.body(), false);
        return false;
    }
};

std::set<Message> candidates_for(const std::set<Message>& known)
{
    std::set<Message> xs = known;
    for (const Message& a : atoms()) xs.insert(a);
    std::set<Message> layer1 = xs;
    for (const Message& x : xs) {
        for (Agent k : kAgents) layer1.insert(Message::enc(x, PubKey{k}));
    }
    std::set<Message> out = layer1;
    for (const Message& a : layer1) {
        for (const Message& b : layer1) out.insert(Message::pair(a, b));
    }
    for (const Message& a : xs) {
        for (const Message& b : xs) {
            for (Agent k : kAgents) out.insert(Message::enc(Message::pair(a, b), PubKey{k}));
        }
    }
    return out;
}

std::vector<Message> build_pool()
{
    std::vector<Message> pool = atoms();
    pool.push_back(Message::pair(mnon(Agent::Alice), mag(Agent::Alice)));
    pool.push_back(Message::enc(Message::pair(mnon(Agent::Alice), mag(Agent::Alice)), PubKey{Agent::Bob}));
    pool.push_back(Message::enc(mnon(Agent::Bob), PubKey{Agent::Intruder}));
    return pool;
}

template <typename F>
void for_each_sublist(const std::vector<Message>& pool, std::size_t max_len, F f)
{
    std::vector<Message> cur;
    auto rec = [&](auto&& self, std::size_t start) -> void {
        f(cur);
        if (cur.size() == max_len) return;
        for (std::size_t i = start; i < pool.size(); ++i) {
            cur.push_back(pool[i]);
            self(self, i + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
}

//=#=#==#==#===============+=+=+=+=++=++++++++++++++-++-+--+-+----+---------------
// Oracle for break-down: the analysis closure (split pairs, open ciphertexts
// and signatures with known keys) with pairs dropped at the end.
//
std::set<Message> analz_oracle(const std::vector<Message>& in)
{
    std::set<Message> s{in.begin(), in.end()};
    for (bool grew = true; grew;) {
        grew = false;
        std::vector<Message> add;
        for (const Message& m : s) {
            if (m.is(Tag::Cmp)) {
                add.push_back(m.body());
                add.push_back(m.second());
            } else if (m.is(Tag::Enc) && s.count(msk(m.owner()))) {
                add.push_back(m.body());
            } else if (m.is(Tag::Sig) && s.count(mpk(m.owner()))) {
                add.push_back(m.body());
            } else if (m.is(Tag::SEnc) && s.count(m.second())) {
                add.push_back(m.body());
            }
        }
        for (const Message& m : add) grew = s.insert(m).second || grew;
    }
    std::set<Message> out;
    for (const Message& m : s) {
        if (!m.is(Tag::Cmp)) out.insert(m);
    }
    return out;
}

std::vector<Message> break_pool()
{
    const Message na = mnon(Agent::Alice), nb = mnon(Agent::Bob);
    std::vector<Message> pool = {
        msk(Agent::Bob),
        msk(Agent::Intruder),
        mpk(Agent::Alice),
        Message::enc(Message::pair(na, mag(Agent::Alice)), PubKey{Agent::Bob}),
        Message::enc(Message::pair(na, nb), PubKey{Agent::Intruder}),
        Message::enc(msk(Agent::Bob), PubKey{Agent::Intruder}),
        Message::pair(Message::enc(nb, PubKey{Agent::Bob}), mag(Agent::Bob)),
        Message::sig(Message::pair(mpk(Agent::Bob), mag(Agent::Bob)), PrivKey{Agent::Alice}),
        Message::senc(nb, na),
        Message::pair(na, Message::pair(nb, mag(Agent::Intruder))),
    };
    return pool;
}

Message random_message(std::mt19937& rng, int depth)
{
    std::uniform_int_distribution<int> pick(0, depth > 0 ? 9 : 4);
    Agent a = kAgents[rng() % kAgents.size()];
    switch (pick(rng)) {
        case 0: return mag(a);
        case 1: return mnon(a);
        case 2: return mpk(a);
        case 3: return msk(a);
        case 4: return Message::expg();
        case 5: return Message::pair(random_message(rng, depth - 1), random_message(rng, depth - 1));
        case 6: return Message::enc(random_message(rng, depth - 1), PubKey{a});
        case 7: return Message::sig(random_message(rng, depth - 1), PrivKey{a});
        case 8: return Message::senc(random_message(rng, depth - 1), random_message(rng, depth - 1));
        default: return Message::modexp(random_message(rng, depth - 1), Nonce{a});
    }
}

}  // namespace

TEST(Inference, BoundedBuildMatchesOracleOnAllSmallLists)
{
    std::size_t checked = 0;
    for_each_sublist(build_pool(), 4, [&](const std::vector<Message>& xs) {
        MessageList built = dyanim::proto::intruder_build(dyanim::proto::BuildRule::Bounded, {1, 1, 2}, xs);
        ASSERT_TRUE(no_duplicates(built));
        std::set<Message> got = as_set(built);

        BuildOracle oracle{{xs.begin(), xs.end()}, {}, 2};
        for (PubKey k : extract_pkey(xs)) oracle.keys.insert(k.owner);

        std::set<Message> universe = candidates_for(oracle.known);
        for (const Message& m : got) {
            ASSERT_TRUE(universe.count(m)) << render(m);
            ASSERT_TRUE(oracle(m)) << "built but not derivable: " << render(m);
        }
        for (const Message& m : universe) {
            ASSERT_EQ(got.count(m) != 0, oracle(m)) << render(m);
        }
        ++checked;
    });
    EXPECT_EQ(checked, 1941u);  // sublists of length <= 4 from 15 messages
}

TEST(Inference, BuildKeepsKnowledgeFirst)
{
    std::vector<Message> xs = {mnon(Agent::Intruder), mag(Agent::Alice), mpk(Agent::Bob)};
    MessageList built = build_n(xs, std::vector<PubKey>{PubKey{Agent::Bob}}, 1, 1, 2);
    ASSERT_GE(built.size(), xs.size());
    EXPECT_TRUE(std::equal(xs.begin(), xs.end(), built.begin()));
    EXPECT_TRUE(as_set(built).count(Message::enc(Message::pair(mnon(Agent::Intruder), mag(Agent::Alice)), PubKey{Agent::Bob})));
    // length-2 bound: no pair with an encryption inside
    EXPECT_FALSE(as_set(built).count(Message::pair(Message::enc(mnon(Agent::Intruder), PubKey{Agent::Bob}), mag(Agent::Alice))));
}

TEST(Inference, Pair2SkipsEqualAndLongParts)
{
    std::vector<Message> xs = {mag(Agent::Alice), mag(Agent::Bob)};
    MessageList p = pair2(xs, xs, 2);
    EXPECT_EQ(as_set(p), (std::set<Message>{Message::pair(mag(Agent::Alice), mag(Agent::Bob)),
                                             Message::pair(mag(Agent::Bob), mag(Agent::Alice))}));
    EXPECT_TRUE(pair2(xs, xs, 1).empty());
}

TEST(Inference, BreakmMatchesAnalysisClosure)
{
    std::size_t checked = 0;
    for_each_sublist(break_pool(), 4, [&](const std::vector<Message>& xs) {
        MessageList got = breakm(xs);
        ASSERT_TRUE(no_duplicates(got));
        ASSERT_EQ(as_set(got), analz_oracle(xs)) << "input size " << xs.size();
        ++checked;
    });
    EXPECT_GT(checked, 300u);
}

TEST(Inference, BreakmIsIdempotent)
{
    std::mt19937 rng{7};
    for (int i = 0; i < 500; ++i) {
        std::vector<Message> xs;
        for (int k = 0; k < 4; ++k) xs.push_back(random_message(rng, 3));
        MessageList once = breakm(xs);
        EXPECT_EQ(breakm(once), once);
    }
}

TEST(Inference, ExponentiationKeyOpensSymmetricCipher)
{
    const Message secret = mpk(Agent::Alice);
    const Message cipher = Message::senc(secret, g_pow(Agent::Alice, Agent::Intruder));
    // g^a and the intruder's own exponent
    std::vector<Message> k1 = {cipher, g_pow(Agent::Alice), mnon(Agent::Intruder)};
    EXPECT_TRUE(as_set(breakm(k1)).count(secret));
    // the other order of exponents
    std::vector<Message> k2 = {cipher, g_pow(Agent::Intruder), mnon(Agent::Alice)};
    EXPECT_TRUE(as_set(breakm(k2)).count(secret));
    std::vector<Message> k3 = {cipher, g_pow(Agent::Alice)};
    EXPECT_FALSE(as_set(breakm(k3)).count(secret));
}

TEST(Inference, DhBuildComputesKeysFromKnownExponentials)
{
    std::vector<Message> known = {Message::expg(), mnon(Agent::Intruder), g_pow(Agent::Alice), mpk(Agent::Intruder)};
    std::set<Message> built = as_set(dh_build(known));
    EXPECT_TRUE(built.count(g_pow(Agent::Intruder)));
    EXPECT_TRUE(built.count(g_pow(Agent::Alice, Agent::Intruder)));
    EXPECT_TRUE(built.count(Message::senc(mpk(Agent::Intruder), g_pow(Agent::Alice, Agent::Intruder))));
    EXPECT_FALSE(built.count(g_pow(Agent::Alice, Agent::Bob)));
    EXPECT_FALSE(built.count(mnon(Agent::Alice)));
    EXPECT_THROW(mod_exp_build(std::vector<Nonce>{}, 3), std::invalid_argument);
}

TEST(Knowledge, InsertionOrderAndNoDuplicates)
{
    Knowledge k{mag(Agent::Alice), mnon(Agent::Intruder)};
    Knowledge k2 = k.inserted(mag(Agent::Bob)).inserted(mag(Agent::Alice));
    EXPECT_EQ(k2.messages(), (MessageList{mag(Agent::Alice), mnon(Agent::Intruder), mag(Agent::Bob)}));
    EXPECT_TRUE(k2.contains(mag(Agent::Bob)));
    EXPECT_EQ(k.size(), 2u);
}

TEST(Render, KnownForms)
{
    EXPECT_EQ(render(Message::enc(Message::pair(mnon(Agent::Intruder), mag(Agent::Alice)), PubKey{Agent::Bob})),
              "{<N Intruder, Alice>}_PK Bob");
    EXPECT_EQ(render(Message::sig(mpk(Agent::Bob), PrivKey{Agent::Server})), "{PK Bob}^d_SK Server");
    EXPECT_EQ(render(g_pow(Agent::Alice, Agent::Bob)), "g^N Alice^N Bob");
    EXPECT_EQ(render(Message::senc(mpk(Agent::Alice), g_pow(Agent::Alice, Agent::Bob))), "{PK Alice}^S_g^N Alice^N Bob");
    EXPECT_EQ(render(Message::modexp(mag(Agent::Alice), Nonce{Agent::Bob})), "(Alice)^N Bob");
}

TEST(Render, ParseRoundTripOnRandomMessages)
{
    std::mt19937 rng{2024};
    for (int i = 0; i < 3000; ++i) {
        Message m = random_message(rng, 4);
        std::string text = render(m);
        EXPECT_EQ(parse_message(text), m) << text;
    }
}

TEST(Render, InjectiveOnRandomMessages)
{
    std::mt19937 rng{99};
    std::map<std::string, Message> seen;
    for (int i = 0; i < 5000; ++i) {
        Message m = random_message(rng, 3);
        auto [it, fresh] = seen.emplace(render(m), m);
        if (!fresh) {
            EXPECT_EQ(it->second, m) << it->first;
        }
    }
}

TEST(Render, ParseRejectsJunk)
{
    for (const char* bad : {"", "Carol", "<Alice, Bob", "{Alice}_PK", "N", "Alice Bob", "{Alice}^S_", "<Alice>"}) {
        EXPECT_THROW(parse_message(bad), ParseError) << bad;
    }
}
