#include "doctest.h"

#include "bbm/errors.hpp"
#include "bbm/label.hpp"
#include "bbm/serialize.hpp"
#include "bbm/snapshot.hpp"
#include "bbm/stats.hpp"
#include "bbm/theory.hpp"

#include <algorithm>
#include <cmath>

using namespace bbm;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no bbm::Error thrown");
    return ErrorCode::IoError;
}

// genealogy and alive-set checks over the whole tree
void check_consistency(const Snapshot& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        const Node& n = s.node(static_cast<NodeId>(i));
        CHECK(n.death > n.birth);
        if (i == 0) {
            CHECK(n.birth == 0.0);
            CHECK(n.parent == kNoNode);
        } else {
            const Node& p = s.node(n.parent);
            CHECK(n.birth == p.death);
            CHECK(n.generation == p.generation + 1);
        }
    }
    for (std::size_t c = 0; c < s.checkpoint_times().size(); ++c) {
        const double t = s.checkpoint_times()[c];
        std::size_t scanned = 0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (s.is_alive(static_cast<NodeId>(i), t)) ++scanned;
        CHECK(scanned == s.alive(c).size());
    }
}

}  // namespace

TEST_CASE("labels") {
    const auto root = ParticleLabel::parse("");
    CHECK(root.is_root());
    const auto u = ParticleLabel::parse("1221");
    CHECK(u.generation() == 4);
    CHECK(u.parent().str() == "122");
    CHECK(u.child(2).str() == "12212");
    CHECK(ParticleLabel::parse("12").is_ancestor_of(u));
    CHECK(root.is_ancestor_of(u));
    CHECK(u.is_ancestor_of(u));
    CHECK_FALSE(ParticleLabel::parse("2").is_ancestor_of(u));
    CHECK(ParticleLabel::common_ancestor(u, ParticleLabel::parse("1211")).str() == "12");
    CHECK(code_of([] { ParticleLabel::parse("13"); }) == ErrorCode::UnknownLabel);
    CHECK_THROWS_AS(root.parent(), Error);
}

TEST_CASE("horizon zero holds only the root") {
    const auto s = simulate_snapshot(0.0, {0.0}, 1);
    REQUIRE(s.alive_at(0.0).size() == 1);
    CHECK(s.alive_at(0.0)[0].position == 0.0);
    const auto c = census(s, 0.0);
    REQUIRE(c.size() == 1);
    CHECK(c[0].label.is_root());
    CHECK(max_position(s, 0.0) == 0.0);
}

TEST_CASE("argument and lookup errors") {
    CHECK(code_of([] { simulate_snapshot(-1.0, {}, 1); }) == ErrorCode::OutOfRange);
    CHECK(code_of([] { simulate_snapshot(1.0, {2.0}, 1); }) == ErrorCode::OutOfRange);
    CHECK(code_of([] { simulate_snapshot(12.0, {12.0}, 1, 1000); }) == ErrorCode::PopulationCapExceeded);
    const auto s = simulate_snapshot(3.0, {1.0, 3.0}, 5);
    CHECK(code_of([&] { census(s, 2.0); }) == ErrorCode::NotACheckpoint);
    CHECK(code_of([&] { max_position(s, 2.5); }) == ErrorCode::NotACheckpoint);
    CHECK(code_of([&] { s.find(ParticleLabel::parse("1111111111111111111111")); }) ==
          ErrorCode::UnknownLabel);
    // a particle that died before t = 3 is not alive there
    const NodeId root = 0;
    if (s.node(root).death < 3.0) {
        CHECK(code_of([&] { overlap(s, root, root, 3.0); }) == ErrorCode::NotAlive);
    }
}

TEST_CASE("genealogy, census and determinism") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto s = simulate_snapshot(5.0, {0.0, 1.0, 2.5, 5.0}, seed);
        check_consistency(s);
        const auto again = simulate_snapshot(5.0, {0.0, 1.0, 2.5, 5.0}, seed);
        CHECK(write_snapshot_binary(s) == write_snapshot_binary(again));
        const auto c = census(s, 5.0);
        CHECK(c.size() == s.alive_at(5.0).size());
        double mx = -INFINITY;
        for (const auto& e : c) {
            mx = std::max(mx, e.position);
            CHECK(s.is_alive(s.find(e.label), 5.0));
        }
        CHECK(max_position(s, 5.0) == mx);
    }
    const auto a = simulate_snapshot(10.0, {10.0}, 99);
    const auto b = simulate_snapshot(10.0, {10.0}, 99);
    CHECK(write_snapshot_binary(a) == write_snapshot_binary(b));
}

TEST_CASE("position continuity along lineages") {
    const auto s = simulate_snapshot(4.0, {4.0}, 3);
    for (std::size_t i = 1; i < s.size(); ++i) {
        const Node& n = s.node(static_cast<NodeId>(i));
        const Node& p = s.node(n.parent);
        const Node& sib = s.node(static_cast<NodeId>(i) == p.first_child ? p.first_child + 1 : p.first_child);
        // both children of a split start where the parent ended
        CHECK(n.birth_position == sib.birth_position);
    }
}

TEST_CASE("mrca and overlap") {
    const auto s = simulate_snapshot(6.0, {6.0}, 11);
    const auto alive = s.alive_at(6.0);
    REQUIRE(alive.size() >= 3);
    const auto lu = s.label_of(alive[0].node);
    CHECK(mrca_death_time(s, lu, lu) == kNeverSeparated);
    CHECK(mrca_death_time(s, ParticleLabel::parse("1"), ParticleLabel::parse("2")) == s.node(0).death);
    CHECK(overlap(s, alive[0].node, alive[0].node, 6.0) == 1.0);

    for (std::size_t i = 0; i < alive.size(); ++i) {
        for (std::size_t j = 0; j < alive.size(); ++j) {
            const auto u = s.label_of(alive[i].node), v = s.label_of(alive[j].node);
            // brute force: walk both chains to the deepest shared node
            const auto lin_u = s.lineage(alive[i].node), lin_v = s.lineage(alive[j].node);
            NodeId shared = 0;
            for (NodeId x : lin_u)
                if (std::find(lin_v.begin(), lin_v.end(), x) != lin_v.end()) {
                    shared = x;
                    break;
                }
            const double expect = i == j ? kNeverSeparated : s.node(shared).death;
            CHECK(mrca_death_time(s, u, v) == expect);
            const double q = overlap(s, u, v, 6.0);
            CHECK(q == overlap(s, v, u, 6.0));
            CHECK(q >= 0.0);
            CHECK(q <= 1.0);
            if (i != j) CHECK(q == doctest::Approx(std::min(expect, 6.0) / 6.0));
        }
    }
    if (s.node(0).death < 6.0) {
        // a particle in each root subtree: overlap is d_root / t
        NodeId one = kNoNode, two = kNoNode;
        for (const auto& e : alive) {
            const auto l = s.label_of(e.node);
            (l.letters()[0] == 1 ? one : two) = e.node;
        }
        if (one != kNoNode && two != kNoNode)
            CHECK(overlap(s, one, two, 6.0) == doctest::Approx(s.node(0).death / 6.0));
    }
}

TEST_CASE("ultrametricity") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto s = simulate_snapshot(4.0, {4.0}, seed);
        const auto al = s.alive_at(4.0);
        const std::size_t n = std::min<std::size_t>(al.size(), 25);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) {
                    const double uw = overlap(s, al[i].node, al[k].node, 4.0);
                    const double uv = overlap(s, al[i].node, al[j].node, 4.0);
                    const double vw = overlap(s, al[j].node, al[k].node, 4.0);
                    CHECK(uw >= std::min(uv, vw));
                }
    }
}

TEST_CASE("alive count at t=2 is geometric(e^-2)") {
    const std::size_t n = 10000;
    const double p = std::exp(-2.0);
    const std::size_t bins = 40;
    std::vector<double> obs(bins + 1, 0.0), expd(bins + 1, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto k = simulate_snapshot(2.0, {2.0}, 1000 + r).alive_at(2.0).size();
        obs[std::min(k, bins + 1) - 1] += 1.0;
    }
    double tail = 1.0;
    for (std::size_t k = 1; k <= bins; ++k) {
        const double pk = p * std::pow(1.0 - p, static_cast<double>(k - 1));
        expd[k - 1] = n * pk;
        tail -= pk;
    }
    expd[bins] = n * tail;
    const auto g = chi_square_test(obs, expd);
    MESSAGE("alive-count chi2 p = " << g.p_value);
    CHECK(g.p_value > 0.001);
}

TEST_CASE("mean census size at 3 is e^3") {
    RunningStats st;
    for (std::size_t r = 0; r < 4000; ++r)
        st.add(static_cast<double>(simulate_snapshot(3.0, {3.0}, 77 + 31 * r).alive_at(3.0).size()));
    CHECK(std::abs(st.mean() - std::exp(3.0)) <= 4.0 * st.std_error());
}

TEST_CASE("first branching time is Exp(1)") {
    std::vector<double> d;
    for (std::uint64_t r = 0; r < 5000; ++r) d.push_back(simulate_snapshot(0.5, {}, 5 + r).node(0).death);
    // deaths past the horizon are still drawn, so the full Exp(1) law is visible
    const auto g = ks_test(d, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x); });
    MESSAGE("first split KS p = " << g.p_value);
    CHECK(g.p_value > 0.001);
}

TEST_CASE("recentred maximum at 12 is order one") {
    std::vector<double> v;
    for (std::uint64_t r = 0; r < 300; ++r) v.push_back(max_position(simulate_snapshot(12.0, {12.0}, 400 + r), 12.0) - m_centering(12.0));
    std::sort(v.begin(), v.end());
    const double med = quantile_sorted(v, 0.5);
    CHECK(med >= -5.0);
    CHECK(med <= 5.0);
}

TEST_CASE("serialization round trip") {
    const auto s = simulate_snapshot(4.0, {0.0, 2.0, 4.0}, 8);
    const auto bytes = write_snapshot_binary(s);
    const auto back = read_snapshot_binary(bytes);
    CHECK(write_snapshot_binary(back) == bytes);
    CHECK(back.size() == s.size());
    CHECK(back.horizon() == s.horizon());
    CHECK(back.rng_seed() == 8);
    for (std::size_t c = 0; c < 3; ++c) {
        REQUIRE(back.alive(c).size() == s.alive(c).size());
        for (std::size_t i = 0; i < s.alive(c).size(); ++i)
            CHECK(back.alive(c)[i].position == s.alive(c)[i].position);
    }
    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(read_snapshot_binary(bad), Error);
    CHECK_THROWS_AS(read_snapshot_binary(std::span(bytes).first(bytes.size() - 3)), Error);
    const auto js = write_snapshot_json(s);
    CHECK(js.find("\"horizon\"") != std::string::npos);
}

TEST_CASE("log values") {
    const auto a = LogValue::from_double(3.0), b = LogValue::from_double(-5.0);
    CHECK((a + b).value() == doctest::Approx(-2.0));
    CHECK((a * b).value() == doctest::Approx(-15.0));
    CHECK((a - a).is_zero());
    CHECK((a / b).value() == doctest::Approx(-0.6));
    const auto big = LogValue::from_log(2000.0);
    CHECK((big + big).log_magnitude() == doctest::Approx(2000.0 + std::log(2.0)));
    const std::vector<double> t{1000.0, 1000.0};
    CHECK(log_sum_exp(t) == doctest::Approx(1000.0 + std::log(2.0)));
    CHECK(log_sum_exp(std::span<const double>{}) == -INFINITY);
}
