#include "doctest.h"

#include "bbm/errors.hpp"
#include "bbm/overlap.hpp"
#include "bbm/snapshot.hpp"
#include "bbm/stats.hpp"
#include "bbm/theory.hpp"

#include <cmath>

using namespace bbm;

TEST_CASE("dual route equality on random snapshots") {
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const double t = 2.0 + static_cast<double>(seed % 5);  // 2..6
        const double a = 0.5;
        const auto s = simulate_snapshot(t, {a * t, t}, seed);
        for (double beta : {0.0, 0.4, 1.0}) {
            const OverlapQuery q{beta, a, t};
            const double d = overlap_tail_direct(s, q).value();
            const double g = overlap_tail_aggregated(s, q).value();
            CHECK(d == doctest::Approx(g).epsilon(1e-9));
            CHECK(d > 0.0);
            CHECK(d <= 1.0 + 1e-12);
            ++checked;
        }
    }
    CHECK(checked == 300);
}

TEST_CASE("normalization and single particle") {
    const auto s = simulate_snapshot(4.0, {4.0}, 21);
    CHECK(overlap_tail_direct(s, {0.4, 0.0, 4.0}).value() == 1.0);
    CHECK(overlap_tail_aggregated(s, {0.4, 0.0, 4.0}).value() == 1.0);
    for (std::uint64_t seed = 1; seed < 300; ++seed) {
        const auto one = simulate_snapshot(0.3, {0.15, 0.3}, seed);
        if (one.size() != 1) continue;
        for (double a : {0.1, 0.5, 0.9}) CHECK(overlap_tail_direct(one, {0.8, a, 0.3}).value() == 1.0);
        break;
    }
}

TEST_CASE("ancestor before the first split gives one") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const auto probe = simulate_snapshot(3.0, {3.0}, seed);
        const double d0 = probe.node(0).death;
        if (d0 >= 3.0) continue;
        const double a = 0.9 * d0 / 3.0;
        const auto s = simulate_snapshot(3.0, {a * 3.0, 3.0}, seed);
        CHECK(overlap_tail_aggregated(s, {0.5, a, 3.0}).value() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("beta zero is the offspring-count ratio") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto s = simulate_snapshot(5.0, {2.5, 5.0}, seed);
        const auto slots = s.ancestor_slots(0);
        std::vector<double> counts(s.alive(0).size(), 0.0);
        for (const auto& e : s.alive_at(5.0)) counts.at(static_cast<std::size_t>(slots[e.node])) += 1.0;
        double sum = 0.0, sq = 0.0;
        for (double c : counts) {
            sum += c;
            sq += c * c;
        }
        CHECK(overlap_tail_aggregated(s, {0.0, 0.5, 5.0}).value() == doctest::Approx(sq / (sum * sum)).epsilon(1e-12));
    }
}

TEST_CASE("monotone in a and within range") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const double t = 5.0;
        std::vector<double> cps;
        for (int i = 1; i <= 20; ++i) cps.push_back(t * i / 21.0);
        cps.push_back(t);
        const auto s = simulate_snapshot(t, cps, seed);
        double prev = 1.0;
        for (int i = 1; i <= 20; ++i) {
            const double v = overlap_tail_aggregated(s, {0.8, i / 21.0, t}).value();
            CHECK(v > 0.0);
            CHECK(v <= prev * (1.0 + 1e-12));
            prev = v;
        }
    }
}

TEST_CASE("ancestor-form helper") {
    const std::vector<double> x{0.0, 1.0};
    const std::vector<double> w{1.0, 1.0};
    // two equal-mass subtrees split exactly at at: half the mass sits on each diagonal block
    const double v = overlap_tail_from_ancestors(x, w, {0.0, 0.5, 2.0}).value();
    CHECK(v == doctest::Approx(0.5));
    const double b = overlap_tail_from_ancestors(x, w, {1.0, 0.5, 2.0}).value();
    const double e = std::exp(1.0);
    CHECK(b == doctest::Approx((1.0 + e * e) / ((1.0 + e) * (1.0 + e))));
}

TEST_CASE("errors") {
    const auto s = simulate_snapshot(2.0, {2.0}, 3);
    CHECK_THROWS_AS(overlap_tail_aggregated(s, {0.5, 0.5, 2.0}), Error);  // 1.0 is not a checkpoint
    CHECK_THROWS_AS(overlap_tail_direct(s, {0.5, 1.5, 2.0}), Error);
    CHECK_THROWS_AS(estimate_typical_point(1.5, 0.5, 4.0, 0, 10, 1), Error);
    CHECK_THROWS_AS(estimate_typical_point(0.5, 0.5, 4.0, 0, 1, 1), Error);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(mean_estimate(one, 1), Error);
}

TEST_CASE("typical draws lie in (0,1]") {
    SubtreeSamplerOptions o;
    o.pool_size = 1 << 14;
    const auto p = estimate_typical_point(1.1, 0.5, 8.0, 0, 200, 9, o);
    for (double v : p.rescaled) {
        const double nu = v / p.rescaling.value();
        CHECK(nu > 0.0);
        CHECK(nu <= 1.0 + 1e-12);
    }
    CHECK(p.q1 <= p.median.value());
    CHECK(p.median.value() <= p.q3);
}

TEST_CASE("beta zero rescaled mean tracks the exact value") {
    SubtreeSamplerOptions o;
    o.mode = SubtreeMode::Exact;
    for (double t : {3.0, 5.0}) {
        const auto p = estimate_typical_point(0.0, 0.5, t, 0, 5000, 31, o);
        CHECK(p.rescaling.value() == doctest::Approx(std::exp(0.5 * t)));
        const auto st = summarize(p.rescaled);
        const double want = std::exp(0.5 * t) * exact_mean_overlap_beta0(0.5, t);
        CAPTURE(t);
        CHECK(std::abs(st.mean() - want) <= 4.0 * st.std_error());
    }
}

TEST_CASE("naive mean is reproducible and seed-sensitive") {
    SubtreeSamplerOptions o;
    o.mode = SubtreeMode::Exact;
    const auto a = naive_mean_overlap({0.5, 0.5, 3.0}, 200, 5, o);
    const auto b = naive_mean_overlap({0.5, 0.5, 3.0}, 200, 5, o);
    const auto c = naive_mean_overlap({0.5, 0.5, 3.0}, 200, 6, o);
    CHECK(a.value() == b.value());
    CHECK(a.value() != c.value());
    CHECK(a.replicas == 200);
}

TEST_CASE("Hill estimator") {
    Rng rng(2024);
    std::vector<double> pareto(100000);
    for (auto& x : pareto) x = std::pow(rng.uniform(), -1.0 / 1.2);
    const double h = hill_tail_index(pareto);
    MESSAGE("Hill on Pareto(1.2): " << h);
    CHECK(std::abs(h - 1.2) <= 0.1);
    const std::vector<double> flat(100, 3.0);
    CHECK(std::isinf(hill_tail_index(flat)));
    CHECK_THROWS_AS(hill_tail_index(flat, 0), Error);
    CHECK_THROWS_AS(hill_tail_index(flat, 100), Error);
    const std::vector<double> neg{1.0, -1.0, 2.0, 3.0};
    CHECK_THROWS_AS(hill_tail_index(neg, 2), Error);
}

TEST_CASE("median summary") {
    std::vector<double> v;
    for (int i = 1; i <= 101; ++i) v.push_back(i);
    const auto m = median_summary(v);
    CHECK(m.median == 51.0);
    CHECK(m.q1 == 26.0);
    CHECK(m.q3 == 76.0);
    CHECK(m.std_error_log > 0.0);
}
