#include "doctest.h"

#include "bbm/errors.hpp"
#include "bbm/martingales.hpp"
#include "bbm/overlap.hpp"
#include "bbm/spine.hpp"
#include "bbm/stats.hpp"
#include "bbm/theory.hpp"

#include <boost/math/distributions/poisson.hpp>

#include <algorithm>
#include <cmath>
#include <tuple>

using namespace bbm;

namespace {

double normal_cdf_at(double x, double mean, double sd) { return normal_cdf((x - mean) / sd); }

// Poisson(mu) chi-square of integer counts, tail merged into the last bin
GoodnessOfFit poisson_fit(const std::vector<std::size_t>& counts, double mu) {
    const boost::math::poisson_distribution<double> law(mu);
    const std::size_t top = static_cast<std::size_t>(mu + 8.0 * std::sqrt(mu) + 10.0);
    std::vector<double> obs(top + 1, 0.0), expd(top + 1, 0.0);
    for (auto c : counts) obs[std::min(c, top)] += 1.0;
    const double n = static_cast<double>(counts.size());
    for (std::size_t k = 0; k < top; ++k) expd[k] = n * boost::math::pdf(law, static_cast<double>(k));
    expd[top] = n * boost::math::cdf(boost::math::complement(law, static_cast<double>(top - 1)));
    return chi_square_test(obs, expd);
}

}  // namespace

TEST_CASE("spine is a lineage and splits at rate 2") {
    const double beta = 0.8, t = 4.0;
    std::vector<double> x;
    std::vector<std::size_t> splits;
    for (std::uint64_t r = 0; r < 10000; ++r) {
        const auto s = simulate_spine_Q(beta, t, {1.0, 2.5, t}, derive_stream(5, hash_tag("spine-test"), r));
        REQUIRE(s.spine_nodes.size() == 3);
        if (r < 200) {
            CHECK(s.spine_label(0).is_ancestor_of(s.spine_label(1)));
            CHECK(s.spine_label(1).is_ancestor_of(s.spine_label(2)));
            CHECK(std::is_sorted(s.spine_split_times.begin(), s.spine_split_times.end()));
            CHECK(s.snapshot.position(s.spine_nodes[2], t) == s.spine_positions[2]);
            CHECK(s.on_spine[static_cast<std::size_t>(s.spine_nodes[2])] == 1);
        }
        x.push_back(s.spine_positions[2]);
        splits.push_back(s.spine_split_times.size());
    }
    const auto ks = ks_test(x, [&](double v) { return normal_cdf_at(v, beta * t, std::sqrt(t)); });
    MESSAGE("spine position KS p = " << ks.p_value);
    CHECK(ks.p_value > 0.001);
    const auto chi = poisson_fit(splits, 2.0 * t);
    MESSAGE("spine split chi2 p = " << chi.p_value);
    CHECK(chi.p_value > 0.001);
}

TEST_CASE("size-biased population at beta zero") {
    // under Q_0 the alive count is size-biased Geometric(e^{-t}): mean 2 e^t - 1
    const double t = 2.0;
    RunningStats n;
    for (std::uint64_t r = 0; r < 20000; ++r)
        n.add(static_cast<double>(simulate_spine_Q(0.0, t, {t}, 900 + r).snapshot.alive(0).size()));
    CHECK(std::abs(n.mean() - (2 * std::exp(t) - 1)) <= 4.0 * n.std_error());
}

TEST_CASE("Q_beta_t: same law before t, standard after") {
    const double beta = 0.8, t = 2.0, h = 4.0;
    std::vector<double> x;
    std::vector<std::size_t> splits;
    std::vector<double> obs(31, 0.0), expd(31, 0.0);
    const std::size_t n = 6000;
    for (std::uint64_t r = 0; r < n; ++r) {
        const auto s = simulate_Q_beta_t(beta, t, h, {t, h}, 31337 + r);
        x.push_back(s.spine_positions[0]);
        splits.push_back(static_cast<std::size_t>(
            std::count_if(s.spine_split_times.begin(), s.spine_split_times.end(), [&](double v) { return v <= t; })));
        const auto slots = s.snapshot.ancestor_slots(0);
        const auto at_t = s.snapshot.alive(0);
        std::int32_t spine_slot = -1;
        for (std::size_t i = 0; i < at_t.size(); ++i)
            if (at_t[i].node == s.spine_nodes[0]) spine_slot = static_cast<std::int32_t>(i);
        REQUIRE(spine_slot >= 0);
        std::size_t below = 0;
        for (const auto& e : s.snapshot.alive(1))
            if (slots[static_cast<std::size_t>(e.node)] == spine_slot) ++below;
        obs[std::min<std::size_t>(below, 31) - 1] += 1.0;
    }
    const double p = std::exp(-(h - t));
    double tail = 1.0;
    for (std::size_t k = 1; k <= 30; ++k) {
        const double pk = p * std::pow(1 - p, static_cast<double>(k - 1));
        expd[k - 1] = n * pk;
        tail -= pk;
    }
    expd[30] = n * tail;
    CHECK(ks_test(x, [&](double v) { return normal_cdf_at(v, beta * t, std::sqrt(t)); }).p_value > 0.001);
    CHECK(poisson_fit(splits, 2.0 * t).p_value > 0.001);
    const auto g = chi_square_test(obs, expd);
    MESSAGE("post-t spine subtree geometric chi2 p = " << g.p_value);
    CHECK(g.p_value > 0.001);

    // a horizon at t reproduces simulate_spine_Q exactly
    const auto a = simulate_Q_beta_t(beta, 3.0, 3.0, {3.0}, 77);
    const auto b = simulate_spine_Q(beta, 3.0, {3.0}, 77);
    CHECK(a.spine_positions == b.spine_positions);
    CHECK(a.snapshot.size() == b.snapshot.size());
}

TEST_CASE("change of measure") {
    CHECK(statistic_catalog().size() >= 4);
    const auto one = radon_nikodym_check(0.5, 2.0, "unit", 2000, 3);
    CHECK(one.q_side.value() == doctest::Approx(1.0));
    CHECK(std::abs(one.p_side.value() - 1.0) <= 4.0 * one.p_side.std_error());
    const auto cap = radon_nikodym_check(0.5, 2.0, "capped_population_10", 10000, 4);
    MESSAGE("capped population z = " << cap.z_score);
    CHECK(std::abs(cap.z_score) <= 4.0);
    const auto mx = radon_nikodym_check(0.0, 1.0, "max_below_2", 10000, 5);
    CHECK(std::abs(mx.z_score) <= 4.0);
    const auto s = simulate_snapshot(2.0, {2.0}, 1);
    CHECK_THROWS_AS(evaluate_statistic("nope", s, 2.0), Error);
    CHECK_THROWS_AS(radon_nikodym_check(0.5, 2.0, "nope", 10, 1), Error);
}

TEST_CASE("spine picks particles by Gibbs weight") {
    const auto flat = spine_gibbs_weight_check(0.0, 2.0, 0.0, 5000, 8);
    MESSAGE("beta 0 rank chi2 p = " << flat.chi_square.p_value);
    CHECK(flat.chi_square.p_value > 0.001);
    const auto hot = spine_gibbs_weight_check(2.0, 1.0, 0.5, 5000, 9);
    CHECK(std::abs(hot.z_scores[0]) <= 4.0);
    CHECK(hot.single_particle_replicas > 0);
    CHECK(hot.single_particle_spine_hits == hot.single_particle_replicas);
    for (double z : flat.z_scores) CHECK(std::abs(z) <= 4.0);
}

TEST_CASE("importance weight reduces to the squared ratio at tilt 2 beta") {
    const double beta = 0.5, a = 0.5, t = 4.0, at = a * t;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = simulate_Q_beta_t(2 * beta, at, t, {at, t}, seed);
        const auto alive = r.snapshot.alive(0);
        const auto sub = shifted_martingales(r.snapshot, at, beta, t - at);
        double w_xi = 0.0;
        for (std::size_t i = 0; i < alive.size(); ++i)
            if (alive[i].node == r.spine_nodes[0]) w_xi = sub[i].value();
        const double wt = additive_martingale(r.snapshot, beta, t).value();
        const double want = std::exp((beta * beta - 1) * at) * std::pow(w_xi / wt, 2);
        CHECK(is_overlap_weight(r, beta, a, t) == doctest::Approx(want).epsilon(1e-9));
    }
    const auto bad = simulate_Q_beta_t(1.0, 1.0, 4.0, {1.0, 4.0}, 1);
    CHECK_THROWS_AS(is_overlap_weight(bad, 0.5, 0.5, 4.0), Error);
}

TEST_CASE("importance sampler against exact and naive means") {
    const auto e0 = is_mean_overlap_estimator(0.0, 0.5, 4.0, 20000, 11);
    const double x0 = exact_mean_overlap_beta0(0.5, 4.0);
    CHECK(std::abs(e0.value() - x0) <= 4.0 * e0.std_error());
    CHECK(e0.value() > 0.0);
    CHECK(e0.value() <= 1.0);
    SubtreeSamplerOptions exact;
    exact.mode = SubtreeMode::Exact;
    for (auto [beta, a, t] : {std::tuple{0.5, 0.5, 4.0}, std::tuple{1.0, 0.3, 5.0}, std::tuple{1.2, 0.6, 6.0}}) {
        const auto is = is_mean_overlap_estimator(beta, a, t, 10000, 12);
        const auto nv = naive_mean_overlap({beta, a, t}, 10000, 13, exact);
        const double z = (is.value() - nv.value()) / std::hypot(is.std_error(), nv.std_error());
        MESSAGE("beta " << beta << " a " << a << " t " << t << ": is " << is.value() << " naive " << nv.value() << " z " << z);
        CHECK(std::abs(z) <= 4.0);
        CHECK(is.value() <= 1.0);
    }
    // the 2 beta tilt is the same estimator with a different proposal
    const auto two = is_mean_overlap_estimator(0.5, 0.5, 4.0, 10000, 14, {}, 1.0);
    const auto dflt = is_mean_overlap_estimator(0.5, 0.5, 4.0, 10000, 14);
    CHECK(std::abs(two.value() - dflt.value()) <= 4.0 * std::hypot(two.std_error(), dflt.std_error()));
    CHECK_THROWS_AS(is_mean_overlap_estimator(0.5, 0.5, 4.0, 1, 1), Error);
    CHECK_THROWS_AS(is_mean_overlap_estimator(0.5, 1.5, 4.0, 10, 1), Error);
}

TEST_CASE("variance reduction at beta 1, t 10") {
    const std::size_t n = 4000;
    const auto is = is_mean_overlap_estimator(1.0, 0.5, 10.0, n, 21);
    const auto nv = naive_mean_overlap({1.0, 0.5, 10.0}, n, 22);
    const double ratio = nv.std_error_log / is.std_error_log;
    MESSAGE("relative se naive " << nv.std_error_log << " is " << is.std_error_log << " ratio " << ratio);
    CHECK(ratio >= 10.0);
}
