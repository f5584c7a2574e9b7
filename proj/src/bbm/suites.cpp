#include "bbm/suites.hpp"

#include "bbm/brownian.hpp"
#include "bbm/errors.hpp"
#include "bbm/martingales.hpp"
#include "bbm/overlap.hpp"
#include "bbm/parallel.hpp"
#include "bbm/rng.hpp"
#include "bbm/serialize.hpp"
#include "bbm/spine.hpp"
#include "bbm/theory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

namespace bbm {

bool SuiteReport::pass() const noexcept {
    return !verdicts.empty() &&
           std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

namespace {

constexpr std::uint64_t kSuiteSeed = 20240917;

std::string num(double v, int digits = 6) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

Verdict paired(std::string name, double a, double se_a, double b, double se_b, double z_max) {
    const double se = std::hypot(se_a, se_b);
    const double z = se > 0.0 ? (a - b) / se : (a == b ? 0.0 : INFINITY);
    return {std::move(name), "equal means", b, a, z_max, std::abs(z) <= z_max,
            num(a) + " vs " + num(b) + ", z = " + num(z, 3)};
}

Verdict within(std::string name, std::string prediction, double predicted, double observed,
               double lo, double hi) {
    return {std::move(name), std::move(prediction), predicted, observed, hi - lo,
            observed >= lo && observed <= hi,
            num(observed) + " in [" + num(lo) + ", " + num(hi) + "]"};
}

// --- 1 ---------------------------------------------------------------------------------------

void beta0_law(SuiteReport& r) {
    SubtreeSamplerOptions exact;
    exact.mode = SubtreeMode::Exact;
    for (double t : {2.0, 4.0, 6.0}) {
        const auto e = naive_mean_overlap({0.0, 0.5, t}, 100000,
                                          derive_substream(kSuiteSeed, static_cast<std::uint64_t>(t)), exact);
        const double x = exact_mean_overlap_beta0(0.5, t);
        r.verdicts.push_back(paired("naive_vs_exact_t" + num(t), e.value(), e.std_error(), x, 0.0, 4.0));
    }
    const double ratio = exact_mean_overlap_beta0(0.5, 30.0) / (2.0 * 0.5 * 30.0 * std::exp(-15.0));
    r.verdicts.push_back(within("asymptotic_ratio_t30", "2at e^{-at}", 1.0, ratio, 0.95, 1.05));
}

// --- 2 ---------------------------------------------------------------------------------------

void dual_route(SuiteReport& r) {
    Rng rng(kSuiteSeed);
    const double betas[] = {0.0, 0.4, 0.9};
    double worst = 0.0;
    std::string where;
    for (int i = 0; i < 100; ++i) {
        const double beta = betas[i % 3];
        const double t = 1.0 + 5.0 * rng.uniform();
        const double a = 0.05 + 0.9 * rng.uniform();
        const auto snap = simulate_snapshot(t, {a * t, t}, derive_stream(kSuiteSeed, 2, i));
        const OverlapQuery q{beta, a, t};
        const double d = overlap_tail_direct(snap, q).value();
        const double g = overlap_tail_aggregated(snap, q).value();
        const double rel = std::abs(d - g) / std::max(std::abs(d), 1e-300);
        if (rel > worst) {
            worst = rel;
            where = "snapshot " + std::to_string(i);
        }
    }
    r.verdicts.push_back({"direct_equals_aggregated", "identical", 0.0, worst, 1e-9, worst <= 1e-9,
                          "max relative difference " + num(worst, 3) + (where.empty() ? "" : " at " + where)});
}

// --- 3 ---------------------------------------------------------------------------------------

void is_vs_naive(SuiteReport& r) {
    SubtreeSamplerOptions exact;
    exact.mode = SubtreeMode::Exact;
    for (double beta : {0.5, 1.0}) {
        const std::uint64_t seed = derive_substream(kSuiteSeed, static_cast<std::uint64_t>(beta * 10));
        const auto is = is_mean_overlap_estimator(beta, 0.5, 5.0, 10000, seed);
        const auto nv = naive_mean_overlap({beta, 0.5, 5.0}, 10000, seed, exact);
        r.verdicts.push_back(paired("is_vs_naive_beta" + num(beta), is.value(), is.std_error(),
                                    nv.value(), nv.std_error(), 4.0));
    }
}

// --- 4 / 5 -----------------------------------------------------------------------------------

void typical_exponent(SuiteReport& r) {
    const double beta = 0.3, a = 0.5;
    const std::vector<double> ts{8, 12, 16, 20};
    const auto pts = estimate_typical_rescaled(beta, a, ts, 1000, kSuiteSeed);
    std::vector<EstimatePoint> rescaled;
    for (const auto& p : pts)
        rescaled.push_back({p.t, p.median.point.log_magnitude(), p.median.std_error_log, 1000, 0});
    const auto f = fit_exponent(rescaled);
    const double psi = psi_typ(beta);
    const double band = 0.15 * psi * a;
    r.verdicts.push_back({"rescaled_median_flat", "slope 0", 0.0, f.slope, band,
                          std::abs(f.slope) <= band,
                          "slope " + num(f.slope, 4) + " +- " + num(f.slope_std_error, 3) +
                              ", allowed |slope| <= " + num(band, 4)});
    // log median nu = log median(r nu) - (1 - beta^2) a t
    const double decay = -(f.slope - (1.0 - beta * beta) * a) / a;
    r.verdicts.push_back({"unrescaled_decay", "psi_typ(0.3) = " + num(psi, 4), psi, decay,
                          0.15, std::abs(decay - psi) <= 0.15 * psi,
                          "-log(nu)/a slope " + num(decay, 4)});
}

void mean_exponent(SuiteReport& r) {
    const double beta = 1.0, a = 0.5;
    std::vector<EstimatePoint> pts;
    std::size_t k = 0;
    for (double t : {8.0, 12.0, 16.0, 20.0, 24.0}) {
        const auto e = is_mean_overlap_estimator(beta, a, t, 10000, derive_substream(kSuiteSeed, k++));
        pts.push_back({t, e.point.log_magnitude() + 1.5 * std::log(t), e.std_error_log, 10000, 0});
    }
    const auto f = fit_exponent(pts);
    const double target = psi_mean(beta) * a;
    r.verdicts.push_back({"is_decay_rate", "psi_mean(1) a = 1/16", target, -f.slope, 0.2,
                          std::abs(-f.slope - target) <= 0.2 * target,
                          "rate " + num(-f.slope, 4) + " +- " + num(f.slope_std_error, 3) +
                              " after removing t^{-3/2}"});
}

// --- 6 ---------------------------------------------------------------------------------------

void limit_constant(SuiteReport& r) {
    const double beta = 0.3;
    const auto e = normalized_overlap_numerator(beta, 0.5, 16.0, 2000, kSuiteSeed);
    const double target = second_moment_W(beta);
    r.verdicts.push_back({"normalized_numerator", "E W_inf^2 = 2/(1-beta^2)", target, e.value(),
                          0.1, std::abs(e.value() - target) <= 0.1 * target,
                          num(e.value(), 5) + " +- " + num(e.std_error(), 3) + " vs " + num(target, 5)});
}

// --- 7 ---------------------------------------------------------------------------------------

double poisson_pmf(std::size_t k, double mean) {
    return std::exp(static_cast<double>(k) * std::log(mean) - mean - std::lgamma(k + 1.0));
}

void spinal_law(SuiteReport& r) {
    const double beta = 0.7, t = 4.0;
    const std::size_t n = 4000;
    constexpr std::uint64_t tag = hash_tag("spinal_law");
    struct Draw {
        double position;
        std::size_t splits;
    };
    const auto draws = farm(n, [&](std::size_t i) {
        const auto s = simulate_spine_Q(beta, t, {t}, derive_stream(kSuiteSeed, tag, i));
        const auto splits = static_cast<std::size_t>(
            std::count_if(s.spine_split_times.begin(), s.spine_split_times.end(),
                          [t](double x) { return x <= t; }));
        return Draw{s.spine_positions.at(0), splits};
    });
    std::vector<double> pos;
    std::size_t max_k = 0;
    for (const auto& d : draws) {
        pos.push_back(d.position);
        max_k = std::max(max_k, d.splits);
    }
    const auto ks = ks_test(pos, [&](double x) { return normal_cdf((x - beta * t) / std::sqrt(t)); });
    r.verdicts.push_back({"spine_position_ks", "Normal(beta t, t)", 0.001, ks.p_value, 0.001,
                          ks.p_value > 0.001, "p = " + num(ks.p_value, 3)});
    std::vector<double> obs(max_k + 2, 0.0), expct(max_k + 2, 0.0);
    for (const auto& d : draws) obs[d.splits] += 1.0;
    double tail = 1.0;
    for (std::size_t k = 0; k <= max_k; ++k) {
        expct[k] = n * poisson_pmf(k, 2.0 * t);
        tail -= poisson_pmf(k, 2.0 * t);
    }
    expct[max_k + 1] = n * std::max(tail, 0.0);
    const auto chi = chi_square_test(obs, expct);
    r.verdicts.push_back({"spine_splits_chi2", "Poisson(2t)", 0.001, chi.p_value, 0.001,
                          chi.p_value > 0.001, "p = " + num(chi.p_value, 3)});
    for (const auto& id : statistic_catalog()) {
        const auto c = radon_nikodym_check(beta, 3.0, id, 20000, kSuiteSeed);
        r.verdicts.push_back({"rn_" + id, "E_P[g W_t] = E_Q[g]", c.q_side.value(), c.p_side.value(),
                              4.0, std::abs(c.z_score) <= 4.0, "z = " + num(c.z_score, 3)});
    }
}

// --- 8 ---------------------------------------------------------------------------------------

void ballot(SuiteReport& r) {
    ExperimentConfig c;
    c.kind = ExperimentKind::BallotSuite;
    c.t_grid = {16, 64, 256};
    c.replicas = 1000000;
    c.master_seed = kSuiteSeed;
    const auto res = run_experiment(c);
    r.verdicts = res.verdicts;
}

// --- 9 ---------------------------------------------------------------------------------------

void tail_index(SuiteReport& r) {
    const auto pt = estimate_typical_point(1.0, 0.5, 14.0, 0, 10000, kSuiteSeed);
    const double h = hill_tail_index(pt.rescaled);
    r.verdicts.push_back(within("hill_index", "sqrt(2)/2", std::sqrt(0.5), h, 0.5, 0.95));
}

// --- 10 --------------------------------------------------------------------------------------

void invariants(SuiteReport& r) {
    // normalization, range and monotonicity of the overlap distribution
    double norm_err = 0.0;
    bool in_range = true, monotone = true;
    double ultra_violation = 0.0;
    for (int i = 0; i < 60; ++i) {
        const double t = 2.0 + 0.05 * i;
        const double beta = 0.2 * (i % 7);
        std::vector<double> cps;
        for (int k = 1; k <= 9; ++k) cps.push_back(0.1 * k * t);
        cps.push_back(t);
        const auto snap = simulate_snapshot(t, cps, derive_stream(kSuiteSeed, 10, i));
        norm_err = std::max(norm_err, std::abs(overlap_tail_direct(snap, {beta, 1e-9, t}).value() - 1.0));
        double prev = 1.0 + 1e-12;
        for (int k = 1; k <= 9; ++k) {
            const double nu = overlap_tail_aggregated(snap, {beta, 0.1 * k, t}).value();
            in_range = in_range && nu >= 0.0 && nu <= 1.0 + 1e-12;
            monotone = monotone && nu <= prev * (1.0 + 1e-12);
            prev = nu;
        }
        const auto alive = snap.alive_at(t);
        Rng rng(derive_stream(kSuiteSeed, 11, i));
        for (int k = 0; k < 200 && alive.size() >= 3; ++k) {
            const NodeId u = alive[rng.below(alive.size())].node;
            const NodeId v = alive[rng.below(alive.size())].node;
            const NodeId w = alive[rng.below(alive.size())].node;
            const double quw = overlap(snap, u, w, t);
            const double m = std::min(overlap(snap, u, v, t), overlap(snap, v, w, t));
            ultra_violation = std::max(ultra_violation, m - quw);
        }
    }
    r.verdicts.push_back({"normalization", "nu([0,1]) = 1", 1.0, 1.0 + norm_err, 1e-12,
                          norm_err <= 1e-12, "max error " + num(norm_err, 3)});
    r.verdicts.push_back({"range_and_monotonicity", "nu([a,1]) in [0,1], decreasing in a", 1.0,
                          in_range && monotone ? 1.0 : 0.0, 0.0, in_range && monotone,
                          std::string(in_range ? "in range" : "out of range") + ", " +
                              (monotone ? "monotone" : "not monotone")});
    r.verdicts.push_back({"ultrametricity", "q(u,w) >= min(q(u,v), q(v,w))", 0.0, ultra_violation,
                          0.0, ultra_violation <= 0.0, "max violation " + num(ultra_violation, 3)});

    // unit mean of the additive martingale
    for (double beta : {0.5, 1.0}) {
        const auto w = farm(20000, [&](std::size_t i) {
            Rng rng(derive_stream(kSuiteSeed, hash_tag("suite_martingale"), i));
            return sample_additive_martingale_exact(beta, 4.0, rng);
        });
        const auto st = summarize(w);
        r.verdicts.push_back(paired("martingale_mean_beta" + num(beta), st.mean(), st.std_error(),
                                    1.0, 0.0, 4.0));
    }

    // determinism: bytes of a snapshot, CSV of an experiment, independence from the worker count
    const auto b1 = write_snapshot_binary(simulate_snapshot(5.0, {2.5, 5.0}, 99));
    const auto b2 = write_snapshot_binary(simulate_snapshot(5.0, {2.5, 5.0}, 99));
    ExperimentConfig c;
    c.kind = ExperimentKind::TypicalOverlap;
    c.beta = 0.5;
    c.t_grid = {3, 4, 5};
    c.replicas = 64;
    c.master_seed = 7;
    const char* old = std::getenv("BBM_THREADS");
    const std::string saved = old ? old : "";
    setenv("BBM_THREADS", "1", 1);
    const auto csv1 = estimates_csv(run_experiment(c).points);
    setenv("BBM_THREADS", "3", 1);
    const auto csv2 = estimates_csv(run_experiment(c).points);
    if (old) setenv("BBM_THREADS", saved.c_str(), 1);
    else unsetenv("BBM_THREADS");
    const bool same = b1 == b2 && csv1 == csv2;
    r.verdicts.push_back({"determinism", "identical bytes", 1.0, same ? 1.0 : 0.0, 0.0, same,
                          std::string(b1 == b2 ? "snapshot bytes equal" : "snapshot bytes differ") +
                              ", " + (csv1 == csv2 ? "CSV equal across worker counts" : "CSV differs")});
}

struct SuiteDef {
    const char* name;
    const char* title;
    void (*run)(SuiteReport&);
};

const SuiteDef kSuites[] = {
    {"beta0_law", "beta = 0 exact law and its 2at e^{-at} asymptotics", beta0_law},
    {"dual_route", "pairwise and aggregated overlap tails agree", dual_route},
    {"is_vs_naive", "importance sampling agrees with naive Monte Carlo", is_vs_naive},
    {"typical_exponent", "typical overlap decays like e^{-(1-beta^2)at}", typical_exponent},
    {"mean_exponent", "mean overlap decay rate at beta = 1", mean_exponent},
    {"limit_constant", "normalized numerator tends to E W_inf^2", limit_constant},
    {"spinal_law", "spine law under the tilted measure", spinal_law},
    {"ballot", "ballot scalings and the reflection principle", ballot},
    {"tail_index", "tail index of the rescaled overlap at beta = 1", tail_index},
    {"invariants", "normalization, monotonicity, ultrametricity, means, determinism", invariants},
};

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& s : kSuites) v.emplace_back(s.name);
        return v;
    }();
    return names;
}

SuiteReport run_suite(const std::string& name) {
    for (const auto& s : kSuites) {
        if (name != s.name) continue;
        SuiteReport r;
        r.name = s.name;
        r.title = s.title;
        const auto t0 = std::chrono::steady_clock::now();
        s.run(r);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }
    throw Error(ErrorCode::ConfigInvalid, "unknown suite '" + name + "'");
}

}  // namespace bbm
