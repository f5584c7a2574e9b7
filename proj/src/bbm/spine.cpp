#include "bbm/spine.hpp"

#include "bbm/errors.hpp"
#include "bbm/martingales.hpp"
#include "bbm/parallel.hpp"
#include "bbm/rng.hpp"
#include "bbm/theory.hpp"
#include "bbm/tree_engine.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numeric>

namespace bbm {

namespace {

SpineRealization realize(double beta, double until, double horizon, std::vector<double> checkpoints,
                         std::uint64_t seed, std::size_t cap) {
    if (!(horizon > 0.0)) throw Error(ErrorCode::OutOfRange, "horizon must be > 0");
    auto sim = SnapshotBuilder::simulate(horizon, std::move(checkpoints), seed, cap,
                                         SpineTilt{beta, until});
    SpineRealization r;
    r.snapshot = std::move(sim.snapshot);
    r.on_spine = std::move(sim.on_spine);
    r.spine_split_times = std::move(sim.spine_split_times);
    r.tilt_beta = beta;
    r.tilt_horizon = until;
    for (std::size_t c = 0; c < r.snapshot.checkpoint_times().size(); ++c) {
        for (const auto& e : r.snapshot.alive(c)) {
            if (r.on_spine[static_cast<std::size_t>(e.node)]) {
                r.spine_nodes.push_back(e.node);
                r.spine_positions.push_back(e.position);
                break;
            }
        }
    }
    return r;
}

}  // namespace

SpineRealization simulate_spine_Q(double beta, double horizon, std::vector<double> checkpoints,
                                  std::uint64_t seed, std::size_t population_cap) {
    return realize(beta, std::numeric_limits<double>::infinity(), horizon, std::move(checkpoints),
                   seed, population_cap);
}

SpineRealization simulate_Q_beta_t(double beta, double t, double horizon,
                                   std::vector<double> checkpoints, std::uint64_t seed,
                                   std::size_t population_cap) {
    if (!(t > 0.0 && t <= horizon)) throw Error(ErrorCode::OutOfRange, "need 0 < t <= horizon");
    return realize(beta, t, horizon, std::move(checkpoints), seed, population_cap);
}

const std::vector<std::string>& statistic_catalog() {
    static const std::vector<std::string> catalog{"unit", "capped_population_10", "max_below_2",
                                                  "min_above_minus_1"};
    return catalog;
}

double evaluate_statistic(const std::string& id, const Snapshot& snapshot, double t) {
    const auto alive = snapshot.alive_at(t);
    if (id == "unit") return 1.0;
    if (id == "capped_population_10") return std::min<double>(static_cast<double>(alive.size()), 10.0);
    if (id == "max_below_2") return max_position(snapshot, t) <= 2.0 ? 1.0 : 0.0;
    if (id == "min_above_minus_1") {
        double lo = std::numeric_limits<double>::infinity();
        for (const auto& e : alive) lo = std::min(lo, e.position);
        return lo >= -1.0 ? 1.0 : 0.0;
    }
    throw Error(ErrorCode::UnknownStatistic, "'" + id + "' is not in " + kStatisticCatalogVersion);
}

namespace {

// Mean estimate that tolerates a zero mean (indicator statistics).
EstimateWithCI linear_estimate(std::span<const double> xs, std::uint64_t seed) {
    const auto st = summarize(xs);
    EstimateWithCI e;
    e.point = LogValue::from_double(st.mean());
    e.std_error_log = st.mean() != 0.0 ? st.std_error() / std::abs(st.mean()) : 0.0;
    e.replicas = xs.size();
    e.master_seed = seed;
    return e;
}

}  // namespace

RadonNikodymCheck radon_nikodym_check(double beta, double t, const std::string& statistic_id,
                                      std::size_t replicas, std::uint64_t seed) {
    const auto& catalog = statistic_catalog();
    if (std::find(catalog.begin(), catalog.end(), statistic_id) == catalog.end())
        throw Error(ErrorCode::UnknownStatistic,
                    "'" + statistic_id + "' is not in " + kStatisticCatalogVersion);
    if (replicas < 2) throw Error(ErrorCode::InsufficientSamples, "need >= 2 replicas");
    const std::uint64_t tag = hash_tag("rn_check") ^ hash_tag(statistic_id);

    const auto p_draws = farm(replicas, [&](std::size_t i) {
        const auto snap = simulate_snapshot(t, {t}, derive_stream(seed, tag, i));
        return evaluate_statistic(statistic_id, snap, t) *
               additive_martingale(snap, beta, t).value();
    });
    const auto q_draws = farm(replicas, [&](std::size_t i) {
        const auto r = simulate_spine_Q(beta, t, {t}, derive_substream(derive_stream(seed, tag, i), 7));
        return evaluate_statistic(statistic_id, r.snapshot, t);
    });
    RadonNikodymCheck out;
    out.statistic = statistic_id;
    out.p_side = linear_estimate(p_draws, seed);
    out.q_side = linear_estimate(q_draws, seed);
    const double se = std::hypot(out.p_side.std_error(), out.q_side.std_error());
    const double diff = out.p_side.value() - out.q_side.value();
    out.z_score = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff));
    return out;
}

GibbsWeightReport spine_gibbs_weight_check(double beta, double t, double s_extra,
                                           std::size_t replicas, std::uint64_t seed,
                                           std::size_t ranks) {
    if (!(s_extra >= 0.0)) throw Error(ErrorCode::OutOfRange, "s_extra must be >= 0");
    constexpr std::uint64_t tag = hash_tag("spine_gibbs_weight_check");
    struct Draw {
        std::size_t rank;
        std::vector<double> weights;  // by rank bin
        bool single;
    };
    const std::size_t bins = ranks + 1;
    const auto draws = farm(replicas, [&](std::size_t i) {
        std::vector<double> cps{t};
        if (s_extra > 0.0) cps.push_back(t + s_extra);
        const auto r = simulate_Q_beta_t(beta, t, t + s_extra, cps, derive_stream(seed, tag, i));
        auto alive = std::vector<AliveEntry>(r.snapshot.alive(0).begin(), r.snapshot.alive(0).end());
        std::sort(alive.begin(), alive.end(),
                  [](const AliveEntry& x, const AliveEntry& y) { return x.position > y.position; });
        std::vector<double> logs;
        for (const auto& e : alive) logs.push_back(beta * e.position);
        const double norm = log_sum_exp(logs);
        Draw d{0, std::vector<double>(bins, 0.0), alive.size() == 1};
        for (std::size_t k = 0; k < alive.size(); ++k) {
            const std::size_t bin = std::min(k, ranks);
            d.weights[bin] += std::exp(logs[k] - norm);
            if (alive[k].node == r.spine_nodes[0]) d.rank = bin;
        }
        return d;
    });

    GibbsWeightReport rep;
    rep.replicas = replicas;
    rep.observed.assign(bins, 0.0);
    rep.expected.assign(bins, 0.0);
    std::vector<double> variance(bins, 0.0);
    for (const auto& d : draws) {
        rep.observed[d.rank] += 1.0;
        for (std::size_t b = 0; b < bins; ++b) {
            rep.expected[b] += d.weights[b];
            variance[b] += d.weights[b] * (1.0 - d.weights[b]);
        }
        if (d.single) {
            ++rep.single_particle_replicas;
            if (d.rank == 0) ++rep.single_particle_spine_hits;
        }
    }
    for (std::size_t b = 0; b < bins; ++b) {
        const double diff = rep.observed[b] - rep.expected[b];
        rep.z_scores.push_back(variance[b] > 0.0 ? diff / std::sqrt(variance[b])
                                                 : (diff == 0.0 ? 0.0 : INFINITY));
    }
    std::vector<double> o, e;
    for (std::size_t b = 0; b < bins; ++b) {
        if (rep.expected[b] > 0.0) {
            o.push_back(rep.observed[b]);
            e.push_back(rep.expected[b]);
        }
    }
    if (o.size() >= 2) rep.chi_square = chi_square_test(o, e);
    return rep;
}

double default_overlap_tilt(double beta) noexcept { return beta; }

namespace {

// log of the importance weight given the spine end point and the log of W_t's pieces.
double log_is_weight(double tilt, double at, double x, double log_spine_term,
                     double log_w_t) {
    return -(tilt * x - psi(tilt) * at) + 2.0 * (log_spine_term - log_w_t);
}

}  // namespace

double is_overlap_weight(const SpineRealization& realization, double beta, double a, double t) {
    const double at = a * t;
    const auto& snap = realization.snapshot;
    const std::size_t c = snap.checkpoint_index(at);
    if (std::abs(realization.tilt_horizon - at) > 1e-9)
        throw Error(ErrorCode::OutOfRange, "realization must be tilted on [0, at]");
    const double x = realization.spine_positions.at(c);
    const auto w_t = additive_martingale(snap, beta, t);
    const auto w_spine = shifted_martingale(snap, realization.spine_label(c), at, beta, t - at);
    const double spine_term = beta * x - psi(beta) * at + w_spine.log_magnitude();
    return std::exp(log_is_weight(realization.tilt_beta, at, x, spine_term, w_t.log_magnitude()));
}

OverlapImportanceSampler::OverlapImportanceSampler(double beta, double a, double t,
                                                   const SubtreeSamplerOptions& options,
                                                   std::uint64_t seed, double tilt)
    : beta_(beta),
      a_(a),
      t_(t),
      tilt_(tilt < 0.0 ? default_overlap_tilt(beta) : tilt),
      sampler_(beta, t, options, derive_substream(seed, 1000)) {
    if (!(beta >= 0.0 && beta < kSqrt2))
        throw Error(ErrorCode::OutOfRange, "importance sampling needs 0 <= beta < sqrt(2)");
    if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::OutOfRange, "a must lie in (0,1)");
    if (!(t > 0.0)) throw Error(ErrorCode::OutOfRange, "t must be > 0");
    const double r = t - a * t;
    const double h = options.level_step;
    const double level = std::round(r / h);
    if (options.mode == SubtreeMode::Pooled && r > options.direct_horizon &&
        std::abs(r - level * h) < 1e-9 && static_cast<std::size_t>(level) < sampler_.levels()) {
        const auto pool = sampler_.pool(static_cast<std::size_t>(level));
        law_.assign(pool.begin(), pool.end());
    } else {
        Rng rng(derive_substream(seed, 1001));
        law_.resize(std::max<std::size_t>(options.pool_size, 2));
        for (auto& w : law_) w = sampler_.sample(r, rng);
    }
    std::sort(law_.begin(), law_.end(), std::greater<>());
}

double OverlapImportanceSampler::share_squared(double c, Rng& rng) const {
    auto f = [c](double w) {
        const double y = c * w;
        const double s = y / (1.0 + y);
        return s * s;
    };
    const std::size_t top = std::min(kExactTailAtoms, law_.size());
    const std::size_t rest = law_.size() - top;
    double head = 0.0;
    for (std::size_t k = 0; k < top; ++k) head += f(law_[k]);
    double total = head / static_cast<double>(law_.size());
    if (rest == 0) return total;
    const std::size_t m = std::min(kBulkSubsample, rest);
    double bulk = 0.0;
    if (m == rest) {
        for (std::size_t k = top; k < law_.size(); ++k) bulk += f(law_[k]);
    } else {
        for (std::size_t k = 0; k < m; ++k) bulk += f(law_[top + rng.below(rest)]);
    }
    total += bulk / static_cast<double>(m) * static_cast<double>(rest) /
             static_cast<double>(law_.size());
    return total;
}

double OverlapImportanceSampler::draw(Rng& rng) const {
    const double at = a_ * t_;
    const double shift = psi(beta_);
    std::vector<double> shed;  // log terms of W_t(beta) from the subtrees shed by the spine
    double time = 0.0, x = 0.0;
    for (;;) {
        const double life = rng.exponential(2.0);
        if (time + life >= at) {
            const double dt = at - time;
            x += tilt_ * dt + std::sqrt(dt) * rng.normal();
            break;
        }
        x += tilt_ * life + std::sqrt(life) * rng.normal();
        time += life;
        shed.push_back(beta_ * x - shift * time + std::log(sampler_.sample(t_ - time, rng)));
    }
    const double log_tilt = -(tilt_ * x - psi(tilt_) * at);
    if (shed.empty()) return std::exp(log_tilt);
    // share of the spine subtree is cW / (1 + cW) with c = e^{beta X - psi at} / (shed mass)
    const double log_c = beta_ * x - shift * at - log_sum_exp(shed);
    return std::exp(log_tilt) * share_squared(std::exp(log_c), rng);
}

EstimateWithCI is_mean_overlap_estimator(double beta, double a, double t, std::size_t replicas,
                                         std::uint64_t seed, const SubtreeSamplerOptions& options,
                                         double tilt) {
    if (replicas < 2) throw Error(ErrorCode::InsufficientSamples, "need >= 2 replicas");
    constexpr std::uint64_t tag = hash_tag("mean_overlap_is");
    const OverlapImportanceSampler is(beta, a, t, options, seed ^ tag, tilt);
    const auto draws = farm(replicas, [&](std::size_t i) {
        Rng rng(derive_stream(seed, tag, i));
        return is.draw(rng);
    });
    return mean_estimate(draws, seed);
}

}  // namespace bbm
