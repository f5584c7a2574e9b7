#include "bbm/overlap.hpp"

#include "bbm/errors.hpp"
#include "bbm/martingales.hpp"
#include "bbm/parallel.hpp"
#include "bbm/rng.hpp"
#include "bbm/stats.hpp"
#include "bbm/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bbm {

namespace {

void check_query(const OverlapQuery& q) {
    if (!(q.beta >= 0.0)) throw Error(ErrorCode::OutOfRange, "beta must be >= 0");
    if (!(q.a >= 0.0 && q.a <= 1.0)) throw Error(ErrorCode::OutOfRange, "a must lie in [0,1]");
    if (!(q.t > 0.0)) throw Error(ErrorCode::OutOfRange, "t must be > 0");
}

// Depth-first rank of every node, children in label order.
std::vector<std::uint32_t> dfs_ranks(const Snapshot& s) {
    std::vector<std::uint32_t> rank(s.size());
    std::vector<NodeId> stack{0};
    std::uint32_t next = 0;
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        rank[static_cast<std::size_t>(id)] = next++;
        const NodeId c = s.node(id).first_child;
        if (c != kNoNode) {
            stack.push_back(c + 1);
            stack.push_back(c);
        }
    }
    return rank;
}

}  // namespace

EstimateWithCI mean_estimate(std::span<const double> draws, std::uint64_t master_seed) {
    if (draws.size() < 2) throw Error(ErrorCode::InsufficientSamples, "need >= 2 replicas");
    const auto st = summarize(draws);
    EstimateWithCI e;
    e.point = LogValue::from_double(st.mean());
    e.std_error_log = st.mean() > 0.0 ? st.std_error() / st.mean() : 0.0;
    e.replicas = draws.size();
    e.master_seed = master_seed;
    return e;
}

LogValue overlap_tail_direct(const Snapshot& snapshot, const OverlapQuery& q) {
    check_query(q);
    if (q.a == 0.0) return LogValue::one();
    const auto alive = snapshot.alive_at(q.t);
    const auto rank = dfs_ranks(snapshot);

    std::vector<AliveEntry> leaves(alive.begin(), alive.end());
    std::sort(leaves.begin(), leaves.end(), [&](const AliveEntry& x, const AliveEntry& y) {
        return rank[static_cast<std::size_t>(x.node)] < rank[static_cast<std::size_t>(y.node)];
    });
    const std::size_t n = leaves.size();

    // In depth-first order, the MRCA of leaves i < j is the shallowest of the MRCAs of the
    // adjacent pairs between them, so d_{u^v} is a running minimum.
    std::vector<double> adjacent(n > 0 ? n - 1 : 0);
    for (std::size_t k = 0; k + 1 < n; ++k)
        adjacent[k] = mrca_death_time(snapshot, leaves[k].node, leaves[k + 1].node);

    double top = -std::numeric_limits<double>::infinity();
    for (const auto& e : leaves) top = std::max(top, q.beta * e.position);
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(q.beta * leaves[i].position - top);

    long double pairs = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        double row = w[i] * w[i];
        double separation = kNeverSeparated;
        for (std::size_t j = i + 1; j < n; ++j) {
            separation = std::min(separation, adjacent[j - 1]);
            const double overlap_ij = std::min(separation, q.t) / q.t;
            if (overlap_ij < q.a) break;  // the running minimum only decreases
            row += 2.0 * w[i] * w[j];
        }
        pairs += row;
    }
    const long double total = std::accumulate(w.begin(), w.end(), 0.0L);
    return LogValue::from_log(std::log(static_cast<double>(pairs)) -
                              2.0 * std::log(static_cast<double>(total)));
}

LogValue overlap_tail_from_ancestors(std::span<const double> positions,
                                     std::span<const double> subtree_martingales,
                                     const OverlapQuery& q) {
    const double at = q.a * q.t;
    const double b = q.beta;
    std::vector<double> numer(positions.size()), denom(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const double log_w = std::log(subtree_martingales[i]);
        numer[i] = 2.0 * b * positions[i] - psi(2.0 * b) * at + 2.0 * log_w;
        denom[i] = b * positions[i] - psi(b) * at + log_w;
    }
    return LogValue::from_log((b * b - 1.0) * at + log_sum_exp(numer) - 2.0 * log_sum_exp(denom));
}

LogValue overlap_tail_aggregated(const Snapshot& snapshot, const OverlapQuery& q) {
    check_query(q);
    if (q.a == 0.0) return LogValue::one();
    const double at = q.a * q.t;
    const auto roots = snapshot.alive_at(at);
    const auto shifted = shifted_martingales(snapshot, at, q.beta, q.t - at);
    std::vector<double> numer(roots.size()), denom(roots.size());
    const double b = q.beta;
    for (std::size_t i = 0; i < roots.size(); ++i) {
        const double log_w = shifted[i].log_magnitude();
        numer[i] = 2.0 * b * roots[i].position - psi(2.0 * b) * at + 2.0 * log_w;
        denom[i] = b * roots[i].position - psi(b) * at + log_w;
    }
    return LogValue::from_log((b * b - 1.0) * at + log_sum_exp(numer) - 2.0 * log_sum_exp(denom));
}


LogValue sample_overlap_tail(const OverlapQuery& q, const SubtreeMartingaleSampler& sampler,
                             std::uint64_t stream, std::size_t population_cap) {
    check_query(q);
    if (q.a == 0.0) return LogValue::one();
    const double at = q.a * q.t;
    const auto snap = simulate_snapshot(at, {at}, stream, population_cap);
    const auto roots = snap.alive(0);
    Rng rng(derive_substream(stream, 1));
    std::vector<double> positions(roots.size()), subtree(roots.size());
    for (std::size_t i = 0; i < roots.size(); ++i) {
        positions[i] = roots[i].position;
        subtree[i] = sampler.sample(q.t - at, rng);
    }
    return overlap_tail_from_ancestors(positions, subtree, q);
}

TypicalPoint estimate_typical_point(double beta, double a, double t, std::size_t k,
                                    std::size_t replicas, std::uint64_t seed,
                                    const SubtreeSamplerOptions& options) {
    if (!(beta >= 0.0 && beta < kSqrt2))
        throw Error(ErrorCode::OutOfRange, "typical overlap needs 0 <= beta < sqrt(2)");
    if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::OutOfRange, "a must lie in (0,1)");
    if (replicas < 2) throw Error(ErrorCode::InsufficientSamples, "need >= 2 replicas");
    constexpr std::uint64_t tag = hash_tag("typical_overlap");
    const OverlapQuery q{beta, a, t};
    check_query(q);
    const SubtreeMartingaleSampler sampler(beta, q.t - a * q.t, options,
                                           derive_substream(seed ^ tag, 1000 + k));
    const auto nus = farm(replicas, [&](std::size_t i) {
        return sample_overlap_tail(q, sampler, derive_substream(derive_stream(seed, tag, i), k),
                                   options.population_cap);
    });
    TypicalPoint pt;
    pt.t = q.t;
    pt.rescaling = rescaling_factor(beta, a, q.t);
    for (const auto& nu : nus) pt.rescaled.push_back((nu * pt.rescaling).value());
    const auto m = median_summary(pt.rescaled);
    pt.median.point = LogValue::from_double(m.median);
    pt.median.std_error_log = m.std_error_log;
    pt.median.replicas = replicas;
    pt.median.master_seed = seed;
    pt.q1 = m.q1;
    pt.q3 = m.q3;
    return pt;
}

std::vector<TypicalPoint> estimate_typical_rescaled(double beta, double a,
                                                    std::span<const double> t_grid,
                                                    std::size_t replicas, std::uint64_t seed,
                                                    const SubtreeSamplerOptions& options) {
    std::vector<TypicalPoint> out;
    for (std::size_t k = 0; k < t_grid.size(); ++k)
        out.push_back(estimate_typical_point(beta, a, t_grid[k], k, replicas, seed, options));
    return out;
}

EstimateWithCI naive_mean_overlap(const OverlapQuery& q, std::size_t replicas, std::uint64_t seed,
                                  const SubtreeSamplerOptions& options) {
    check_query(q);
    constexpr std::uint64_t tag = hash_tag("mean_overlap_naive");
    const double at = q.a * q.t;
    std::vector<double> nus;
    if (options.mode == SubtreeMode::Exact) {
        std::vector<double> cps;
        if (at > 0.0 && at < q.t) cps.push_back(at);
        cps.push_back(q.t);
        nus = farm(replicas, [&](std::size_t i) {
            const auto snap =
                simulate_snapshot(q.t, cps, derive_stream(seed, tag, i), options.population_cap);
            return overlap_tail_aggregated(snap, q).value();
        });
    } else {
        const SubtreeMartingaleSampler sampler(q.beta, q.t - at, options,
                                               derive_substream(seed ^ tag, 1000));
        nus = farm(replicas, [&](std::size_t i) {
            return sample_overlap_tail(q, sampler, derive_stream(seed, tag, i),
                                       options.population_cap)
                .value();
        });
    }
    return mean_estimate(nus, seed);
}

EstimateWithCI normalized_overlap_numerator(double beta, double a, double t, std::size_t replicas,
                                            std::uint64_t seed,
                                            const SubtreeSamplerOptions& options) {
    check_query({beta, a, t});
    if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::OutOfRange, "a must lie in (0,1)");
    constexpr std::uint64_t tag = hash_tag("normalized_overlap_numerator");
    const double at = a * t;
    const SubtreeMartingaleSampler sampler(beta, t - at, options,
                                           derive_substream(seed ^ tag, 1000));
    const auto draws = farm(replicas, [&](std::size_t i) {
        const std::uint64_t stream = derive_stream(seed, tag, i);
        const auto snap = simulate_snapshot(at, {at}, stream, options.population_cap);
        Rng rng(derive_substream(stream, 1));
        const auto roots = snap.alive(0);
        std::vector<double> logw(roots.size()), w2(roots.size());
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < roots.size(); ++k) {
            logw[k] = 2.0 * beta * roots[k].position;
            top = std::max(top, logw[k]);
            const double w = sampler.sample(t - at, rng);
            w2[k] = w * w;
        }
        long double num = 0, den = 0;
        for (std::size_t k = 0; k < roots.size(); ++k) {
            const long double g = std::exp(logw[k] - top);
            num += g * w2[k];
            den += g;
        }
        return static_cast<double>(num / den);
    });
    return mean_estimate(draws, seed);
}

double hill_tail_index(std::span<const double> samples, std::size_t k) {
    if (samples.size() < 2 || k < 1 || k >= samples.size())
        throw Error(ErrorCode::InsufficientSamples, "Hill estimator needs 1 <= k < n");
    std::vector<double> x(samples.begin(), samples.end());
    for (double v : x)
        if (!(v > 0.0)) throw Error(ErrorCode::OutOfRange, "Hill estimator needs positive samples");
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k), x.end(),
                     std::greater<>());
    const double threshold = x[k];
    double h = 0.0;
    for (std::size_t i = 0; i < k; ++i) h += std::log(x[i] / threshold);
    h /= static_cast<double>(k);
    if (h <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / h;
}

double hill_tail_index(std::span<const double> samples) {
    return hill_tail_index(samples,
                           static_cast<std::size_t>(std::floor(std::sqrt(samples.size()))));
}

}  // namespace bbm
