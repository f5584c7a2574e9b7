#pragma once

#include "bbm/log_value.hpp"
#include "bbm/snapshot.hpp"
#include "bbm/subtree_sampler.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bbm {

struct OverlapQuery {
    double beta = 0.0;
    double a = 0.5;
    double t = 1.0;
};

struct EstimateWithCI {
    LogValue point;
    double std_error_log = 0.0;
    std::size_t replicas = 0;
    std::uint64_t master_seed = 0;

    double value() const noexcept { return point.value(); }
    /// Standard error on the linear scale (delta method).
    double std_error() const noexcept { return std_error_log * point.value(); }
};

/// Estimate from the sample mean of positive draws.
EstimateWithCI mean_estimate(std::span<const double> draws, std::uint64_t master_seed);

/// nu_{beta,t}([a,1]) from the pairwise definition: all ordered pairs of N(t), diagonal included,
/// with q_t(u,v) >= a. O(|N(t)|^2).
LogValue overlap_tail_direct(const Snapshot& snapshot, const OverlapQuery& q);

/// Same quantity through the ancestors at time at and their shifted martingales. O(|N(t)|).
LogValue overlap_tail_aggregated(const Snapshot& snapshot, const OverlapQuery& q);

/// The aggregated formula given ancestor positions X_w(at) and the subtree martingales
/// W^{(w,at)}_{t-at}(beta).
LogValue overlap_tail_from_ancestors(std::span<const double> positions,
                                     std::span<const double> subtree_martingales,
                                     const OverlapQuery& q);

/// One draw of nu_{beta,t}([a,1]): exact tree up to at, subtree martingales from the sampler.
LogValue sample_overlap_tail(const OverlapQuery& q, const SubtreeMartingaleSampler& sampler,
                             std::uint64_t stream, std::size_t population_cap);

struct TypicalPoint {
    double t = 0.0;
    EstimateWithCI median;         // of r * nu
    double q1 = 0.0, q3 = 0.0;     // quartiles of r * nu
    LogValue rescaling;            // r(beta, a, t)
    std::vector<double> rescaled;  // r * nu per replica
};

/// One grid point of estimate_typical_rescaled; `index` selects the substream.
TypicalPoint estimate_typical_point(double beta, double a, double t, std::size_t index,
                                    std::size_t replicas, std::uint64_t seed,
                                    const SubtreeSamplerOptions& sampler = {});

/// Monte Carlo law of r(beta,a,t) * nu_{beta,t}([a,1]) on a time grid. Throws OutOfRange for
/// beta >= sqrt(2). Replica i at grid point k uses stream derive(seed, tag, i) / substream k.
std::vector<TypicalPoint> estimate_typical_rescaled(double beta, double a,
                                                    std::span<const double> t_grid,
                                                    std::size_t replicas, std::uint64_t seed,
                                                    const SubtreeSamplerOptions& sampler = {});

/// Naive estimate of E[nu_{beta,t}([a,1])] under P. Exact mode simulates whole snapshots.
EstimateWithCI naive_mean_overlap(const OverlapQuery& q, std::size_t replicas, std::uint64_t seed,
                                  const SubtreeSamplerOptions& sampler = {});

/// Replica mean of F_t / W_{at}(2 beta), where F_t = sum_{w in N(at)} e^{2 beta X_w - psi(2 beta) at}
/// (W^{(w,at)}_{t-at}(beta))^2 is the aggregated numerator of the overlap tail. Its limit is
/// E[W_infinity(beta)^2] in the high-temperature regime.
EstimateWithCI normalized_overlap_numerator(double beta, double a, double t, std::size_t replicas,
                                            std::uint64_t seed,
                                            const SubtreeSamplerOptions& sampler = {});

/// Hill estimator of the tail index from the k largest order statistics. Returns +infinity
/// when the top k+1 values coincide (e.g. a constant sample). Throws InsufficientSamples unless
/// 1 <= k < n, OutOfRange on non-positive samples.
double hill_tail_index(std::span<const double> samples, std::size_t k);
double hill_tail_index(std::span<const double> samples);  // k = floor(sqrt(n))

}  // namespace bbm
