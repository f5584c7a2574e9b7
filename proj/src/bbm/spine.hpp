#pragma once

#include "bbm/overlap.hpp"
#include "bbm/snapshot.hpp"
#include "bbm/stats.hpp"
#include "bbm/subtree_sampler.hpp"

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace bbm {

/// A BBM sampled under the spine-tilted measure, with the distinguished lineage marked.
struct SpineRealization {
    Snapshot snapshot;
    std::vector<std::uint8_t> on_spine;     // per node
    std::vector<NodeId> spine_nodes;        // spine particle at each checkpoint
    std::vector<double> spine_positions;    // its position at each checkpoint
    std::vector<double> spine_split_times;  // up to the horizon, ascending
    double tilt_beta = 0.0;
    double tilt_horizon = std::numeric_limits<double>::infinity();

    ParticleLabel spine_label(std::size_t checkpoint) const {
        return snapshot.label_of(spine_nodes.at(checkpoint));
    }
};

/// BBM under Q_beta: spine with drift beta splitting at rate 2, standard BBMs hanging off it.
SpineRealization simulate_spine_Q(double beta, double horizon, std::vector<double> checkpoints,
                                  std::uint64_t seed,
                                  std::size_t population_cap = kDefaultPopulationCap);

/// BBM under Q_{beta,t}: Q_beta dynamics on [0,t], every particle standard afterwards.
SpineRealization simulate_Q_beta_t(double beta, double t, double horizon,
                                   std::vector<double> checkpoints, std::uint64_t seed,
                                   std::size_t population_cap = kDefaultPopulationCap);

/// Catalog of bounded F_t-measurable statistics for the change-of-measure check.
inline constexpr const char* kStatisticCatalogVersion = "rn-catalog/1";
const std::vector<std::string>& statistic_catalog();
/// Throws UnknownStatistic.
double evaluate_statistic(const std::string& id, const Snapshot& snapshot, double t);

struct RadonNikodymCheck {
    std::string statistic;
    EstimateWithCI p_side;  // E_P[g W_t(beta)]
    EstimateWithCI q_side;  // E_{Q_beta}[g]
    double z_score = 0.0;   // (p - q) / combined standard error
};

RadonNikodymCheck radon_nikodym_check(double beta, double t, const std::string& statistic_id,
                                      std::size_t replicas, std::uint64_t seed);

struct GibbsWeightReport {
    std::size_t replicas = 0;
    std::vector<double> observed;  // spine rank frequencies (counts), last bin = "lower ranks"
    std::vector<double> expected;  // summed normalized Gibbs weights per rank bin
    std::vector<double> z_scores;  // per bin, against the conditional binomial variance
    GoodnessOfFit chi_square;
    std::size_t single_particle_replicas = 0;
    std::size_t single_particle_spine_hits = 0;
};

/// Under Q_{beta,t}, compares how often the spine at t is the particle of each position rank with
/// the mean normalized Gibbs weight of that rank. `ranks` bins are used plus one overflow bin.
GibbsWeightReport spine_gibbs_weight_check(double beta, double t, double s_extra,
                                           std::size_t replicas, std::uint64_t seed,
                                           std::size_t ranks = 5);

/// Default spine drift of the mean-overlap importance sampler. With drift beta the weight reduces
/// to share * W^{(xi,at)} / W_t, which has the smallest spread we found at desk-scale t.
double default_overlap_tilt(double beta) noexcept;

/// Importance weight e^{-(g X_xi(at) - psi(g) at)} (e^{beta X_xi(at) - psi(beta) at} W^{(xi,at)} / W_t)^2
/// of a realization tilted with drift g = realization.tilt_beta on [0, at] (so tilt_horizon must be
/// at), with checkpoints at and t. For g = 2 beta this is e^{(beta^2-1)at} (W^{(xi,at)} / W_t)^2.
double is_overlap_weight(const SpineRealization& realization, double beta, double a, double t);

/// Importance sampler for E[nu_{beta,t}([a,1])] under Q_{tilt, at}. The spine is simulated on
/// [0, at]; the subtrees it sheds are drawn from the subtree sampler. The spine's own subtree
/// martingale W^{(xi,at)} is integrated out against the law of W_{t-at}: its largest atoms are
/// summed exactly and the rest are subsampled. This keeps the estimator unbiased for that law
/// while removing the variance the heavy right tail of W would otherwise inject.
class OverlapImportanceSampler {
public:
    OverlapImportanceSampler(double beta, double a, double t, const SubtreeSamplerOptions& options,
                             std::uint64_t seed, double tilt = -1.0);

    double draw(Rng& rng) const;

    double tilt() const noexcept { return tilt_; }
    std::span<const double> subtree_law() const noexcept { return law_; }

private:
    double share_squared(double c, Rng& rng) const;  // E[(cW/(1+cW))^2]

    double beta_, a_, t_, tilt_;
    SubtreeMartingaleSampler sampler_;
    std::vector<double> law_;  // atoms of W_{t-at}, descending
};

inline constexpr std::size_t kExactTailAtoms = 1024;
inline constexpr std::size_t kBulkSubsample = 4096;

/// Unbiased estimator of E[nu_{beta,t}([a,1])] by importance sampling under Q_{tilt, at}.
/// A negative tilt selects default_overlap_tilt(beta).
EstimateWithCI is_mean_overlap_estimator(double beta, double a, double t, std::size_t replicas,
                                         std::uint64_t seed,
                                         const SubtreeSamplerOptions& sampler = {},
                                         double tilt = -1.0);

}  // namespace bbm
