#pragma once

#include "bbm/rng.hpp"
#include "bbm/snapshot.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bbm {

/// Exact draw of W_r(beta) for a fresh standard BBM, by streaming depth-first simulation (no tree
/// is stored). Throws PopulationCapExceeded.
double sample_additive_martingale_exact(double beta, double r, Rng& rng,
                                        std::size_t population_cap = kDefaultPopulationCap);

enum class SubtreeMode { Exact, Pooled };

struct SubtreeSamplerOptions {
    SubtreeMode mode = SubtreeMode::Pooled;
    std::size_t pool_size = std::size_t{1} << 19;
    double level_step = 1.0;
    // Durations up to here are always drawn exactly; pool levels up to here are exact too.
    double direct_horizon = 3.0;
    std::size_t population_cap = kDefaultPopulationCap;
};

const char* to_string(SubtreeMode mode) noexcept;

/// Source of i.i.d. copies of W_r(beta) for the subtrees hanging below a time slice.
///
/// In pooled mode the law of W_{j h} is represented by an empirical pool for every level j, and
/// W_{(j+1) h} is drawn by simulating a BBM for time h exactly and attaching a pool-j draw to
/// every leaf (the branching decomposition of the additive martingale). Draws at an arbitrary r
/// do the same with the remainder r - j h. Pools are built once; sampling is const and
/// thread-safe.
class SubtreeMartingaleSampler {
public:
    SubtreeMartingaleSampler(double beta, double max_duration, SubtreeSamplerOptions options,
                             std::uint64_t seed);

    double sample(double r, Rng& rng) const;

    double beta() const noexcept { return beta_; }
    double max_duration() const noexcept { return max_duration_; }
    const SubtreeSamplerOptions& options() const noexcept { return options_; }
    std::size_t levels() const noexcept { return pools_.size(); }
    std::span<const double> pool(std::size_t level) const { return pools_.at(level); }

private:
    // W over duration `dt` where each leaf carries an independent copy of W_{level h}.
    double draw_through(double dt, std::size_t level, Rng& rng) const;

    double beta_;
    double psi_;
    double max_duration_;
    SubtreeSamplerOptions options_;
    std::vector<std::vector<double>> pools_;  // pools_[0] is the constant 1 (left empty)
};

}  // namespace bbm
