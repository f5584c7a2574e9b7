#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "bbm/stats.hpp"

namespace bbm {

enum class BarrierKind { Flat, Curved };

/// sup_{[0,t]} (B_s + f(s)) <= x with f = 0 (flat) or f(s) = min(s^alpha, (t-s)^alpha).
struct BarrierSpec {
    double x = 1.0;
    double alpha = 0.25;
    double t = 1.0;
    BarrierKind kind = BarrierKind::Curved;

    void validate() const;  // throws OutOfRange
    double curve(double s) const noexcept;
};

/// P(sup_{[0,t]} B <= x, B_t in [lo, hi]); lo may be -infinity. Throws OutOfRange unless
/// lo <= hi <= x and t > 0.
double reflection_tail(double x, double lo, double hi, double t);

/// Probability that a Brownian bridge from x0 to x1 over dt exceeds `barrier`.
double bridge_crossing_prob(double x0, double x1, double dt, double barrier) noexcept;

/// Density of (B_s, sup_{[0,s]} B) at (x, y). Throws OutOfRange unless s > 0.
double joint_density_bm_max(double x, double y, double s);

/// Exact draw of (B_s, sup_{[0,s]} B).
struct BmWithMax {
    double value;
    double max;
};
class Rng;
BmWithMax sample_bm_with_max(double s, Rng& rng);

/// Grid step used by the barrier Monte Carlo.
double barrier_grid_step(double t) noexcept;

/// Monte Carlo of P(barrier event [, B_t in window]). The path is sampled on the grid with exact
/// bridge non-crossing corrections against a piecewise-flat barrier. For the curved barrier the
/// piece is flat at the curve's max on the step (lower bracket) and at its min (upper bracket);
/// for the flat barrier both brackets coincide and the estimator is unbiased.
struct BarrierEstimate {
    double t = 0.0;
    double lower = 0.0, lower_se = 0.0;
    double upper = 0.0, upper_se = 0.0;
    std::size_t replicas = 0;

    double mid() const noexcept { return 0.5 * (lower + upper); }
};

struct EndpointWindow {
    double lo, hi;
};

BarrierEstimate barrier_probability_mc(const BarrierSpec& spec,
                                       std::optional<EndpointWindow> window,
                                       std::size_t replicas, std::uint64_t seed);

struct BallotReport {
    std::vector<BarrierEstimate> points;  // one per t
    FitResult lower_fit, upper_fit;       // log probability on log t, per bracket
    double expected_slope = 0.0;
    // flat-barrier version at the largest t against the reflection formula
    BarrierEstimate flat;
    double flat_exact = 0.0;
    double flat_z = 0.0;
};

/// P(sup (B + f_t) <= x) on a grid of t; the fitted slopes should be near -1/2.
/// Throws OutOfRange unless 1 <= x <= sqrt(t) for every t.
BallotReport ballot_scaling_check(double x, std::span<const double> t_grid, double alpha,
                                  std::size_t replicas, std::uint64_t seed);

/// Same with B_t in [x - y, x - y + 1]; the fitted slopes should be near -3/2.
BallotReport ballot_endpoint_scaling_check(double x, double y, std::span<const double> t_grid,
                                           double alpha, std::size_t replicas,
                                           std::uint64_t seed);

}  // namespace bbm
