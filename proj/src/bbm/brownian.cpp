#include "bbm/brownian.hpp"

#include "bbm/errors.hpp"
#include "bbm/parallel.hpp"
#include "bbm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <functional>
#include <string>

#include <boost/random/normal_distribution.hpp>

namespace bbm {

void BarrierSpec::validate() const {
    if (!(alpha > 0.0 && alpha < 0.5)) throw Error(ErrorCode::OutOfRange, "alpha must lie in (0, 1/2)");
    if (!(t > 0.0)) throw Error(ErrorCode::OutOfRange, "t must be > 0");
    if (!std::isfinite(x)) throw Error(ErrorCode::OutOfRange, "x must be finite");
}

double BarrierSpec::curve(double s) const noexcept {
    if (kind == BarrierKind::Flat) return 0.0;
    const double d = std::min(s, t - s);
    return d > 0.0 ? std::pow(d, alpha) : 0.0;
}

double reflection_tail(double x, double lo, double hi, double t) {
    if (!(t > 0.0)) throw Error(ErrorCode::OutOfRange, "t must be > 0");
    if (!(lo <= hi)) throw Error(ErrorCode::OutOfRange, "need lo <= hi");
    if (hi > x) throw Error(ErrorCode::OutOfRange, "interval must lie below the barrier");
    if (x == std::numeric_limits<double>::infinity()) {
        const double sd = std::sqrt(t);
        return normal_cdf(hi / sd) - normal_cdf(lo / sd);
    }
    const double sd = std::sqrt(t);
    // Phi differences written with erfc so that far tails keep their relative precision
    auto mass = [sd](double a, double b) {
        if (a >= 0.0) return 0.5 * (std::erfc(a / (sd * std::numbers::sqrt2)) -
                                    std::erfc(b / (sd * std::numbers::sqrt2)));
        if (b <= 0.0) return 0.5 * (std::erfc(-b / (sd * std::numbers::sqrt2)) -
                                    std::erfc(-a / (sd * std::numbers::sqrt2)));
        return normal_cdf(b / sd) - normal_cdf(a / sd);
    };
    const double p = mass(lo, hi) - mass(2.0 * x - hi, 2.0 * x - lo);
    return std::clamp(p, 0.0, 1.0);
}

double bridge_crossing_prob(double x0, double x1, double dt, double barrier) noexcept {
    if (std::max(x0, x1) >= barrier) return 1.0;
    return std::exp(-2.0 * (barrier - x0) * (barrier - x1) / dt);
}

double joint_density_bm_max(double x, double y, double s) {
    if (!(s > 0.0)) throw Error(ErrorCode::OutOfRange, "s must be > 0");
    if (!(x <= y && y >= 0.0)) return 0.0;
    const double z = 2.0 * y - x;
    return std::sqrt(2.0 / std::numbers::pi) * std::pow(s, -1.5) * z * std::exp(-z * z / (2.0 * s));
}

BmWithMax sample_bm_with_max(double s, Rng& rng) {
    const double b = std::sqrt(s) * rng.normal();
    // the max of a bridge from 0 to b over s, by inverting its crossing probability
    const double m = 0.5 * (b + std::sqrt(b * b + 2.0 * s * rng.exponential()));
    return {b, m};
}

double barrier_grid_step(double t) noexcept { return std::min(0.01, t / 1e4); }

namespace {

struct PathOutcome {
    bool lower;
    bool upper;
};

// Barrier pieces per grid step: x - max f (lower bracket) and x - min f (upper bracket).
struct BarrierGrid {
    std::vector<double> dt, sqrt_dt, lo_barrier, hi_barrier;
};

BarrierGrid make_grid(const BarrierSpec& spec) {
    const double h = barrier_grid_step(spec.t);
    const auto steps = static_cast<std::size_t>(std::ceil(spec.t / h - 1e-9));
    const double mid = 0.5 * spec.t;
    BarrierGrid g;
    double s0 = 0.0, f0 = spec.curve(0.0);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double s1 = k == steps ? spec.t : std::min(spec.t, static_cast<double>(k) * h);
        const double f1 = spec.curve(s1);
        double fmax = std::max(f0, f1);
        if (s0 < mid && mid < s1) fmax = spec.curve(mid);
        g.dt.push_back(s1 - s0);
        g.sqrt_dt.push_back(std::sqrt(s1 - s0));
        g.lo_barrier.push_back(spec.x - fmax);
        g.hi_barrier.push_back(spec.x - std::min(f0, f1));
        s0 = s1;
        f0 = f1;
    }
    return g;
}

// Bridge crossing exponent 2 (b - x0)(b - x1) / dt; +inf when an endpoint is at or past b.
inline double crossing_exponent(double x0, double x1, double dt, double barrier) noexcept {
    if (std::max(x0, x1) >= barrier) return -1.0;
    return 2.0 * (barrier - x0) * (barrier - x1) / dt;
}

// A uniform is at least 2^-54, so exponents beyond 40 can never fire.
constexpr double kNeverFires = 40.0;

// Exposes Rng as a uniform random bit generator for the ziggurat normal sampler.
struct BitSource {
    using result_type = std::uint64_t;
    Rng& rng;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() noexcept { return rng.next_u64(); }
};

// Both brackets are driven by the same path and the same uniforms, so the lower event is
// contained in the upper one and the walk stops once the upper one has failed. The uniform is
// only drawn on steps where a crossing can fire.
PathOutcome run_path(const BarrierGrid& g, double x, std::optional<EndpointWindow> window,
                     Rng& rng) {
    BitSource bits{rng};
    boost::random::normal_distribution<double> normal;
    double b = 0.0;
    bool lower = x >= 0.0, upper = lower;
    const std::size_t steps = g.dt.size();
    for (std::size_t k = 0; k < steps && upper; ++k) {
        const double nb = b + g.sqrt_dt[k] * normal(bits);
        const double eh = crossing_exponent(b, nb, g.dt[k], g.hi_barrier[k]);
        const double el = lower ? crossing_exponent(b, nb, g.dt[k], g.lo_barrier[k]) : kNeverFires;
        if (eh < 0.0) {
            upper = lower = false;
        } else if (el < kNeverFires) {
            if (el < 0.0) {
                lower = false;
                if (eh < kNeverFires && rng.uniform() < std::exp(-eh)) upper = false;
            } else {
                const double u = rng.uniform();
                if (u < std::exp(-el)) lower = false;
                if (eh < kNeverFires && u < std::exp(-eh)) upper = lower = false;
            }
        } else if (eh < kNeverFires && rng.uniform() < std::exp(-eh)) {
            upper = lower = false;
        }
        b = nb;
    }
    if (window && !(b >= window->lo && b <= window->hi)) return {false, false};
    return {lower, upper};
}

}  // namespace

BarrierEstimate barrier_probability_mc(const BarrierSpec& spec,
                                       std::optional<EndpointWindow> window,
                                       std::size_t replicas, std::uint64_t seed) {
    spec.validate();
    if (replicas < 2) throw Error(ErrorCode::InsufficientSamples, "need >= 2 replicas");
    constexpr std::uint64_t tag = hash_tag("barrier_probability_mc");
    // paths are farmed in blocks so the per-task overhead stays small
    constexpr std::size_t block = 1024;
    const std::size_t blocks = (replicas + block - 1) / block;
    const BarrierGrid grid = make_grid(spec);
    const auto counts = farm(blocks, [&](std::size_t j) {
        std::pair<std::size_t, std::size_t> c{0, 0};
        const std::size_t end = std::min(replicas, (j + 1) * block);
        for (std::size_t i = j * block; i < end; ++i) {
            Rng rng(derive_stream(seed, tag, i));
            const auto o = run_path(grid, spec.x, window, rng);
            c.first += o.lower;
            c.second += o.upper;
        }
        return c;
    });
    std::size_t lo = 0, hi = 0;
    for (const auto& c : counts) {
        lo += c.first;
        hi += c.second;
    }
    const double n = static_cast<double>(replicas);
    BarrierEstimate e;
    e.t = spec.t;
    e.replicas = replicas;
    e.lower = static_cast<double>(lo) / n;
    e.upper = static_cast<double>(hi) / n;
    e.lower_se = std::sqrt(e.lower * (1.0 - e.lower) / (n - 1.0));
    e.upper_se = std::sqrt(e.upper * (1.0 - e.upper) / (n - 1.0));
    return e;
}

namespace {

BallotReport scaling_report(double x, std::span<const double> t_grid, double alpha,
                            std::size_t replicas, std::uint64_t seed,
                            const std::function<std::optional<EndpointWindow>(double)>& window,
                            double expected_slope) {
    if (t_grid.size() < 3) throw Error(ErrorCode::InsufficientPoints, "need >= 3 horizons");
    BallotReport rep;
    rep.expected_slope = expected_slope;
    std::vector<double> lt, llo, slo, lhi, shi;
    for (std::size_t k = 0; k < t_grid.size(); ++k) {
        const double t = t_grid[k];
        BarrierSpec spec{x, alpha, t, BarrierKind::Curved};
        const auto e = barrier_probability_mc(spec, window(t), replicas, derive_substream(seed, k));
        if (!(e.lower > 0.0))
            throw Error(ErrorCode::InsufficientSamples,
                        "no surviving path at t = " + std::to_string(t));
        rep.points.push_back(e);
        lt.push_back(std::log(t));
        llo.push_back(std::log(e.lower));
        slo.push_back(e.lower_se / e.lower);
        lhi.push_back(std::log(e.upper));
        shi.push_back(e.upper_se / e.upper);
    }
    rep.lower_fit = weighted_line_fit(lt, llo, slo);
    rep.upper_fit = weighted_line_fit(lt, lhi, shi);

    const double t = t_grid.back();
    const auto w = window(t);
    rep.flat = barrier_probability_mc(BarrierSpec{x, alpha, t, BarrierKind::Flat}, w, replicas,
                                      derive_substream(seed, 0xf1a7));
    rep.flat_exact = w ? reflection_tail(x, w->lo, w->hi, t)
                       : reflection_tail(x, -std::numeric_limits<double>::infinity(), x, t);
    const double se = std::sqrt(rep.flat_exact * (1.0 - rep.flat_exact) /
                                static_cast<double>(replicas));
    rep.flat_z = se > 0.0 ? (rep.flat.lower - rep.flat_exact) / se : 0.0;
    return rep;
}

void check_range(double v, double t, const char* name) {
    if (!(v >= 1.0 && v <= std::sqrt(t)))
        throw Error(ErrorCode::OutOfRange,
                    std::string(name) + " must lie in [1, sqrt(t)] for every t in the grid");
}

}  // namespace

BallotReport ballot_scaling_check(double x, std::span<const double> t_grid, double alpha,
                                  std::size_t replicas, std::uint64_t seed) {
    for (double t : t_grid) check_range(x, t, "x");
    constexpr std::uint64_t tag = hash_tag("ballot_scaling_check");
    return scaling_report(
        x, t_grid, alpha, replicas, seed ^ tag,
        [](double) { return std::optional<EndpointWindow>{}; }, -0.5);
}

BallotReport ballot_endpoint_scaling_check(double x, double y, std::span<const double> t_grid,
                                           double alpha, std::size_t replicas,
                                           std::uint64_t seed) {
    for (double t : t_grid) {
        check_range(x, t, "x");
        check_range(y, t, "y");
    }
    constexpr std::uint64_t tag = hash_tag("ballot_endpoint_scaling_check");
    return scaling_report(
        x, t_grid, alpha, replicas, seed ^ tag,
        [x, y](double) { return std::optional<EndpointWindow>{EndpointWindow{x - y, x - y + 1.0}}; },
        -1.5);
}

}  // namespace bbm
