#include "doctest.h"

#include "bbm/brownian.hpp"
#include "bbm/errors.hpp"
#include "bbm/rng.hpp"
#include "bbm/stats.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

using namespace bbm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI); }

// P(B_s <= x, max <= y)
double joint_cdf(double x, double y, double s) {
    if (y <= 0) return 0.0;
    const double r = std::sqrt(s);
    x = std::min(x, y);
    return normal_cdf(x / r) - normal_cdf((x - 2 * y) / r);
}

template <class F>
double gk(F f, double lo, double hi) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-12);
}

}  // namespace

TEST_CASE("bridge crossing") {
    CHECK(bridge_crossing_prob(0.0, 0.0, 1.0, 1.0) == doctest::Approx(std::exp(-2.0)));
    CHECK(bridge_crossing_prob(1.0, 0.3, 0.5, 1.0) == 1.0);
    CHECK(bridge_crossing_prob(0.2, -0.7, 0.4, 1.1) == bridge_crossing_prob(-0.7, 0.2, 0.4, 1.1));
    double prev = 1.0;
    for (double b = 0.5; b < 4.0; b += 0.25) {
        const double p = bridge_crossing_prob(0.1, 0.4, 1.0, b);
        CHECK(p > 0.0);
        CHECK(p <= prev);
        prev = p;
    }
}

TEST_CASE("reflection tail") {
    CHECK(reflection_tail(kInf, -0.5, 1.0, 2.0) ==
          doctest::Approx(normal_cdf(1.0 / std::sqrt(2.0)) - normal_cdf(-0.5 / std::sqrt(2.0))));
    CHECK(reflection_tail(0.0, -kInf, 0.0, 1.0) == 0.0);
    CHECK_THROWS_AS(reflection_tail(1.0, 0.0, 2.0, 1.0), Error);
    CHECK_THROWS_AS(reflection_tail(1.0, 0.0, 0.5, 0.0), Error);
    double prev = 0.0;
    for (double x = 0.5; x < 5.0; x += 0.25) {
        const double p = reflection_tail(x, -1.0, 0.5, 3.0);
        CHECK(p >= prev);
        CHECK(p <= 1.0);
        prev = p;
    }
    CHECK(reflection_tail(2.0, -1.0, 1.0, 3.0) >= reflection_tail(2.0, -0.5, 0.5, 3.0));
    // whole-line version equals P(max <= x)
    CHECK(reflection_tail(1.3, -kInf, 1.3, 2.0) == doctest::Approx(2 * normal_cdf(1.3 / std::sqrt(2.0)) - 1));
}

TEST_CASE("reflection tail against bridge-corrected simulation") {
    // coarse Gaussian skeleton; each step survives with 1 - crossing probability
    const double x = 1.0, t = 2.0;
    const int steps = 8;
    const double dt = t / steps;
    RunningStats w;
    Rng rng(99);
    for (int r = 0; r < 1000000; ++r) {
        double b = 0.0, keep = 1.0;
        for (int k = 0; k < steps && keep > 0.0; ++k) {
            const double nb = b + std::sqrt(dt) * rng.normal();
            keep = nb >= x ? 0.0 : keep * (1.0 - bridge_crossing_prob(b, nb, dt, x));
            b = nb;
        }
        w.add(b >= -0.5 && b <= 0.5 ? keep : 0.0);
    }
    const double exact = reflection_tail(x, -0.5, 0.5, t);
    MESSAGE("mc " << w.mean() << " +- " << w.std_error() << " exact " << exact);
    CHECK(std::abs(w.mean() - exact) <= 4.0 * w.std_error());
}

TEST_CASE("joint density of value and maximum") {
    const double s = 1.3;
    CHECK_THROWS_AS(joint_density_bm_max(0.0, 1.0, 0.0), Error);
    CHECK(joint_density_bm_max(1.0, 0.5, s) == 0.0);
    CHECK(joint_density_bm_max(-1.0, -0.1, s) == 0.0);
    const double total = gk([&](double y) { return gk([&](double x) { return joint_density_bm_max(x, y, s); }, -kInf, y); },
                            0.0, kInf);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    for (double x : {-2.0, -0.3, 0.0, 0.7, 2.5}) {
        const double m = gk([&](double y) { return joint_density_bm_max(x, y, s); }, std::max(0.0, x), kInf);
        CHECK(m == doctest::Approx(phi(x / std::sqrt(s)) / std::sqrt(s)).epsilon(1e-7));
    }
}

TEST_CASE("exact (B_s, max) draws match the joint law") {
    const double s = 1.0;
    const int nx = 12, ny = 10;
    const double x0 = -3.0, x1 = 3.0, y1 = 3.0;
    std::vector<double> obs((nx + 1) * (ny + 1), 0.0), expd(obs.size(), 0.0);
    const std::size_t n = 1000000;
    Rng rng(4242);
    auto xbin = [&](double x) { return std::clamp(static_cast<int>((x - x0) / (x1 - x0) * nx), 0, nx - 1); };
    auto edge_x = [&](int i) { return i <= 0 ? -kInf : (i >= nx ? kInf : x0 + (x1 - x0) * i / nx); };
    auto edge_y = [&](int j) { return j >= ny ? kInf : y1 * j / ny; };
    for (std::size_t r = 0; r < n; ++r) {
        const auto d = sample_bm_with_max(s, rng);
        REQUIRE(d.max >= std::max(0.0, d.value));
        const int i = d.value <= x0 ? 0 : (d.value >= x1 ? nx - 1 : xbin(d.value));
        const int j = std::min(static_cast<int>(d.max / y1 * ny), ny - 1);
        obs[i * ny + j] += 1.0;
    }
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            const double xa = edge_x(i), xb = edge_x(i + 1), ya = edge_y(j), yb = edge_y(j + 1);
            auto F = [&](double x, double y) {
                if (x == -kInf) return 0.0;
                if (y == kInf) return x == kInf ? 1.0 : normal_cdf(x / std::sqrt(s));
                return joint_cdf(x == kInf ? y : x, y, s);
            };
            expd[i * ny + j] = n * (F(xb, yb) - F(xa, yb) - F(xb, ya) + F(xa, ya));
        }
    obs.resize(nx * ny);
    expd.resize(nx * ny);
    const auto g = chi_square_test(obs, expd);
    MESSAGE("2-D histogram chi2 p = " << g.p_value);
    CHECK(g.p_value > 0.001);
}

TEST_CASE("flat barrier Monte Carlo is unbiased") {
    const BarrierSpec flat{1.5, 0.25, 4.0, BarrierKind::Flat};
    const auto e = barrier_probability_mc(flat, std::nullopt, 40000, 3);
    CHECK(e.lower == e.upper);
    const double exact = reflection_tail(1.5, -kInf, 1.5, 4.0);
    CHECK(std::abs(e.mid() - exact) <= 4.0 * e.lower_se);
    const auto w = barrier_probability_mc(flat, EndpointWindow{-1.0, 0.0}, 40000, 4);
    CHECK(std::abs(w.mid() - reflection_tail(1.5, -1.0, 0.0, 4.0)) <= 4.0 * w.lower_se);
}

TEST_CASE("curved barrier brackets and monotonicity") {
    CHECK(barrier_grid_step(16.0) == doctest::Approx(0.0016));
    CHECK(barrier_grid_step(1000.0) == doctest::Approx(0.01));
    CHECK_THROWS_AS((BarrierSpec{1.0, 0.6, 4.0, BarrierKind::Curved}.validate()), Error);
    const BarrierSpec c{2.0, 0.25, 9.0, BarrierKind::Curved};
    CHECK(c.curve(0.0) == 0.0);
    CHECK(c.curve(9.0) == 0.0);
    CHECK(c.curve(4.5) == doctest::Approx(std::pow(4.5, 0.25)));
    const auto e = barrier_probability_mc(c, std::nullopt, 20000, 5);
    CHECK(e.lower <= e.upper);
    // more room below the barrier means more surviving paths, with shared randomness
    const auto hi = barrier_probability_mc({3.0, 0.25, 9.0, BarrierKind::Curved}, std::nullopt, 20000, 5);
    CHECK(hi.lower >= e.lower);
    CHECK(hi.upper >= e.upper);
    const auto y1 = barrier_probability_mc(c, EndpointWindow{1.0, 2.0}, 20000, 6);
    const auto y2 = barrier_probability_mc(c, EndpointWindow{0.0, 2.0}, 20000, 6);
    CHECK(y2.lower >= y1.lower);
}

TEST_CASE("ballot checks reject bad arguments") {
    const std::vector<double> ts{16.0, 64.0};
    CHECK_THROWS_AS(ballot_scaling_check(0.5, ts, 0.25, 100, 1), Error);
    CHECK_THROWS_AS(ballot_scaling_check(5.0, ts, 0.25, 100, 1), Error);
    CHECK_THROWS_AS(ballot_endpoint_scaling_check(2.0, 0.5, ts, 0.25, 100, 1), Error);
}

TEST_CASE("small ballot run") {
    const std::vector<double> ts{4.0, 9.0, 16.0};
    const auto r = ballot_scaling_check(2.0, ts, 0.25, 20000, 7);
    REQUIRE(r.points.size() == 3);
    CHECK(r.expected_slope == -0.5);
    CHECK(r.lower_fit.slope < 0);
    CHECK(std::abs(r.flat_z) <= 4.0);
    CHECK(r.flat_exact == doctest::Approx(reflection_tail(2.0, -kInf, 2.0, 16.0)));
}
