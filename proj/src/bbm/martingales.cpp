#include "bbm/martingales.hpp"

#include "bbm/errors.hpp"
#include "bbm/theory.hpp"

#include <cmath>

namespace bbm {

LogValue additive_martingale(const Snapshot& snapshot, double beta, double t) {
    if (!(beta >= 0.0)) throw Error(ErrorCode::OutOfRange, "beta must be >= 0");
    const auto alive = snapshot.alive_at(t);
    const double shift = psi(beta) * t;
    std::vector<double> terms;
    terms.reserve(alive.size());
    for (const auto& e : alive) terms.push_back(beta * e.position - shift);
    return LogValue::from_log(log_sum_exp(terms));
}

MartingaleSeries additive_series(const Snapshot& snapshot, double beta) {
    MartingaleSeries series{beta, {}};
    for (double t : snapshot.checkpoint_times())
        series.entries.emplace_back(t, additive_martingale(snapshot, beta, t));
    return series;
}

double derivative_martingale(const Snapshot& snapshot, double t) {
    LogValue sum;
    for (const auto& e : snapshot.alive_at(t)) {
        const double lever = kSqrt2 * t - e.position;
        if (lever == 0.0) continue;
        sum += LogValue::from_log(std::log(std::abs(lever)) + kSqrt2 * e.position - 2.0 * t,
                                  lever > 0 ? 1 : -1);
    }
    return sum.value();
}

std::vector<LogValue> shifted_martingales(const Snapshot& snapshot, double s, double beta,
                                          double t) {
    if (!(t >= 0.0)) throw Error(ErrorCode::OutOfRange, "duration must be >= 0");
    const std::size_t early = snapshot.checkpoint_index(s);
    const std::size_t late = snapshot.checkpoint_index(s + t);
    const auto roots = snapshot.alive(early);
    const auto leaves = snapshot.alive(late);
    const auto slot = snapshot.ancestor_slots(early);
    const double shift = psi(beta) * t;

    // Two passes: per-group max, then shifted sums.
    std::vector<double> group_max(roots.size(), -std::numeric_limits<double>::infinity());
    for (const auto& e : leaves) {
        const auto g = static_cast<std::size_t>(slot[static_cast<std::size_t>(e.node)]);
        group_max[g] = std::max(group_max[g], beta * e.position);
    }
    std::vector<double> group_sum(roots.size(), 0.0);
    for (const auto& e : leaves) {
        const auto g = static_cast<std::size_t>(slot[static_cast<std::size_t>(e.node)]);
        group_sum[g] += std::exp(beta * e.position - group_max[g]);
    }
    std::vector<LogValue> out(roots.size());
    for (std::size_t g = 0; g < roots.size(); ++g)
        out[g] = LogValue::from_log(group_max[g] + std::log(group_sum[g]) -
                                    beta * roots[g].position - shift);
    return out;
}

LogValue shifted_martingale(const Snapshot& snapshot, const ParticleLabel& u, double s, double beta,
                            double t) {
    const NodeId id = snapshot.find(u);
    if (!snapshot.is_alive(id, s)) throw Error(ErrorCode::NotAlive, "particle not alive at s");
    const auto roots = snapshot.alive_at(s);
    const auto all = shifted_martingales(snapshot, s, beta, t);
    for (std::size_t g = 0; g < roots.size(); ++g)
        if (roots[g].node == id) return all[g];
    throw Error(ErrorCode::NotAlive, "particle not alive at s");
}

double second_moment_W(double beta) {
    if (!(beta >= 0.0 && beta < 1.0))
        throw Error(ErrorCode::OutOfRange, "E[W_inf(beta)^2] is finite only for 0 <= beta < 1");
    return 2.0 / (1.0 - beta * beta);
}

double second_moment_W(double beta, double r) {
    if (!(beta >= 0.0) || !(r >= 0.0)) throw Error(ErrorCode::OutOfRange, "need beta, r >= 0");
    const double c = 1.0 - beta * beta;
    if (c == 0.0) return 1.0 + 2.0 * r;
    const double decay = std::exp(-c * r);
    return decay + 2.0 * (1.0 - decay) / c;
}

}  // namespace bbm
