#include "bbm/subtree_sampler.hpp"

#include "bbm/errors.hpp"
#include "bbm/theory.hpp"

#include <cmath>
#include <string>

namespace bbm {

namespace {

struct Pending {
    double birth;
    double position;
};

// Depth-first walk over a standard BBM on [0, dt]; calls leaf(x) for every particle alive at dt.
template <class Leaf>
void walk_bbm(double dt, Rng& rng, std::size_t cap, Leaf&& leaf) {
    thread_local std::vector<Pending> stack;
    stack.clear();
    stack.push_back({0.0, 0.0});
    std::size_t leaves = 0;
    while (!stack.empty()) {
        const Pending p = stack.back();
        stack.pop_back();
        const double life = rng.exponential();
        if (p.birth + life >= dt) {
            leaf(p.position + std::sqrt(dt - p.birth) * rng.normal());
            ++leaves;
        } else {
            const double x = p.position + std::sqrt(life) * rng.normal();
            if (leaves + stack.size() + 2 > cap)
                throw Error(ErrorCode::PopulationCapExceeded,
                            "subtree exceeded " + std::to_string(cap) + " particles");
            stack.push_back({p.birth + life, x});
            stack.push_back({p.birth + life, x});
        }
    }
}

}  // namespace

const char* to_string(SubtreeMode mode) noexcept {
    return mode == SubtreeMode::Exact ? "exact" : "pooled";
}

double sample_additive_martingale_exact(double beta, double r, Rng& rng, std::size_t cap) {
    if (!(r >= 0.0)) throw Error(ErrorCode::OutOfRange, "duration must be >= 0");
    if (r == 0.0) return 1.0;
    const double shift = psi(beta) * r;
    double sum = 0.0;
    walk_bbm(r, rng, cap, [&](double x) { sum += std::exp(beta * x - shift); });
    return sum;
}

SubtreeMartingaleSampler::SubtreeMartingaleSampler(double beta, double max_duration,
                                                   SubtreeSamplerOptions options,
                                                   std::uint64_t seed)
    : beta_(beta), psi_(psi(beta)), max_duration_(max_duration), options_(options) {
    if (!(max_duration >= 0.0)) throw Error(ErrorCode::OutOfRange, "max_duration must be >= 0");
    if (options_.mode == SubtreeMode::Exact) return;
    if (!(options_.level_step > 0.0) || options_.pool_size < 2)
        throw Error(ErrorCode::OutOfRange, "pool needs level_step > 0 and pool_size >= 2");

    const double h = options_.level_step;
    const auto top = static_cast<std::size_t>(std::floor(max_duration / h));
    pools_.resize(top + 1);
    for (std::size_t level = 1; level <= top; ++level) {
        Rng rng(derive_substream(seed, level));
        auto& pool = pools_[level];
        pool.resize(options_.pool_size);
        const bool exact = static_cast<double>(level) * h <= options_.direct_horizon + 1e-12;
        for (auto& w : pool) {
            w = exact ? sample_additive_martingale_exact(beta_, static_cast<double>(level) * h, rng,
                                                         options_.population_cap)
                      : draw_through(h, level - 1, rng);
        }
    }
}

double SubtreeMartingaleSampler::draw_through(double dt, std::size_t level, Rng& rng) const {
    if (level == 0) return sample_additive_martingale_exact(beta_, dt, rng, options_.population_cap);
    const auto& pool = pools_[level];
    if (dt == 0.0) return pool[rng.below(pool.size())];
    const double shift = psi_ * dt;
    double sum = 0.0;
    walk_bbm(dt, rng, options_.population_cap, [&](double x) {
        sum += std::exp(beta_ * x - shift) * pool[rng.below(pool.size())];
    });
    return sum;
}

double SubtreeMartingaleSampler::sample(double r, Rng& rng) const {
    if (!(r >= 0.0)) throw Error(ErrorCode::OutOfRange, "duration must be >= 0");
    if (options_.mode == SubtreeMode::Exact || r <= options_.direct_horizon)
        return sample_additive_martingale_exact(beta_, r, rng, options_.population_cap);
    if (r > max_duration_ + 1e-9)
        throw Error(ErrorCode::OutOfRange, "duration " + std::to_string(r) +
                                               " beyond the sampler's range " +
                                               std::to_string(max_duration_));
    const double h = options_.level_step;
    auto level = static_cast<std::size_t>(std::floor(r / h + 1e-12));
    if (level >= pools_.size()) level = pools_.size() - 1;
    const double rest = std::max(0.0, r - static_cast<double>(level) * h);
    return draw_through(rest, level, rng);
}

}  // namespace bbm
