#include "bbm/snapshot.hpp"

#include "bbm/errors.hpp"
#include "bbm/rng.hpp"
#include "bbm/tree_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bbm {

namespace {

bool same_time(double a, double b) noexcept {
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
}

void validate_checkpoints(double horizon, const std::vector<double>& checkpoints) {
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
        throw Error(ErrorCode::OutOfRange, "horizon must be finite and non-negative");
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
        const double s = checkpoints[i];
        if (!(s >= 0.0 && s <= horizon))
            throw Error(ErrorCode::OutOfRange,
                        "checkpoint " + std::to_string(s) + " outside [0, horizon]");
        if (i > 0 && !(s > checkpoints[i - 1]))
            throw Error(ErrorCode::OutOfRange, "checkpoints must be strictly increasing");
    }
}

}  // namespace

TreeSimulation SnapshotBuilder::simulate(double horizon, std::vector<double> checkpoints,
                                         std::uint64_t seed, std::size_t population_cap,
                                         const std::optional<SpineTilt>& tilt) {
    validate_checkpoints(horizon, checkpoints);
    if (population_cap < 1) throw Error(ErrorCode::OutOfRange, "population_cap must be >= 1");

    TreeSimulation out;
    Snapshot& snap = out.snapshot;
    snap.horizon_ = horizon;
    snap.seed_ = seed;
    snap.checkpoints_ = std::move(checkpoints);
    snap.census_.resize(snap.checkpoints_.size());
    const auto& cps = snap.checkpoints_;

    Rng rng(seed);
    auto& nodes = snap.nodes_;
    nodes.push_back(Node{});
    if (tilt) out.on_spine.push_back(1);

    const double tilt_until = tilt ? tilt->until : 0.0;
    const double drift = tilt ? tilt->drift : 0.0;
    std::size_t leaves = 1;

    // Nodes are appended in creation order, so parents always precede children and each
    // checkpoint census ends up sorted by node id.
    for (std::size_t id = 0; id < nodes.size(); ++id) {
        const bool spine = tilt && out.on_spine[id] != 0;
        const double birth = nodes[id].birth;
        double death;
        if (spine && birth < tilt_until) {
            const double e = rng.exponential(2.0);
            death = birth + e < tilt_until ? birth + e : tilt_until + rng.exponential(1.0);
        } else {
            death = birth + rng.exponential(1.0);
        }
        nodes[id].death = death;

        double time = birth;
        double pos = nodes[id].birth_position;
        auto advance = [&](double to) {
            const double dt = to - time;
            double mean = 0.0;
            if (spine) {
                const double tilted = std::max(0.0, std::min(to, tilt_until) - time);
                mean = drift * tilted;
            }
            pos += mean + std::sqrt(dt) * rng.normal();
            time = to;
        };

        auto it = std::lower_bound(cps.begin(), cps.end(), birth);
        for (; it != cps.end() && *it < death; ++it) {
            if (*it > time) advance(*it);
            snap.census_[static_cast<std::size_t>(it - cps.begin())].push_back(
                AliveEntry{static_cast<NodeId>(id), pos});
        }

        if (death <= horizon) {
            advance(death);
            if (++leaves > population_cap)
                throw Error(ErrorCode::PopulationCapExceeded,
                            "more than " + std::to_string(population_cap) +
                                " particles alive before the horizon " + std::to_string(horizon));
            const auto first = static_cast<NodeId>(nodes.size());
            nodes[id].first_child = first;
            const std::uint32_t gen = nodes[id].generation + 1;
            nodes.push_back(Node{static_cast<NodeId>(id), kNoNode, gen, death, 0.0, pos});
            nodes.push_back(Node{static_cast<NodeId>(id), kNoNode, gen, death, 0.0, pos});
            if (tilt) {
                std::uint8_t pick = 2;
                if (spine) {
                    pick = static_cast<std::uint8_t>(rng.below(2));
                    out.spine_split_times.push_back(death);
                }
                out.on_spine.push_back(pick == 0 ? 1 : 0);
                out.on_spine.push_back(pick == 1 ? 1 : 0);
            }
        }
    }
    return out;
}

Snapshot simulate_snapshot(double horizon, std::vector<double> checkpoints, std::uint64_t seed,
                           std::size_t population_cap) {
    return SnapshotBuilder::simulate(horizon, std::move(checkpoints), seed, population_cap,
                                     std::nullopt)
        .snapshot;
}

std::optional<std::size_t> Snapshot::find_checkpoint(double s) const noexcept {
    auto it = std::lower_bound(checkpoints_.begin(), checkpoints_.end(), s - 1e-9 * std::max(1.0, std::abs(s)));
    if (it != checkpoints_.end() && same_time(*it, s))
        return static_cast<std::size_t>(it - checkpoints_.begin());
    return std::nullopt;
}

std::size_t Snapshot::checkpoint_index(double s) const {
    if (auto i = find_checkpoint(s)) return *i;
    throw Error(ErrorCode::NotACheckpoint, "time " + std::to_string(s) + " is not a checkpoint");
}

NodeId Snapshot::find(const ParticleLabel& label) const {
    NodeId id = 0;
    for (auto letter : label.letters()) {
        const NodeId child = nodes_[static_cast<std::size_t>(id)].first_child;
        if (child == kNoNode)
            throw Error(ErrorCode::UnknownLabel, "no particle labelled '" + label.str() + "'");
        id = child + (letter - 1);
    }
    return id;
}

ParticleLabel Snapshot::label_of(NodeId id) const {
    std::vector<std::uint8_t> letters(node(id).generation);
    for (NodeId cur = id; cur != 0;) {
        const NodeId parent = nodes_[static_cast<std::size_t>(cur)].parent;
        const auto gen = nodes_[static_cast<std::size_t>(cur)].generation;
        letters[gen - 1] =
            static_cast<std::uint8_t>(1 + (cur - nodes_[static_cast<std::size_t>(parent)].first_child));
        cur = parent;
    }
    return ParticleLabel(std::move(letters));
}

double Snapshot::position(NodeId id, double s) const {
    const auto& entries = census_[checkpoint_index(s)];
    auto it = std::lower_bound(entries.begin(), entries.end(), id,
                               [](const AliveEntry& e, NodeId v) { return e.node < v; });
    if (it == entries.end() || it->node != id)
        throw Error(ErrorCode::NotAlive, "particle not alive at " + std::to_string(s));
    return it->position;
}

std::vector<std::int32_t> Snapshot::ancestor_slots(std::size_t checkpoint) const {
    const double s = checkpoints_.at(checkpoint);
    std::vector<std::int32_t> slot(nodes_.size(), -1);
    const auto& entries = census_[checkpoint];
    for (std::size_t i = 0; i < entries.size(); ++i)
        slot[static_cast<std::size_t>(entries[i].node)] = static_cast<std::int32_t>(i);
    for (std::size_t id = 1; id < nodes_.size(); ++id) {
        if (slot[id] < 0 && nodes_[id].birth > s)
            slot[id] = slot[static_cast<std::size_t>(nodes_[id].parent)];
    }
    return slot;
}

std::vector<NodeId> Snapshot::lineage(NodeId id) const {
    std::vector<NodeId> chain;
    for (NodeId cur = id; cur != kNoNode; cur = node(cur).parent) chain.push_back(cur);
    return chain;
}

std::vector<CensusEntry> census(const Snapshot& snapshot, double s) {
    std::vector<CensusEntry> out;
    for (const auto& e : snapshot.alive_at(s))
        out.push_back(CensusEntry{snapshot.label_of(e.node), e.position});
    return out;
}

double mrca_death_time(const Snapshot& snapshot, NodeId u, NodeId v) {
    if (u == v) return kNeverSeparated;
    while (u != v) {
        // Walk the deeper lineage up; equal generations move together.
        const auto gu = snapshot.node(u).generation;
        const auto gv = snapshot.node(v).generation;
        if (gu >= gv) u = snapshot.node(u).parent;
        if (gv >= gu) v = snapshot.node(v).parent;
    }
    return snapshot.node(u).death;
}

double mrca_death_time(const Snapshot& snapshot, const ParticleLabel& u, const ParticleLabel& v) {
    return mrca_death_time(snapshot, snapshot.find(u), snapshot.find(v));
}

double overlap(const Snapshot& snapshot, NodeId u, NodeId v, double t) {
    if (!(t > 0.0)) throw Error(ErrorCode::OutOfRange, "overlap needs t > 0");
    if (!snapshot.is_alive(u, t) || !snapshot.is_alive(v, t))
        throw Error(ErrorCode::NotAlive, "overlap needs both particles alive at t");
    if (u == v) return 1.0;
    return std::min(mrca_death_time(snapshot, u, v), t) / t;
}

double overlap(const Snapshot& snapshot, const ParticleLabel& u, const ParticleLabel& v, double t) {
    return overlap(snapshot, snapshot.find(u), snapshot.find(v), t);
}

double max_position(const Snapshot& snapshot, double t) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& e : snapshot.alive_at(t)) best = std::max(best, e.position);
    return best;
}

}  // namespace bbm
