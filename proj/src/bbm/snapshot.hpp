#pragma once

#include "bbm/label.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace bbm {

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;
inline constexpr std::size_t kDefaultPopulationCap = 10'000'000;
inline constexpr double kNeverSeparated = std::numeric_limits<double>::infinity();

/// One particle of the genealogy. Children of a node are `first_child` and `first_child + 1`
/// (letters 1 and 2), and exist iff the particle died before the horizon.
struct Node {
    NodeId parent = kNoNode;
    NodeId first_child = kNoNode;
    std::uint32_t generation = 0;
    double birth = 0.0;
    double death = 0.0;  // may lie beyond the horizon
    double birth_position = 0.0;
};

/// A particle alive at a checkpoint together with its position there.
struct AliveEntry {
    NodeId node;
    double position;
};

struct CensusEntry {
    ParticleLabel label;
    double position;
};

/// A realized branching Brownian motion up to a horizon. Immutable once built; positions are
/// known at checkpoints and at birth times only.
class Snapshot {
public:
    double horizon() const noexcept { return horizon_; }
    const std::vector<double>& checkpoint_times() const noexcept { return checkpoints_; }
    std::uint64_t rng_seed() const noexcept { return seed_; }

    std::size_t size() const noexcept { return nodes_.size(); }
    const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    std::span<const Node> nodes() const noexcept { return nodes_; }

    std::optional<std::size_t> find_checkpoint(double s) const noexcept;
    /// Throws Error(NotACheckpoint).
    std::size_t checkpoint_index(double s) const;

    /// Alive particles at checkpoint `index`, sorted by node id.
    std::span<const AliveEntry> alive(std::size_t index) const { return census_.at(index); }
    std::span<const AliveEntry> alive_at(double s) const { return alive(checkpoint_index(s)); }

    /// Throws Error(UnknownLabel).
    NodeId find(const ParticleLabel& label) const;
    ParticleLabel label_of(NodeId id) const;

    bool is_alive(NodeId id, double s) const {
        const Node& n = node(id);
        return n.birth <= s && s < n.death;
    }
    /// Position at a checkpoint. Throws NotACheckpoint / NotAlive.
    double position(NodeId id, double s) const;

    /// For every node, the index into alive(checkpoint) of its ancestor (or itself) alive at that
    /// checkpoint; -1 for nodes that are neither alive then nor born after it.
    std::vector<std::int32_t> ancestor_slots(std::size_t checkpoint) const;

    /// The node's own lineage back to the root, root last.
    std::vector<NodeId> lineage(NodeId id) const;

private:
    friend class SnapshotBuilder;
    friend Snapshot read_snapshot_binary(std::span<const std::uint8_t> bytes);

    double horizon_ = 0.0;
    std::uint64_t seed_ = 0;
    std::vector<double> checkpoints_;
    std::vector<Node> nodes_;
    std::vector<std::vector<AliveEntry>> census_;
};

/// Exact event-driven simulation: Exp(1) lifetimes, Gaussian increments between consecutive
/// events/checkpoints. Throws PopulationCapExceeded when more than `population_cap` particles
/// would be alive at the horizon, OutOfRange on invalid arguments.
Snapshot simulate_snapshot(double horizon, std::vector<double> checkpoints, std::uint64_t seed,
                           std::size_t population_cap = kDefaultPopulationCap);

std::vector<CensusEntry> census(const Snapshot& snapshot, double s);

/// Death time of the most recent common ancestor; kNeverSeparated when u == v.
double mrca_death_time(const Snapshot& snapshot, const ParticleLabel& u, const ParticleLabel& v);
double mrca_death_time(const Snapshot& snapshot, NodeId u, NodeId v);

/// q_t(u, v) = min(d_{u^v}, t) / t. Throws NotAlive.
double overlap(const Snapshot& snapshot, const ParticleLabel& u, const ParticleLabel& v, double t);
double overlap(const Snapshot& snapshot, NodeId u, NodeId v, double t);

double max_position(const Snapshot& snapshot, double t);

}  // namespace bbm
