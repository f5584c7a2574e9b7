#pragma once

#include "bbm/snapshot.hpp"

#include <optional>

namespace bbm {

/// Spine modification of the branching dynamics: before `until`, the spine moves with drift
/// `drift` and splits at rate 2; afterwards it behaves like any other particle. The new spine is
/// chosen uniformly among the two children at every split.
struct SpineTilt {
    double drift = 0.0;
    double until = std::numeric_limits<double>::infinity();
};

struct TreeSimulation {
    Snapshot snapshot;
    std::vector<std::uint8_t> on_spine;     // per node, empty without a tilt
    std::vector<double> spine_split_times;  // spine deaths up to the horizon
};

class SnapshotBuilder {
public:
    static TreeSimulation simulate(double horizon, std::vector<double> checkpoints,
                                   std::uint64_t seed, std::size_t population_cap,
                                   const std::optional<SpineTilt>& tilt);
};

}  // namespace bbm
