#pragma once

#include "bbm/snapshot.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bbm {

// Binary layout (little-endian), version 1:
//   char[8]  magic "BBMSNAP1"
//   u32      version
//   f64      horizon
//   u64      rng_seed
//   u32      checkpoint count C, then f64[C] checkpoint times
//   u64      particle count P, then P records in node-id order:
//     u32 label length L, u8[L] label letters (each 1 or 2)
//     f64 birth time, f64 death time, f64 birth position
//     u32 index of the first checkpoint at which the particle is alive
//     u32 position count K, f64[K] positions at consecutive checkpoints
// The JSON form carries the same fields with the label as a "1"/"2" string.
std::vector<std::uint8_t> write_snapshot_binary(const Snapshot& snapshot);
Snapshot read_snapshot_binary(std::span<const std::uint8_t> bytes);

std::string write_snapshot_json(const Snapshot& snapshot);

void save_snapshot(const Snapshot& snapshot, const std::string& path, bool json = false);

}  // namespace bbm
