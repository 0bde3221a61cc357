// Counter-based random streams for reproducible, order-independent replicas.
//
// The generator is Philox-4x32-10. A draw is addressed by
// (master_seed, replica_id, step_index, lane); nothing is stateful, so any
// number of replicas can run concurrently and replay exactly.
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mlab/types.hpp"

namespace mlab {

struct NoiseSpec {
    double epsilon = 0.0;      // noise amplitude, >= 0
    uint64_t master_seed = 0;
    uint32_t replica_id = 0;
    uint32_t stream_counter = 0;  // distinguishes independent streams per replica

    void validate() const {
        if (!(epsilon >= 0.0)) fail("RangeError", "epsilon must be >= 0");
    }
};

namespace detail {

// One Philox-4x32-10 block: 4 output words from a 128-bit counter and 64-bit key.
std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                   const std::array<uint32_t, 2>& key);

// Two standard normals from one Philox block (Box-Muller).
void normal_pair(const std::array<uint32_t, 4>& block, double& z0, double& z1);

}  // namespace detail

// n independent N(0,1) draws for a given step of a given replica. Pure
// function of (spec.master_seed, spec.replica_id, spec.stream_counter,
// step_index); the epsilon*sqrt(dt/dx) scaling is applied by the caller.
std::vector<double> sample_noise_field(const NoiseSpec& spec, uint64_t step_index,
                                       int n_interior);

// In-place variant used by the hot stepping loop (out.size() == n_interior).
void sample_noise_field(const NoiseSpec& spec, uint64_t step_index,
                        std::vector<double>& out);

}  // namespace mlab
