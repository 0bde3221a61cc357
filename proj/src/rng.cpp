#include "mlab/rng.hpp"

#include <cmath>

namespace mlab {
namespace detail {

namespace {

constexpr uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr uint32_t kWeyl0 = 0x9E3779B9u;
constexpr uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(uint32_t a, uint32_t b, uint32_t& hi, uint32_t& lo) {
    const uint64_t prod = uint64_t(a) * uint64_t(b);
    hi = uint32_t(prod >> 32);
    lo = uint32_t(prod);
}

}  // namespace

std::array<uint32_t, 4> philox4x32(const std::array<uint32_t, 4>& counter,
                                   const std::array<uint32_t, 2>& key) {
    uint32_t c0 = counter[0], c1 = counter[1], c2 = counter[2], c3 = counter[3];
    uint32_t k0 = key[0], k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kPhiloxM0, c0, hi0, lo0);
        mulhilo(kPhiloxM1, c2, hi1, lo1);
        const uint32_t n0 = hi1 ^ c1 ^ k0;
        const uint32_t n1 = lo1;
        const uint32_t n2 = hi0 ^ c3 ^ k1;
        const uint32_t n3 = lo0;
        c0 = n0;
        c1 = n1;
        c2 = n2;
        c3 = n3;
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return {c0, c1, c2, c3};
}

void normal_pair(const std::array<uint32_t, 4>& block, double& z0, double& z1) {
    // Map two 64-bit words into (0,1]; u1 stays away from 0 so log(u1) is finite.
    const uint64_t w0 = (uint64_t(block[0]) << 32) | block[1];
    const uint64_t w1 = (uint64_t(block[2]) << 32) | block[3];
    const double u1 = (double(w0 >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = double(w1 >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    z0 = r * std::cos(a);
    z1 = r * std::sin(a);
}

}  // namespace detail

void sample_noise_field(const NoiseSpec& spec, uint64_t step_index,
                        std::vector<double>& out) {
    // The stream selects the key, the (step, block, replica) triple the counter,
    // so no two draws ever share a Philox input.
    const std::array<uint32_t, 2> key = {
        uint32_t(spec.master_seed),
        uint32_t(spec.master_seed >> 32) ^ (spec.stream_counter * 0xA511E9B3u)};
    const int n = int(out.size());
    const uint32_t step_lo = uint32_t(step_index);
    const uint32_t step_hi = uint32_t(step_index >> 32);
    for (int blk = 0; 2 * blk < n; ++blk) {
        const auto words = detail::philox4x32(
            {step_lo, step_hi, uint32_t(blk), spec.replica_id}, key);
        double z0, z1;
        detail::normal_pair(words, z0, z1);
        out[size_t(2 * blk)] = z0;
        if (2 * blk + 1 < n) out[size_t(2 * blk + 1)] = z1;
    }
}

std::vector<double> sample_noise_field(const NoiseSpec& spec, uint64_t step_index,
                                       int n_interior) {
    std::vector<double> out(static_cast<size_t>(n_interior), 0.0);
    sample_noise_field(spec, step_index, out);
    return out;
}

}  // namespace mlab
