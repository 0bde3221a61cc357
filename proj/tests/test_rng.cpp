#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mlab/rng.hpp"

using namespace mlab;

TEST_CASE("counter-based draws are a pure function of the address") {
    NoiseSpec spec;
    spec.master_seed = 0xDEADBEEFCAFEull;
    spec.replica_id = 7;
    spec.stream_counter = 0;

    const auto a = sample_noise_field(spec, 123, 64);
    const auto b = sample_noise_field(spec, 123, 64);
    CHECK(a == b);

    auto differs = [&](const NoiseSpec& s2, uint64_t step) {
        const auto c = sample_noise_field(s2, step, 64);
        int same = 0;
        for (size_t i = 0; i < c.size(); ++i)
            if (c[i] == a[i]) ++same;
        return same < 4;  // a few coincidences would already be suspicious
    };
    NoiseSpec other = spec;
    other.replica_id = 8;
    CHECK(differs(other, 123));
    other = spec;
    other.stream_counter = 1;
    CHECK(differs(other, 123));
    CHECK(differs(spec, 124));

    NoiseSpec reseeded = spec;
    reseeded.master_seed += 1;
    CHECK(differs(reseeded, 123));
}

TEST_CASE("moments of the standard normal stream") {
    NoiseSpec spec;
    spec.master_seed = 20240811ull;
    spec.replica_id = 0;

    const int n_per_step = 1000;
    const int steps = 1000;  // 1e6 draws total
    double sum = 0.0, sum_sq = 0.0;
    long long within_1sigma = 0;
    for (int s = 0; s < steps; ++s) {
        const auto draws = sample_noise_field(spec, uint64_t(s), n_per_step);
        for (double x : draws) {
            sum += x;
            sum_sq += x * x;
            if (std::abs(x) <= 1.0) ++within_1sigma;
        }
    }
    const double n = double(n_per_step) * steps;
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;

    CHECK(std::abs(mean) <= 4e-3);             // 4 sigma for 1e6 unit normals
    CHECK(std::abs(var - 1.0) <= 0.01);

    const double frac = double(within_1sigma) / n;
    CHECK(frac == doctest::Approx(0.682689).epsilon(0.01));
}

TEST_CASE("assembled forcing variance matches the white-noise cell law") {
    // Forcing per node is eps*sqrt(dt/dx)*xi; its variance must be eps^2 dt/dx.
    const double eps = 0.7, dt = 1e-3;
    const int n_interior = 100;
    const double dx = 1.0 / (n_interior + 1);
    const double scale = eps * std::sqrt(dt / dx);
    const double target = eps * eps * dt / dx;

    NoiseSpec spec;
    spec.master_seed = 99;
    double sum = 0.0, sum_sq = 0.0;
    const int steps = 10000;  // 1e6 draws
    for (int s = 0; s < steps; ++s) {
        const auto draws = sample_noise_field(spec, uint64_t(s), n_interior);
        for (double x : draws) {
            const double f = scale * x;
            sum += f;
            sum_sq += f * f;
        }
    }
    const double n = double(n_interior) * steps;
    const double var = sum_sq / n - (sum / n) * (sum / n);
    CHECK(std::abs(var - target) / target <= 0.01);
}
