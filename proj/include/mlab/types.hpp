// Core grid types and the error convention used across the library.
#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlab {

// Every recoverable failure carries a stable code ("NoBracket",
// "GridIncompatible", ...) that callers and tests can match on.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& what) {
    throw Error(code, what);
}

// Scalar field sampled on the uniform grid x_i = i/(N+1), i = 0..N+1,
// with homogeneous Dirichlet values at both endpoints.
struct GridFunction {
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(int n_interior) : values(size_t(n_interior) + 2, 0.0) {}

    int n_interior() const { return int(values.size()) - 2; }
    double dx() const { return 1.0 / (n_interior() + 1); }
    double x(int i) const { return i * dx(); }

    double& operator[](int i) { return values[size_t(i)]; }
    double operator[](int i) const { return values[size_t(i)]; }

    template <class F>
    static GridFunction sample(int n_interior, F f) {
        GridFunction u(n_interior);
        for (int i = 1; i <= n_interior; ++i) u.values[size_t(i)] = f(u.x(i));
        return u;
    }

    double sup_norm() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }

    GridFunction& operator+=(const GridFunction& o) {
        for (size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
        return *this;
    }
    GridFunction& operator-=(const GridFunction& o) {
        for (size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
        return *this;
    }
    GridFunction& operator*=(double a) {
        for (double& v : values) v *= a;
        return *this;
    }

    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(double a, GridFunction u) { return u *= a; }
};

inline double sup_dist(const GridFunction& a, const GridFunction& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

// Model parameters shared by all solvers.
struct ModelParams {
    double p = 3.0;                 // source exponent u|u|^{p-1}, p > 1
    int n_interior = 127;
    double dt = 1e-3;
    double blowup_threshold = 1e4;  // sup-norm level that counts as explosion
    int images = 8;                 // heat-kernel image truncation

    void validate() const {
        if (!(p > 1.0)) fail("RangeError", "p must satisfy p > 1, got " + std::to_string(p));
        if (n_interior < 1) fail("RangeError", "n_interior must be >= 1");
        if (!(dt > 0.0)) fail("RangeError", "dt must be > 0");
        if (!(blowup_threshold > 0.0)) fail("RangeError", "blowup_threshold must be > 0");
        if (images < 1) fail("RangeError", "images must be >= 1");
    }
};

}  // namespace mlab
