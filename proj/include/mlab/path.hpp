// Time-indexed sequence of grid functions; domain of the action functional.
#pragma once

#include <vector>

#include "mlab/types.hpp"

namespace mlab {

struct Path {
    std::vector<double> times;
    std::vector<GridFunction> states;

    const GridFunction& start() const { return states.front(); }
    const GridFunction& end() const { return states.back(); }
    size_t segments() const { return times.empty() ? 0 : times.size() - 1; }

    void validate() const {
        if (times.size() != states.size() || times.size() < 2)
            fail("FormatError", "path needs matching times/states with >= 2 frames");
        const int n = states.front().n_interior();
        for (const auto& s : states)
            if (s.n_interior() != n) fail("GridMismatch", "path states on mixed grids");
        for (size_t k = 1; k < times.size(); ++k)
            if (!(times[k] > times[k - 1]))
                fail("DegenerateSegment", "path times must be strictly increasing");
    }
};

// Same states traversed in reverse order, re-anchored at t = 0.
Path reverse_path(const Path& phi);

// Concatenation; the head of b replaces the tail of a (states must agree on grid).
Path concat_paths(const Path& a, const Path& b);

// Times scaled by the given factor (> 0); used for reparametrization probes.
Path rescale_time(const Path& phi, double factor);

}  // namespace mlab
