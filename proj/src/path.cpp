#include "mlab/path.hpp"

namespace mlab {

Path reverse_path(const Path& phi) {
    phi.validate();
    Path out;
    const size_t n = phi.times.size();
    const double T = phi.times.back();
    out.times.reserve(n);
    out.states.reserve(n);
    for (size_t k = 0; k < n; ++k) {
        out.times.push_back(T - phi.times[n - 1 - k]);
        out.states.push_back(phi.states[n - 1 - k]);
    }
    return out;
}

Path concat_paths(const Path& a, const Path& b) {
    a.validate();
    b.validate();
    if (a.states.back().n_interior() != b.states.front().n_interior())
        fail("GridMismatch", "cannot concatenate paths on different grids");
    Path out = a;
    const double offset = a.times.back() - b.times.front();
    for (size_t k = 1; k < b.times.size(); ++k) {
        out.times.push_back(b.times[k] + offset);
        out.states.push_back(b.states[k]);
    }
    return out;
}

Path rescale_time(const Path& phi, double factor) {
    if (!(factor > 0.0)) fail("RangeError", "time rescale factor must be > 0");
    Path out = phi;
    for (double& t : out.times) t *= factor;
    return out;
}

}  // namespace mlab
