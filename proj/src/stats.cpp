#include "mlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "mlab/rng.hpp"

namespace mlab {

double median(std::vector<double> xs) {
    if (xs.empty()) fail("RangeError", "median of empty sample");
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) fail("RangeError", "quantile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) fail("RangeError", "quantile level outside [0,1]");
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    size_t k = size_t(std::ceil(q * double(n)));
    if (k == 0) k = 1;
    if (k > n) k = n;
    return xs[k - 1];
}

BetaEstimate beta_from_samples(std::vector<double> taus, size_t n_censored,
                               double t_max) {
    BetaEstimate est;
    est.n_uncensored = taus.size();
    est.n_total = taus.size() + n_censored;
    if (taus.empty()) fail("AllCensored", "no replica finished before t_max");
    std::sort(taus.begin(), taus.end());

    const double survival_target = std::exp(-1.0);
    const size_t n = est.n_total;
    // beta = x_(k) with k the smallest index making (n - k)/n <= 1/e.
    const size_t k = size_t(std::ceil((1.0 - survival_target) * double(n)));
    if (k > taus.size()) {
        est.beta = t_max;
        est.lower_bound_only = true;
    } else {
        est.beta = taus[k - 1];
    }
    return est;
}

double ks_statistic_exp1(std::vector<double> xs) {
    if (xs.empty()) fail("RangeError", "KS statistic of empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = double(xs.size());
    double d = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double f = 1.0 - std::exp(-xs[i]);
        d = std::max(d, std::abs(double(i + 1) / n - f));
        d = std::max(d, std::abs(f - double(i) / n));
    }
    return d;
}

LineFit weighted_least_squares(const std::vector<double>& x,
                               const std::vector<double>& y,
                               const std::vector<double>& w) {
    if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
        fail("RangeError", "weighted fit needs matching arrays of length >= 2");
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double xb = sx / sw, yb = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - xb) * (x[i] - xb);
        sxy += w[i] * (x[i] - xb) * (y[i] - yb);
    }
    if (!(sxx > 0.0)) fail("RangeError", "degenerate abscissae in fit");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = yb - fit.slope * xb;
    return fit;
}

namespace {

// Uniform index in [0, n) from a counter-based draw.
size_t boot_index(uint64_t seed, uint32_t b, uint32_t eps_i, uint32_t draw, size_t n) {
    const auto words = detail::philox4x32(
        {b, eps_i, draw, 0x626F6F74u},
        {uint32_t(seed), uint32_t(seed >> 32)});
    const uint64_t w = (uint64_t(words[0]) << 32) | words[1];
    return size_t(w % uint64_t(n));
}

}  // namespace

std::pair<double, double> bootstrap_slope_ci(
    const std::vector<double>& inv_eps_sq,
    const std::vector<std::vector<double>>& taus_per_eps, uint64_t seed,
    int n_boot, double level) {
    if (inv_eps_sq.size() != taus_per_eps.size() || inv_eps_sq.size() < 2)
        fail("RangeError", "bootstrap needs >= 2 epsilon rungs");
    std::vector<double> slopes;
    slopes.reserve(size_t(n_boot));
    std::vector<double> y(inv_eps_sq.size()), w(inv_eps_sq.size());
    std::vector<double> resample;
    for (int b = 0; b < n_boot; ++b) {
        bool ok = true;
        for (size_t e = 0; e < taus_per_eps.size(); ++e) {
            const auto& pool = taus_per_eps[e];
            if (pool.empty()) {
                ok = false;
                break;
            }
            resample.resize(pool.size());
            for (size_t i = 0; i < pool.size(); ++i)
                resample[i] =
                    pool[boot_index(seed, uint32_t(b), uint32_t(e), uint32_t(i), pool.size())];
            y[e] = std::log(median(resample));
            w[e] = double(pool.size());
        }
        if (!ok) fail("RangeError", "bootstrap rung with no samples");
        slopes.push_back(weighted_least_squares(inv_eps_sq, y, w).slope);
    }
    std::sort(slopes.begin(), slopes.end());
    const double alpha = 0.5 * (1.0 - level);
    const size_t lo = size_t(std::floor(alpha * (slopes.size() - 1)));
    const size_t hi = size_t(std::ceil((1.0 - alpha) * (slopes.size() - 1)));
    return {slopes[lo], slopes[hi]};
}

}  // namespace mlab
