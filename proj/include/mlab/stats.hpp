// Order statistics, the survival-quantile normalization, KS-vs-Exp(1),
// weighted least squares and a seeded bootstrap.
#pragma once

#include <cstdint>
#include <vector>

#include "mlab/types.hpp"

namespace mlab {

double median(std::vector<double> xs);

// Smallest order statistic x_(k) with k >= q * n (empirical left-quantile).
double quantile(std::vector<double> xs, double q);

struct BetaEstimate {
    double beta = 0.0;
    bool lower_bound_only = false;  // quantile fell into the censored mass
    size_t n_uncensored = 0;
    size_t n_total = 0;
};

// Smallest t with empirical survival <= 1/e, over n_total = taus.size() +
// n_censored replicas (censored ones survive past t_max). Throws
// Error("AllCensored") when no replica finished.
BetaEstimate beta_from_samples(std::vector<double> taus, size_t n_censored,
                               double t_max);

// One-sample Kolmogorov-Smirnov statistic against the unit exponential.
double ks_statistic_exp1(std::vector<double> xs);

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};

LineFit weighted_least_squares(const std::vector<double>& x,
                               const std::vector<double>& y,
                               const std::vector<double>& w);

// Percentile bootstrap CI for the scaling slope: resamples each epsilon's tau
// list, recomputes medians, refits. Deterministic in seed.
std::pair<double, double> bootstrap_slope_ci(
    const std::vector<double>& inv_eps_sq,
    const std::vector<std::vector<double>>& taus_per_eps, uint64_t seed,
    int n_boot = 400, double level = 0.95);

}  // namespace mlab
