#pragma once

// Statistical characterization of optimizer traces: magnitude histograms, a
// Gutenberg-Richter style log-linear fit over bin counts, and an aggregate
// Poisson mean/variance/normality check.

#include <span>
#include <vector>

#include "poissonopt/rng.hpp"

namespace poissonopt {

struct MagnitudeHistogram {
    std::vector<double> edges;    // bins + 1 boundaries, equal width over [min, max]
    std::vector<long long> counts; // per bin, sums to total
    long long total = 0;

    double midpoint(size_t bin) const { return 0.5 * (edges[bin] + edges[bin + 1]); }
    size_t bins() const { return counts.size(); }
};

// Equal-width bins spanning the data range. A degenerate range (all values
// equal) puts everything into the first bin. Requires bins >= 2 and a
// nonempty input.
MagnitudeHistogram magnitude_histogram(std::span<const double> magnitudes, int bins);

struct GrFit {
    double a = 0.0;        // intercept of log10(count) = a - b * magnitude
    double b = 0.0;        // decay slope; positive when counts shrink with magnitude
    double residual = 0.0; // sum of squared log10 residuals over the fitted bins
};

// Least-squares fit over bins with positive counts, using bin midpoints as
// the regressor (log10 of midpoints when log_midpoints is set). Requires at
// least two positive bins.
GrFit gutenberg_richter_fit(const MagnitudeHistogram& hist, bool log_midpoints = false);

struct PoissonAggregateReport {
    double lambda_total = 0.0;  // sum of the component rates
    double sample_mean = 0.0;
    double sample_variance = 0.0;
    double mean_variance_ratio = 0.0;
    double jarque_bera = 0.0;   // normality statistic over the totals
    bool normal_at_1pct = false; // statistic below the 1% chi-squared(2) cutoff
    long long samples = 0;
};

// Draws per-iteration totals as sums of independent Poisson draws, one per
// rate, replicated samples_per_iteration times each iteration. Requires all
// rates positive and iterations >= 100.
PoissonAggregateReport poisson_aggregate_check(std::span<const double> lambdas,
                                               int samples_per_iteration, int iterations,
                                               RngStream& rng);

} // namespace poissonopt
