#include "poissonopt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace poissonopt {

MagnitudeHistogram magnitude_histogram(std::span<const double> magnitudes, int bins) {
    if (magnitudes.empty()) throw std::invalid_argument("histogram needs a nonempty input");
    if (bins < 2) throw std::invalid_argument("histogram needs at least 2 bins");

    const auto [lo_it, hi_it] = std::minmax_element(magnitudes.begin(), magnitudes.end());
    const double lo = *lo_it, hi = *hi_it;

    MagnitudeHistogram h;
    h.edges.resize(static_cast<size_t>(bins) + 1);
    h.counts.assign(static_cast<size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (int k = 0; k <= bins; ++k) h.edges[static_cast<size_t>(k)] = lo + width * k;
    h.edges.back() = hi;

    for (double v : magnitudes) {
        size_t bin = 0;
        if (width > 0.0) {
            bin = static_cast<size_t>((v - lo) / width);
            if (bin >= h.counts.size()) bin = h.counts.size() - 1;
        }
        ++h.counts[bin];
        ++h.total;
    }
    return h;
}

GrFit gutenberg_richter_fit(const MagnitudeHistogram& hist, bool log_midpoints) {
    std::vector<double> xs, ys;
    for (size_t bin = 0; bin < hist.bins(); ++bin) {
        if (hist.counts[bin] <= 0) continue; // log of an empty bin is undefined
        double x = hist.midpoint(bin);
        if (log_midpoints) {
            if (!(x > 0.0))
                throw std::invalid_argument("log-scaled fit needs positive bin midpoints");
            x = std::log10(x);
        }
        xs.push_back(x);
        ys.push_back(std::log10(static_cast<double>(hist.counts[bin])));
    }
    if (xs.size() < 2)
        throw std::invalid_argument("power-law fit needs at least 2 occupied bins");

    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("power-law fit needs distinct bin midpoints");

    GrFit fit;
    const double slope = sxy / sxx;
    fit.b = -slope;
    fit.a = my + fit.b * mx;
    for (size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - (fit.a - fit.b * xs[i]);
        fit.residual += r * r;
    }
    return fit;
}

PoissonAggregateReport poisson_aggregate_check(std::span<const double> lambdas,
                                               int samples_per_iteration, int iterations,
                                               RngStream& rng) {
    if (lambdas.empty()) throw std::invalid_argument("aggregate check needs at least one rate");
    for (double l : lambdas)
        if (!(l > 0.0)) throw std::invalid_argument("aggregate check needs positive rates");
    if (iterations < 100) throw std::invalid_argument("aggregate check needs iterations >= 100");
    if (samples_per_iteration < 1)
        throw std::invalid_argument("aggregate check needs samples_per_iteration >= 1");

    PoissonAggregateReport rep;
    for (double l : lambdas) rep.lambda_total += l;

    std::vector<double> totals;
    totals.reserve(static_cast<size_t>(iterations) * samples_per_iteration);
    for (int it = 0; it < iterations; ++it) {
        for (int s = 0; s < samples_per_iteration; ++s) {
            double total = 0.0;
            for (double l : lambdas) total += static_cast<double>(rng.poisson(l));
            totals.push_back(total);
        }
    }
    rep.samples = static_cast<long long>(totals.size());

    const double n = static_cast<double>(totals.size());
    double mean = 0.0;
    for (double t : totals) mean += t;
    mean /= n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double t : totals) {
        const double d = t - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    const double var_sample = m2 / (n - 1.0);
    m2 /= n;
    m3 /= n;
    m4 /= n;

    rep.sample_mean = mean;
    rep.sample_variance = var_sample;
    rep.mean_variance_ratio = var_sample != 0.0 ? mean / var_sample : 0.0;

    if (m2 > 0.0) {
        const double skew = m3 / std::pow(m2, 1.5);
        const double kurt_excess = m4 / (m2 * m2) - 3.0;
        rep.jarque_bera = n / 6.0 * (skew * skew + kurt_excess * kurt_excess / 4.0);
    } else {
        rep.jarque_bera = 0.0;
    }
    // chi-squared(2) upper 1% quantile
    rep.normal_at_1pct = rep.jarque_bera <= 9.21034;
    return rep;
}

} // namespace poissonopt
