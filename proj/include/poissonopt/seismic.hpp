#pragma once

// Seismic search operators: fitness-driven dispersion of locations around
// epicenters, an elliptical distance model, power/magnitude conversion,
// Gutenberg-Richter style relevance radii, and the Poisson-stepped spawn of
// new epicenters. All stochastic pieces draw from an explicit RngStream.

#include <cstddef>
#include <span>
#include <vector>

#include "poissonopt/rng.hpp"

namespace poissonopt {

struct SeismicParams {
    int m = 50;              // total locations to disperse per generation
    double vartheta = 1e-3;  // share smoothing, also used by cumulative magnitudes
    double b0 = 1.0;         // power-law scale
    double b1 = 1.0;         // power-law exponent
    double sigma_lnp = 0.0;  // lognormal noise exponent applied to powers
    double ellipse_a = 1.0;  // semi-major axis of the propagation ellipse
    double ellipse_b = 1.0;  // semi-minor axis; dormant, the distance form fixes it at 1
    double chi = 1.0;        // relevance-radius scale
    double q1 = 0.414;       // radius exponent, magnitude coefficient
    double q2 = 1.696;       // radius exponent, offset
    int d_min = 1;           // per-epicenter location count floor
    int d_max = 50;          // per-epicenter location count ceiling
    double lambda_loc = 1.0; // Poisson rate for the multiplicative location move
    int n_ref = 12;          // reference-point pool size per spawn
};

struct DispersionResult {
    std::vector<double> raw; // real-valued shares, sum to m by construction
    std::vector<int> counts; // rounded and clamped to [d_min, d_max]
    int total = 0;           // sum of counts, the location budget of the generation
};

// Shares m locations across epicenters, better (lower) fitness getting more.
// Requires a nonempty fitness span and m >= 1.
DispersionResult dispersion_counts(std::span<const double> fitness, const SeismicParams& params);

// Distance from focus to the ellipse boundary along tangent direction t.
// Non-finite t is the vertical limit and returns 1.
double ellipse_distance(const SeismicParams& params, double tangent);

// Ellipse distance for a displacement vector: consecutive coordinate pairs
// give tangents dy/dx, averaged. A zero pair or zero dx contributes the
// vertical limit; a trailing unpaired coordinate is ignored; an empty or
// single-coordinate offset yields 1.
double offset_ellipse_distance(const SeismicParams& params, std::span<const double> offset);

// P = ((1/d) * M)^b1 * b0 * exp(sigma); requires dist > 0
double seismic_power(double dist, double magnitude, const SeismicParams& params);

// inverse of seismic_power at the same distance
double magnitude_from_power(double power, double dist, const SeismicParams& params);

struct PeakPower {
    std::vector<double> per_epicenter;  // max location power of each epicenter
    std::vector<size_t> peak_location;  // argmax index within each epicenter, ties to lowest
    size_t best_epicenter = 0;          // argmax over per_epicenter, ties to lowest
};

// powers[i] holds the location powers of epicenter i; every epicenter needs
// at least one location
PeakPower peak_power(const std::vector<std::vector<double>>& powers);

// Splits the summed peak magnitude across epicenters, worse (higher) fitness
// getting more. The result sums to the control magnitude by construction.
std::vector<double> cumulative_magnitudes(std::span<const double> fitness,
                                          std::span<const double> magnitudes_at_peak,
                                          const SeismicParams& params);

// r = chi * 10^(q1 * 2 * mean(magnitudes) - q2)
double relevance_radius(std::span<const double> magnitudes_at_peak, const SeismicParams& params);

// Ratio of the weighted leg d(E_i,R_k) to the cos(theta)-projected weighted
// leg d(R_k,R_l); theta is the angle at R_k. The three points must be
// pairwise distinct, weights positive, geometry not perpendicular at R_k
// (|cos| below 1e-9 throws).
double range_identifier(std::span<const double> e_i, std::span<const double> r_k,
                        std::span<const double> r_l, double weight_ik, double weight_kl);

double poisson_pmf(long long k, double lambda);
long long poisson_mode(double lambda);

// Running mean of range identifiers observed this generation; lambda for the
// spawn step distribution.
struct SpawnContext {
    double sum = 0.0;
    long long count = 0;

    void observe(double phi) { sum += phi; ++count; }
    double lambda() const { return count > 0 ? sum / count : 1.0; }
};

// Moves an epicenter toward the weighted midpoint of an in-radius reference
// pair, step length scaled by the Poisson pmf of the rounded range
// identifier; pair weights come from seismic_power at the pairwise distances
// with magnitude mean_magnitude. Fewer than two in-range references falls
// back to a uniform draw inside the radius ball; zero radius with no usable
// references throws.
std::vector<double> spawn_epicenter(std::span<const double> position,
                                    const std::vector<std::vector<double>>& references,
                                    double radius, double mean_magnitude,
                                    std::span<const double> lower, std::span<const double> upper,
                                    const SeismicParams& params, SpawnContext& ctx, RngStream& rng);

// sqrt((x_k/mag_k)^2 + u^2) with u ~ U(-c_val, c_val); requires mag_k > 0
double hypocentral_displace(double x_k, double c_val, double mag_k, RngStream& rng);

// multiplicative Poisson jitter x * w, w ~ Poisson(lambda_loc), then wrapped
// into bounds
double poisson_location(double x_k, double low, double up, const SeismicParams& params,
                        RngStream& rng);

// Euclidean remainder into [low, up): low + mod(v - low, up - low).
// Requires up > low; result is always inside the half-open interval.
double normalize_coordinate(double v, double low, double up);

} // namespace poissonopt
