#include "poissonopt/seismic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace poissonopt {

DispersionResult dispersion_counts(std::span<const double> fitness, const SeismicParams& params) {
    if (fitness.empty()) throw std::invalid_argument("dispersion needs at least one epicenter");
    if (params.m < 1) throw std::invalid_argument("dispersion needs m >= 1");
    if (!(params.vartheta > 0.0)) throw std::invalid_argument("dispersion needs vartheta > 0");

    const double worst = *std::max_element(fitness.begin(), fitness.end());
    double denom = 0.0;
    for (double f : fitness) denom += (worst - f) + params.vartheta;

    DispersionResult r;
    r.raw.reserve(fitness.size());
    r.counts.reserve(fitness.size());
    for (double f : fitness) {
        const double share = params.m * ((worst - f) + params.vartheta) / denom;
        r.raw.push_back(share);
        const int c = std::clamp(static_cast<int>(std::llround(share)), params.d_min, params.d_max);
        r.counts.push_back(c);
        r.total += c;
    }
    return r;
}

double ellipse_distance(const SeismicParams& params, double tangent) {
    if (!std::isfinite(tangent)) return 1.0;
    const double a = params.ellipse_a;
    if (!(a > 0.0)) throw std::invalid_argument("ellipse semi-major axis must be > 0");
    const double t2 = tangent * tangent;
    return std::sqrt((1.0 + t2) / (1.0 / (a * a) + t2));
}

double offset_ellipse_distance(const SeismicParams& params, std::span<const double> offset) {
    if (offset.size() < 2) return 1.0;
    double acc = 0.0;
    size_t pairs = 0;
    for (size_t k = 0; k + 1 < offset.size(); k += 2) {
        const double dx = offset[k], dy = offset[k + 1];
        double t;
        if (dx == 0.0)
            t = std::numeric_limits<double>::infinity(); // vertical pair, includes the zero pair
        else
            t = dy / dx;
        acc += ellipse_distance(params, t);
        ++pairs;
    }
    return acc / pairs;
}

double seismic_power(double dist, double magnitude, const SeismicParams& params) {
    if (!(dist > 0.0)) throw std::invalid_argument("seismic power needs distance > 0");
    return std::pow(magnitude / dist, params.b1) * params.b0 * std::exp(params.sigma_lnp);
}

double magnitude_from_power(double power, double dist, const SeismicParams& params) {
    if (!(dist > 0.0)) throw std::invalid_argument("magnitude inversion needs distance > 0");
    if (!(power >= 0.0)) throw std::invalid_argument("magnitude inversion needs power >= 0");
    if (!(params.b0 > 0.0) || params.b1 == 0.0)
        throw std::invalid_argument("magnitude inversion needs b0 > 0 and b1 != 0");
    return std::pow(power / (params.b0 * std::exp(params.sigma_lnp)), 1.0 / params.b1) * dist;
}

PeakPower peak_power(const std::vector<std::vector<double>>& powers) {
    if (powers.empty()) throw std::invalid_argument("peak power needs at least one epicenter");
    PeakPower out;
    out.per_epicenter.reserve(powers.size());
    out.peak_location.reserve(powers.size());
    for (const auto& row : powers) {
        if (row.empty()) throw std::invalid_argument("peak power needs at least one location per epicenter");
        size_t arg = 0;
        for (size_t j = 1; j < row.size(); ++j)
            if (row[j] > row[arg]) arg = j;
        out.per_epicenter.push_back(row[arg]);
        out.peak_location.push_back(arg);
    }
    out.best_epicenter = 0;
    for (size_t e = 1; e < out.per_epicenter.size(); ++e)
        if (out.per_epicenter[e] > out.per_epicenter[out.best_epicenter]) out.best_epicenter = e;
    return out;
}

std::vector<double> cumulative_magnitudes(std::span<const double> fitness,
                                          std::span<const double> magnitudes_at_peak,
                                          const SeismicParams& params) {
    if (fitness.empty()) throw std::invalid_argument("cumulative magnitudes need at least one epicenter");
    if (fitness.size() != magnitudes_at_peak.size())
        throw std::invalid_argument("cumulative magnitudes need one peak magnitude per epicenter");
    if (!(params.vartheta > 0.0)) throw std::invalid_argument("cumulative magnitudes need vartheta > 0");

    double control = 0.0;
    for (double m : magnitudes_at_peak) control += m;

    const double best = *std::min_element(fitness.begin(), fitness.end());
    double denom = 0.0;
    for (double f : fitness) denom += (f - best) + params.vartheta;

    std::vector<double> out;
    out.reserve(fitness.size());
    for (double f : fitness)
        out.push_back(control * ((f - best) + params.vartheta) / denom);
    return out;
}

double relevance_radius(std::span<const double> magnitudes_at_peak, const SeismicParams& params) {
    if (magnitudes_at_peak.empty()) throw std::invalid_argument("relevance radius needs magnitudes");
    if (!(params.chi > 0.0)) throw std::invalid_argument("relevance radius needs chi > 0");
    double mean = 0.0;
    for (double m : magnitudes_at_peak) mean += m;
    mean /= magnitudes_at_peak.size();
    return params.chi * std::pow(10.0, params.q1 * 2.0 * mean - params.q2);
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return acc;
}

} // namespace

double range_identifier(std::span<const double> e_i, std::span<const double> r_k,
                        std::span<const double> r_l, double weight_ik, double weight_kl) {
    if (e_i.size() != r_k.size() || r_k.size() != r_l.size())
        throw std::invalid_argument("range identifier needs equal-dimension points");
    if (!(weight_ik > 0.0) || !(weight_kl > 0.0))
        throw std::invalid_argument("range identifier needs positive weights");
    const double d_ik2 = sq_dist(e_i, r_k);
    const double d_kl2 = sq_dist(r_k, r_l);
    const double d_il2 = sq_dist(e_i, r_l);
    if (d_ik2 == 0.0 || d_kl2 == 0.0 || d_il2 == 0.0)
        throw std::invalid_argument("range identifier needs pairwise distinct points");
    const double d_ik = std::sqrt(d_ik2);
    const double d_kl = std::sqrt(d_kl2);

    // angle at R_k between the two legs, law of cosines
    double cos_theta = (d_ik2 + d_kl2 - d_il2) / (2.0 * d_ik * d_kl);
    cos_theta = std::clamp(cos_theta, -1.0, 1.0);
    if (std::abs(cos_theta) < 1e-9)
        throw std::invalid_argument("range identifier undefined for a right angle at the reference");
    return (d_ik * weight_kl) / (cos_theta * d_kl * weight_ik);
}

double poisson_pmf(long long k, double lambda) {
    if (k < 0) return 0.0;
    if (!(lambda > 0.0)) return k == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(lambda) - lambda - std::lgamma(static_cast<double>(k) + 1.0));
}

long long poisson_mode(double lambda) {
    if (!(lambda > 0.0)) return 0;
    return static_cast<long long>(std::floor(lambda));
}

namespace {

// uniform draw inside the L2 ball of the given radius around position,
// wrapped into bounds
std::vector<double> ball_fallback(std::span<const double> position, double radius,
                                  std::span<const double> lower, std::span<const double> upper,
                                  RngStream& rng) {
    const size_t dim = position.size();
    std::vector<double> dir(dim);
    double norm = 0.0;
    for (size_t k = 0; k < dim; ++k) {
        dir[k] = rng.normal(0.0, 1.0);
        norm += dir[k] * dir[k];
    }
    norm = std::sqrt(norm);
    const double scale =
        norm > 0.0 ? radius * std::pow(rng.uniform(0.0, 1.0), 1.0 / static_cast<double>(dim)) / norm
                   : 0.0;
    std::vector<double> out(position.begin(), position.end());
    for (size_t k = 0; k < dim; ++k)
        out[k] = normalize_coordinate(out[k] + scale * dir[k], lower[k], upper[k]);
    return out;
}

} // namespace

std::vector<double> spawn_epicenter(std::span<const double> position,
                                    const std::vector<std::vector<double>>& references,
                                    double radius, double mean_magnitude,
                                    std::span<const double> lower, std::span<const double> upper,
                                    const SeismicParams& params, SpawnContext& ctx, RngStream& rng) {
    const size_t dim = position.size();
    if (dim == 0) throw std::invalid_argument("spawn needs a nonempty position");
    if (references.size() < 2) throw std::invalid_argument("spawn needs at least two references");

    std::vector<const std::vector<double>*> inside;
    for (const auto& ref : references) {
        if (ref.size() != dim) throw std::invalid_argument("spawn reference dimension mismatch");
        const double d2 = sq_dist(position, ref);
        if (d2 > 0.0 && std::sqrt(d2) <= radius) inside.push_back(&ref);
    }

    if (inside.size() < 2) {
        if (!(radius > 0.0))
            throw std::invalid_argument("spawn needs a positive radius or in-range references");
        return ball_fallback(position, radius, lower, upper, rng);
    }

    // pick a reference pair with usable geometry; redraw on degeneracy
    const int attempts = 16;
    for (int a = 0; a < attempts; ++a) {
        const size_t ik = static_cast<size_t>(rng.uniform_int(0, static_cast<long long>(inside.size()) - 1));
        size_t il = static_cast<size_t>(rng.uniform_int(0, static_cast<long long>(inside.size()) - 2));
        if (il >= ik) ++il;
        const std::vector<double>& r_k = *inside[ik];
        const std::vector<double>& r_l = *inside[il];

        const double d_kl = std::sqrt(sq_dist(r_k, r_l));
        if (d_kl == 0.0) continue;
        const double d_ik = std::sqrt(sq_dist(position, r_k));

        // reference weights come from the power law at the leg distances
        const double w_ik = seismic_power(d_ik, mean_magnitude, params);
        const double w_kl = seismic_power(d_kl, mean_magnitude, params);
        if (!(w_ik > 0.0) || !(w_kl > 0.0)) continue;

        double phi;
        try {
            phi = range_identifier(position, r_k, r_l, w_ik, w_kl);
        } catch (const std::invalid_argument&) {
            continue;
        }
        if (!(phi > 0.0) || !std::isfinite(phi)) continue;
        ctx.observe(phi);

        const double lambda = ctx.lambda();
        const long long k = std::llround(phi);
        const double mode_pmf = poisson_pmf(poisson_mode(lambda), lambda);
        const double step = mode_pmf > 0.0 ? radius * poisson_pmf(k, lambda) / mode_pmf : 0.0;

        // head toward the weight-blended midpoint of the pair
        std::vector<double> out(position.begin(), position.end());
        std::vector<double> heading(dim);
        double norm = 0.0;
        for (size_t c = 0; c < dim; ++c) {
            const double target = (w_ik * r_k[c] + w_kl * r_l[c]) / (w_ik + w_kl);
            heading[c] = target - position[c];
            norm += heading[c] * heading[c];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) return ball_fallback(position, radius, lower, upper, rng);
        for (size_t c = 0; c < dim; ++c)
            out[c] = normalize_coordinate(position[c] + step * heading[c] / norm, lower[c], upper[c]);
        return out;
    }
    return ball_fallback(position, radius, lower, upper, rng);
}

double hypocentral_displace(double x_k, double c_val, double mag_k, RngStream& rng) {
    if (!(mag_k > 0.0)) throw std::invalid_argument("hypocentral displacement needs magnitude > 0");
    if (c_val < 0.0) throw std::invalid_argument("hypocentral displacement needs c_val >= 0");
    const double u = rng.uniform(-c_val, c_val);
    const double ratio = x_k / mag_k;
    return std::sqrt(ratio * ratio + u * u);
}

double poisson_location(double x_k, double low, double up, const SeismicParams& params,
                        RngStream& rng) {
    if (!(params.lambda_loc > 0.0)) throw std::invalid_argument("poisson location needs lambda > 0");
    const long long w = rng.poisson(params.lambda_loc);
    return normalize_coordinate(x_k * static_cast<double>(w), low, up);
}

double normalize_coordinate(double v, double low, double up) {
    if (!(up > low)) throw std::invalid_argument("normalize needs up > low");
    const double width = up - low;
    double r = v - std::floor((v - low) / width) * width;
    // floating-point rounding can land exactly on the upper bound; fold back
    if (r >= up) r = low;
    if (r < low) r = low;
    return r;
}

} // namespace poissonopt
