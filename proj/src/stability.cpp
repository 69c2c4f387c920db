#include "stochgain/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace stochgain {

std::string_view to_string(Stability s) noexcept {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::marginal: return "marginal";
        default: return "unstable";
    }
}

Stability from_margin(const std::optional<double>& margin, double eps) noexcept {
    if (!margin) return Stability::unstable;
    if (std::abs(*margin) <= eps) return Stability::marginal;
    return *margin > 0.0 ? Stability::stable : Stability::unstable;
}

StabilityVerdict classify(const DistributionSpec& spec, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("classify: eps must be > 0");
    if (!spec.is_gain()) throw std::invalid_argument("classify: spec is not a gain distribution on a > 0");
    const AlphaStats st = alpha_stats(spec);
    if (!st.mu_finite) throw std::domain_error("classify: E[ln a] is not finite; median criterion undefined");

    StabilityVerdict v;
    v.median_margin = -st.mu_alpha;
    if (const auto* ln = spec.get_if<LogNormal>()) {
        const double var = ln->sigma_alpha * ln->sigma_alpha;
        v.mean_margin = -(ln->mu_alpha + 0.5 * var);
        v.variance_margin = -(ln->mu_alpha + var);
        v.criteria_used =
            "lognormal: median mu_alpha < 0 (mu_a^2/sqrt(mu_a^2 + sigma_a^2) < 1); "
            "mean mu_alpha + sigma_alpha^2/2 < 0 (mu_a < 1); "
            "variance mu_alpha + sigma_alpha^2 < 0 (mu_a^2 + sigma_a^2 < 1)";
    } else {
        const AMoments am = a_moments(spec);
        if (am.mu_a) v.mean_margin = 1.0 - *am.mu_a;
        if (am.mu_a && am.var_a) v.variance_margin = 1.0 - (*am.mu_a * *am.mu_a + *am.var_a);
        v.criteria_used = "general: median mu_alpha < 0";
        v.criteria_used += st.third_finite ? " (finite third moment)" : " (Cantelli: finite mean and variance of ln a)";
        v.criteria_used += "; mean mu_a < 1; variance mu_a^2 + sigma_a^2 < 1";
    }
    v.median = from_margin(v.median_margin, eps);
    v.mean = from_margin(v.mean_margin, eps);
    v.variance = from_margin(v.variance_margin, eps);
    return v;
}

double median_limit_zero_mean(const AlphaStats& stats, double eps) {
    if (!stats.all_finite()) throw std::domain_error("median_limit_zero_mean: moments must be finite");
    if (std::abs(stats.mu_alpha) > eps) throw std::domain_error("median_limit_zero_mean: requires mu_alpha = 0");
    if (!(stats.var_alpha > 0.0)) throw std::domain_error("median_limit_zero_mean: requires var_alpha > 0");
    return std::exp(-stats.third_central / (6.0 * stats.var_alpha));
}

namespace {

// μ_α of a lognormal gain with the given a-space mean and standard deviation.
double lognormal_mu_alpha(double mu_a, double sigma_a) {
    const double r = sigma_a / mu_a;
    return std::log(mu_a) - 0.5 * std::log1p(r * r);
}

double median_boundary_mu_a(double sigma_a) {
    double lo = 1.0;
    double hi = 1.0 + sigma_a + 1.0;
    while (lognormal_mu_alpha(hi, sigma_a) <= 0.0) hi *= 2.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (lognormal_mu_alpha(mid, sigma_a) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

RegionCurves region_boundaries(std::span<const double> sigma_a_values) {
    RegionCurves curves;
    for (double s : sigma_a_values) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("region_boundaries: sigma_a must be >= 0");
        curves.mean.push_back({1.0, s});
        if (s < 1.0) curves.variance.push_back({std::sqrt(1.0 - s * s), s});
        curves.median.push_back({median_boundary_mu_a(s), s});
    }
    return curves;
}

PlantSpec::PlantSpec(double tau_, double gamma_gain_, DistributionSpec delta_)
    : tau(tau_), gamma_gain(gamma_gain_), delta(std::move(delta_)) {
    if (!std::isfinite(tau) || !std::isfinite(gamma_gain) || gamma_gain == 0.0)
        throw std::invalid_argument("PlantSpec: need finite tau and non-zero gamma_gain");
}

FoldedGain fold_gain(const PlantSpec& plant) {
    const auto* nd = plant.delta.get_if<NormalDelta>();
    if (!nd) throw std::invalid_argument("fold_gain: delta must be a normal_delta distribution");
    if (plant.gamma_gain == 0.0) throw std::invalid_argument("fold_gain: gamma_gain must be non-zero");

    // u = tau + γδ ~ N(m, s²) and a = |u|.
    const double m = plant.tau + plant.gamma_gain * nd->mu_delta;
    const double s = std::abs(plant.gamma_gain) * nd->sigma_delta;
    const double am = std::abs(m);

    if (s == 0.0) {
        if (am == 0.0) throw std::domain_error("fold_gain: gain has an atom at a = 0 (ln a undefined)");
        return {DistributionSpec::lognormal(std::log(am), 0.0, "deterministic |tau + gamma*mu_delta|"), 0.0, false};
    }

    const double a_hi = am + fold_extent_sigmas * s;
    double a_lo = 0.0;
    const bool active = am <= fold_extent_sigmas * s;
    if (!active) {
        a_lo = am - fold_extent_sigmas * s;
    } else {
        // Near a = 0 the density is flat at f_a(0) = 2φ(m/s)/s, so the mass
        // below a_lo is about f_a(0)·a_lo.
        const double f0 = 2.0 * std_normal_pdf(m / s) / s;
        a_lo = std::clamp(1e-13 / f0, std::exp(-60.0), 1e-3 * a_hi);
    }
    const double alpha_lo = std::log(a_lo);
    const double alpha_hi = std::log(a_hi);

    const double width = std::min(1.0, s / std::max(am, s));
    auto cells = static_cast<std::size_t>(std::ceil((alpha_hi - alpha_lo) / (width / 200.0)));
    cells = std::clamp<std::size_t>(cells, 2048, std::size_t{1} << 21);
    cells += cells % 2;

    auto density = [m, s](double alpha) {
        const double a = std::exp(alpha);
        return a * (std_normal_pdf((a - m) / s) + std_normal_pdf((-a - m) / s)) / s;
    };
    GridPdf grid = GridPdf::sample(density, alpha_lo, alpha_hi, cells);

    const double below = std_normal_cdf((a_lo - m) / s) - std_normal_cdf((-a_lo - m) / s);
    const double above = std_normal_cdf(-(a_hi - m) / s) + std_normal_cdf((-a_hi - m) / s);
    const double lost = std::max(0.0, below) + above;
    if (lost > fold_mass_tolerance)
        throw std::runtime_error("fold_gain: grid window loses " + std::to_string(lost) + " probability mass");

    return {DistributionSpec::grid(std::move(grid), GridDomain::alpha, "|tau + gamma*delta|"), lost, active};
}

StabilityVerdict stabilization_verdict(const PlantSpec& plant, double eps) {
    const FoldedGain folded = fold_gain(plant);
    StabilityVerdict v = classify(folded.spec, eps);
    v.criteria_used = "plant a = |tau + gamma*delta|; " + v.criteria_used;
    return v;
}

namespace {

struct Margins {
    double median;
    double mean;
    double variance;
};

double margin_or_neg_inf(const std::optional<double>& m) {
    return m ? *m : -std::numeric_limits<double>::infinity();
}

Margins plant_margins(double nominal, double s, double gamma_gain) {
    if (s == 0.0) {
        const double a = std::abs(nominal);
        return {a == 0.0 ? std::numeric_limits<double>::infinity() : -std::log(a), 1.0 - a, 1.0 - a * a};
    }
    const double sigma_delta = s / std::abs(gamma_gain);
    const auto v = stabilization_verdict(PlantSpec(nominal, gamma_gain, DistributionSpec::normal_delta(0.0, sigma_delta)));
    return {margin_or_neg_inf(v.median_margin), margin_or_neg_inf(v.mean_margin), margin_or_neg_inf(v.variance_margin)};
}

void append_crossings(Polyline& out, std::span<const double> xs, double y, const std::vector<double>& m) {
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const bool s0 = m[i] > 0.0;
        const bool s1 = m[i + 1] > 0.0;
        if (s0 == s1) continue;
        double x = 0.5 * (xs[i] + xs[i + 1]);
        if (std::isfinite(m[i]) && std::isfinite(m[i + 1]))
            x = xs[i] + (xs[i + 1] - xs[i]) * m[i] / (m[i] - m[i + 1]);
        out.push_back({x, y});
    }
}

}  // namespace

RegionCurves stabilization_region(std::span<const double> nominal_values, std::span<const double> sigma_values,
                                  double gamma_gain, Exec exec) {
    if (gamma_gain == 0.0) throw std::invalid_argument("stabilization_region: gamma_gain must be non-zero");
    if (nominal_values.size() < 2) throw std::invalid_argument("stabilization_region: need at least two nominal values");
    const std::size_t nx = nominal_values.size();
    const std::size_t ny = sigma_values.size();
    const double scale = std::pow(std::abs(gamma_gain), 1.5);  // s = |γ|σ_δ = |γ|^{3/2}·y

    const auto margins = kernels::map<Margins>(exec, nx * ny, [&](std::size_t idx) {
        const double x = nominal_values[idx % nx];
        const double y = sigma_values[idx / nx];
        return plant_margins(x, scale * y, gamma_gain);
    });

    RegionCurves curves;
    std::vector<double> row(nx);
    for (std::size_t j = 0; j < ny; ++j) {
        const double y = sigma_values[j];
        for (std::size_t i = 0; i < nx; ++i) row[i] = margins[j * nx + i].median;
        append_crossings(curves.median, nominal_values, y, row);
        for (std::size_t i = 0; i < nx; ++i) row[i] = margins[j * nx + i].mean;
        append_crossings(curves.mean, nominal_values, y, row);
        for (std::size_t i = 0; i < nx; ++i) row[i] = margins[j * nx + i].variance;
        append_crossings(curves.variance, nominal_values, y, row);
    }
    return curves;
}

PeriodicGainReport periodic_gain_analysis(std::span<const double> gains, double eps) {
    if (gains.empty()) throw std::invalid_argument("periodic_gain_analysis: empty gain sequence");
    double product = 1.0;
    double log_sum = 0.0;
    for (double a : gains) {
        if (a == 0.0 || !std::isfinite(a)) throw std::invalid_argument("periodic_gain_analysis: gains must be finite and non-zero");
        product *= a;
        log_sum += std::log(std::abs(a));
    }
    const double log_mean = log_sum / static_cast<double>(gains.size());
    return {product, std::exp(log_mean), log_mean, log_mean < 0.0, from_margin(-log_mean, eps)};
}

double asymptotic_log_average(std::span<const double> gains, std::size_t K) {
    if (K == 0 || K > gains.size()) throw std::invalid_argument("asymptotic_log_average: need 1 <= K <= gains.size()");
    LogAverage avg;
    for (std::size_t k = 0; k < K; ++k) avg.push(gains[k]);
    return avg.value();
}

void LogAverage::push(double gain) {
    if (gain == 0.0 || !std::isfinite(gain)) throw std::invalid_argument("LogAverage: gains must be finite and non-zero");
    sum_ += std::log(std::abs(gain));
    ++count_;
}

double LogAverage::value() const {
    if (count_ == 0) throw std::logic_error("LogAverage: no gains pushed");
    return sum_ / static_cast<double>(count_);
}

}  // namespace stochgain
