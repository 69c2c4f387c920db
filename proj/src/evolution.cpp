#include "stochgain/evolution.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "stochgain/csv.hpp"

namespace stochgain {

namespace {

const double log_dbl_max = std::log(DBL_MAX);

std::optional<double> finite_exp(double log_value) {
    if (log_value > log_dbl_max) return std::nullopt;
    return std::exp(log_value);
}

// ln(e^t - 1) for t >= 0.
double log_expm1(double t) { return t > 30.0 ? t + std::log1p(-std::exp(-t)) : std::log(std::expm1(t)); }

void check_K_values(std::span<const std::size_t> K_values) {
    if (K_values.empty()) throw std::invalid_argument("evolution: K_values is empty");
    for (std::size_t i = 0; i < K_values.size(); ++i) {
        if (K_values[i] == 0) throw std::invalid_argument("evolution: K values must be >= 1");
        if (i > 0 && K_values[i] <= K_values[i - 1]) throw std::invalid_argument("evolution: K values must increase");
    }
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b, const GridEvolveOptions& opt) {
    if (opt.method == ConvolutionMethod::fft) return kernels::convolve_fft(a, b);
    return opt.exec == Exec::serial ? kernels::convolve_serial(a, b) : kernels::convolve_omp(a, b);
}

// ln E[e^{pζ}] on a grid, shifted to stay finite.
double log_exp_moment(const GridPdf& f, double p) {
    const auto w = simpson_weights(f.cells());
    const auto v = f.values();
    double shift = -INFINITY;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] > 0.0) shift = std::max(shift, p * f.node(i));
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == 0.0) continue;
        num += w[i] * v[i] * std::exp(p * f.node(i) - shift);
        den += w[i] * v[i];
    }
    return shift + std::log(num / den);
}

}  // namespace

EvolutionMassLoss::EvolutionMassLoss(std::size_t K_, double lost_)
    : std::runtime_error("evolve_grid: step K=" + std::to_string(K_) + " drops probability mass " +
                         std::to_string(lost_) + " outside the grid window"),
      K(K_),
      lost(lost_) {}

std::optional<double> goodman_variance(double mu_a, double var_a, std::size_t K) {
    if (!std::isfinite(mu_a) || !std::isfinite(var_a) || var_a < 0.0)
        throw std::invalid_argument("goodman_variance: need finite mu_a and var_a >= 0");
    if (var_a == 0.0 || K == 0) return 0.0;
    const double k = static_cast<double>(K);
    if (mu_a == 0.0) return finite_exp(k * std::log(var_a));
    // μ^{2K}·((1 + σ²/μ²)^K - 1)
    const double t = k * std::log1p(var_a / (mu_a * mu_a));
    return finite_exp(2.0 * k * std::log(std::abs(mu_a)) + log_expm1(t));
}

EvolutionTrace evolve_lognormal(double mu_alpha, double sigma_alpha, std::span<const std::size_t> K_values) {
    if (!std::isfinite(mu_alpha) || !(sigma_alpha > 0.0) || !std::isfinite(sigma_alpha))
        throw std::invalid_argument("evolve_lognormal: need finite mu_alpha and sigma_alpha > 0");
    check_K_values(K_values);

    const double var = sigma_alpha * sigma_alpha;
    EvolutionTrace t;
    t.closed_form = LogNormal{mu_alpha, sigma_alpha};
    for (std::size_t K : K_values) {
        const double k = static_cast<double>(K);
        t.K_values.push_back(K);
        t.medians_zeta.push_back(k * mu_alpha);
        t.medians_x.push_back(std::exp(k * mu_alpha));
        t.means_x.push_back(finite_exp(k * (mu_alpha + 0.5 * var)));
        // e^{2Kμ + Kσ²}(e^{Kσ²} - 1)
        t.variances_x.push_back(finite_exp(2.0 * k * mu_alpha + k * var + log_expm1(k * var)));
        t.tail_at_one.push_back(0.5 * std::erfc(-k * mu_alpha / std::sqrt(2.0 * k * var)));
    }
    return t;
}

EvolutionTrace evolve_grid(const GridPdf& falpha, std::size_t K_max, const GridEvolveOptions& opt) {
    if (K_max == 0) throw std::invalid_argument("evolve_grid: K_max must be >= 1");
    if (opt.stride == 0) throw std::invalid_argument("evolve_grid: stride must be >= 1");
    if (!(opt.window_sigmas > 0.0) || !(opt.mass_tolerance >= 0.0))
        throw std::invalid_argument("evolve_grid: window_sigmas must be > 0 and mass_tolerance >= 0");

    const double h = falpha.step();
    const double mu = falpha.mean();
    const double sigma = std::sqrt(falpha.variance());
    const double half_width = 0.5 * (falpha.hi() - falpha.lo());
    const auto kernel = falpha.values();

    EvolutionTrace t;
    auto record = [&](std::size_t K, const GridPdf& f) {
        const double med = f.quantile(0.5);
        t.K_values.push_back(K);
        t.medians_zeta.push_back(med);
        t.medians_x.push_back(std::exp(med));
        t.tail_at_one.push_back(std::clamp(f.survival(0.0), 0.0, 1.0));
        if (opt.a_moments) {
            const auto& am = *opt.a_moments;
            t.means_x.push_back(am.mu_a ? finite_exp(static_cast<double>(K) * std::log(*am.mu_a)) : std::nullopt);
            t.variances_x.push_back(am.mu_a && am.var_a ? goodman_variance(*am.mu_a, *am.var_a, K) : std::nullopt);
        } else {
            const double lm1 = log_exp_moment(f, 1.0);
            const double lm2 = log_exp_moment(f, 2.0);
            t.means_x.push_back(finite_exp(lm1));
            // E[x²] - E[x]² = E[x²](1 - e^{2 lm1 - lm2})
            const double ratio = std::exp(2.0 * lm1 - lm2);
            t.variances_x.push_back(ratio >= 1.0 ? std::optional<double>(0.0)
                                                 : finite_exp(lm2 + std::log1p(-ratio)));
        }
        if (opt.keep_densities) t.zeta_pdfs.push_back(f);
    };

    record(1, falpha);
    double lo = falpha.lo();
    std::vector<double> cur(kernel.begin(), kernel.end());

    for (std::size_t K = 2; K <= K_max; ++K) {
        std::vector<double> next = convolve(cur, kernel, opt);
        for (double& v : next) v *= h;
        double next_lo = lo + falpha.lo();

        // Trim to the window and to numerically empty ends.
        const double k = static_cast<double>(K);
        const double reach = opt.window_sigmas * sigma * std::sqrt(k) + half_width;
        const double w_lo = k * mu - reach;
        const double w_hi = k * mu + reach;
        std::size_t first = 0;
        std::size_t last = next.size() - 1;
        while (first < last && (next_lo + static_cast<double>(first) * h < w_lo || next[first] < 1e-300)) ++first;
        while (last > first && (next_lo + static_cast<double>(last) * h > w_hi || next[last] < 1e-300)) --last;
        if (last - first < GridPdf::min_cells) {
            // Keep a minimal grid around the centre when the density is very narrow.
            const std::size_t pad = GridPdf::min_cells;
            first = first > pad ? first - pad : 0;
            last = std::min(next.size() - 1, last + pad);
        }
        double dropped = 0.0;
        for (std::size_t i = 0; i < first; ++i) dropped += next[i];
        for (std::size_t i = last + 1; i < next.size(); ++i) dropped += next[i];
        dropped *= h;
        if (dropped > opt.mass_tolerance) throw EvolutionMassLoss(K, dropped);
        t.total_mass_trimmed += dropped;

        cur.assign(next.begin() + static_cast<std::ptrdiff_t>(first), next.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        next_lo += static_cast<double>(first) * h;
        lo = next_lo;

        const double mass = trapezoid(cur, h);
        const double drift = std::abs(1.0 - mass - dropped);
        t.total_renormalization += std::abs(1.0 - mass);
        t.max_step_drift = std::max(t.max_step_drift, drift);
        for (double& v : cur) v /= mass;

        if (K % opt.stride == 0 || K == K_max) {
            const double hi = lo + static_cast<double>(cur.size() - 1) * h;
            record(K, GridPdf(lo, hi, cur));
        }
    }
    return t;
}

GridPdf alpha_grid(const DistributionSpec& spec, double step) {
    if (!(step > 0.0)) throw std::invalid_argument("alpha_grid: step must be > 0");
    auto cells_for = [step](double lo, double hi) {
        auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step));
        return std::max(n + n % 2, GridPdf::min_cells);
    };
    if (const auto* ln = spec.get_if<LogNormal>()) {
        if (ln->sigma_alpha == 0.0) throw std::invalid_argument("alpha_grid: deterministic gain has no density");
        const double lo = ln->mu_alpha - 12.0 * ln->sigma_alpha;
        const double hi = ln->mu_alpha + 12.0 * ln->sigma_alpha;
        return discretize(spec, GridDomain::alpha, lo, hi, cells_for(lo, hi)).pdf;
    }
    if (const auto* hc = spec.get_if<HalfCauchy>()) {
        // The sech tail beyond distance d holds (2/π)·atan(e^{-d}) ≈ 1.5e-16 at d = 36.
        const double c = std::log(hc->gamma);
        return discretize(spec, GridDomain::alpha, c - 36.0, c + 36.0, cells_for(c - 36.0, c + 36.0)).pdf;
    }
    if (const auto* g = spec.get_if<GridDist>()) {
        if (g->domain == GridDomain::alpha) return g->pdf;
        const double lo = std::log(g->pdf.lo());
        const double hi = std::log(g->pdf.hi());
        return to_alpha_space(g->pdf, cells_for(lo, hi));
    }
    throw std::invalid_argument("alpha_grid: spec is not a gain distribution");
}

void write_trace_csv(std::ostream& os, const EvolutionTrace& t) {
    os << "K,median_x,mean_x,var_x,tail_at_one\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        os << t.K_values[i] << ',' << format_double(t.medians_x[i]) << ',' << format_double(t.means_x[i]) << ','
           << format_double(t.variances_x[i]) << ',' << format_double(t.tail_at_one[i]) << '\n';
    }
}

}  // namespace stochgain
