#include "stochgain/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "stochgain/csv.hpp"

namespace stochgain {

double lognormal_tail(double mu_alpha, double sigma_alpha, std::size_t K, double x_bnd) {
    if (!(sigma_alpha > 0.0) || K == 0 || !(x_bnd > 0.0))
        throw std::invalid_argument("lognormal_tail: need sigma_alpha > 0, K >= 1, x_bnd > 0");
    const double k = static_cast<double>(K);
    const double var = sigma_alpha * sigma_alpha;
    return 0.5 * std::erfc((std::log(x_bnd) - k * mu_alpha) / std::sqrt(2.0 * k * var));
}

double cantelli_bound(const AlphaStats& stats, std::size_t K) {
    if (!stats.mu_finite || !(stats.mu_alpha < 0.0))
        throw std::domain_error("cantelli_bound: requires mu_alpha < 0");
    if (!stats.var_finite || !(stats.var_alpha > 0.0))
        throw std::domain_error("cantelli_bound: requires a finite, positive variance of ln a");
    return 1.0 / (1.0 + static_cast<double>(K) * stats.mu_alpha * stats.mu_alpha / stats.var_alpha);
}

double ChernoffResult::bound(std::size_t K) const {
    const double b = std::exp(-c * static_cast<double>(K));
    return std::min(1.0, sharpen ? 0.5 * b : b);
}

namespace {

// Largest λ in (0, β] with a usable MGF, halving from β.
double usable_beta(const DistributionSpec& spec, double beta) {
    for (double lam = beta; lam > 1e-12; lam *= 0.5) {
        const auto m = mgf_alpha(spec, lam);
        if (m && std::log(*m) < 700.0) return lam;
    }
    throw std::domain_error("chernoff: MGF of ln a is infinite at every probed lambda > 0");
}

double default_beta(const DistributionSpec& spec, double mu) {
    if (const auto* ln = spec.get_if<LogNormal>()) return 8.0 * (-mu) / (ln->sigma_alpha * ln->sigma_alpha);
    if (spec.get_if<HalfCauchy>()) return 1.0 - 1e-9;
    // Grids: grow λ geometrically while the MGF stays finite.
    double beta = 0.0;
    for (double lam = 1e-3; lam < 1e6; lam *= 2.0) {
        const auto m = mgf_alpha(spec, lam);
        if (!m || std::log(*m) >= 700.0) break;
        beta = lam;
    }
    if (beta == 0.0) throw std::domain_error("chernoff: MGF of ln a is infinite at every probed lambda > 0");
    return beta;
}

}  // namespace

ChernoffResult chernoff_exponent(const DistributionSpec& spec, const ChernoffOptions& opt) {
    const AlphaStats st = alpha_stats(spec);
    if (!st.mu_finite) throw std::domain_error("chernoff: mean of ln a is not finite");
    ChernoffResult r;
    r.sharpen = opt.sharpen;
    if (st.mu_alpha >= 0.0) {
        r.interior = true;
        return r;
    }
    if (const auto* ln = spec.get_if<LogNormal>(); ln && ln->sigma_alpha == 0.0) {
        // Deterministic a < 1: x_K never exceeds 1.
        r.c = std::numeric_limits<double>::infinity();
        r.lambda_star = std::numeric_limits<double>::infinity();
        r.beta = r.lambda_star;
        r.interior = false;
        return r;
    }
    if (opt.beta && !(*opt.beta > 0.0)) throw std::invalid_argument("chernoff: beta must be > 0");
    const double beta = opt.beta ? usable_beta(spec, *opt.beta) : default_beta(spec, st.mu_alpha);
    r.beta = beta;

    // -ln φ is concave in λ with slope -μ_α > 0 at 0; find where (ln φ)' = 0.
    double lam = beta;
    if (log_mgf_alpha_derivative(spec, beta) > 0.0) {
        double lo = 0.0;
        double hi = beta;
        while (hi - lo > opt.lambda_tol) {
            const double mid = 0.5 * (lo + hi);
            (log_mgf_alpha_derivative(spec, mid) < 0.0 ? lo : hi) = mid;
        }
        lam = 0.5 * (lo + hi);
    } else {
        r.interior = false;
    }
    const auto m = mgf_alpha(spec, lam);
    if (!m) throw std::domain_error("chernoff: MGF of ln a is infinite at the optimum");
    r.lambda_star = lam;
    r.c = std::max(0.0, -std::log(*m));
    return r;
}

ChernoffBound chernoff_bound(const DistributionSpec& spec, std::size_t K, const ChernoffOptions& options) {
    const auto r = chernoff_exponent(spec, options);
    return {r.c, r.lambda_star, r.bound(K)};
}

SechChernoff sech_chernoff_closed_form(double gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("sech_chernoff_closed_form: gamma must be > 0");
    if (gamma >= 1.0) throw std::domain_error("sech_chernoff_closed_form: requires gamma < 1");
    const double lg = std::log(gamma);
    const double lam = 2.0 / std::numbers::pi * std::atan(-2.0 * lg / std::numbers::pi);
    return {lam, -lam * lg + std::log(std::cos(0.5 * std::numbers::pi * lam))};
}

std::vector<double> convergence_in_probability_check(const EvolutionTrace& trace, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("convergence_in_probability_check: epsilon must be > 0");
    std::vector<double> out;
    out.reserve(trace.size());
    if (trace.closed_form) {
        for (std::size_t K : trace.K_values)
            out.push_back(lognormal_tail(trace.closed_form->mu_alpha, trace.closed_form->sigma_alpha, K, epsilon));
        return out;
    }
    if (trace.zeta_pdfs.size() == trace.size()) {
        const double z = std::log(epsilon);
        for (const auto& f : trace.zeta_pdfs) out.push_back(std::clamp(f.survival(z), 0.0, 1.0));
        return out;
    }
    if (epsilon == 1.0) return trace.tail_at_one;
    throw std::invalid_argument("convergence_in_probability_check: trace has no kept densities");
}

TailReport tail_report(const DistributionSpec& spec, std::span<const std::size_t> K_values,
                       const EvolutionTrace* trace, const ChernoffOptions& options) {
    const AlphaStats st = alpha_stats(spec);
    const auto ch = chernoff_exponent(spec, options);
    const auto* ln = spec.get_if<LogNormal>();
    const bool cantelli_applies = st.mu_finite && st.mu_alpha < 0.0 && st.var_finite && st.var_alpha > 0.0;

    TailReport r;
    r.chernoff_c = ch.c;
    r.lambda_star = ch.lambda_star;
    for (std::size_t K : K_values) {
        r.K_values.push_back(K);
        std::optional<double> exact;
        std::optional<double> at_mean;
        if (ln && ln->sigma_alpha > 0.0 && K > 0) {
            exact = lognormal_tail(ln->mu_alpha, ln->sigma_alpha, K, 1.0);
            // ln(μ_a^K) = K(μ_α + σ_α²/2)
            const double k = static_cast<double>(K);
            const double s2 = ln->sigma_alpha * ln->sigma_alpha;
            at_mean = 0.5 * std::erfc(0.5 * k * s2 / std::sqrt(2.0 * k * s2));
        } else if (trace) {
            const auto it = std::find(trace->K_values.begin(), trace->K_values.end(), K);
            if (it != trace->K_values.end()) exact = trace->tail_at_one[static_cast<std::size_t>(it - trace->K_values.begin())];
        }
        r.exact.push_back(exact);
        r.exact_at_mean.push_back(at_mean);
        r.cantelli.push_back(cantelli_applies ? cantelli_bound(st, K) : 1.0);
        r.chernoff.push_back(ch.bound(K));
    }
    return r;
}

void write_tail_csv(std::ostream& os, const TailReport& r) {
    auto field = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    os << "K,exact,cantelli,chernoff,exact_at_mean\n";
    for (std::size_t i = 0; i < r.K_values.size(); ++i) {
        os << r.K_values[i] << ',' << field(r.exact[i]) << ',' << format_double(r.cantelli[i]) << ','
           << format_double(r.chernoff[i]) << ',' << field(r.exact_at_mean[i]) << '\n';
    }
}

}  // namespace stochgain
