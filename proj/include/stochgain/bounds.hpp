#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "stochgain/distribution.hpp"
#include "stochgain/evolution.hpp"

namespace stochgain {

/// Prob{x_K > x_bnd} for ζ_K ~ N(Kμ_α, Kσ_α²), via erfc.
double lognormal_tail(double mu_alpha, double sigma_alpha, std::size_t K, double x_bnd = 1.0);

/// Prob{x_K > 1} <= 1/(1 + Kμ_α²/σ_α²). Requires μ_α < 0 and a finite,
/// positive variance; K = 0 gives 1.
double cantelli_bound(const AlphaStats& stats, std::size_t K);

struct ChernoffOptions {
    /// Search radius for λ. Chosen per family when empty.
    std::optional<double> beta;
    /// Halves the bound. Off by default.
    bool sharpen = false;
    double lambda_tol = 1e-13;
};

/// Prob{x_K > 1} <= e^{-cK} with c = sup_{λ∈[0,β]} -ln φ_α(λ).
struct ChernoffResult {
    double c = 0.0;
    double lambda_star = 0.0;
    double beta = 0.0;
    bool interior = true;  // false when the supremum sits at λ = β
    bool sharpen = false;

    double bound(std::size_t K) const;
};

/// μ_α >= 0 yields c = 0. Throws std::domain_error when the MGF is infinite
/// at every probed λ > 0 or μ_α is undefined.
ChernoffResult chernoff_exponent(const DistributionSpec& spec, const ChernoffOptions& options = {});

struct ChernoffBound {
    double c;
    double lambda_star;
    double bound;
};
ChernoffBound chernoff_bound(const DistributionSpec& spec, std::size_t K, const ChernoffOptions& options = {});

struct SechChernoff {
    double lambda_star;
    double c;
};
/// λ* = (2/π)·atan(-2 ln γ/π), c = -λ* ln γ + ln cos(πλ*/2), for 0 < γ < 1.
SechChernoff sech_chernoff_closed_form(double gamma);

/// Prob{x_K > ε} for every K of the trace. Closed-form traces use the erfc
/// tail; grid traces need kept densities unless ε = 1.
std::vector<double> convergence_in_probability_check(const EvolutionTrace& trace, double epsilon);

struct TailReport {
    std::vector<std::size_t> K_values;
    std::vector<std::optional<double>> exact;          // Prob{x_K > 1}
    std::vector<std::optional<double>> exact_at_mean;  // Prob{x_K > μ_a^K}, lognormal only
    std::vector<double> cantelli;                      // 1 where the bound does not apply
    std::vector<double> chernoff;
    double chernoff_c = 0.0;
    double lambda_star = 0.0;
};

/// Exact tails come from the erfc formula for lognormal specs and from
/// `trace` (matched by K) otherwise.
TailReport tail_report(const DistributionSpec& spec, std::span<const std::size_t> K_values,
                       const EvolutionTrace* trace = nullptr, const ChernoffOptions& options = {});

/// CSV with header K,exact,cantelli,chernoff,exact_at_mean. Missing exact
/// values are written as empty fields.
void write_tail_csv(std::ostream& os, const TailReport& report);

}  // namespace stochgain
