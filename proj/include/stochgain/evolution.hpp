#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "stochgain/distribution.hpp"
#include "stochgain/grid_pdf.hpp"
#include "stochgain/kernels.hpp"

namespace stochgain {

/// Distribution of ζ_K = ln x_K (x_0 = 1) at a set of step counts.
struct EvolutionTrace {
    std::vector<std::size_t> K_values;
    std::vector<GridPdf> zeta_pdfs;  // one per K when kept, otherwise empty
    std::vector<double> medians_zeta;
    std::vector<double> medians_x;
    std::vector<std::optional<double>> means_x;      // empty = infinite
    std::vector<std::optional<double>> variances_x;  // empty = infinite
    std::vector<double> tail_at_one;                 // Prob{x_K > 1}
    std::optional<LogNormal> closed_form;            // α-law for closed-form traces
    double total_renormalization = 0.0;              // Σ |1 - mass| over convolution steps
    double max_step_drift = 0.0;
    double total_mass_trimmed = 0.0;

    std::size_t size() const noexcept { return K_values.size(); }
};

/// ζ_K ~ N(Kμ_α, Kσ_α²). K_values must be positive and strictly increasing.
EvolutionTrace evolve_lognormal(double mu_alpha, double sigma_alpha, std::span<const std::size_t> K_values);

enum class ConvolutionMethod { fft, direct };

struct GridEvolveOptions {
    std::size_t stride = 1;
    bool keep_densities = false;
    /// Moments of a used for means_x/variances_x instead of grid quadrature.
    std::optional<AMoments> a_moments;
    ConvolutionMethod method = ConvolutionMethod::fft;
    Exec exec = Exec::parallel;  // direct method only
    double window_sigmas = 12.0;
    double mass_tolerance = 1e-6;
};

/// Raised when trimming the ζ_K grid would drop more than the tolerated mass.
class EvolutionMassLoss : public std::runtime_error {
public:
    EvolutionMassLoss(std::size_t K, double lost);
    std::size_t K;
    double lost;
};

/// K-fold convolution of an α density on its own grid step. Records K = 1,
/// every multiple of stride and K_max. After each step the grid is trimmed to
/// Kμ_α ± window_sigmas·σ_α√K (widened by the input's half-width) and
/// renormalized.
EvolutionTrace evolve_grid(const GridPdf& falpha, std::size_t K_max, const GridEvolveOptions& options = {});

/// Var(x_K) = (σ_a² + μ_a²)^K - μ_a^{2K}, evaluated in log form. Empty on
/// overflow.
std::optional<double> goodman_variance(double mu_a, double var_a, std::size_t K);

/// α-space grid for a gain spec with the given step. Lognormal covers
/// ±12σ_α, the hyperbolic secant law of a half-Cauchy gain ±36 around ln γ.
/// Grid specs are converted to α-space as needed.
GridPdf alpha_grid(const DistributionSpec& spec, double step);

/// CSV with header K,median_x,mean_x,var_x,tail_at_one.
void write_trace_csv(std::ostream& os, const EvolutionTrace& trace);

}  // namespace stochgain
