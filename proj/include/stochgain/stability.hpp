#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stochgain/distribution.hpp"
#include "stochgain/kernels.hpp"

namespace stochgain {

enum class Stability { stable, marginal, unstable };

std::string_view to_string(Stability s) noexcept;

inline constexpr double default_marginal_eps = 1e-9;

/// Median/mean/variance verdicts for x_{k+1} = a_k x_k.
///
/// Margins are signed distances from the boundary, positive on the stable side.
/// For lognormal gains they use the α-space forms -μ_α, -(μ_α + σ_α²/2) and
/// -(μ_α + σ_α²); otherwise -μ_α, 1 - μ_a and 1 - (μ_a² + σ_a²). An empty
/// margin means the underlying moment is infinite, which counts as unstable.
struct StabilityVerdict {
    Stability median = Stability::unstable;
    Stability mean = Stability::unstable;
    Stability variance = Stability::unstable;
    std::optional<double> median_margin;
    std::optional<double> mean_margin;
    std::optional<double> variance_margin;
    std::string criteria_used;
};

Stability from_margin(const std::optional<double>& margin, double eps) noexcept;

/// Throws std::invalid_argument for non-gain specs and std::domain_error when
/// μ_α is not finite.
StabilityVerdict classify(const DistributionSpec& spec, double eps = default_marginal_eps);

/// lim median(x_K) = exp(-E[(α-μ_α)³] / (6σ_α²)) for a zero-mean α.
double median_limit_zero_mean(const AlphaStats& stats, double eps = default_marginal_eps);

struct Point {
    double x;
    double y;
};
using Polyline = std::vector<Point>;

/// Boundary curves of the three stability regions. Each polyline is ordered by
/// its sampling parameter.
struct RegionCurves {
    Polyline median;
    Polyline mean;
    Polyline variance;
};

/// Boundaries in the (μ_a, σ_a) plane (x = μ_a, y = σ_a) for lognormal gains,
/// one point per σ_a value. The median boundary is found by bisection on
/// μ_α(μ_a, σ_a) = 0; the variance boundary exists only for σ_a < 1.
RegionCurves region_boundaries(std::span<const double> sigma_a_values);

/// First order plant G(z) = gamma_gain/(z - tau) with stochastic feedback δ:
/// y_{k+1} = (tau + gamma_gain·δ_k) y_k.
struct PlantSpec {
    double tau = 0.0;
    double gamma_gain = 1.0;
    DistributionSpec delta = DistributionSpec::normal_delta(0.0, 1.0);

    PlantSpec() = default;
    PlantSpec(double tau, double gamma_gain, DistributionSpec delta);
};

/// Distribution of the gain a = |tau + gamma·δ| as an α-space grid.
struct FoldedGain {
    DistributionSpec spec;  // grid in α-space, or a degenerate lognormal when σ_δ = 0
    double mass_lost = 0.0;
    bool fold_active = false;
};

inline constexpr double fold_extent_sigmas = 10.0;
inline constexpr double fold_mass_tolerance = 1e-9;

FoldedGain fold_gain(const PlantSpec& plant);

StabilityVerdict stabilization_verdict(const PlantSpec& plant, double eps = default_marginal_eps);

/// Stability boundaries over nominal = |tau + γμ_δ| (x) and σ_δ/√|γ| (y) for
/// normal δ. Rows of constant y are evaluated in parallel; crossings of each
/// margin along x are linearly interpolated between grid points.
RegionCurves stabilization_region(std::span<const double> nominal_values, std::span<const double> sigma_values,
                                  double gamma_gain = 1.0, Exec exec = Exec::parallel);

struct PeriodicGainReport {
    double monodromy;
    double geo_mean;
    double log_mean;
    bool stable;         // log_mean < 0
    Stability verdict;   // with a marginal band on log_mean
};

PeriodicGainReport periodic_gain_analysis(std::span<const double> gains, double eps = default_marginal_eps);

/// (1/K) Σ_{k<K} ln|a_k| over the first K entries.
double asymptotic_log_average(std::span<const double> gains, std::size_t K);

/// Streaming version of asymptotic_log_average.
class LogAverage {
public:
    void push(double gain);
    std::size_t count() const noexcept { return count_; }
    double value() const;

private:
    double sum_ = 0.0;
    std::size_t count_ = 0;
};

}  // namespace stochgain
