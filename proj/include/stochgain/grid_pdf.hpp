#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace stochgain {

/// A probability density sampled at the n+1 nodes of a uniform grid on [lo, hi].
///
/// Values are normalized to unit trapezoid mass on construction; the mass
/// before normalization is kept in raw_mass(). Values whose mass is already one
/// to within mass_rounding are kept bit-exact. Between nodes the density is
/// taken as piecewise linear, and it is zero outside [lo, hi].
class GridPdf {
public:
    static constexpr std::size_t min_cells = 16;
    static constexpr double mass_rounding = 1e-13;

    GridPdf(double lo, double hi, std::vector<double> values);

    /// Samples `density` at the nodes of a uniform grid.
    static GridPdf sample(const std::function<double(double)>& density, double lo, double hi,
                          std::size_t cells);

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    std::size_t cells() const noexcept { return values_.size() - 1; }
    double step() const noexcept { return step_; }
    double node(std::size_t i) const noexcept { return lo_ + static_cast<double>(i) * step_; }
    std::span<const double> values() const noexcept { return values_; }
    double raw_mass() const noexcept { return raw_mass_; }

    /// Density at x by linear interpolation; zero outside the grid.
    double operator()(double x) const noexcept;

    /// Cumulative trapezoid mass at every node (first entry 0, last entry 1).
    std::vector<double> cumulative() const;

    double cdf(double x) const;
    /// Prob{X > x}, accumulated from the right so that far-tail values keep
    /// their relative precision.
    double survival(double x) const;
    /// Piecewise-linear inversion of the node cdf. Flat stretches resolve to
    /// their leftmost point.
    double quantile(double q) const;

    /// Composite Simpson estimate of E[f(X)], normalized by the Simpson mass.
    double expect(const std::function<double(double)>& f) const;
    double mean() const;
    double variance() const;
    double third_central() const;

private:
    double lo_;
    double hi_;
    double step_;
    double raw_mass_;
    std::vector<double> values_;
};

/// Trapezoid integral of node values with spacing `step`.
double trapezoid(std::span<const double> values, double step) noexcept;

/// Composite Simpson weights for `cells` uniform cells (3/8 rule on the last
/// three cells when the count is odd). Weights are not multiplied by the step.
std::vector<double> simpson_weights(std::size_t cells);

/// Density of ln(a) from the density of a at a single point: f_a(e^α)·e^α.
inline double alpha_density(const std::function<double(double)>& fa, double alpha) {
    const double a = std::exp(alpha);
    return fa(a) * a;
}

/// Density of a from the density of ln(a) at a single point: f_α(ln a)/a.
inline double a_density(const std::function<double(double)>& falpha, double a) {
    return a > 0.0 ? falpha(std::log(a)) / a : 0.0;
}

/// Maps a density on a > 0 to the density of α = ln a on [ln lo, ln hi].
/// `cells` defaults to the input cell count.
GridPdf to_alpha_space(const GridPdf& fa, std::optional<std::size_t> cells = std::nullopt);

/// Maps a density of α to the density of a = e^α. The output grid defaults to
/// [e^lo, e^hi]; a narrower window may be requested.
GridPdf to_a_space(const GridPdf& falpha, std::optional<std::size_t> cells = std::nullopt,
                   std::optional<double> lo = std::nullopt, std::optional<double> hi = std::nullopt);

inline double grid_quantile(const GridPdf& f, double q) { return f.quantile(q); }

/// Two-column CSV (`node,density`) with a header line.
void write_csv(std::ostream& os, const GridPdf& f, const char* node_name = "node");

void to_json(nlohmann::json& j, const GridPdf& f);
GridPdf grid_from_json(const nlohmann::json& j);

}  // namespace stochgain
