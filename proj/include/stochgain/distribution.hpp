#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "stochgain/grid_pdf.hpp"
#include "stochgain/rng.hpp"

namespace stochgain {

/// Gain a = e^α with α ~ N(mu_alpha, sigma_alpha²). sigma_alpha = 0 is the
/// deterministic gain e^{mu_alpha}.
struct LogNormal {
    double mu_alpha = 0.0;
    double sigma_alpha = 1.0;
};

/// Magnitude of a Cauchy variable with scale gamma:
/// f(a) = 2/(πγ) · 1/(1 + (a/γ)²) for a >= 0.
struct HalfCauchy {
    double gamma = 1.0;
};

/// Normal feedback perturbation δ ~ N(mu_delta, sigma_delta²). Not a gain by
/// itself (support is the whole line); used inside PlantSpec.
struct NormalDelta {
    double mu_delta = 0.0;
    double sigma_delta = 1.0;
};

enum class GridDomain { a, alpha };

/// Tabulated density, either of the gain a (domain a) or of α = ln a.
struct GridDist {
    GridPdf pdf;
    GridDomain domain = GridDomain::a;
};

/// Immutable description of a gain distribution. Parameters are validated on
/// construction.
class DistributionSpec {
public:
    using Kind = std::variant<LogNormal, HalfCauchy, NormalDelta, GridDist>;

    explicit DistributionSpec(Kind kind, std::string label = {});

    static DistributionSpec lognormal(double mu_alpha, double sigma_alpha, std::string label = {});
    /// Lognormal gain with the given mean and standard deviation of a.
    static DistributionSpec lognormal_from_moments(double mu_a, double sigma_a, std::string label = {});
    static DistributionSpec half_cauchy(double gamma, std::string label = {});
    static DistributionSpec normal_delta(double mu_delta, double sigma_delta, std::string label = {});
    static DistributionSpec grid(GridPdf pdf, GridDomain domain, std::string label = {});

    const Kind& kind() const noexcept { return kind_; }
    const std::string& label() const noexcept { return label_; }
    std::string_view kind_name() const noexcept;

    /// True when the support lies in a > 0 (a valid multiplicative gain).
    bool is_gain() const noexcept;

    template <class T>
    const T* get_if() const noexcept { return std::get_if<T>(&kind_); }

private:
    Kind kind_;
    std::string label_;
};

/// Moments of α = ln a. The finite flags are false when the defining integral
/// diverges; the paired value is then meaningless.
struct AlphaStats {
    double mu_alpha = 0.0;
    double var_alpha = 0.0;
    double third_central = 0.0;
    bool mu_finite = true;
    bool var_finite = true;
    bool third_finite = true;

    double sigma_alpha() const { return std::sqrt(var_alpha); }
    bool all_finite() const noexcept { return mu_finite && var_finite && third_finite; }
};

/// Mean and variance of a. An empty optional means the moment is +infinity.
struct AMoments {
    std::optional<double> mu_a;
    std::optional<double> var_a;
};

/// Lognormal parameter maps between a-space and α-space moments.
struct LogSpaceMoments {
    double mu_alpha;
    double var_alpha;
};
struct LinearMoments {
    double mu_a;
    double var_a;
};
LogSpaceMoments lognormal_log_moments(double mu_a, double sigma_a);
LinearMoments lognormal_linear_moments(double mu_alpha, double var_alpha);

double lognormal_mode(double mu_alpha, double var_alpha);
double lognormal_median(double mu_alpha);
double lognormal_mean(double mu_alpha, double var_alpha);

/// Density of the spec's variable (a for gains, δ for NormalDelta). Zero
/// outside the support and for point masses.
double pdf(const DistributionSpec& spec, double x);
double cdf(const DistributionSpec& spec, double x);
double quantile(const DistributionSpec& spec, double q);

/// Density of α = ln a for gain specs.
double alpha_pdf(const DistributionSpec& spec, double alpha);

/// Draws from a spec. Grid cumulative tables are built once here, so reuse a
/// Sampler for many draws.
class Sampler {
public:
    explicit Sampler(const DistributionSpec& spec);

    /// One draw of the spec's variable.
    double operator()(Rng& rng) const;
    /// One draw of ln a (gain specs only), without an exp/log round trip where
    /// the family allows it.
    double log_gain(Rng& rng) const;

private:
    double grid_inverse(double u) const;

    DistributionSpec spec_;
    std::vector<double> cumulative_;
};

/// Standard normal draw (Box-Muller, cosine branch; two uniforms per draw).
double standard_normal(Rng& rng);

inline double sample(const DistributionSpec& spec, Rng& rng) { return Sampler(spec)(rng); }
inline double sample_log(const DistributionSpec& spec, Rng& rng) { return Sampler(spec).log_gain(rng); }

AlphaStats alpha_stats(const DistributionSpec& spec);
AMoments a_moments(const DistributionSpec& spec);

/// φ_α(λ) = E[e^{λα}]. Empty when infinite.
std::optional<double> mgf_alpha(const DistributionSpec& spec, double lambda);
/// d/dλ ln φ_α(λ). Only meaningful where mgf_alpha is finite.
double log_mgf_alpha_derivative(const DistributionSpec& spec, double lambda);

/// Tabulates the spec's density on [lo, hi] and reports the probability mass
/// that falls outside the window. `domain` selects a- or α-space.
struct Discretized {
    GridPdf pdf;
    double mass_outside;
};
Discretized discretize(const DistributionSpec& spec, GridDomain domain, double lo, double hi,
                       std::size_t cells);

/// JSON form: {"kind": "lognormal"|"half_cauchy"|"normal_delta"|"grid",
///             "params": {...}, "label": "..."}.
void to_json(nlohmann::json& j, const DistributionSpec& spec);
DistributionSpec spec_from_json(const nlohmann::json& j);

}  // namespace stochgain
