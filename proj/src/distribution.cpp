#include "stochgain/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>
#include <nlohmann/json.hpp>

namespace stochgain {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double inv_sqrt_2pi = 0.3989422804014327;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double normal_pdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return inv_sqrt_2pi / sigma * std::exp(-0.5 * z * z);
}

double normal_cdf(double x, double mu, double sigma) {
    return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

double normal_sf(double x, double mu, double sigma) {
    return 0.5 * std::erfc((x - mu) / (sigma * std::numbers::sqrt2));
}

double normal_quantile(double q) {
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * q);
}

[[noreturn]] void not_a_gain(const char* what) {
    throw std::invalid_argument(std::string(what) + ": normal_delta is not a gain distribution (support not in a > 0)");
}

double sf(const DistributionSpec& spec, double x) {
    return std::visit(
        overloaded{
            [&](const LogNormal& d) {
                if (d.sigma_alpha == 0.0) return x < std::exp(d.mu_alpha) ? 1.0 : 0.0;
                return x <= 0.0 ? 1.0 : normal_sf(std::log(x), d.mu_alpha, d.sigma_alpha);
            },
            [&](const HalfCauchy& d) {
                return x <= 0.0 ? 1.0 : 2.0 / pi * std::atan(d.gamma / x);
            },
            [&](const NormalDelta& d) {
                if (d.sigma_delta == 0.0) return x < d.mu_delta ? 1.0 : 0.0;
                return normal_sf(x, d.mu_delta, d.sigma_delta);
            },
            [&](const GridDist& g) {
                if (g.domain == GridDomain::a) return g.pdf.survival(x);
                return x <= 0.0 ? 1.0 : g.pdf.survival(std::log(x));
            },
        },
        spec.kind());
}

// Moment helper for grid specs: E[h(α)] evaluated on the grid of the
// tabulated variable.
double grid_alpha_expect(const GridDist& g, const std::function<double(double)>& h) {
    if (g.domain == GridDomain::alpha) return g.pdf.expect(h);
    return g.pdf.expect([&](double a) { return h(std::log(a)); });
}

}  // namespace

DistributionSpec::DistributionSpec(Kind kind, std::string label) : kind_(std::move(kind)), label_(std::move(label)) {
    std::visit(overloaded{
                   [](const LogNormal& d) {
                       if (!std::isfinite(d.mu_alpha) || !std::isfinite(d.sigma_alpha) || d.sigma_alpha < 0.0)
                           throw std::invalid_argument("lognormal: need finite mu_alpha and sigma_alpha >= 0");
                   },
                   [](const HalfCauchy& d) {
                       if (!std::isfinite(d.gamma) || !(d.gamma > 0.0))
                           throw std::invalid_argument("half_cauchy: gamma must be > 0");
                   },
                   [](const NormalDelta& d) {
                       if (!std::isfinite(d.mu_delta) || !std::isfinite(d.sigma_delta) || d.sigma_delta < 0.0)
                           throw std::invalid_argument("normal_delta: need finite mu_delta and sigma_delta >= 0");
                   },
                   [](const GridDist& g) {
                       if (g.domain == GridDomain::a && g.pdf.lo() < 0.0)
                           throw std::invalid_argument("grid: a-space grid must lie in a >= 0");
                   },
               },
               kind_);
}

DistributionSpec DistributionSpec::lognormal(double mu_alpha, double sigma_alpha, std::string label) {
    return DistributionSpec(LogNormal{mu_alpha, sigma_alpha}, std::move(label));
}

DistributionSpec DistributionSpec::lognormal_from_moments(double mu_a, double sigma_a, std::string label) {
    const auto m = lognormal_log_moments(mu_a, sigma_a);
    return DistributionSpec(LogNormal{m.mu_alpha, std::sqrt(m.var_alpha)}, std::move(label));
}

DistributionSpec DistributionSpec::half_cauchy(double gamma, std::string label) {
    return DistributionSpec(HalfCauchy{gamma}, std::move(label));
}

DistributionSpec DistributionSpec::normal_delta(double mu_delta, double sigma_delta, std::string label) {
    return DistributionSpec(NormalDelta{mu_delta, sigma_delta}, std::move(label));
}

DistributionSpec DistributionSpec::grid(GridPdf pdf, GridDomain domain, std::string label) {
    return DistributionSpec(GridDist{std::move(pdf), domain}, std::move(label));
}

std::string_view DistributionSpec::kind_name() const noexcept {
    switch (kind_.index()) {
        case 0: return "lognormal";
        case 1: return "half_cauchy";
        case 2: return "normal_delta";
        default: return "grid";
    }
}

bool DistributionSpec::is_gain() const noexcept {
    return !std::holds_alternative<NormalDelta>(kind_);
}

LogSpaceMoments lognormal_log_moments(double mu_a, double sigma_a) {
    if (!(mu_a > 0.0) || !(sigma_a >= 0.0)) throw std::invalid_argument("lognormal_log_moments: need mu_a > 0, sigma_a >= 0");
    const double r = sigma_a / mu_a;
    const double var_alpha = std::log1p(r * r);
    return {std::log(mu_a) - 0.5 * var_alpha, var_alpha};
}

LinearMoments lognormal_linear_moments(double mu_alpha, double var_alpha) {
    if (!(var_alpha >= 0.0)) throw std::invalid_argument("lognormal_linear_moments: var_alpha must be >= 0");
    return {std::exp(mu_alpha + 0.5 * var_alpha), std::expm1(var_alpha) * std::exp(2.0 * mu_alpha + var_alpha)};
}

double lognormal_mode(double mu_alpha, double var_alpha) { return std::exp(mu_alpha - var_alpha); }
double lognormal_median(double mu_alpha) { return std::exp(mu_alpha); }
double lognormal_mean(double mu_alpha, double var_alpha) { return std::exp(mu_alpha + 0.5 * var_alpha); }

double pdf(const DistributionSpec& spec, double x) {
    return std::visit(overloaded{
                          [&](const LogNormal& d) {
                              if (d.sigma_alpha == 0.0 || x <= 0.0) return 0.0;
                              return normal_pdf(std::log(x), d.mu_alpha, d.sigma_alpha) / x;
                          },
                          [&](const HalfCauchy& d) {
                              if (x < 0.0) return 0.0;
                              const double r = x / d.gamma;
                              return 2.0 / (pi * d.gamma) / (1.0 + r * r);
                          },
                          [&](const NormalDelta& d) {
                              if (d.sigma_delta == 0.0) return 0.0;
                              return normal_pdf(x, d.mu_delta, d.sigma_delta);
                          },
                          [&](const GridDist& g) {
                              if (g.domain == GridDomain::a) return g.pdf(x);
                              return x > 0.0 ? g.pdf(std::log(x)) / x : 0.0;
                          },
                      },
                      spec.kind());
}

double cdf(const DistributionSpec& spec, double x) {
    if (const auto* g = spec.get_if<GridDist>()) {
        if (g->domain == GridDomain::a) return g->pdf.cdf(x);
        return x <= 0.0 ? 0.0 : g->pdf.cdf(std::log(x));
    }
    if (const auto* d = spec.get_if<LogNormal>(); d && d->sigma_alpha > 0.0 && x > 0.0)
        return normal_cdf(std::log(x), d->mu_alpha, d->sigma_alpha);
    if (const auto* d = spec.get_if<NormalDelta>(); d && d->sigma_delta > 0.0)
        return normal_cdf(x, d->mu_delta, d->sigma_delta);
    if (const auto* d = spec.get_if<HalfCauchy>()) return x <= 0.0 ? 0.0 : 2.0 / pi * std::atan(x / d->gamma);
    return 1.0 - sf(spec, x);
}

double quantile(const DistributionSpec& spec, double q) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile: q must be in (0,1)");
    return std::visit(overloaded{
                          [&](const LogNormal& d) { return std::exp(d.mu_alpha + d.sigma_alpha * normal_quantile(q)); },
                          [&](const HalfCauchy& d) { return d.gamma * std::tan(0.5 * pi * q); },
                          [&](const NormalDelta& d) { return d.mu_delta + d.sigma_delta * normal_quantile(q); },
                          [&](const GridDist& g) {
                              const double v = g.pdf.quantile(q);
                              return g.domain == GridDomain::a ? v : std::exp(v);
                          },
                      },
                      spec.kind());
}

double alpha_pdf(const DistributionSpec& spec, double alpha) {
    return std::visit(overloaded{
                          [&](const LogNormal& d) {
                              return d.sigma_alpha == 0.0 ? 0.0 : normal_pdf(alpha, d.mu_alpha, d.sigma_alpha);
                          },
                          [&](const HalfCauchy& d) { return 1.0 / (pi * std::cosh(alpha - std::log(d.gamma))); },
                          [&](const NormalDelta&) -> double { not_a_gain("alpha_pdf"); },
                          [&](const GridDist& g) {
                              if (g.domain == GridDomain::alpha) return g.pdf(alpha);
                              const double a = std::exp(alpha);
                              return g.pdf(a) * a;
                          },
                      },
                      spec.kind());
}

double standard_normal(Rng& rng) {
    const double u1 = rng.uniform_open();
    const double u2 = rng.uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi * u2);
}

Sampler::Sampler(const DistributionSpec& spec) : spec_(spec) {
    if (const auto* g = spec_.get_if<GridDist>()) cumulative_ = g->pdf.cumulative();
}

double Sampler::grid_inverse(double u) const {
    const auto& g = std::get<GridDist>(spec_.kind()).pdf;
    const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) return g.hi();
    const auto j = static_cast<std::size_t>(it - cumulative_.begin());
    if (j == 0) return g.lo();
    const double t = (u - cumulative_[j - 1]) / (cumulative_[j] - cumulative_[j - 1]);
    return g.node(j - 1) + t * g.step();
}

double Sampler::operator()(Rng& rng) const {
    return std::visit(overloaded{
                          [&](const LogNormal& d) { return std::exp(d.mu_alpha + d.sigma_alpha * standard_normal(rng)); },
                          [&](const HalfCauchy& d) { return d.gamma * std::tan(0.5 * pi * rng.uniform_open()); },
                          [&](const NormalDelta& d) { return d.mu_delta + d.sigma_delta * standard_normal(rng); },
                          [&](const GridDist& g) {
                              const double v = grid_inverse(rng.uniform_open());
                              return g.domain == GridDomain::a ? v : std::exp(v);
                          },
                      },
                      spec_.kind());
}

double Sampler::log_gain(Rng& rng) const {
    return std::visit(overloaded{
                          [&](const LogNormal& d) { return d.mu_alpha + d.sigma_alpha * standard_normal(rng); },
                          [&](const HalfCauchy& d) {
                              return std::log(d.gamma) + std::log(std::tan(0.5 * pi * rng.uniform_open()));
                          },
                          [&](const NormalDelta&) -> double { not_a_gain("sample_log"); },
                          [&](const GridDist& g) {
                              const double v = grid_inverse(rng.uniform_open());
                              return g.domain == GridDomain::a ? std::log(v) : v;
                          },
                      },
                      spec_.kind());
}

AlphaStats alpha_stats(const DistributionSpec& spec) {
    return std::visit(
        overloaded{
            [](const LogNormal& d) { return AlphaStats{d.mu_alpha, d.sigma_alpha * d.sigma_alpha, 0.0}; },
            // α = ln γ + β with β of density sech(β)/π: symmetric, variance π²/4.
            [](const HalfCauchy& d) { return AlphaStats{std::log(d.gamma), pi * pi / 4.0, 0.0}; },
            [](const NormalDelta&) -> AlphaStats { not_a_gain("alpha_stats"); },
            [](const GridDist& g) {
                AlphaStats s;
                if (g.domain == GridDomain::a && g.pdf.lo() <= 0.0 && g.pdf.values()[0] > 0.0) {
                    s.mu_finite = s.var_finite = s.third_finite = false;
                    return s;
                }
                s.mu_alpha = grid_alpha_expect(g, [](double x) { return x; });
                const double m = s.mu_alpha;
                s.var_alpha = std::max(0.0, grid_alpha_expect(g, [m](double x) { return (x - m) * (x - m); }));
                s.third_central = grid_alpha_expect(g, [m](double x) { return (x - m) * (x - m) * (x - m); });
                s.mu_finite = std::isfinite(s.mu_alpha);
                s.var_finite = std::isfinite(s.var_alpha);
                s.third_finite = std::isfinite(s.third_central);
                return s;
            },
        },
        spec.kind());
}

AMoments a_moments(const DistributionSpec& spec) {
    auto finite_or_inf = [](double v) { return std::isfinite(v) ? std::optional<double>(v) : std::nullopt; };
    return std::visit(overloaded{
                          [&](const LogNormal& d) {
                              const auto m = lognormal_linear_moments(d.mu_alpha, d.sigma_alpha * d.sigma_alpha);
                              return AMoments{finite_or_inf(m.mu_a), finite_or_inf(m.var_a)};
                          },
                          [](const HalfCauchy&) { return AMoments{std::nullopt, std::nullopt}; },
                          [](const NormalDelta& d) { return AMoments{d.mu_delta, d.sigma_delta * d.sigma_delta}; },
                          [&](const GridDist& g) {
                              double mean = 0.0;
                              double second = 0.0;
                              if (g.domain == GridDomain::a) {
                                  mean = g.pdf.mean();
                                  second = g.pdf.expect([](double a) { return a * a; });
                              } else {
                                  mean = g.pdf.expect([](double x) { return std::exp(x); });
                                  second = g.pdf.expect([](double x) { return std::exp(2.0 * x); });
                              }
                              return AMoments{finite_or_inf(mean), finite_or_inf(std::max(0.0, second - mean * mean))};
                          },
                      },
                      spec.kind());
}

std::optional<double> mgf_alpha(const DistributionSpec& spec, double lambda) {
    const double v = std::visit(
        overloaded{
            [&](const LogNormal& d) {
                return std::exp(d.mu_alpha * lambda + 0.5 * d.sigma_alpha * d.sigma_alpha * lambda * lambda);
            },
            // E[e^{λ(β + ln γ)}] = γ^λ / cos(πλ/2) for |λ| < 1.
            [&](const HalfCauchy& d) {
                if (!(std::abs(lambda) < 1.0)) return std::numeric_limits<double>::infinity();
                return std::exp(lambda * std::log(d.gamma)) / std::cos(0.5 * pi * lambda);
            },
            [&](const NormalDelta&) -> double { not_a_gain("mgf_alpha"); },
            [&](const GridDist& g) { return grid_alpha_expect(g, [lambda](double x) { return std::exp(lambda * x); }); },
        },
        spec.kind());
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

double log_mgf_alpha_derivative(const DistributionSpec& spec, double lambda) {
    return std::visit(
        overloaded{
            [&](const LogNormal& d) { return d.mu_alpha + d.sigma_alpha * d.sigma_alpha * lambda; },
            [&](const HalfCauchy& d) { return std::log(d.gamma) + 0.5 * pi * std::tan(0.5 * pi * lambda); },
            [&](const NormalDelta&) -> double { not_a_gain("log_mgf_alpha_derivative"); },
            [&](const GridDist& g) {
                // Shift the exponent by its largest value on the grid to avoid overflow.
                const double lo = g.domain == GridDomain::a ? std::log(std::max(g.pdf.lo(), 1e-300)) : g.pdf.lo();
                const double hi = g.domain == GridDomain::a ? std::log(g.pdf.hi()) : g.pdf.hi();
                const double shift = std::max(lambda * lo, lambda * hi);
                const double num = grid_alpha_expect(g, [&](double x) { return x * std::exp(lambda * x - shift); });
                const double den = grid_alpha_expect(g, [&](double x) { return std::exp(lambda * x - shift); });
                return num / den;
            },
        },
        spec.kind());
}

Discretized discretize(const DistributionSpec& spec, GridDomain domain, double lo, double hi, std::size_t cells) {
    if (domain == GridDomain::alpha) {
        auto f = GridPdf::sample([&](double x) { return alpha_pdf(spec, x); }, lo, hi, cells);
        const double outside = cdf(spec, std::exp(lo)) + sf(spec, std::exp(hi));
        return {std::move(f), outside};
    }
    auto f = GridPdf::sample([&](double x) { return pdf(spec, x); }, lo, hi, cells);
    const double below = lo <= 0.0 && spec.is_gain() ? 0.0 : cdf(spec, lo);
    return {std::move(f), below + sf(spec, hi)};
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed, const char* where) {
    for (const auto& [key, _] : j.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw std::invalid_argument(std::string(where) + ": unknown field '" + key + "'");
}

}  // namespace

void to_json(nlohmann::json& j, const DistributionSpec& spec) {
    nlohmann::json params = std::visit(
        overloaded{
            [](const LogNormal& d) { return nlohmann::json{{"mu_alpha", d.mu_alpha}, {"sigma_alpha", d.sigma_alpha}}; },
            [](const HalfCauchy& d) { return nlohmann::json{{"gamma", d.gamma}}; },
            [](const NormalDelta& d) { return nlohmann::json{{"mu_delta", d.mu_delta}, {"sigma_delta", d.sigma_delta}}; },
            [](const GridDist& g) {
                nlohmann::json p = g.pdf;
                p["domain"] = g.domain == GridDomain::a ? "a" : "alpha";
                return p;
            },
        },
        spec.kind());
    j = nlohmann::json{{"kind", std::string(spec.kind_name())}, {"params", std::move(params)}, {"label", spec.label()}};
}

DistributionSpec spec_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("distribution: expected an object");
    reject_unknown(j, {"kind", "params", "label"}, "distribution");
    const auto kind = j.at("kind").get<std::string>();
    const auto& p = j.at("params");
    if (!p.is_object()) throw std::invalid_argument("distribution: params must be an object");
    std::string label = j.value("label", std::string{});

    if (kind == "lognormal") {
        if (p.contains("mu_a") || p.contains("sigma_a")) {
            reject_unknown(p, {"mu_a", "sigma_a"}, "lognormal params");
            return DistributionSpec::lognormal_from_moments(p.at("mu_a").get<double>(), p.at("sigma_a").get<double>(),
                                                            std::move(label));
        }
        reject_unknown(p, {"mu_alpha", "sigma_alpha"}, "lognormal params");
        return DistributionSpec::lognormal(p.at("mu_alpha").get<double>(), p.at("sigma_alpha").get<double>(),
                                           std::move(label));
    }
    if (kind == "half_cauchy") {
        reject_unknown(p, {"gamma"}, "half_cauchy params");
        return DistributionSpec::half_cauchy(p.at("gamma").get<double>(), std::move(label));
    }
    if (kind == "normal_delta") {
        reject_unknown(p, {"mu_delta", "sigma_delta"}, "normal_delta params");
        return DistributionSpec::normal_delta(p.at("mu_delta").get<double>(), p.at("sigma_delta").get<double>(),
                                              std::move(label));
    }
    if (kind == "grid") {
        auto rest = p;
        const auto domain_name = rest.value("domain", std::string("a"));
        rest.erase("domain");
        GridDomain domain;
        if (domain_name == "a")
            domain = GridDomain::a;
        else if (domain_name == "alpha")
            domain = GridDomain::alpha;
        else
            throw std::invalid_argument("grid params: domain must be \"a\" or \"alpha\"");
        return DistributionSpec::grid(grid_from_json(rest), domain, std::move(label));
    }
    throw std::invalid_argument("distribution: unknown kind '" + kind + "'");
}

}  // namespace stochgain
