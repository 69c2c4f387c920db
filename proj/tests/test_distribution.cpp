#include <doctest.h>

#include <numbers>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "stochgain/distribution.hpp"

using namespace stochgain;

namespace {

constexpr double pi = std::numbers::pi;

// Reference gain: mean 1.0283, standard deviation 0.4389.
DistributionSpec ref_gain() { return DistributionSpec::lognormal_from_moments(1.0283, 0.4389); }

std::vector<double> draws(const DistributionSpec& spec, std::size_t n, std::uint64_t seed) {
    Sampler s(spec);
    Rng rng(seed);
    std::vector<double> out(n);
    for (auto& v : out) v = s(rng);
    return out;
}

}  // namespace

TEST_CASE("lognormal moment maps agree with quadrature") {
    const auto ref_spec = ref_gain();
    const auto* ln = ref_spec.get_if<LogNormal>();
    REQUIRE(ln);
    CHECK(ln->mu_alpha == doctest::Approx(-0.0557715).epsilon(1e-6));
    CHECK(ln->sigma_alpha * ln->sigma_alpha == doctest::Approx(0.1673569).epsilon(1e-6));

    const double mu = ln->mu_alpha;
    const double s = ln->sigma_alpha;
    const double mean = oracle::integrate([&](double x) { return std::exp(x) * oracle::normal_pdf(x, mu, s); },
                                          mu - 14 * s, mu + 14 * s);
    const double second = oracle::integrate(
        [&](double x) { return std::exp(2 * x) * oracle::normal_pdf(x, mu, s); }, mu - 14 * s, mu + 14 * s);
    const auto lin = lognormal_linear_moments(mu, s * s);
    CHECK(lin.mu_a == doctest::Approx(mean).epsilon(1e-10));
    CHECK(lin.var_a == doctest::Approx(second - mean * mean).epsilon(1e-9));
    CHECK(lognormal_mean(mu, s * s) == doctest::Approx(1.0283));
    CHECK(lognormal_median(mu) == doctest::Approx(std::exp(mu)));

    // Mode: maximizer of the a-density.
    const double mode = oracle::solve_increasing(
        [&](double a) { return -(pdf(ref_gain(), a * 1.000001) - pdf(ref_gain(), a)); }, 0.0, 0.6, 1.5);
    CHECK(lognormal_mode(mu, s * s) == doctest::Approx(mode).epsilon(1e-5));
}

TEST_CASE("lognormal from moments rejects invalid moments") {
    CHECK_THROWS_AS(DistributionSpec::lognormal_from_moments(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(DistributionSpec::lognormal_from_moments(1.0, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(DistributionSpec::half_cauchy(0.0), std::invalid_argument);
    CHECK_THROWS_AS(DistributionSpec::normal_delta(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("cdf is the integral of pdf and quantile inverts cdf") {
    const std::vector<DistributionSpec> specs = {ref_gain(), DistributionSpec::half_cauchy(0.75),
                                                 DistributionSpec::normal_delta(0.3, 1.2)};
    for (const auto& spec : specs) {
        CAPTURE(spec.kind_name());
        const double lower = spec.is_gain() ? 0.0 : -12.0;
        for (double x : {0.2, 0.9, 1.7}) {
            const double integral = oracle::integrate([&](double t) { return pdf(spec, t); }, lower, x, 1e-13);
            CHECK(cdf(spec, x) == doctest::Approx(integral).epsilon(1e-8));
        }
        for (double q : {0.05, 0.5, 0.93}) CHECK(cdf(spec, quantile(spec, q)) == doctest::Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("half-Cauchy log law is the hyperbolic secant law") {
    const auto hc = DistributionSpec::half_cauchy(0.75);
    for (double a : {-3.0, -0.2877, 0.0, 2.5})
        CHECK(alpha_pdf(hc, a) == doctest::Approx(oracle::sech_pdf(a, 0.75)).epsilon(1e-13));
    const auto st = alpha_stats(hc);
    const double var = oracle::integrate(
        [](double x) { return (x - std::log(0.75)) * (x - std::log(0.75)) * oracle::sech_pdf(x, 0.75); }, -60, 60);
    CHECK(st.mu_alpha == doctest::Approx(std::log(0.75)));
    CHECK(st.var_alpha == doctest::Approx(var).epsilon(1e-9));
    CHECK(st.var_alpha == doctest::Approx(pi * pi / 4));
    CHECK(st.third_central == 0.0);

    const auto am = a_moments(hc);
    CHECK_FALSE(am.mu_a.has_value());
    CHECK_FALSE(am.var_a.has_value());

    for (double lam : {-0.5, 0.1, 0.6}) {
        const double mgf = oracle::integrate([&](double x) { return std::exp(lam * x) * oracle::sech_pdf(x, 0.75); },
                                             -150, 150, 1e-13);
        REQUIRE(mgf_alpha(hc, lam));
        CHECK(*mgf_alpha(hc, lam) == doctest::Approx(mgf).epsilon(1e-8));
    }
    CHECK_FALSE(mgf_alpha(hc, 1.0).has_value());
}

TEST_CASE("log-MGF derivative matches a finite difference") {
    const auto grid_spec = DistributionSpec::grid(
        GridPdf::sample([](double x) { return oracle::centered_gamma2_pdf(x, 0.5); }, -1.0, 20.0, 8000),
        GridDomain::alpha);
    const std::vector<DistributionSpec> specs = {ref_gain(), DistributionSpec::half_cauchy(0.75), grid_spec};
    for (const auto& spec : specs) {
        for (double lam : {0.05, 0.3}) {
            const double h = 1e-5;
            const double fd = (std::log(*mgf_alpha(spec, lam + h)) - std::log(*mgf_alpha(spec, lam - h))) / (2 * h);
            CHECK(log_mgf_alpha_derivative(spec, lam) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("normal_delta is not a gain") {
    const auto d = DistributionSpec::normal_delta(0.0, 1.0);
    CHECK_FALSE(d.is_gain());
    CHECK_THROWS_AS(alpha_stats(d), std::invalid_argument);
    CHECK_THROWS_AS(mgf_alpha(d, 0.1), std::invalid_argument);
    const auto am = a_moments(d);
    CHECK(*am.mu_a == 0.0);
    CHECK(*am.var_a == 1.0);
}

TEST_CASE("grid specs in both domains give the same alpha statistics") {
    auto fa = [](double a) { return a > 0.0 ? oracle::normal_pdf(std::log(a), -0.1, 0.25) / a : 0.0; };
    const auto ga = DistributionSpec::grid(GridPdf::sample(fa, 0.05, 6.0, 40000), GridDomain::a);
    const auto gl = DistributionSpec::grid(
        GridPdf::sample([](double x) { return oracle::normal_pdf(x, -0.1, 0.25); }, -3.0, 2.8, 4000), GridDomain::alpha);
    const auto sa = alpha_stats(ga);
    const auto sl = alpha_stats(gl);
    CHECK(sa.mu_alpha == doctest::Approx(-0.1).epsilon(1e-4));
    CHECK(sl.mu_alpha == doctest::Approx(-0.1).epsilon(1e-8));
    CHECK(sa.var_alpha == doctest::Approx(0.0625).epsilon(1e-3));
    CHECK(sl.var_alpha == doctest::Approx(0.0625).epsilon(1e-8));
    const auto m = lognormal_linear_moments(-0.1, 0.0625);
    CHECK(*a_moments(gl).mu_a == doctest::Approx(m.mu_a).epsilon(1e-8));
    CHECK(*a_moments(gl).var_a == doctest::Approx(m.var_a).epsilon(1e-6));
}

TEST_CASE("a-space grid with mass at zero has no finite log mean") {
    const auto g = DistributionSpec::grid(GridPdf(0.0, 1.0, std::vector<double>(20, 1.0)), GridDomain::a);
    CHECK_FALSE(alpha_stats(g).mu_finite);
}

TEST_CASE("samplers pass a Kolmogorov-Smirnov check at N = 1e5") {
    const std::size_t n = 100000;
    const auto grid_spec = DistributionSpec::grid(
        GridPdf::sample([](double x) { return oracle::centered_gamma2_pdf(x, 0.5); }, -1.0, 15.0, 4000),
        GridDomain::alpha);
    const std::vector<DistributionSpec> specs = {ref_gain(), DistributionSpec::half_cauchy(0.75),
                                                 DistributionSpec::normal_delta(-0.5, 2.0), grid_spec};
    std::uint64_t seed = 11;
    for (const auto& spec : specs) {
        CAPTURE(spec.kind_name());
        const auto x = draws(spec, n, seed++);
        CHECK(oracle::ks_distance(x, [&](double v) { return cdf(spec, v); }) <= 0.02);
    }
    // log_gain draws follow the α law.
    Sampler s(DistributionSpec::half_cauchy(0.75));
    Rng rng(99);
    std::vector<double> z(n);
    for (auto& v : z) v = s.log_gain(rng);
    CHECK(oracle::ks_distance(z, [](double a) { return 1.0 - oracle::sech_sf(a, 0.75); }) <= 0.02);
}

TEST_CASE("deterministic lognormal gain") {
    const auto d = DistributionSpec::lognormal(std::log(0.9), 0.0);
    Rng rng(1);
    Sampler s(d);
    CHECK(s(rng) == doctest::Approx(0.9));
    CHECK(cdf(d, 0.89) == 0.0);
    CHECK(cdf(d, 0.91) == 1.0);
}

TEST_CASE("discretize reports the mass outside the window") {
    const auto d = DistributionSpec::lognormal(0.0, 1.0);
    const auto r = discretize(d, GridDomain::alpha, -2.0, 2.0, 400);
    CHECK(r.mass_outside == doctest::Approx(2.0 * (1.0 - oracle::normal_cdf(2.0))).epsilon(1e-9));
    CHECK(r.pdf.cells() == 400);
}

TEST_CASE("JSON round trip and strict parsing") {
    const std::vector<DistributionSpec> specs = {
        DistributionSpec::lognormal(-0.1, 0.4, "case"), DistributionSpec::half_cauchy(0.75),
        DistributionSpec::normal_delta(0.0, 1.0),
        DistributionSpec::grid(GridPdf(0.5, 2.0, std::vector<double>(17, 1.0)), GridDomain::a)};
    for (const auto& spec : specs) {
        nlohmann::json j;
        to_json(j, spec);
        const auto back = spec_from_json(j);
        nlohmann::json j2;
        to_json(j2, back);
        CHECK(j == j2);
        CHECK(back.label() == spec.label());
    }
    const auto moments = nlohmann::json::parse(R"({"kind":"lognormal","params":{"mu_a":1.0283,"sigma_a":0.4389}})");
    CHECK(spec_from_json(moments).get_if<LogNormal>()->mu_alpha == doctest::Approx(-0.0557715).epsilon(1e-6));
    CHECK_THROWS(spec_from_json(nlohmann::json::parse(R"({"kind":"lognormal","params":{"mu_alpha":0,"sigma_alpha":1,"x":2}})")));
    CHECK_THROWS(spec_from_json(nlohmann::json::parse(R"({"kind":"gamma","params":{}})")));
    CHECK_THROWS(spec_from_json(nlohmann::json::parse(R"({"kind":"half_cauchy","params":{"gamma":1},"extra":true})")));
}
