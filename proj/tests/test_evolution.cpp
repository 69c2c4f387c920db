#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "stochgain/evolution.hpp"

using namespace stochgain;

namespace {

GridPdf normal_alpha_grid(double mu, double sigma, double h) {
    const auto cells = static_cast<std::size_t>(std::round(20.0 * sigma / h));
    return GridPdf::sample([=](double x) { return oracle::normal_pdf(x, mu, sigma); }, mu - 10 * sigma,
                           mu + 10 * sigma, cells);
}

std::vector<std::size_t> range_K(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i + 1;
    return v;
}

}  // namespace

TEST_CASE("closed-form lognormal evolution") {
    const double mu = -0.0557715;
    const double s = std::sqrt(0.1673569);
    const std::vector<std::size_t> Ks = {1, 10, 300};
    const auto t = evolve_lognormal(mu, s, Ks);
    REQUIRE(t.size() == 3);
    for (std::size_t i = 0; i < Ks.size(); ++i) {
        const double k = static_cast<double>(Ks[i]);
        CHECK(t.medians_x[i] == doctest::Approx(std::exp(k * mu)));
        CHECK(*t.means_x[i] == doctest::Approx(std::pow(std::exp(mu + s * s / 2), k)));
        CHECK(t.tail_at_one[i] == doctest::Approx(1.0 - oracle::normal_cdf(-std::sqrt(k) * mu / s)).epsilon(1e-9));
    }
    const auto lin = lognormal_linear_moments(mu, s * s);
    CHECK(*t.variances_x[0] == doctest::Approx(lin.var_a).epsilon(1e-12));
    CHECK(*t.variances_x[1] == doctest::Approx(oracle::goodman_by_products(lin.mu_a, lin.var_a, 10)).epsilon(1e-10));

    const auto zero = evolve_lognormal(0.0, 0.3, range_K(20));
    for (double m : zero.medians_x) CHECK(m == 1.0);

    CHECK_THROWS_AS(evolve_lognormal(0.0, 0.0, Ks), std::invalid_argument);
    CHECK_THROWS_AS(evolve_lognormal(0.0, 1.0, std::vector<std::size_t>{3, 2}), std::invalid_argument);
    CHECK_THROWS_AS(evolve_lognormal(0.0, 1.0, std::vector<std::size_t>{}), std::invalid_argument);
}

TEST_CASE("Goodman variance") {
    CHECK(*goodman_variance(1.3, 0.0, 50) == 0.0);
    CHECK(*goodman_variance(0.0, 0.25, 3) == doctest::Approx(0.25 * 0.25 * 0.25));
    for (std::size_t K : {1u, 2u, 7u, 20u})
        CHECK(*goodman_variance(0.9, 0.3, K) == doctest::Approx(oracle::goodman_by_products(0.9, 0.3, K)).epsilon(1e-12));
    // On the variance boundary μ² + σ² = 1 the variance tends to one.
    const double mu = 0.8;
    const double var = 1.0 - mu * mu;
    CHECK(*goodman_variance(mu, var, 5) == doctest::Approx(1.0 - std::pow(mu, 10)));
    CHECK(*goodman_variance(mu, var, 2000) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(goodman_variance(3.0, 1.0, 5000).has_value());
    CHECK_THROWS_AS(goodman_variance(1.0, -1.0, 2), std::invalid_argument);
}

TEST_CASE("grid evolution of a normal log law tracks the closed form") {
    const double mu = -0.05;
    const double s = 0.4;
    const auto g = normal_alpha_grid(mu, s, 0.01);
    const auto t = evolve_grid(g, 50);
    const auto ref = evolve_lognormal(mu, s, range_K(50));
    REQUIRE(t.size() == 50);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(std::abs(t.medians_zeta[i] - ref.medians_zeta[i]) <= 2 * g.step());
        CHECK(t.tail_at_one[i] == doctest::Approx(ref.tail_at_one[i]).epsilon(1e-4));
    }
    // Mean by quadrature equals μ_a^K.
    for (std::size_t i : {0u, 9u, 29u}) CHECK(*t.means_x[i] == doctest::Approx(*ref.means_x[i]).epsilon(1e-6));
    CHECK(t.max_step_drift <= 1e-8);
    CHECK(t.total_mass_trimmed <= 1e-6);
}

TEST_CASE("K = 1 leaves the input unchanged and medians are exp of zeta medians") {
    const auto g = normal_alpha_grid(0.1, 0.3, 0.02);
    GridEvolveOptions opt;
    opt.keep_densities = true;
    opt.stride = 4;
    const auto t = evolve_grid(g, 10, opt);
    REQUIRE(t.K_values == std::vector<std::size_t>{1, 4, 8, 10});
    REQUIRE(t.zeta_pdfs.size() == 4);
    CHECK(t.zeta_pdfs[0].lo() == g.lo());
    CHECK(std::equal(g.values().begin(), g.values().end(), t.zeta_pdfs[0].values().begin(), t.zeta_pdfs[0].values().end()));
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t.medians_x[i] == std::exp(t.medians_zeta[i]));
        CHECK(t.medians_zeta[i] == t.zeta_pdfs[i].quantile(0.5));
    }
}

TEST_CASE("FFT and direct convolution paths agree") {
    const auto g = GridPdf::sample([](double x) { return oracle::centered_gamma2_pdf(x, 0.5); }, -1.0, 12.0, 1300);
    GridEvolveOptions fft;
    fft.keep_densities = true;
    GridEvolveOptions direct = fft;
    direct.method = ConvolutionMethod::direct;
    GridEvolveOptions serial = direct;
    serial.exec = Exec::serial;
    const auto a = evolve_grid(g, 12, fft);
    const auto b = evolve_grid(g, 12, direct);
    const auto c = evolve_grid(g, 12, serial);
    for (std::size_t i = 0; i < a.size(); ++i) {
        // FFT round-off can keep a few extra near-zero edge cells; compare on b's nodes.
        const auto& pa = a.zeta_pdfs[i];
        const auto& pb = b.zeta_pdfs[i];
        const auto vb = pb.values();
        const auto vc = c.zeta_pdfs[i].values();
        const double peak = *std::max_element(vb.begin(), vb.end());
        double worst = 0.0;
        for (std::size_t j = 0; j < vb.size(); ++j) worst = std::max(worst, std::abs(pa(pb.node(j)) - vb[j]));
        CHECK(worst <= 1e-10 * peak);
        CHECK(std::equal(vb.begin(), vb.end(), vc.begin(), vc.end()));
    }
}

TEST_CASE("sech log law: median follows gamma^K") {
    const auto g = alpha_grid(DistributionSpec::half_cauchy(0.75), 0.01);
    GridEvolveOptions opt;
    opt.a_moments = a_moments(DistributionSpec::half_cauchy(0.75));
    const auto t = evolve_grid(g, 30, opt);
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(t.medians_x[i] == doctest::Approx(std::pow(0.75, static_cast<double>(t.K_values[i]))).epsilon(0.02));
        CHECK_FALSE(t.means_x[i].has_value());
    }
    CHECK(t.tail_at_one[0] == doctest::Approx(oracle::sech_sf(0.0, 0.75)).epsilon(1e-5));
    // μ_α < 0: the tail decreases with K.
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t.tail_at_one[i] < t.tail_at_one[i - 1]);
}

TEST_CASE("window too narrow raises a mass-loss error with the offending K") {
    // Input truncated at ±3σ: after one convolution about 3% of the mass lies
    // beyond the input's half-width.
    const auto g = GridPdf::sample([](double x) { return oracle::normal_pdf(x, 0.0, 0.3); }, -0.9, 0.9, 180);
    GridEvolveOptions opt;
    opt.window_sigmas = 0.1;
    try {
        evolve_grid(g, 5, opt);
        FAIL("expected EvolutionMassLoss");
    } catch (const EvolutionMassLoss& e) {
        CHECK(e.K == 2);
        CHECK(e.lost > 1e-6);
    }
    CHECK_THROWS_AS(evolve_grid(g, 0), std::invalid_argument);
}

TEST_CASE("alpha_grid covers each family") {
    const auto ln = alpha_grid(DistributionSpec::lognormal(-0.1, 0.2), 0.005);
    CHECK(ln.mean() == doctest::Approx(-0.1).epsilon(1e-10));
    CHECK(ln.step() <= 0.005 + 1e-12);
    const auto sech = alpha_grid(DistributionSpec::half_cauchy(2.0), 0.01);
    CHECK(sech.mean() == doctest::Approx(std::log(2.0)).epsilon(1e-8));
    CHECK(sech.raw_mass() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(alpha_grid(DistributionSpec::lognormal(0.0, 0.0), 0.01), std::invalid_argument);
    CHECK_THROWS_AS(alpha_grid(DistributionSpec::normal_delta(0.0, 1.0), 0.01), std::invalid_argument);
}

TEST_CASE("trace CSV declares its columns") {
    const auto t = evolve_lognormal(-0.1, 0.3, std::vector<std::size_t>{1, 2});
    std::ostringstream os;
    write_trace_csv(os, t);
    CHECK(os.str().rfind("K,median_x,mean_x,var_x,tail_at_one\n1,", 0) == 0);
}
