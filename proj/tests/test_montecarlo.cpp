#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "stochgain/bounds.hpp"
#include "stochgain/montecarlo.hpp"

using namespace stochgain;

namespace {

DistributionSpec ref_gain() { return DistributionSpec::lognormal_from_moments(1.0283, 0.4389); }

// 99.9% two-sided normal quantile, used where many checks share one test.
constexpr double z_999 = 3.2905267314919255;

}  // namespace

TEST_CASE("paths are reproducible and independent of the execution mode") {
    const auto a = simulate(ref_gain(), 300, 40, 1234, Exec::parallel);
    const auto b = simulate(ref_gain(), 300, 40, 1234, Exec::parallel);
    const auto c = simulate(ref_gain(), 300, 40, 1234, Exec::serial);
    CHECK(a.log_paths == b.log_paths);
    CHECK(a.log_paths == c.log_paths);
    const auto d = simulate(ref_gain(), 300, 40, 1235);
    CHECK(a.log_paths != d.log_paths);
    CHECK(simulate_terminal(ref_gain(), 300, 40, 1234, Exec::serial) == a.column(40));
    CHECK(simulate_terminal(ref_gain(), 300, 40, 1234, Exec::parallel) == a.column(40));
}

TEST_CASE("paths start at ln x0 and accumulate per-path stream draws left to right") {
    const auto spec = DistributionSpec::half_cauchy(0.75);
    const auto ens = simulate(spec, 5, 8, 42, Exec::parallel, 0.5);
    Sampler s(spec);
    for (std::size_t i = 0; i < ens.n_paths; ++i) {
        Rng rng = Rng::stream(42, i);
        double z = 0.5;
        CHECK(ens.log_state(i, 0) == 0.5);
        for (std::size_t k = 1; k <= ens.K_max; ++k) {
            z = z + s.log_gain(rng);
            CHECK(ens.log_state(i, k) == z);
        }
    }
}

TEST_CASE("deterministic gain gives identical paths") {
    const auto ens = simulate(DistributionSpec::lognormal(std::log(0.9), 0.0), 10, 5, 7);
    for (std::size_t i = 1; i < ens.n_paths; ++i)
        for (std::size_t k = 0; k <= 5; ++k) CHECK(ens.log_state(i, k) == ens.log_state(0, k));
    const auto curve = tail_frequency_curve(ens, 1.0);
    for (double f : curve.freq) CHECK(f == 0.0);
}

TEST_CASE("plant sources draw |tau + gamma delta|") {
    const PlantSpec plant(1.05, 2.0, DistributionSpec::normal_delta(0.0, 0.5));
    const auto ens = simulate(plant, 4, 3, 9);
    Sampler d(plant.delta);
    Rng rng = Rng::stream(9, 2);
    double z = 0.0;
    for (std::size_t k = 1; k <= 3; ++k) {
        z = z + std::log(std::abs(1.05 + 2.0 * d(rng)));
        CHECK(ens.log_state(2, k) == z);
    }
    CHECK_THROWS_AS(simulate(DistributionSpec::normal_delta(0, 1), 4, 3, 1), std::invalid_argument);
    CHECK_THROWS_AS(simulate(ref_gain(), 0, 3, 1), std::invalid_argument);
}

TEST_CASE("sample statistics") {
    CHECK(sample_median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(sample_median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK_THROWS_AS(sample_median({}), std::invalid_argument);

    const std::vector<double> big = {1000.0, 1000.0, 999.0};
    CHECK(log_mean_exp(big) == doctest::Approx(1000.0 + std::log((2.0 + std::exp(-1.0)) / 3.0)));
    const auto s = sample_stats(big, 1.0);
    CHECK_FALSE(s.mean_x.has_value());
    CHECK(s.exceedances == 3);

    const auto ens = simulate(ref_gain(), 201, 20, 5);
    for (std::size_t K : {1u, 10u, 20u}) {
        const auto st = sample_stats(ens, K);
        CHECK(st.median_x == std::exp(st.median_zeta));
        CHECK(st.median_zeta == sample_median(ens.column(K)));
    }
    // Strict inequality: every path sits exactly at x0 = 1 at K = 0.
    CHECK(sample_stats(ens, 0, 1.0).tail_freq == 0.0);
}

TEST_CASE("Wilson interval matches its defining equation") {
    for (auto [k, n] : std::vector<std::pair<std::size_t, std::size_t>>{{0, 200}, {3, 200}, {50, 100}, {100, 100}}) {
        const auto ci = wilson_interval(k, n);
        const auto ref = oracle::wilson_by_root(k, n, z_95);
        CHECK(ci.lo == doctest::Approx(ref.first).epsilon(1e-9));
        CHECK(ci.hi == doctest::Approx(ref.second).epsilon(1e-9));
    }
    CHECK(wilson_interval(0, 200).hi == doctest::Approx(z_95 * z_95 / (200 + z_95 * z_95)));
    CHECK_THROWS_AS(wilson_interval(3, 2), std::invalid_argument);
}

TEST_CASE("reference-gain sample median tracks exp(K mu_alpha)") {
    const auto spec = ref_gain();
    const double mu = spec.get_if<LogNormal>()->mu_alpha;
    const auto ens = simulate(spec, 200, 300, 2024);
    for (std::size_t K : {50u, 150u, 300u}) {
        // Paths below the theoretical median are Binomial(n, 1/2).
        const auto col = ens.column(K);
        const auto below = static_cast<std::size_t>(
            std::count_if(col.begin(), col.end(), [&](double z) { return z < static_cast<double>(K) * mu; }));
        const auto ci = wilson_interval(below, col.size(), z_999);
        CHECK(ci.lo <= 0.5);
        CHECK(ci.hi >= 0.5);
    }
}

TEST_CASE("half-Cauchy sample median of zeta_K tracks K ln gamma") {
    const auto ens = simulate(DistributionSpec::half_cauchy(0.75), 500, 100, 77);
    const auto col = ens.column(100);
    const auto below = static_cast<std::size_t>(
        std::count_if(col.begin(), col.end(), [](double z) { return z < 100.0 * std::log(0.75); }));
    const auto ci = wilson_interval(below, col.size(), z_999);
    CHECK(ci.lo <= 0.5);
    CHECK(ci.hi >= 0.5);
}

TEST_CASE("reference-gain tail frequencies match the erfc tail") {
    const auto spec = ref_gain();
    const auto* ln = spec.get_if<LogNormal>();
    const auto ens = simulate(spec, 100000, 100, 31);
    const auto curve = tail_frequency_curve(ens, 1.0);
    for (std::size_t K : {1u, 10u, 50u, 100u}) {
        const double exact = lognormal_tail(ln->mu_alpha, ln->sigma_alpha, K);
        const auto ci = wilson_interval(curve.exceedances[K], ens.n_paths, z_999);
        CHECK(ci.lo <= exact);
        CHECK(ci.hi >= exact);
    }
}

TEST_CASE("tail frequency stays below the Cantelli bound across seeds") {
    const auto spec = ref_gain();
    const double bound = cantelli_bound(alpha_stats(spec), 300);
    int below = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto z = simulate_terminal(spec, 200, 300, seed);
        if (sample_stats(z, 1.0).tail_freq < bound) ++below;
    }
    CHECK(below >= 99);
}

TEST_CASE("half-Cauchy sample mean keeps growing with the sample size") {
    const auto spec = DistributionSpec::half_cauchy(0.75);
    const auto small = sample_stats(simulate_terminal(spec, 100, 1, 3), 1.0);
    const auto large = sample_stats(simulate_terminal(spec, 1000000, 1, 3), 1.0);
    CHECK(large.log_mean_x > small.log_mean_x);
}

TEST_CASE("per-K thresholds and CSV output") {
    const auto ens = simulate(ref_gain(), 50, 4, 8);
    const std::vector<double> thr = {0.0, 0.1, 0.2, 0.3, 0.4};
    const auto c = tail_frequency_curve(ens, thr);
    CHECK(c.K_values.size() == 5);
    CHECK_THROWS_AS(tail_frequency_curve(ens, std::vector<double>{0.0}), std::invalid_argument);

    std::ostringstream s;
    write_summary_csv(s, ens);
    CHECK(s.str().rfind("K,median_x,median_zeta,log_mean_x,mean_x,tail_freq,tail_ci_lo,tail_ci_hi\n0,", 0) == 0);
    std::ostringstream p;
    write_paths_csv(p, ens);
    const auto text = p.str();
    CHECK(text.rfind("path,K,zeta\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 50 * 5);
}
