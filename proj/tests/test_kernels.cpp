#include <doctest.h>

#include <random>
#include <set>

#include "stochgain/kernels.hpp"
#include "stochgain/rng.hpp"

using namespace stochgain;

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(gen);
    return v;
}

}  // namespace

TEST_CASE("direct convolution of a small example") {
    const std::vector<double> a = {1, 2};
    const std::vector<double> b = {3, 4, 5};
    const std::vector<double> expected = {3, 10, 13, 10};
    CHECK(kernels::convolve_serial(a, b) == expected);
    CHECK(kernels::convolve_omp(a, b) == expected);
    const auto f = kernels::convolve_fft(a, b);
    REQUIRE(f.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) CHECK(f[i] == doctest::Approx(expected[i]).epsilon(1e-13));
    CHECK_THROWS_AS(kernels::convolve_serial({}, b), std::invalid_argument);
    CHECK_THROWS_AS(kernels::convolve_fft(a, {}), std::invalid_argument);
}

TEST_CASE("serial and OpenMP convolution are bit-identical; FFT within 1e-10 of peak") {
    for (auto [n, m] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {17, 5}, {1000, 333}, {4097, 2049}}) {
        const auto a = random_vector(n, n);
        const auto b = random_vector(m, m + 1);
        const auto s = kernels::convolve_serial(a, b);
        const auto o = kernels::convolve_omp(a, b);
        const auto f = kernels::convolve_fft(a, b);
        CHECK(s == o);
        const double peak = *std::max_element(s.begin(), s.end());
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(f[i] - s[i]) <= 1e-10 * peak);
    }
}

TEST_CASE("map and for_each_index agree across execution modes and rethrow errors") {
    auto f = [](std::size_t i) { return std::sin(static_cast<double>(i)) * 1e3; };
    CHECK(kernels::map<double>(Exec::serial, 1000, f) == kernels::map<double>(Exec::parallel, 1000, f));
    std::vector<int> hit(500, 0);
    kernels::for_each_index(Exec::parallel, hit.size(), [&](std::size_t i) { hit[i] += 1; });
    CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
    auto boom = [](std::size_t i) -> double {
        if (i == 37) throw std::runtime_error("boom");
        return 0.0;
    };
    CHECK_THROWS_AS(kernels::map<double>(Exec::parallel, 100, boom), std::runtime_error);
    CHECK_THROWS_AS(kernels::for_each_index(Exec::parallel, 100, [&](std::size_t i) { boom(i); }), std::runtime_error);
    CHECK(kernels::max_threads() >= 1);
}

TEST_CASE("RNG streams are deterministic and distinct") {
    Rng a = Rng::stream(7, 3);
    Rng b = Rng::stream(7, 3);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
    std::set<std::uint64_t> firsts;
    for (std::uint64_t i = 0; i < 1000; ++i) firsts.insert(Rng::stream(7, i)());
    CHECK(firsts.size() == 1000);
    Rng r(1);
    double lo = 1.0;
    double hi = 0.0;
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform_open();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        sum += u;
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}
