#include "stochgain/kernels.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stochgain::kernels {

namespace {

// FFTW's planner is not thread safe; execution of distinct plans is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};
struct PlanDestroy {
    void operator()(fftw_plan p) const noexcept {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};
using PlanPtr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

template <class T>
std::unique_ptr<T[], FftwFree> fftw_array(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (!p) throw std::bad_alloc();
    return std::unique_ptr<T[], FftwFree>(p);
}

std::size_t good_fft_size(std::size_t n) {
    // Smallest 2^a·3^b·5^c >= n.
    std::size_t best = 1;
    while (best < n) best <<= 1;
    for (std::size_t p5 = 1; p5 < best; p5 *= 5)
        for (std::size_t p35 = p5; p35 < best; p35 *= 3) {
            std::size_t v = p35;
            while (v < n) v <<= 1;
            best = std::min(best, v);
        }
    return best;
}

void check_inputs(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("convolve: empty input");
}

}  // namespace

std::vector<double> convolve_serial(std::span<const double> a, std::span<const double> b) {
    check_inputs(a, b);
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const std::size_t i_lo = k >= b.size() - 1 ? k - (b.size() - 1) : 0;
        const std::size_t i_hi = std::min(k, a.size() - 1);
        double sum = 0.0;
        for (std::size_t i = i_lo; i <= i_hi; ++i) sum += a[i] * b[k - i];
        out[k] = sum;
    }
    return out;
}

std::vector<double> convolve_omp(std::span<const double> a, std::span<const double> b) {
    check_inputs(a, b);
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    const auto n_out = static_cast<long long>(out.size());
#pragma omp parallel for schedule(static)
    for (long long kk = 0; kk < n_out; ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        const std::size_t i_lo = k >= b.size() - 1 ? k - (b.size() - 1) : 0;
        const std::size_t i_hi = std::min(k, a.size() - 1);
        double sum = 0.0;
        for (std::size_t i = i_lo; i <= i_hi; ++i) sum += a[i] * b[k - i];
        out[k] = sum;
    }
    return out;
}

std::vector<double> convolve_fft(std::span<const double> a, std::span<const double> b) {
    check_inputs(a, b);
    const std::size_t n_out = a.size() + b.size() - 1;
    const std::size_t n = good_fft_size(n_out);
    const std::size_t n_freq = n / 2 + 1;

    auto ra = fftw_array<double>(n);
    auto rb = fftw_array<double>(n);
    auto fa = fftw_array<fftw_complex>(n_freq);
    auto fb = fftw_array<fftw_complex>(n_freq);

    PlanPtr fwd_a, fwd_b, inv;
    {
        std::lock_guard lock(planner_mutex());
        fwd_a.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), ra.get(), fa.get(), FFTW_ESTIMATE));
        fwd_b.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), rb.get(), fb.get(), FFTW_ESTIMATE));
        inv.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), fa.get(), ra.get(), FFTW_ESTIMATE));
    }
    if (!fwd_a || !fwd_b || !inv) throw std::runtime_error("convolve_fft: FFTW planning failed");

    std::fill_n(ra.get(), n, 0.0);
    std::fill_n(rb.get(), n, 0.0);
    std::copy(a.begin(), a.end(), ra.get());
    std::copy(b.begin(), b.end(), rb.get());
    fftw_execute(fwd_a.get());
    fftw_execute(fwd_b.get());
    for (std::size_t k = 0; k < n_freq; ++k) {
        const double re = fa[k][0] * fb[k][0] - fa[k][1] * fb[k][1];
        const double im = fa[k][0] * fb[k][1] + fa[k][1] * fb[k][0];
        fa[k][0] = re;
        fa[k][1] = im;
    }
    fftw_execute(inv.get());

    // Round-off of an FFT convolution is bounded by about eps·log2(n)·|a|₂·|b|₂.
    auto norm2 = [](std::span<const double> v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    const double floor = 8.0 * DBL_EPSILON * std::log2(static_cast<double>(n)) * norm2(a) * norm2(b);

    std::vector<double> out(n_out);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < n_out; ++k) {
        const double v = ra[k] * scale;
        out[k] = v > floor ? v : 0.0;
    }
    return out;
}

int max_threads() noexcept {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace stochgain::kernels
