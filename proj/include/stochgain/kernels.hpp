#pragma once

// Data-parallel kernels. Each has a serial reference used by the tests and an
// OpenMP variant used by default; both produce bit-identical results except
// convolve_fft, which is checked against the direct sum to 1e-10 of the peak.

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

namespace stochgain {

enum class Exec { serial, parallel };

namespace kernels {

/// Full linear convolution, out[k] = Σ_i a[i]·b[k-i], length |a|+|b|-1.
std::vector<double> convolve_serial(std::span<const double> a, std::span<const double> b);
std::vector<double> convolve_omp(std::span<const double> a, std::span<const double> b);
/// Same sum through FFTW (real-to-complex, zero padded). Entries below the
/// round-off floor 8·eps·log2(n)·|a|₂·|b|₂ are set to zero.
std::vector<double> convolve_fft(std::span<const double> a, std::span<const double> b);

/// out[i] = f(i) for i in [0, n). The parallel variant uses a static schedule;
/// results do not depend on the thread count.
template <class T, class F>
std::vector<T> map_serial(std::size_t n, F&& f) {
    std::vector<T> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(i);
    return out;
}

/// Collects the first exception thrown inside a parallel loop so it can be
/// rethrown on the calling thread.
class ExceptionSlot {
public:
    template <class F>
    void run(F&& f) noexcept {
        try {
            f();
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_) error_ = std::current_exception();
        }
    }
    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr error_;
};

template <class T, class F>
std::vector<T> map_omp(std::size_t n, F&& f) {
    std::vector<T> out(n);
    ExceptionSlot slot;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        slot.run([&] { out[idx] = f(idx); });
    }
    slot.rethrow();
    return out;
}

template <class T, class F>
std::vector<T> map(Exec exec, std::size_t n, F&& f) {
    return exec == Exec::serial ? map_serial<T>(n, f) : map_omp<T>(n, f);
}

/// Calls f(i) for every i; f must only touch state owned by index i.
template <class F>
void for_each_index(Exec exec, std::size_t n, F&& f) {
    if (exec == Exec::serial) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    ExceptionSlot slot;
    const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < count; ++i) slot.run([&] { f(static_cast<std::size_t>(i)); });
    slot.rethrow();
}

int max_threads() noexcept;

}  // namespace kernels
}  // namespace stochgain
