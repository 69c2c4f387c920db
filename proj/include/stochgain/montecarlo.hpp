#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "stochgain/distribution.hpp"
#include "stochgain/kernels.hpp"
#include "stochgain/stability.hpp"

namespace stochgain {

/// Where the gains come from: a gain distribution, or a plant whose gain is
/// |tau + gamma·δ|.
using PathSource = std::variant<DistributionSpec, PlantSpec>;

/// Sample paths of ζ_k = ln x_k, k = 0..K_max.
///
/// Path i draws from Rng::stream(seed, i) and accumulates its increments left
/// to right, so the result does not depend on how paths are split across
/// threads.
struct PathEnsemble {
    std::size_t n_paths = 0;
    std::size_t K_max = 0;
    std::uint64_t seed = 0;
    double log_x0 = 0.0;
    std::vector<double> log_paths;  // row-major, n_paths × (K_max + 1)
    PathSource source;

    double log_state(std::size_t path, std::size_t K) const { return log_paths[path * (K_max + 1) + K]; }
    std::span<const double> path(std::size_t i) const {
        return {log_paths.data() + i * (K_max + 1), K_max + 1};
    }
    /// ζ_K across all paths.
    std::vector<double> column(std::size_t K) const;
};

PathEnsemble simulate(const PathSource& source, std::size_t n_paths, std::size_t K_max, std::uint64_t seed,
                      Exec exec = Exec::parallel, double log_x0 = 0.0);

/// ζ_K only, without storing whole paths. Equal to simulate(...).column(K).
std::vector<double> simulate_terminal(const PathSource& source, std::size_t n_paths, std::size_t K,
                                      std::uint64_t seed, Exec exec = Exec::parallel, double log_x0 = 0.0);

struct SampleStats {
    double median_zeta;
    double median_x;              // exp(median_zeta)
    double log_mean_x;            // ln of the sample mean of x_K, via log-sum-exp
    std::optional<double> mean_x; // empty when it overflows a double
    std::size_t exceedances;      // paths with ζ_K > ln(threshold)
    double tail_freq;
};

/// Median of a sample; even sizes average the two central order statistics.
double sample_median(std::vector<double> values);

/// ln((1/n) Σ e^{v_i}).
double log_mean_exp(std::span<const double> values);

SampleStats sample_stats(std::span<const double> log_values, double threshold = 1.0);
SampleStats sample_stats(const PathEnsemble& ens, std::size_t K, double threshold = 1.0);

struct Interval {
    double lo;
    double hi;
};

inline constexpr double z_95 = 1.959963984540054;

/// Wilson score interval for k successes in n trials.
Interval wilson_interval(std::size_t k, std::size_t n, double z = z_95);

struct TailCurve {
    std::vector<std::size_t> K_values;
    std::vector<std::size_t> exceedances;
    std::vector<double> freq;
    std::vector<Interval> ci;
};

/// Fraction of paths with x_K > threshold for K = 0..K_max.
TailCurve tail_frequency_curve(const PathEnsemble& ens, double threshold = 1.0);
/// Same with a per-K threshold given as ln values, one per K = 0..K_max.
TailCurve tail_frequency_curve(const PathEnsemble& ens, std::span<const double> log_thresholds);

/// Per-K summary with header
/// K,median_x,median_zeta,log_mean_x,mean_x,tail_freq,tail_ci_lo,tail_ci_hi.
void write_summary_csv(std::ostream& os, const PathEnsemble& ens, double threshold = 1.0);

/// Every stored value in long form, header path,K,zeta. Size is
/// n_paths·(K_max+1) lines.
void write_paths_csv(std::ostream& os, const PathEnsemble& ens);

}  // namespace stochgain
