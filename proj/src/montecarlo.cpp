#include "stochgain/montecarlo.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "stochgain/csv.hpp"

namespace stochgain {

namespace {

// Draws ln a for one step from either kind of source.
class LogGainDraw {
public:
    explicit LogGainDraw(const PathSource& source)
        : sampler_(std::holds_alternative<DistributionSpec>(source) ? std::get<DistributionSpec>(source)
                                                                    : std::get<PlantSpec>(source).delta) {
        if (const auto* plant = std::get_if<PlantSpec>(&source)) {
            tau_ = plant->tau;
            gamma_ = plant->gamma_gain;
            plant_ = true;
        } else if (!std::get<DistributionSpec>(source).is_gain()) {
            throw std::invalid_argument("simulate: spec is not a gain distribution");
        }
    }

    double operator()(Rng& rng) const {
        if (!plant_) return sampler_.log_gain(rng);
        return std::log(std::abs(tau_ + gamma_ * sampler_(rng)));
    }

private:
    Sampler sampler_;
    double tau_ = 0.0;
    double gamma_ = 1.0;
    bool plant_ = false;
};

void check_sizes(std::size_t n_paths) {
    if (n_paths == 0) throw std::invalid_argument("simulate: n_paths must be >= 1");
}

}  // namespace

std::vector<double> PathEnsemble::column(std::size_t K) const {
    if (K > K_max) throw std::out_of_range("PathEnsemble::column: K > K_max");
    std::vector<double> out(n_paths);
    for (std::size_t i = 0; i < n_paths; ++i) out[i] = log_state(i, K);
    return out;
}

PathEnsemble simulate(const PathSource& source, std::size_t n_paths, std::size_t K_max, std::uint64_t seed,
                      Exec exec, double log_x0) {
    check_sizes(n_paths);
    const LogGainDraw draw(source);
    PathEnsemble ens{n_paths, K_max, seed, log_x0, std::vector<double>(n_paths * (K_max + 1)), source};
    kernels::for_each_index(exec, n_paths, [&](std::size_t i) {
        Rng rng = Rng::stream(seed, i);
        double* row = ens.log_paths.data() + i * (K_max + 1);
        row[0] = log_x0;
        for (std::size_t k = 0; k < K_max; ++k) row[k + 1] = row[k] + draw(rng);
    });
    return ens;
}

std::vector<double> simulate_terminal(const PathSource& source, std::size_t n_paths, std::size_t K,
                                      std::uint64_t seed, Exec exec, double log_x0) {
    check_sizes(n_paths);
    const LogGainDraw draw(source);
    return kernels::map<double>(exec, n_paths, [&](std::size_t i) {
        Rng rng = Rng::stream(seed, i);
        double z = log_x0;
        for (std::size_t k = 0; k < K; ++k) z = z + draw(rng);
        return z;
    });
}

double sample_median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("sample_median: empty sample");
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

double log_mean_exp(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("log_mean_exp: empty sample");
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s / static_cast<double>(v.size()));
}

SampleStats sample_stats(std::span<const double> log_values, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("sample_stats: threshold must be > 0");
    const double med = sample_median(std::vector<double>(log_values.begin(), log_values.end()));
    const double lm = log_mean_exp(log_values);
    const double log_thr = std::log(threshold);
    const auto count = static_cast<std::size_t>(
        std::count_if(log_values.begin(), log_values.end(), [log_thr](double z) { return z > log_thr; }));
    std::optional<double> mean;
    if (lm <= std::log(DBL_MAX)) mean = std::exp(lm);
    return {med, std::exp(med), lm, mean, count, static_cast<double>(count) / static_cast<double>(log_values.size())};
}

SampleStats sample_stats(const PathEnsemble& ens, std::size_t K, double threshold) {
    const auto col = ens.column(K);
    return sample_stats(col, threshold);
}

Interval wilson_interval(std::size_t k, std::size_t n, double z) {
    if (n == 0 || k > n) throw std::invalid_argument("wilson_interval: need 0 <= k <= n, n >= 1");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

TailCurve tail_frequency_curve(const PathEnsemble& ens, std::span<const double> log_thresholds) {
    if (log_thresholds.size() != ens.K_max + 1)
        throw std::invalid_argument("tail_frequency_curve: need one threshold per K = 0..K_max");
    TailCurve c;
    for (std::size_t K = 0; K <= ens.K_max; ++K) {
        std::size_t count = 0;
        for (std::size_t i = 0; i < ens.n_paths; ++i)
            if (ens.log_state(i, K) > log_thresholds[K]) ++count;
        c.K_values.push_back(K);
        c.exceedances.push_back(count);
        c.freq.push_back(static_cast<double>(count) / static_cast<double>(ens.n_paths));
        c.ci.push_back(wilson_interval(count, ens.n_paths));
    }
    return c;
}

TailCurve tail_frequency_curve(const PathEnsemble& ens, double threshold) {
    if (!(threshold > 0.0)) throw std::invalid_argument("tail_frequency_curve: threshold must be > 0");
    const std::vector<double> thr(ens.K_max + 1, std::log(threshold));
    return tail_frequency_curve(ens, thr);
}

void write_summary_csv(std::ostream& os, const PathEnsemble& ens, double threshold) {
    os << "K,median_x,median_zeta,log_mean_x,mean_x,tail_freq,tail_ci_lo,tail_ci_hi\n";
    for (std::size_t K = 0; K <= ens.K_max; ++K) {
        const auto s = sample_stats(ens, K, threshold);
        const auto ci = wilson_interval(s.exceedances, ens.n_paths);
        os << K << ',' << format_double(s.median_x) << ',' << format_double(s.median_zeta) << ','
           << format_double(s.log_mean_x) << ',' << format_double(s.mean_x) << ',' << format_double(s.tail_freq)
           << ',' << format_double(ci.lo) << ',' << format_double(ci.hi) << '\n';
    }
}

void write_paths_csv(std::ostream& os, const PathEnsemble& ens) {
    os << "path,K,zeta\n";
    for (std::size_t i = 0; i < ens.n_paths; ++i)
        for (std::size_t K = 0; K <= ens.K_max; ++K)
            os << i << ',' << K << ',' << format_double(ens.log_state(i, K)) << '\n';
}

}  // namespace stochgain
