#include "stochgain/grid_pdf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "stochgain/csv.hpp"

namespace stochgain {

double trapezoid(std::span<const double> values, double step) noexcept {
    if (values.size() < 2) return 0.0;
    double sum = 0.5 * (values.front() + values.back());
    for (std::size_t i = 1; i + 1 < values.size(); ++i) sum += values[i];
    return sum * step;
}

std::vector<double> simpson_weights(std::size_t cells) {
    if (cells < 2) throw std::invalid_argument("simpson_weights: need at least two cells");
    std::vector<double> w(cells + 1, 0.0);
    // Simpson 1/3 on an even prefix, 3/8 on the last three cells if odd.
    const std::size_t even = (cells % 2 == 0) ? cells : cells - 3;
    for (std::size_t i = 0; i + 2 <= even; i += 2) {
        w[i] += 1.0 / 3.0;
        w[i + 1] += 4.0 / 3.0;
        w[i + 2] += 1.0 / 3.0;
    }
    if (even != cells) {
        w[even] += 3.0 / 8.0;
        w[even + 1] += 9.0 / 8.0;
        w[even + 2] += 9.0 / 8.0;
        w[even + 3] += 3.0 / 8.0;
    }
    return w;
}

GridPdf::GridPdf(double lo, double hi, std::vector<double> values)
    : lo_(lo), hi_(hi), step_(0.0), raw_mass_(0.0), values_(std::move(values)) {
    if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
        throw std::invalid_argument("GridPdf: require finite lo < hi");
    if (values_.size() < min_cells + 1)
        throw std::invalid_argument("GridPdf: require at least 16 cells");
    for (double v : values_)
        if (!std::isfinite(v) || v < 0.0)
            throw std::invalid_argument("GridPdf: density values must be finite and >= 0");
    step_ = (hi_ - lo_) / static_cast<double>(cells());
    raw_mass_ = trapezoid(values_, step_);
    if (!(raw_mass_ > 0.0)) throw std::invalid_argument("GridPdf: density has zero mass");
    if (std::abs(raw_mass_ - 1.0) > mass_rounding)
        for (double& v : values_) v /= raw_mass_;
}

GridPdf GridPdf::sample(const std::function<double(double)>& density, double lo, double hi,
                        std::size_t cells) {
    if (cells < min_cells) throw std::invalid_argument("GridPdf::sample: too few cells");
    std::vector<double> v(cells + 1);
    const double h = (hi - lo) / static_cast<double>(cells);
    for (std::size_t i = 0; i <= cells; ++i) v[i] = density(lo + static_cast<double>(i) * h);
    return GridPdf(lo, hi, std::move(v));
}

double GridPdf::operator()(double x) const noexcept {
    if (!(x >= lo_ && x <= hi_)) return 0.0;
    const double pos = (x - lo_) / step_;
    auto i = static_cast<std::size_t>(pos);
    if (i >= cells()) return values_.back();
    const double t = pos - static_cast<double>(i);
    return values_[i] + t * (values_[i + 1] - values_[i]);
}

std::vector<double> GridPdf::cumulative() const {
    std::vector<double> c(values_.size(), 0.0);
    for (std::size_t i = 1; i < values_.size(); ++i)
        c[i] = c[i - 1] + 0.5 * step_ * (values_[i - 1] + values_[i]);
    return c;
}

double GridPdf::cdf(double x) const {
    if (x <= lo_) return 0.0;
    if (x >= hi_) return 1.0;
    return 1.0 - survival(x);
}

double GridPdf::survival(double x) const {
    if (x <= lo_) return 1.0;
    if (x >= hi_) return 0.0;
    const double pos = (x - lo_) / step_;
    auto j = std::min(static_cast<std::size_t>(pos), cells() - 1);
    double right = 0.0;
    for (std::size_t k = cells(); k > j + 1; --k)
        right += 0.5 * step_ * (values_[k - 1] + values_[k]);
    const double cell = 0.5 * step_ * (values_[j] + values_[j + 1]);
    const double t = pos - static_cast<double>(j);
    return right + (1.0 - t) * cell;
}

double GridPdf::quantile(double q) const {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("GridPdf::quantile: q must be in (0,1)");
    const auto c = cumulative();
    const auto it = std::lower_bound(c.begin(), c.end(), q);
    if (it == c.end()) return hi_;
    const auto j = static_cast<std::size_t>(it - c.begin());
    if (*it == q || j == 0) return node(j);
    const double t = (q - c[j - 1]) / (c[j] - c[j - 1]);
    return node(j - 1) + t * step_;
}

double GridPdf::expect(const std::function<double(double)>& f) const {
    const auto w = simpson_weights(cells());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double wf = w[i] * values_[i];
        if (wf == 0.0) continue;
        num += wf * f(node(i));
        den += wf;
    }
    return num / den;
}

double GridPdf::mean() const {
    return expect([](double x) { return x; });
}

double GridPdf::variance() const {
    const double m = mean();
    return expect([m](double x) { return (x - m) * (x - m); });
}

double GridPdf::third_central() const {
    const double m = mean();
    return expect([m](double x) { return (x - m) * (x - m) * (x - m); });
}

GridPdf to_alpha_space(const GridPdf& fa, std::optional<std::size_t> cells) {
    if (!(fa.lo() > 0.0)) throw std::invalid_argument("to_alpha_space: grid must lie in a > 0");
    const std::size_t n = cells.value_or(fa.cells());
    const double lo = std::log(fa.lo());
    const double hi = std::log(fa.hi());
    std::vector<double> v(n + 1);
    const double h = (hi - lo) / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
        const double a = i == 0 ? fa.lo() : (i == n ? fa.hi() : std::exp(lo + static_cast<double>(i) * h));
        v[i] = fa(a) * a;
    }
    return GridPdf(lo, hi, std::move(v));
}

GridPdf to_a_space(const GridPdf& falpha, std::optional<std::size_t> cells, std::optional<double> lo,
                   std::optional<double> hi) {
    const std::size_t n = cells.value_or(falpha.cells());
    const double a_lo = lo.value_or(std::exp(falpha.lo()));
    const double a_hi = hi.value_or(std::exp(falpha.hi()));
    if (!(a_lo >= 0.0 && a_lo < a_hi)) throw std::invalid_argument("to_a_space: bad output window");
    std::vector<double> v(n + 1);
    const double h = (a_hi - a_lo) / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i) {
        const double a = i == n ? a_hi : a_lo + static_cast<double>(i) * h;
        v[i] = a > 0.0 ? falpha(std::log(a)) / a : 0.0;
    }
    return GridPdf(a_lo, a_hi, std::move(v));
}

void write_csv(std::ostream& os, const GridPdf& f, const char* node_name) {
    os << node_name << ",density\n";
    for (std::size_t i = 0; i <= f.cells(); ++i) {
        os << format_double(f.node(i)) << ',' << format_double(f.values()[i]) << '\n';
    }
}

void to_json(nlohmann::json& j, const GridPdf& f) {
    j = nlohmann::json{{"lo", f.lo()}, {"hi", f.hi()}, {"values", std::vector<double>(f.values().begin(), f.values().end())}};
}

GridPdf grid_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("grid: expected an object");
    for (const auto& [key, _] : j.items())
        if (key != "lo" && key != "hi" && key != "values")
            throw std::invalid_argument("grid: unknown field '" + key + "'");
    return GridPdf(j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("values").get<std::vector<double>>());
}

}  // namespace stochgain
