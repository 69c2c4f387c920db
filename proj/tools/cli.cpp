#include "cli.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "stochgain/bounds.hpp"
#include "stochgain/csv.hpp"
#include "stochgain/distribution.hpp"
#include "stochgain/evolution.hpp"
#include "stochgain/montecarlo.hpp"
#include "stochgain/stability.hpp"

#ifndef STOCHGAIN_VERSION
#define STOCHGAIN_VERSION "0.0.0"
#endif

namespace stochgain::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

json csv_field(const std::string& s) {
    if (s.empty()) return nullptr;
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && end == s.data() + s.size() && std::isfinite(v)) {
        long long i = 0;
        const auto [iend, iec] = std::from_chars(s.data(), s.data() + s.size(), i);
        if (iec == std::errc{} && iend == s.data() + s.size()) return i;
        return v;
    }
    return s;
}

}  // namespace

std::string csv_to_json(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("csv_to_json: missing header");
    json doc{{"columns", split_csv_line(line)}, {"rows", json::array()}};
    while (std::getline(is, line)) {
        json row = json::array();
        for (const auto& f : split_csv_line(line)) row.push_back(csv_field(f));
        doc["rows"].push_back(std::move(row));
    }
    return doc.dump(1) + "\n";
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- scenario schema -------------------------------------------------------

using Check = std::function<void(const json&)>;

void expect(bool ok, const std::string& key, const char* what) {
    if (!ok) throw UsageError("scenario: '" + key + "' must be " + what);
}

Check positive_int(std::string key) {
    return [key](const json& v) { expect(v.is_number_integer() && v.get<long long>() > 0, key, "a positive integer"); };
}
Check unsigned_int(std::string key) {
    return [key](const json& v) { expect(v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0), key, "a non-negative integer"); };
}
Check positive_number(std::string key) {
    return [key](const json& v) { expect(v.is_number() && v.get<double>() > 0.0, key, "a positive number"); };
}
Check nonzero_number(std::string key) {
    return [key](const json& v) { expect(v.is_number() && v.get<double>() != 0.0, key, "a non-zero number"); };
}
Check boolean(std::string key) {
    return [key](const json& v) { expect(v.is_boolean(), key, "true or false"); };
}
Check object(std::string key) {
    return [key](const json& v) { expect(v.is_object(), key, "an object"); };
}
Check one_of(std::string key, std::vector<std::string> options) {
    return [key, options](const json& v) {
        expect(v.is_string() && std::find(options.begin(), options.end(), v.get<std::string>()) != options.end(), key,
               "one of the documented choices");
    };
}
Check positive_int_array(std::string key) {
    return [key](const json& v) {
        expect(v.is_array() && !v.empty(), key, "a non-empty array");
        for (const auto& e : v) expect(e.is_number_integer() && e.get<long long>() > 0, key, "an array of positive integers");
    };
}
Check number_array(std::string key) {
    return [key](const json& v) {
        expect(v.is_array() && !v.empty(), key, "a non-empty array");
        for (const auto& e : v) expect(e.is_number(), key, "an array of numbers");
    };
}
Check range(std::string key) {
    return [key](const json& v) {
        expect(v.is_object(), key, "an object {min, max, count}");
        for (const auto& [k, _] : v.items())
            if (k != "min" && k != "max" && k != "count") throw UsageError("scenario: unknown field '" + key + "." + k + "'");
        expect(v.contains("min") && v["min"].is_number() && v.contains("max") && v["max"].is_number(), key,
               "an object with numeric min and max");
        expect(v.contains("count") && v["count"].is_number_integer() && v["count"].get<long long>() >= 2, key,
               "an object with count >= 2");
        expect(v["max"].get<double>() > v["min"].get<double>(), key, "a range with max > min");
    };
}

const std::map<std::string, Check>& schema() {
    static const std::map<std::string, Check> s = {
        {"command", one_of("command", {"classify", "evolve", "simulate", "bounds", "regions", "stabilize", "periodic"})},
        {"distribution", object("distribution")},
        {"plant", object("plant")},
        {"criterion", one_of("criterion", {"median", "mean", "variance"})},
        {"eps", positive_number("eps")},
        {"K_values", positive_int_array("K_values")},
        {"K_max", positive_int("K_max")},
        {"step", positive_number("step")},
        {"method", one_of("method", {"fft", "direct"})},
        {"densities", boolean("densities")},
        {"n_paths", positive_int("n_paths")},
        {"seed", unsigned_int("seed")},
        {"threshold", positive_number("threshold")},
        {"write_paths", boolean("write_paths")},
        {"beta", positive_number("beta")},
        {"sharpen", boolean("sharpen")},
        {"sigma_a", range("sigma_a")},
        {"nominal", range("nominal")},
        {"sigma", range("sigma")},
        {"gamma_gain", nonzero_number("gamma_gain")},
        {"gains", number_array("gains")},
        {"periods", positive_int("periods")},
        {"format", one_of("format", {"csv", "json"})},
        {"out", [](const json& v) { expect(v.is_string() && !v.get<std::string>().empty(), "out", "a non-empty string"); }},
    };
    return s;
}

void validate(const json& sc) {
    if (!sc.is_object()) throw UsageError("scenario: top level must be an object");
    for (const auto& [key, value] : sc.items()) {
        const auto it = schema().find(key);
        if (it == schema().end()) throw UsageError("scenario: unknown field '" + key + "'");
        it->second(value);
    }
    if (sc.contains("distribution") && sc.contains("plant"))
        throw UsageError("scenario: give either 'distribution' or 'plant', not both");
    // Parse nested objects now so malformed specs fail before any computation.
    if (sc.contains("distribution")) spec_from_json(sc["distribution"]);
}

PlantSpec plant_from_json(const json& j) {
    for (const auto& [k, _] : j.items())
        if (k != "tau" && k != "gamma_gain" && k != "delta") throw UsageError("scenario: unknown field 'plant." + k + "'");
    return PlantSpec(j.at("tau").get<double>(), j.value("gamma_gain", 1.0), spec_from_json(j.at("delta")));
}

json plant_to_json(const PlantSpec& p) {
    json d;
    to_json(d, p.delta);
    return {{"tau", p.tau}, {"gamma_gain", p.gamma_gain}, {"delta", d}};
}

std::vector<double> range_values(const json& r) {
    const double lo = r["min"].get<double>();
    const double hi = r["max"].get<double>();
    const auto n = r["count"].get<std::size_t>();
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

json default_range(double lo, double hi, std::size_t count) { return {{"min", lo}, {"max", hi}, {"count", count}}; }

// ---- output ----------------------------------------------------------------

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class Output {
public:
    Output(fs::path dir, std::string format) : dir_(std::move(dir)), format_(std::move(format)) {}

    /// Writes a CSV table as stem.csv, or as stem.json in json format.
    void table(const std::string& stem, const std::string& csv) {
        if (format_ == "json")
            write(stem + ".json", csv_to_json(csv));
        else
            write(stem + ".csv", csv);
    }

    void manifest(const std::string& command, const json& inputs) {
        json files = json::array();
        for (const auto& f : files_) files.push_back({{"path", f.name}, {"bytes", f.bytes}, {"sha256", f.sha256}});
        json m{{"tool", "stochgain"},
               {"version", STOCHGAIN_VERSION},
               {"command", command},
               {"inputs", inputs},
               {"seed", inputs.contains("seed") ? inputs["seed"] : json(nullptr)},
               {"format", format_},
               {"files", files},
               {"created_utc", utc_timestamp()}};
        write_raw("manifest.json", m.dump(2) + "\n");
    }

private:
    struct Record {
        std::string name;
        std::size_t bytes;
        std::string sha256;
    };

    void write(const std::string& name, const std::string& bytes) {
        write_raw(name, bytes);
        files_.push_back({name, bytes.size(), sha256_hex(bytes)});
    }

    void write_raw(const std::string& name, const std::string& bytes) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + dir_.string() + ": " + ec.message());
        std::ofstream f(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + (dir_ / name).string() + " for writing");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw std::runtime_error("write failed for " + (dir_ / name).string());
    }

    fs::path dir_;
    std::string format_;
    std::vector<Record> files_;
};

template <class F>
std::string to_csv(F&& writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

// ---- shared helpers ----------------------------------------------------------

struct Context {
    std::string command;
    json sc;  // validated scenario with flag overrides applied
    std::ostream& out;
};

Output make_output(const Context& ctx) {
    const fs::path dir = ctx.sc.value("out", std::string("stochgain-out/") + ctx.command);
    return Output(dir, ctx.sc.value("format", std::string("csv")));
}

// Scenario inputs as recorded in the manifest. The output directory is left
// out so that runs into different directories produce identical manifests.
json recorded_inputs(const Context& ctx) {
    json in = ctx.sc;
    in.erase("out");
    in.erase("format");
    in["command"] = ctx.command;
    return in;
}

DistributionSpec require_distribution(const Context& ctx) {
    if (!ctx.sc.contains("distribution")) throw UsageError(ctx.command + ": scenario needs a 'distribution'");
    return spec_from_json(ctx.sc["distribution"]);
}

// Gain spec from either a distribution or a plant (folded to a grid).
DistributionSpec gain_spec(const Context& ctx) {
    if (ctx.sc.contains("plant")) return fold_gain(plant_from_json(ctx.sc["plant"])).spec;
    return require_distribution(ctx);
}

std::vector<std::size_t> K_list(const json& sc, std::vector<std::size_t> fallback) {
    if (sc.contains("K_values")) {
        auto v = sc["K_values"].get<std::vector<std::size_t>>();
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }
    if (sc.contains("K_max")) {
        std::vector<std::size_t> v(sc["K_max"].get<std::size_t>());
        std::iota(v.begin(), v.end(), std::size_t{1});
        return v;
    }
    return fallback;
}

std::string describe(const DistributionSpec& spec) {
    json j;
    to_json(j, spec);
    if (spec.get_if<GridDist>()) {
        const auto& g = spec.get_if<GridDist>()->pdf;
        return "grid(" + j["params"]["domain"].get<std::string>() + ", [" + format_double(g.lo()) + ", " +
               format_double(g.hi()) + "], " + std::to_string(g.cells()) + " cells)";
    }
    return std::string(spec.kind_name()) + j["params"].dump();
}

bool is_closed_form_lognormal(const DistributionSpec& spec) {
    const auto* ln = spec.get_if<LogNormal>();
    return ln && ln->sigma_alpha > 0.0;
}

// Picks the rows of `full` whose K is in `keep` (both increasing).
EvolutionTrace select(const EvolutionTrace& full, const std::vector<std::size_t>& keep) {
    EvolutionTrace t;
    t.closed_form = full.closed_form;
    t.total_renormalization = full.total_renormalization;
    t.max_step_drift = full.max_step_drift;
    t.total_mass_trimmed = full.total_mass_trimmed;
    for (std::size_t i = 0; i < full.size(); ++i) {
        if (!std::binary_search(keep.begin(), keep.end(), full.K_values[i])) continue;
        t.K_values.push_back(full.K_values[i]);
        if (!full.zeta_pdfs.empty()) t.zeta_pdfs.push_back(full.zeta_pdfs[i]);
        t.medians_zeta.push_back(full.medians_zeta[i]);
        t.medians_x.push_back(full.medians_x[i]);
        t.means_x.push_back(full.means_x[i]);
        t.variances_x.push_back(full.variances_x[i]);
        t.tail_at_one.push_back(full.tail_at_one[i]);
    }
    return t;
}

EvolutionTrace grid_trace(const DistributionSpec& spec, const json& sc, std::size_t K_max, bool keep) {
    GridEvolveOptions opt;
    opt.keep_densities = keep;
    opt.method = sc.value("method", std::string("fft")) == "direct" ? ConvolutionMethod::direct : ConvolutionMethod::fft;
    if (!spec.get_if<GridDist>()) opt.a_moments = a_moments(spec);
    return evolve_grid(alpha_grid(spec, sc.value("step", 0.01)), K_max, opt);
}

// ---- commands ----------------------------------------------------------------

struct Expressions {
    const char* a_space;
    const char* alpha_space;
};

std::array<Expressions, 3> criterion_expressions(bool lognormal) {
    if (lognormal)
        return {{{"mu_a^2/sqrt(mu_a^2 + sigma_a^2) < 1", "mu_alpha < 0"},
                 {"mu_a < 1", "mu_alpha + sigma_alpha^2/2 < 0"},
                 {"mu_a^2 + sigma_a^2 < 1", "mu_alpha + sigma_alpha^2 < 0"}}};
    return {{{"", "E[ln a] < 0"}, {"mu_a < 1", ""}, {"mu_a^2 + sigma_a^2 < 1", ""}}};
}

int cmd_classify(const Context& ctx) {
    const double eps = ctx.sc.value("eps", default_marginal_eps);
    const std::string criterion = ctx.sc.value("criterion", std::string("median"));

    StabilityVerdict v;
    DistributionSpec spec = DistributionSpec::lognormal(0.0, 1.0);
    if (ctx.sc.contains("plant")) {
        const PlantSpec plant = plant_from_json(ctx.sc["plant"]);
        v = stabilization_verdict(plant, eps);
        spec = fold_gain(plant).spec;
        ctx.out << "plant: " << plant_to_json(plant).dump() << "\n";
    } else {
        spec = require_distribution(ctx);
        v = classify(spec, eps);
        ctx.out << "distribution: " << describe(spec) << "\n";
    }
    const bool lognormal = spec.get_if<LogNormal>() != nullptr;
    const AlphaStats st = alpha_stats(spec);
    const AMoments am = a_moments(spec);
    ctx.out << "mu_alpha = " << format_double(st.mu_alpha) << ", sigma_alpha = "
            << (st.var_finite ? format_double(st.sigma_alpha()) : std::string("inf")) << ", mu_a = "
            << format_double(am.mu_a) << ", sigma_a = "
            << (am.var_a ? format_double(std::sqrt(*am.var_a)) : std::string("inf")) << "\n";
    ctx.out << "criteria: " << v.criteria_used << "\n";

    const auto exprs = criterion_expressions(lognormal);
    const std::array<std::pair<const char*, std::pair<Stability, std::optional<double>>>, 3> rows = {{
        {"median", {v.median, v.median_margin}},
        {"mean", {v.mean, v.mean_margin}},
        {"variance", {v.variance, v.variance_margin}},
    }};
    std::ostringstream csv;
    csv << "criterion,verdict,margin,a_space,alpha_space\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& [name, res] = rows[i];
        const std::string margin = res.second ? format_double(*res.second) : std::string("-inf");
        ctx.out << name << ": " << to_string(res.first) << " (margin " << margin << ")";
        if (*exprs[i].a_space) ctx.out << "  a-space: " << exprs[i].a_space;
        if (*exprs[i].alpha_space) ctx.out << "  alpha-space: " << exprs[i].alpha_space;
        ctx.out << "\n";
        csv << name << ',' << to_string(res.first) << ',' << margin << ',' << exprs[i].a_space << ','
            << exprs[i].alpha_space << '\n';
    }
    ctx.out << "median: " << to_string(v.median) << ", mean: " << to_string(v.mean)
            << ", variance: " << to_string(v.variance) << "\n";

    if (ctx.sc.contains("out")) {
        Output o = make_output(ctx);
        o.table("verdict", csv.str());
        o.manifest(ctx.command, recorded_inputs(ctx));
    }
    const Stability chosen = criterion == "mean" ? v.mean : criterion == "variance" ? v.variance : v.median;
    return chosen == Stability::stable ? 0 : 1;
}

int cmd_evolve(const Context& ctx) {
    const DistributionSpec spec = gain_spec(ctx);
    const auto K_values = K_list(ctx.sc, {1, 2, 3, 5, 10, 15, 30});
    const bool densities = ctx.sc.value("densities", true);

    EvolutionTrace trace;
    if (is_closed_form_lognormal(spec)) {
        const auto* ln = spec.get_if<LogNormal>();
        trace = evolve_lognormal(ln->mu_alpha, ln->sigma_alpha, K_values);
        if (densities) {
            for (std::size_t K : K_values) {
                const double k = static_cast<double>(K);
                const double m = k * ln->mu_alpha;
                const double s = std::sqrt(k) * ln->sigma_alpha;
                trace.zeta_pdfs.push_back(GridPdf::sample(
                    [m, s](double z) { return std::exp(-0.5 * (z - m) * (z - m) / (s * s)); }, m - 8.0 * s, m + 8.0 * s,
                    2000));
            }
        }
    } else {
        trace = select(grid_trace(spec, ctx.sc, K_values.back(), densities), K_values);
    }

    Output o = make_output(ctx);
    o.table("trace", to_csv([&](std::ostream& os) { write_trace_csv(os, trace); }));
    for (std::size_t i = 0; i < trace.zeta_pdfs.size(); ++i) {
        const auto& f = trace.zeta_pdfs[i];
        const std::string K = std::to_string(trace.K_values[i]);
        o.table("zeta_K" + K, to_csv([&](std::ostream& os) { write_csv(os, f, "zeta"); }));
        const double lo = std::exp(f.quantile(1e-4));
        const double hi = std::exp(f.quantile(1.0 - 1e-4));
        const GridPdf fx = to_a_space(f, 2000, lo, hi);
        o.table("x_K" + K, to_csv([&](std::ostream& os) { write_csv(os, fx, "x"); }));
    }
    o.manifest(ctx.command, recorded_inputs(ctx));
    ctx.out << "evolve: " << trace.size() << " K values written\n";
    return 0;
}

int cmd_simulate(const Context& ctx) {
    if (!ctx.sc.contains("seed")) throw UsageError("simulate: a seed is required (--seed or scenario 'seed')");
    const auto seed = ctx.sc["seed"].get<std::uint64_t>();
    const auto n_paths = ctx.sc.value("n_paths", std::size_t{200});
    const auto K_max = ctx.sc.value("K_max", std::size_t{300});
    const double threshold = ctx.sc.value("threshold", 1.0);

    PathSource source = ctx.sc.contains("plant") ? PathSource(plant_from_json(ctx.sc["plant"]))
                                                 : PathSource(require_distribution(ctx));
    const PathEnsemble ens = simulate(source, n_paths, K_max, seed);

    Output o = make_output(ctx);
    o.table("summary", to_csv([&](std::ostream& os) { write_summary_csv(os, ens, threshold); }));

    if (const auto* spec = std::get_if<DistributionSpec>(&source); spec && is_closed_form_lognormal(*spec)) {
        // Theoretical median and the chance of exceeding the mean, against the sample.
        const auto* ln = spec->get_if<LogNormal>();
        const double mean_rate = ln->mu_alpha + 0.5 * ln->sigma_alpha * ln->sigma_alpha;
        std::vector<double> log_mean(K_max + 1);
        for (std::size_t K = 0; K <= K_max; ++K) log_mean[K] = static_cast<double>(K) * mean_rate;
        const auto curve = tail_frequency_curve(ens, log_mean);
        std::ostringstream csv;
        csv << "K,median_x_theory,tail_at_mean_theory,tail_freq_at_mean,ci_lo,ci_hi\n";
        for (std::size_t K = 0; K <= K_max; ++K) {
            const double k = static_cast<double>(K);
            const double exact = K == 0 ? 0.0 : lognormal_tail(ln->mu_alpha, ln->sigma_alpha, K, std::exp(k * mean_rate));
            csv << K << ',' << format_double(std::exp(k * ln->mu_alpha)) << ',' << format_double(exact) << ','
                << format_double(curve.freq[K]) << ',' << format_double(curve.ci[K].lo) << ','
                << format_double(curve.ci[K].hi) << '\n';
        }
        o.table("theory", csv.str());
    }
    if (ctx.sc.value("write_paths", false)) {
        o.table("paths", to_csv([&](std::ostream& os) { write_paths_csv(os, ens); }));
    }
    o.manifest(ctx.command, recorded_inputs(ctx));
    const auto last = sample_stats(ens, K_max, threshold);
    ctx.out << "simulate: " << n_paths << " paths, K_max " << K_max << ", median x_K " << format_double(last.median_x)
            << ", tail frequency " << format_double(last.tail_freq) << "\n";
    return 0;
}

int cmd_bounds(const Context& ctx) {
    const DistributionSpec spec = gain_spec(ctx);
    const bool lognormal = is_closed_form_lognormal(spec);
    const auto K_values = K_list(ctx.sc, [&] {
        std::vector<std::size_t> v(lognormal ? 300 : 50);
        std::iota(v.begin(), v.end(), std::size_t{1});
        return v;
    }());

    ChernoffOptions opt;
    if (ctx.sc.contains("beta")) opt.beta = ctx.sc["beta"].get<double>();
    opt.sharpen = ctx.sc.value("sharpen", false);

    std::optional<EvolutionTrace> trace;
    if (!lognormal) trace = grid_trace(spec, ctx.sc, K_values.back(), false);
    const TailReport report = tail_report(spec, K_values, trace ? &*trace : nullptr, opt);
    const ChernoffResult ch = chernoff_exponent(spec, opt);

    std::ostringstream csv;
    csv << "c,lambda_star,beta,interior,closed_form_c,closed_form_lambda_star\n";
    csv << format_double(ch.c) << ',' << format_double(ch.lambda_star) << ',' << format_double(ch.beta) << ','
        << (ch.interior ? "true" : "false") << ',';
    if (const auto* hc = spec.get_if<HalfCauchy>(); hc && hc->gamma < 1.0) {
        const auto cf = sech_chernoff_closed_form(hc->gamma);
        csv << format_double(cf.c) << ',' << format_double(cf.lambda_star);
    } else if (const auto* ln = spec.get_if<LogNormal>(); ln && lognormal && ln->mu_alpha < 0.0) {
        const double s2 = ln->sigma_alpha * ln->sigma_alpha;
        csv << format_double(ln->mu_alpha * ln->mu_alpha / (2.0 * s2)) << ',' << format_double(-ln->mu_alpha / s2);
    } else {
        csv << ',';
    }
    csv << '\n';

    Output o = make_output(ctx);
    o.table("bounds", to_csv([&](std::ostream& os) { write_tail_csv(os, report); }));
    o.table("chernoff", csv.str());
    o.manifest(ctx.command, recorded_inputs(ctx));
    ctx.out << "bounds: c = " << format_double(ch.c) << ", lambda* = " << format_double(ch.lambda_star) << "\n";
    return 0;
}

std::string curves_csv(const RegionCurves& c, const char* x_name, const char* y_name) {
    std::ostringstream os;
    os << "curve," << x_name << ',' << y_name << '\n';
    const std::array<std::pair<const char*, const Polyline*>, 3> all = {
        {{"median", &c.median}, {"mean", &c.mean}, {"variance", &c.variance}}};
    for (const auto& [name, line] : all)
        for (const auto& p : *line) os << name << ',' << format_double(p.x) << ',' << format_double(p.y) << '\n';
    return os.str();
}

int cmd_regions(const Context& ctx) {
    const auto sigma = range_values(ctx.sc.value("sigma_a", default_range(0.0, 2.0, 201)));
    const RegionCurves c = region_boundaries(sigma);
    Output o = make_output(ctx);
    o.table("regions", curves_csv(c, "mu_a", "sigma_a"));
    o.manifest(ctx.command, recorded_inputs(ctx));
    ctx.out << "regions: " << sigma.size() << " sigma_a values\n";
    return 0;
}

int cmd_stabilize(const Context& ctx) {
    const auto nominal = range_values(ctx.sc.value("nominal", default_range(0.0, 2.0, 101)));
    const auto sigma = range_values(ctx.sc.value("sigma", default_range(0.0, 2.0, 41)));
    const double gamma_gain = ctx.sc.value("gamma_gain", 1.0);
    const RegionCurves c = stabilization_region(nominal, sigma, gamma_gain);
    Output o = make_output(ctx);
    o.table("stabilization", curves_csv(c, "nominal", "sigma"));
    o.manifest(ctx.command, recorded_inputs(ctx));
    ctx.out << "stabilize: " << nominal.size() << " x " << sigma.size() << " grid\n";
    return 0;
}

int cmd_periodic(const Context& ctx) {
    if (!ctx.sc.contains("gains")) throw UsageError("periodic: scenario needs 'gains'");
    const auto gains = ctx.sc["gains"].get<std::vector<double>>();
    const auto periods = ctx.sc.value("periods", std::size_t{10});
    const auto r = periodic_gain_analysis(gains);
    ctx.out << "monodromy: " << format_double(r.monodromy) << "\ngeometric mean |a|: " << format_double(r.geo_mean)
            << "\nmean ln|a|: " << format_double(r.log_mean) << "\nverdict: " << to_string(r.verdict) << "\n";

    std::ostringstream csv;
    csv << "K,log_average,zeta\n";
    LogAverage avg;
    for (std::size_t K = 1; K <= periods * gains.size(); ++K) {
        avg.push(gains[(K - 1) % gains.size()]);
        const double value = avg.value();
        csv << K << ',' << format_double(value) << ',' << format_double(value * static_cast<double>(K)) << '\n';
    }
    Output o = make_output(ctx);
    o.table("periodic", csv.str());
    o.manifest(ctx.command, recorded_inputs(ctx));
    return 0;
}

// ---- argument handling -------------------------------------------------------

struct Flags {
    std::string scenario;
    std::string out;
    std::uint64_t seed = 0;
    std::string format;
    std::string criterion;
    std::size_t K_max = 0;
    std::size_t n_paths = 0;
    double threshold = 0.0;
    double mu_a = 0.0;
    double sigma_a = 0.0;
    double half_cauchy = 0.0;
    std::map<std::string, CLI::Option*> given;
};

void add_common(CLI::App* sub, Flags& f) {
    f.given["scenario"] = sub->add_option("--scenario", f.scenario, "Scenario JSON file")->check(CLI::ExistingFile);
    f.given["out"] = sub->add_option("--out", f.out, "Output directory");
    f.given["seed"] = sub->add_option("--seed", f.seed, "RNG seed");
    f.given["format"] = sub->add_option("--format", f.format, "Data format")->check(CLI::IsMember({"csv", "json"}));
}

json load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read scenario " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw UsageError("scenario " + path + ": " + e.what());
    }
}

json resolve(const std::string& command, Flags& f) {
    json sc = json::object();
    if (*f.given["scenario"]) sc = load_scenario(f.scenario);
    if (!sc.is_object()) throw UsageError("scenario: top level must be an object");
    if (sc.contains("command") && sc["command"] != command)
        throw UsageError("scenario is for '" + sc["command"].get<std::string>() + "', not '" + command + "'");
    auto set = [&](const char* flag, const char* key, json value) {
        const auto it = f.given.find(flag);
        if (it != f.given.end() && *it->second) sc[key] = std::move(value);
    };
    set("out", "out", f.out);
    set("seed", "seed", f.seed);
    set("format", "format", f.format);
    set("criterion", "criterion", f.criterion);
    set("K-max", "K_max", f.K_max);
    set("n-paths", "n_paths", f.n_paths);
    set("threshold", "threshold", f.threshold);
    if (f.given.count("mu-a") && *f.given["mu-a"]) {
        sc.erase("plant");
        sc["distribution"] = {{"kind", "lognormal"}, {"params", {{"mu_a", f.mu_a}, {"sigma_a", f.sigma_a}}}};
    }
    if (f.given.count("half-cauchy") && *f.given["half-cauchy"]) {
        sc.erase("plant");
        sc["distribution"] = {{"kind", "half_cauchy"}, {"params", {{"gamma", f.half_cauchy}}}};
    }
    if (sc.contains("K_max") && sc.contains("K_values") && f.given.count("K-max") && *f.given["K-max"]) sc.erase("K_values");
    validate(sc);
    if (sc.contains("plant")) plant_from_json(sc["plant"]);
    return sc;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stability analysis of scalar loops with random multiplicative gain", "stochgain"};
    app.require_subcommand(1);
    app.set_version_flag("--version", STOCHGAIN_VERSION);

    std::map<std::string, Flags> flags;  // one set per subcommand; map nodes keep their addresses
    const std::map<std::string, std::function<int(const Context&)>> commands = {
        {"classify", cmd_classify}, {"evolve", cmd_evolve},     {"simulate", cmd_simulate}, {"bounds", cmd_bounds},
        {"regions", cmd_regions},   {"stabilize", cmd_stabilize}, {"periodic", cmd_periodic},
    };
    const std::map<std::string, std::string> help = {
        {"classify", "Median/mean/variance stability verdict (exit 0 if stable by --criterion)"},
        {"evolve", "Distribution of ln x_K by closed form or grid convolution"},
        {"simulate", "Monte Carlo sample paths and per-K summary statistics"},
        {"bounds", "Exact tail probability with Cantelli and Chernoff bounds"},
        {"regions", "Stability region boundaries for lognormal gains"},
        {"stabilize", "Stabilization regions of a first order plant with random feedback"},
        {"periodic", "Geometric mean test for a periodic gain sequence"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, _] : commands) {
        CLI::App* sub = app.add_subcommand(name, help.at(name));
        Flags& f = flags[name];
        add_common(sub, f);
        if (name == "classify")
            f.given["criterion"] = sub->add_option("--criterion", f.criterion, "Criterion for the exit status")
                                       ->check(CLI::IsMember({"median", "mean", "variance"}));
        if (name == "evolve" || name == "simulate" || name == "bounds")
            f.given["K-max"] = sub->add_option("--K-max", f.K_max, "Largest K")->check(CLI::PositiveNumber);
        if (name == "simulate") {
            f.given["n-paths"] = sub->add_option("--n-paths", f.n_paths, "Number of sample paths")->check(CLI::PositiveNumber);
            f.given["threshold"] = sub->add_option("--threshold", f.threshold, "Tail threshold on x_K")->check(CLI::PositiveNumber);
        }
        if (name == "classify" || name == "evolve" || name == "simulate" || name == "bounds") {
            f.given["mu-a"] = sub->add_option("--mu-a", f.mu_a, "Lognormal gain mean (with --sigma-a)");
            f.given["sigma-a"] = sub->add_option("--sigma-a", f.sigma_a, "Lognormal gain standard deviation");
            f.given["mu-a"]->needs(f.given["sigma-a"]);
            f.given["sigma-a"]->needs(f.given["mu-a"]);
            f.given["half-cauchy"] = sub->add_option("--half-cauchy", f.half_cauchy, "Half-Cauchy gain scale")
                                         ->excludes(f.given["mu-a"]);
        }
        subs[name] = sub;
    }

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) continue;
        try {
            Context ctx{name, resolve(name, flags[name]), out};
            return commands.at(name)(ctx);
        } catch (const std::exception& e) {
            err << "stochgain " << name << ": " << e.what() << "\n";
            return 2;
        }
    }
    return 2;
}

}  // namespace stochgain::cli
