// primestat: command-line front end for short-interval prime statistics.
//
// Exit codes: 0 success, 1 input/config error, 2 numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "primestat/cache.hpp"
#include "primestat/config.hpp"
#include "primestat/csv.hpp"
#include "primestat/pipeline.hpp"
#include "primestat/primestat.hpp"

namespace {

using namespace primestat;

std::vector<std::uint64_t> parse_list(const std::string& s)
{
    std::vector<std::uint64_t> out;
    for (const auto& f : csv::split(s)) {
        if (!f.empty()) out.push_back(csv::to_count(f));
    }
    return out;
}

/// "from:to:count" log grid or a comma separated list.
std::vector<std::uint64_t> parse_grid(const std::string& s)
{
    if (s.find(':') == std::string::npos) return parse_list(s);
    std::vector<std::string> parts;
    std::stringstream ss(s);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw InputError("grid must be FROM:TO:COUNT");
    return log_spaced_grid(csv::to_count(parts[0]), csv::to_count(parts[1]), csv::to_count(parts[2]));
}

void write_or_print(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

VarianceDivisor parse_divisor(const std::string& s)
{
    if (s == "sample") return VarianceDivisor::sample;
    if (s == "population") return VarianceDivisor::population;
    throw InputError("divisor must be 'sample' or 'population'");
}

struct Common {
    unsigned workers = 0;
    std::size_t segment_entries = kDefaultSegmentEntries;
    std::string cache_dir;
    std::string divisor = "sample";

    SieveOptions sieve() const { return {segment_entries, workers}; }
    CountVector counts(const IntervalSpec& spec) const
    {
        if (cache_dir.empty()) return subinterval_counts(spec, sieve());
        return CountCache(cache_dir).get_or_compute(spec, sieve());
    }
};

void add_common(CLI::App* cmd, Common& c, bool with_counts)
{
    cmd->add_option("--workers", c.workers, "Worker threads (0 = hardware parallelism)");
    cmd->add_option("--segment-entries", c.segment_entries, "Odd entries per sieve segment");
    if (with_counts) {
        cmd->add_option("--cache-dir", c.cache_dir, "Directory for cached subinterval counts");
        cmd->add_option("--divisor", c.divisor, "Variance divisor: sample (m-1) or population (m)");
    }
}

int run(int argc, char** argv)
{
    CLI::App app{"Prime counts in short intervals: moments, w fits and the B constant"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print this help message and exit");  // frees -h for --h
    Common common;

    // experiment
    auto* experiment = app.add_subcommand("experiment", "Measure one (N, h, m) point");
    std::string n_str, h_str, m_str, csv_out;
    experiment->add_option("--N", n_str, "Interval center")->required();
    experiment->add_option("--h", h_str, "Subinterval length")->required();
    experiment->add_option("--m", m_str, "Number of subintervals")->required();
    experiment->add_option("--csv", csv_out, "Also write the point as a wpoints CSV");
    add_common(experiment, common, true);

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Measure w over an N grid for fixed (h, m)");
    std::string grid_str = "1e9:1e11:13", out_path;
    sweep_cmd->add_option("--h", h_str, "Subinterval length")->required();
    sweep_cmd->add_option("--m", m_str, "Number of subintervals")->required();
    sweep_cmd->add_option("--n-grid", grid_str, "FROM:TO:COUNT (log spaced) or a comma list");
    sweep_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
    add_common(sweep_cmd, common, true);

    // fit-b
    auto* fit_b_cmd = app.add_subcommand("fit-b", "Fit w = 1 - b/log N to a wpoints CSV");
    std::string in_path;
    bool inflate = false;
    fit_b_cmd->add_option("--in", in_path, "wpoints CSV")->required();
    fit_b_cmd->add_option("--h", h_str, "h label for the output row")->required();
    fit_b_cmd->add_option("--m", m_str, "m label for the output row")->required();
    fit_b_cmd->add_flag("--inflate-errors", inflate, "Scale parameter errors by chi2_red");

    // fit-alpha
    auto* fit_alpha_cmd = app.add_subcommand("fit-alpha", "Fit alpha(h) parametrizations");
    std::string kind_str = "all";
    std::uint64_t h_min = 200;
    double c_fixed = 1.0;
    fit_alpha_cmd->add_option("--in", in_path, "alphapoints CSV (h,alpha,alpha_err) or bfit CSV")->required();
    fit_alpha_cmd->add_option("--kind", kind_str, "I, II, III or all");
    fit_alpha_cmd->add_option("--h-min", h_min, "Smallest h included in the fit");
    fit_alpha_cmd->add_option("--m", m_str, "m label (and row filter for bfit input)")->required();
    fit_alpha_cmd->add_option("--c", c_fixed, "C used to derive alpha from b");
    fit_alpha_cmd->add_flag("--inflate-errors", inflate, "Scale parameter errors by chi2_red");

    // pipeline
    auto* pipeline_cmd = app.add_subcommand("pipeline", "Run sweeps, fits and model selection from a config");
    std::string config_path;
    std::optional<unsigned> workers_override;
    std::optional<std::string> cache_override, out_override;
    pipeline_cmd->add_option("--config", config_path, "JSON config file")->required();
    pipeline_cmd->add_option("--workers", workers_override, "Override config workers");
    pipeline_cmd->add_option("--cache-dir", cache_override, "Override config cache_dir");
    pipeline_cmd->add_option("--out", out_override, "Override config output_dir");

    // hl-constant
    auto* hl_cmd = app.add_subcommand("hl-constant", "Truncated Hardy-Littlewood singular series");
    std::string tuple_str = "0,2", pmax_str = "1e6";
    hl_cmd->add_option("--tuple", tuple_str, "Comma separated offsets");
    hl_cmd->add_option("--p-max", pmax_str, "Largest prime in the product");

    // tuple-count
    auto* tuple_cmd = app.add_subcommand("tuple-count", "Count n <= x with every n + h_i prime");
    std::string x_str;
    tuple_cmd->add_option("--x", x_str, "Upper limit for n")->required();
    tuple_cmd->add_option("--tuple", tuple_str, "Comma separated offsets");
    tuple_cmd->add_option("--p-max", pmax_str, "Largest prime in the singular series");
    add_common(tuple_cmd, common, false);

    // gallagher
    auto* gallagher_cmd = app.add_subcommand("gallagher", "Histogram of pi(x + lambda log x) - pi(x)");
    double lambda = 1.0;
    std::string stride_str = "1";
    std::size_t k_max = 10;
    gallagher_cmd->add_option("--N", n_str, "Largest sampled x")->required();
    gallagher_cmd->add_option("--lambda", lambda, "Window length in units of log x");
    gallagher_cmd->add_option("--stride", stride_str, "Sample every stride-th x");
    gallagher_cmd->add_option("--k-max", k_max, "Emit rows up to at least this k");
    gallagher_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
    add_common(gallagher_cmd, common, false);

    // pvalue
    auto* pvalue_cmd = app.add_subcommand("pvalue", "Upper-tail chi-square probability");
    double chi2 = 0;
    int ndof = 1;
    pvalue_cmd->add_option("--chi2", chi2, "Chi-square statistic")->required();
    pvalue_cmd->add_option("--ndof", ndof, "Degrees of freedom")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (*experiment) {
        const IntervalSpec spec{csv::to_count(n_str), csv::to_count(h_str), csv::to_count(m_str)};
        spec.validate();
        const PointResult r = measure(common.counts(spec), parse_divisor(common.divisor));
        const double n = static_cast<double>(spec.N);
        const double h = static_cast<double>(spec.h);
        const auto& s = r.summary;
        std::cout << "N " << spec.N << "\nh " << spec.h << "\nm " << spec.m << "\nwindow [" << spec.window().lo
                  << ", " << spec.window().hi << ")\n"
                  << "empirical_mean " << csv::num(s.mean) << "\nempirical_variance " << csv::num(s.variance)
                  << "\nasymptotic_mean " << csv::num(asymptotic_mean(n, h)) << "\nasymptotic_variance "
                  << csv::num(asymptotic_variance(n, h)) << "\nw " << csv::num(s.w) << "\nw_err "
                  << csv::num(s.w_err) << "\neps_sys " << csv::num(s.sys_rel_err) << "\neps_stat "
                  << csv::num(s.stat_rel_err) << "\nsys_abs_err_mean " << csv::num(s.sys_abs_err_mean)
                  << "\nsys_abs_err_variance " << csv::num(s.sys_abs_err_variance) << "\nscale "
                  << to_string(classify_scale(n, h).scale) << '\n';
        if (!csv_out.empty()) write_or_print(csv_out, std::string(csv::kWPointsHeader) + '\n' + wpoint_row(r) + '\n');
        return 0;
    }

    if (*sweep_cmd) {
        const std::uint64_t h = csv::to_count(h_str), m = csv::to_count(m_str);
        const ExperimentOptions opts{parse_divisor(common.divisor), common.sieve()};
        const auto entries = sweep(h, m, parse_grid(grid_str), opts,
                                   [&](const IntervalSpec& spec) { return common.counts(spec); });
        std::string text(csv::kWPointsHeader);
        text += '\n';
        for (const auto& e : entries) {
            if (e.result) {
                text += wpoint_row(*e.result) + '\n';
            } else {
                std::cerr << "N=" << e.N << " excluded: " << e.excluded_reason << '\n';
            }
        }
        write_or_print(out_path, text);
        return 0;
    }

    if (*fit_b_cmd) {
        const auto pts = read_wpoints(csv::read_file(in_path));
        const FitResult f = fit_b(pts, inflate);
        std::cout << csv::kBFitHeader << '\n' << bfit_row(csv::to_count(h_str), csv::to_count(m_str), f) << '\n';
        return 0;
    }

    if (*fit_alpha_cmd) {
        const std::uint64_t m = csv::to_count(m_str);
        const auto pts = read_alpha_points(csv::read_file(in_path), c_fixed, m);
        AlphaFitOptions opts;
        opts.h_min = h_min;
        opts.inflate_errors = inflate;
        std::vector<AlphaKind> kinds;
        if (kind_str == "all") kinds = {AlphaKind::I, AlphaKind::II, AlphaKind::III};
        else kinds = {parse_alpha_kind(kind_str)};
        std::cout << csv::kAlphaFitHeader << '\n';
        for (const auto k : kinds) {
            const AlphaFit a = fit_alpha(k, pts, opts);
            std::cout << alphafit_row(m, a) << '\n';
            if (!a.fit.diagnostics.empty()) std::cerr << "alpha_" << to_string(k) << ": " << a.fit.diagnostics << '\n';
        }
        return 0;
    }

    if (*pipeline_cmd) {
        PipelineConfig config = load_config(config_path);
        if (workers_override) config.workers = *workers_override;
        if (cache_override) config.cache_dir = *cache_override;
        if (out_override) config.output_dir = *out_override;
        const PipelineResult r = run_pipeline(config, {&std::cerr});
        write_pipeline_outputs(r, config.output_dir);
        std::cout << ranking_report(r);
        return r.ok() ? 0 : 2;
    }

    if (*hl_cmd) {
        const OffsetTuple t(parse_list(tuple_str));
        const auto conv = hl_convergence(t, csv::to_count(pmax_str));
        std::cout << "p_max,value,value_2pmax,delta\n"
                  << csv::row({csv::num(conv.p_max), csv::num(conv.value), csv::num(conv.value_doubled),
                               csv::num(conv.delta())})
                  << '\n';
        return 0;
    }

    if (*tuple_cmd) {
        const OffsetTuple t(parse_list(tuple_str));
        const std::uint64_t x = csv::to_count(x_str);
        const std::uint64_t count = count_tuple_starts(x, t, common.sieve());
        const double constant = hl_constant(t, csv::to_count(pmax_str));
        const double xd = static_cast<double>(x);
        std::cout << "x,count,hl_constant,hl_asymptotic,hl_integral\n"
                  << csv::row({csv::num(x), csv::num(count), csv::num(constant),
                               csv::num(hl_asymptotic(xd, t, constant)), csv::num(hl_integral(xd, t, constant))})
                  << '\n';
        return 0;
    }

    if (*gallagher_cmd) {
        const auto hist = gallagher_histogram(csv::to_count(n_str), lambda, csv::to_count(stride_str), common.sieve());
        write_or_print(out_path, gallagher_csv(hist, k_max));
        std::cerr << "samples " << hist.samples << " total_variation(k<=" << k_max
                  << ") " << csv::num(hist.total_variation(k_max)) << '\n';
        return 0;
    }

    if (*pvalue_cmd) {
        std::cout << csv::num(p_value(chi2, ndof)) << '\n';
        return 0;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv)
{
    try {
        return run(argc, argv);
    } catch (const primestat::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const primestat::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
