#pragma once

// End-to-end run: sweeps for every (h, m), b(h, m) fits, alpha(h) points,
// parametrization fits and ranking, plus the CSV/text emitters for them.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "primestat/cache.hpp"
#include "primestat/config.hpp"
#include "primestat/csv.hpp"
#include "primestat/experiment.hpp"
#include "primestat/fitting.hpp"
#include "primestat/ktuple.hpp"
#include "primestat/models.hpp"
#include "primestat/version.hpp"

namespace primestat {

// ---------------------------------------------------------------------------
// rows

inline std::string wpoint_row(const PointResult& r)
{
    const auto& s = r.summary;
    return csv::row({csv::num(r.point.N), csv::num(r.point.x), csv::num(r.point.w), csv::num(r.point.w_err),
                     csv::num(s.mean), csv::num(s.variance), csv::num(s.sys_rel_err), csv::num(s.stat_rel_err)});
}

inline std::string bfit_row(std::uint64_t h, std::uint64_t m, const FitResult& f)
{
    return csv::row({csv::num(h), csv::num(m), csv::num(f.param("b")), csv::num(f.error("b")), csv::num(f.chi2),
                     csv::num(f.ndof), csv::num(f.p_value)});
}

inline std::string alphafit_row(std::uint64_t m, const AlphaFit& a)
{
    const auto& f = a.fit;
    const bool has1 = a.kind != AlphaKind::II;
    const bool has2 = a.kind != AlphaKind::I;
    return csv::row({std::string(to_string(a.kind)), csv::num(m), has1 ? csv::num(f.param("alpha1")) : "",
                     has1 ? csv::num(f.error("alpha1")) : "", has2 ? csv::num(f.param("alpha2")) : "",
                     has2 ? csv::num(f.error("alpha2")) : "", csv::num(a.B), csv::num(a.B_err),
                     csv::num(f.chi2_reduced), csv::num(f.p_value)});
}

inline std::string gallagher_csv(const GallagherHistogram& hist, std::size_t k_max)
{
    std::string out(csv::kGallagherHeader);
    out += '\n';
    for (std::size_t k = 0; k <= std::max(k_max, hist.counts.empty() ? 0 : hist.counts.size() - 1); ++k) {
        const std::uint64_t c = k < hist.counts.size() ? hist.counts[k] : 0;
        out += csv::row({csv::num(static_cast<std::uint64_t>(k)), csv::num(c), csv::num(hist.empirical(k)),
                         csv::num(hist.predicted(k))});
        out += '\n';
    }
    return out;
}

inline std::vector<WPoint> read_wpoints(const csv::Table& t)
{
    const std::size_t cn = t.column("N"), cx = t.column("x"), cw = t.column("w"), ce = t.column("w_err");
    std::vector<WPoint> pts;
    for (const auto& r : t.rows) {
        pts.push_back({csv::to_count(r[cn]), csv::to_double(r[cx]), csv::to_double(r[cw]), csv::to_double(r[ce])});
    }
    return pts;
}

/// Alpha points from either an alphapoints CSV (h,alpha,alpha_err) or a bfit
/// CSV, in which case alpha = (b - c) / log h.
inline std::vector<AlphaPoint> read_alpha_points(const csv::Table& t, double c, std::optional<std::uint64_t> m_filter)
{
    std::vector<AlphaPoint> pts;
    const bool is_bfit = std::find(t.header.begin(), t.header.end(), "b") != t.header.end();
    for (const auto& r : t.rows) {
        if (is_bfit) {
            if (m_filter && csv::to_count(r[t.column("m")]) != *m_filter) continue;
            const std::uint64_t h = csv::to_count(r[t.column("h")]);
            if (h < 2) continue;
            FitResult b;
            b.names = {"b"};
            b.params = {csv::to_double(r[t.column("b")])};
            b.errors = {csv::to_double(r[t.column("b_err")])};
            pts.push_back(derive_alpha(b, c, h));
        } else {
            pts.push_back({csv::to_count(r[t.column("h")]), csv::to_double(r[t.column("alpha")]),
                           csv::to_double(r[t.column("alpha_err")])});
        }
    }
    return pts;
}

// ---------------------------------------------------------------------------
// pipeline

struct HSweepResult {
    std::uint64_t h = 0;
    std::vector<SweepEntry> entries;
    FitResult b_fit;
};

struct MResult {
    std::uint64_t m = 0;
    std::optional<HSweepResult> c_sweep;  // h = 1
    std::vector<HSweepResult> sweeps;
    std::vector<AlphaPoint> alpha_points;
    std::vector<AlphaFit> alpha_fits;  // in config order
    std::vector<AlphaFit> ranking;     // best p-value first
    std::vector<std::string> failures;
};

struct PipelineResult {
    std::string config_hash;
    std::vector<MResult> per_m;
    std::vector<std::string> warnings;

    bool ok() const
    {
        return std::all_of(per_m.begin(), per_m.end(), [](const MResult& r) { return r.failures.empty(); });
    }
};

/// Relative systematic error above which a sweep point is reported.
inline constexpr double kSysErrorWarning = 0.01;

struct PipelineHooks {
    std::ostream* log = nullptr;
};

inline PipelineResult run_pipeline(const PipelineConfig& config, const PipelineHooks& hooks = {})
{
    config.validate();
    std::optional<CountCache> cache;
    if (!config.cache_dir.empty()) cache.emplace(config.cache_dir);
    const SieveOptions sieve_opts = config.sieve_options();
    const ExperimentOptions exp_opts{config.divisor, sieve_opts};
    auto counts_for = [&](const IntervalSpec& spec) {
        return cache ? cache->get_or_compute(spec, sieve_opts) : subinterval_counts(spec, sieve_opts);
    };
    auto log = [&](const std::string& msg) {
        if (hooks.log) *hooks.log << msg << '\n';
    };

    PipelineResult result;
    result.config_hash = config.hash();

    auto run_h = [&](std::uint64_t h, std::uint64_t m) {
        HSweepResult hs;
        hs.h = h;
        hs.entries = sweep(h, m, config.n_grid, exp_opts, counts_for);
        for (const auto& e : hs.entries) {
            const std::string where = "h=" + std::to_string(h) + " m=" + std::to_string(m) + " N=" + std::to_string(e.N);
            if (!e.result) {
                result.warnings.push_back(where + " excluded: " + e.excluded_reason);
                log(result.warnings.back());
            } else if (e.result->summary.sys_rel_err > kSysErrorWarning) {
                result.warnings.push_back(where + " systematic error " + csv::num(e.result->summary.sys_rel_err) +
                                          " exceeds " + csv::num(kSysErrorWarning));
                log(result.warnings.back());
            }
        }
        const auto pts = fit_points(hs.entries);
        hs.b_fit = fit_b(pts, config.inflate_errors);
        log("h=" + std::to_string(h) + " m=" + std::to_string(m) + " b=" + csv::num(hs.b_fit.param("b")) +
            " +- " + csv::num(hs.b_fit.error("b")));
        return hs;
    };

    for (const std::uint64_t m : config.m_values) {
        MResult mr;
        mr.m = m;
        if (config.fit_c) mr.c_sweep = run_h(1, m);
        for (const std::uint64_t h : config.h_values) {
            mr.sweeps.push_back(run_h(h, m));
            mr.alpha_points.push_back(derive_alpha(mr.sweeps.back().b_fit, config.c_fixed, h));
        }
        AlphaFitOptions fit_opts;
        fit_opts.h_min = config.h_min;
        fit_opts.inflate_errors = config.inflate_errors;
        for (const AlphaKind kind : config.kinds) {
            try {
                mr.alpha_fits.push_back(fit_alpha(kind, mr.alpha_points, fit_opts));
            } catch (const NumericalError& e) {
                mr.failures.push_back("alpha_" + std::string(to_string(kind)) + " m=" + std::to_string(m) + ": " +
                                      e.what());
                log(mr.failures.back());
            } catch (const InputError& e) {
                // too few h values above h_min: b(h, m) results stand, alpha fit is skipped
                result.warnings.push_back("alpha_" + std::string(to_string(kind)) + " m=" + std::to_string(m) +
                                          " skipped: " + e.what());
                log(result.warnings.back());
            }
        }
        mr.ranking = compare_parametrizations(mr.alpha_fits);
        result.per_m.push_back(std::move(mr));
    }
    return result;
}

/// Chi2_nu / p-value table with one column per m, plus the ranking per m.
inline std::string ranking_report(const PipelineResult& r)
{
    std::ostringstream out;
    out << "config " << r.config_hash << "\n\nchi2_red";
    for (const auto& mr : r.per_m) out << "\tm=" << mr.m;
    out << "\tp-value";
    for (const auto& mr : r.per_m) out << "\tm=" << mr.m;
    out << '\n';
    for (const AlphaKind kind : {AlphaKind::I, AlphaKind::II, AlphaKind::III}) {
        std::ostringstream chi, pv;
        bool any = false;
        for (const auto& mr : r.per_m) {
            const auto it = std::find_if(mr.alpha_fits.begin(), mr.alpha_fits.end(),
                                         [kind](const AlphaFit& a) { return a.kind == kind; });
            if (it == mr.alpha_fits.end()) {
                chi << "\t-";
                pv << "\t-";
            } else {
                any = true;
                chi << '\t' << csv::num(it->fit.chi2_reduced);
                pv << '\t' << csv::num(it->fit.p_value);
            }
        }
        if (any) out << "alpha_" << to_string(kind) << chi.str() << "\talpha_" << to_string(kind) << pv.str() << '\n';
    }
    out << '\n';
    for (const auto& mr : r.per_m) {
        out << "m=" << mr.m << " ranking:";
        for (const auto& a : mr.ranking) out << ' ' << to_string(a.kind);
        if (!mr.ranking.empty()) {
            out << "  best B = " << csv::num(mr.ranking.front().B) << " +- " << csv::num(mr.ranking.front().B_err);
        }
        out << '\n';
    }
    return out.str();
}

inline nlohmann::json summary_json(const PipelineResult& r)
{
    nlohmann::json j;
    j["config_hash"] = r.config_hash;
    j["code_version"] = kCodeVersion;
    j["ms_constant"] = csv::num(ms_constant());
    nlohmann::json per_m = nlohmann::json::array();
    for (const auto& mr : r.per_m) {
        nlohmann::json e;
        e["m"] = mr.m;
        if (mr.c_sweep) {
            e["C"] = csv::num(mr.c_sweep->b_fit.param("b"));
            e["C_err"] = csv::num(mr.c_sweep->b_fit.error("b"));
        }
        nlohmann::json fits = nlohmann::json::object();
        for (const auto& a : mr.alpha_fits) {
            fits[std::string(to_string(a.kind))] = {{"B", csv::num(a.B)},
                                                    {"B_err", csv::num(a.B_err)},
                                                    {"chi2_red", csv::num(a.fit.chi2_reduced)},
                                                    {"pvalue", csv::num(a.fit.p_value)},
                                                    {"constraint_satisfied", a.fit.constraint_satisfied},
                                                    {"degenerate", a.fit.degenerate}};
        }
        e["fits"] = fits;
        if (!mr.ranking.empty()) e["best"] = std::string(to_string(mr.ranking.front().kind));
        e["failures"] = mr.failures;
        per_m.push_back(e);
    }
    j["per_m"] = per_m;
    j["warnings"] = r.warnings;
    if (!r.per_m.empty() && !r.per_m.back().ranking.empty()) {
        const auto& best = r.per_m.back().ranking.front();
        j["B"] = csv::num(best.B);
        j["B_err"] = csv::num(best.B_err);
        j["B_kind"] = std::string(to_string(best.kind));
    }
    return j;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

inline std::string wpoints_csv(const HSweepResult& hs)
{
    std::string out(csv::kWPointsHeader);
    out += '\n';
    for (const auto& e : hs.entries) {
        if (e.result) out += wpoint_row(*e.result) + '\n';
    }
    return out;
}

}  // namespace detail

/// Writes every pipeline artifact under `dir`; returns the file names written.
inline std::vector<std::string> write_pipeline_outputs(const PipelineResult& r, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    auto emit = [&](const std::string& name, const std::string& text) {
        detail::write_text(dir / name, text);
        files.push_back(name);
    };

    std::string bfit(csv::kBFitHeader);
    bfit += '\n';
    std::string alphafit(csv::kAlphaFitHeader);
    alphafit += '\n';
    for (const auto& mr : r.per_m) {
        auto emit_sweep = [&](const HSweepResult& hs) {
            emit("wpoints_h" + std::to_string(hs.h) + "_m" + std::to_string(mr.m) + ".csv", detail::wpoints_csv(hs));
            bfit += bfit_row(hs.h, mr.m, hs.b_fit) + '\n';
        };
        if (mr.c_sweep) emit_sweep(*mr.c_sweep);
        for (const auto& hs : mr.sweeps) emit_sweep(hs);

        std::string ap(csv::kAlphaPointsHeader);
        ap += '\n';
        for (const auto& p : mr.alpha_points) {
            ap += csv::row({csv::num(p.h), csv::num(p.alpha), csv::num(p.alpha_err)}) + '\n';
        }
        emit("alphapoints_m" + std::to_string(mr.m) + ".csv", ap);
        for (const auto& a : mr.alpha_fits) alphafit += alphafit_row(mr.m, a) + '\n';
    }
    emit("bfit.csv", bfit);
    emit("alphafit.csv", alphafit);
    emit("ranking.txt", ranking_report(r));
    emit("summary.json", summary_json(r).dump(2) + '\n');
    return files;
}

}  // namespace primestat
