#pragma once

// Pipeline configuration, read from a JSON file. Unknown keys are errors.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "primestat/digest.hpp"
#include "primestat/error.hpp"
#include "primestat/experiment.hpp"
#include "primestat/models.hpp"
#include "primestat/sieve.hpp"

namespace primestat {

/// count values of N, log-spaced from `from` to `to` inclusive and rounded to integers.
inline std::vector<std::uint64_t> log_spaced_grid(std::uint64_t from, std::uint64_t to, std::size_t count)
{
    if (count < 2 || from < 3 || to <= from) throw ConfigError("log grid needs count >= 2 and 3 <= from < to");
    const double a = std::log10(static_cast<double>(from));
    const double b = std::log10(static_cast<double>(to));
    std::vector<std::uint64_t> grid(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double e = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
        grid[i] = static_cast<std::uint64_t>(std::llround(std::pow(10.0, e)));
    }
    grid.front() = from;
    grid.back() = to;
    return grid;
}

struct PipelineConfig {
    // Science parameters; these alone determine the results and the config hash.
    std::vector<std::uint64_t> m_values{10'000};
    std::vector<std::uint64_t> h_values{250, 500, 1'000, 2'500, 5'000, 10'000, 25'000, 50'000};
    std::vector<std::uint64_t> n_grid = log_spaced_grid(1'000'000'000ULL, 100'000'000'000ULL, 13);
    bool fit_c = true;  // run an h = 1 sweep per m to measure C
    double c_fixed = 1.0;
    std::uint64_t h_min = 200;
    std::vector<AlphaKind> kinds{AlphaKind::I, AlphaKind::II, AlphaKind::III};
    VarianceDivisor divisor = VarianceDivisor::sample;
    SignConvention sign = SignConvention::minus;
    bool inflate_errors = false;

    // Execution parameters; never affect output bytes.
    unsigned workers = 0;
    std::string cache_dir;
    std::string output_dir = "primestat-out";
    std::size_t segment_entries = kDefaultSegmentEntries;

    void validate() const
    {
        if (m_values.empty() || h_values.empty()) throw ConfigError("config needs at least one m and one h");
        if (n_grid.size() < 2) throw ConfigError("N grid needs at least two points");
        for (std::size_t i = 1; i < n_grid.size(); ++i) {
            if (n_grid[i] <= n_grid[i - 1]) throw ConfigError("N grid must be strictly increasing");
        }
        if (kinds.empty()) throw ConfigError("config needs at least one alpha parametrization");
        for (const auto m : m_values) {
            if (m < 2) throw ConfigError("m must be >= 2");
            for (const auto h : h_values) {
                for (const auto n : n_grid) IntervalSpec{n, h, m}.validate();
            }
            if (fit_c) {
                for (const auto n : n_grid) IntervalSpec{n, 1, m}.validate();
            }
        }
        for (const auto h : h_values) {
            if (h < 2) throw ConfigError("h list must not contain 1 (the h = 1 sweep is controlled by fit_c)");
        }
    }

    nlohmann::json science_json() const
    {
        nlohmann::json kinds_json = nlohmann::json::array();
        for (const auto k : kinds) kinds_json.push_back(std::string(to_string(k)));
        return {
            {"m", m_values},
            {"h", h_values},
            {"n_grid", n_grid},
            {"fit_c", fit_c},
            {"c_fixed", c_fixed},
            {"h_min", h_min},
            {"kinds", kinds_json},
            {"variance_divisor", divisor == VarianceDivisor::sample ? "sample" : "population"},
            {"sign_convention", sign == SignConvention::minus ? "minus" : "plus"},
            {"inflate_errors", inflate_errors},
        };
    }

    /// First 16 hex digits of SHA-256 over the canonical science parameters.
    std::string hash() const { return sha256_hex(science_json().dump()).substr(0, 16); }

    SieveOptions sieve_options() const { return {segment_entries, workers}; }
};

namespace detail {

inline std::uint64_t json_count(const nlohmann::json& v, const std::string& key)
{
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (d >= 0 && d <= 9007199254740992.0 && d == std::floor(d)) return static_cast<std::uint64_t>(d);
    }
    throw ConfigError("'" + key + "' must hold non-negative integers");
}

inline std::vector<std::uint64_t> json_counts(const nlohmann::json& v, const std::string& key)
{
    if (!v.is_array()) throw ConfigError("'" + key + "' must be an array");
    std::vector<std::uint64_t> out;
    for (const auto& e : v) out.push_back(json_count(e, key));
    return out;
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j)
{
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known{"m",        "h",        "n_grid",          "fit_c",
                                             "c_fixed",  "h_min",    "kinds",           "variance_divisor",
                                             "sign_convention", "inflate_errors", "workers", "cache_dir",
                                             "output_dir", "segment_entries"};
    for (const auto& [key, _] : j.items()) {
        if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
    }

    PipelineConfig c;
    try {
        if (j.contains("m")) c.m_values = detail::json_counts(j["m"], "m");
        if (j.contains("h")) c.h_values = detail::json_counts(j["h"], "h");
        if (j.contains("n_grid")) {
            const auto& g = j["n_grid"];
            if (g.is_array()) {
                c.n_grid = detail::json_counts(g, "n_grid");
            } else if (g.is_object()) {
                for (const auto& [key, _] : g.items()) {
                    if (key != "from" && key != "to" && key != "count") {
                        throw ConfigError("unknown n_grid key '" + key + "'");
                    }
                }
                if (!g.contains("from") || !g.contains("to") || !g.contains("count")) {
                    throw ConfigError("n_grid object needs from, to and count");
                }
                c.n_grid = log_spaced_grid(detail::json_count(g["from"], "n_grid.from"),
                                           detail::json_count(g["to"], "n_grid.to"),
                                           detail::json_count(g["count"], "n_grid.count"));
            } else {
                throw ConfigError("n_grid must be an array or {from, to, count}");
            }
        }
        if (j.contains("fit_c")) c.fit_c = j["fit_c"].get<bool>();
        if (j.contains("c_fixed")) c.c_fixed = j["c_fixed"].get<double>();
        if (j.contains("h_min")) c.h_min = detail::json_count(j["h_min"], "h_min");
        if (j.contains("kinds")) {
            c.kinds.clear();
            for (const auto& k : j["kinds"]) c.kinds.push_back(parse_alpha_kind(k.get<std::string>()));
        }
        if (j.contains("variance_divisor")) {
            const auto v = j["variance_divisor"].get<std::string>();
            if (v == "sample") c.divisor = VarianceDivisor::sample;
            else if (v == "population") c.divisor = VarianceDivisor::population;
            else throw ConfigError("variance_divisor must be 'sample' or 'population'");
        }
        if (j.contains("sign_convention")) {
            const auto v = j["sign_convention"].get<std::string>();
            if (v == "minus") c.sign = SignConvention::minus;
            else if (v == "plus") c.sign = SignConvention::plus;
            else throw ConfigError("sign_convention must be 'minus' or 'plus'");
        }
        if (j.contains("inflate_errors")) c.inflate_errors = j["inflate_errors"].get<bool>();
        if (j.contains("workers")) c.workers = static_cast<unsigned>(detail::json_count(j["workers"], "workers"));
        if (j.contains("cache_dir")) c.cache_dir = j["cache_dir"].get<std::string>();
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
        if (j.contains("segment_entries")) {
            c.segment_entries = detail::json_count(j["segment_entries"], "segment_entries");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

inline PipelineConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

}  // namespace primestat
