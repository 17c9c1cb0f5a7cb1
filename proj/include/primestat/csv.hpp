#pragma once

// CSV emission and parsing for the fixed output schemas. Numbers are
// written locale-independently with 17 significant digits.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "primestat/error.hpp"

namespace primestat::csv {

inline constexpr std::string_view kWPointsHeader = "N,x,w,w_err,mean,variance,eps_sys,eps_stat";
inline constexpr std::string_view kBFitHeader = "h,m,b,b_err,chi2,ndof,pvalue";
inline constexpr std::string_view kAlphaFitHeader = "kind,m,alpha1,alpha1_err,alpha2,alpha2_err,B,B_err,chi2_red,pvalue";
inline constexpr std::string_view kGallagherHeader = "k,count,empirical_freq,poisson_pred";
inline constexpr std::string_view kAlphaPointsHeader = "h,alpha,alpha_err";

inline std::string num(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string num(std::uint64_t v) { return std::to_string(v); }
inline std::string num(int v) { return std::to_string(v); }

/// Joins already formatted fields with commas.
inline std::string row(std::initializer_list<std::string> fields)
{
    std::string out;
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out += ',';
        out += f;
        first = false;
    }
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw InputError("CSV has no column '" + std::string(name) + "'");
    }
};

inline std::vector<std::string> split(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline Table parse(std::istream& in)
{
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto fields = split(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) throw InputError("CSV row has " + std::to_string(fields.size()) +
                                                               " fields, header has " +
                                                               std::to_string(t.header.size()));
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw InputError("CSV input is empty");
    return t;
}

inline Table read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    return parse(in);
}

inline double to_double(const std::string& s)
{
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw InputError("bad number '" + s + "'");
    return v;
}

/// Parses a non-negative integer; accepts exact scientific forms such as 1e9 or 2.5e8.
inline std::uint64_t to_count(const std::string& s)
{
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc{} && res.ptr == s.data() + s.size()) return v;
    const double d = to_double(s);
    if (!(d >= 0) || d > 9007199254740992.0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
        throw InputError("'" + s + "' is not a non-negative integer");
    }
    return static_cast<std::uint64_t>(d);
}

}  // namespace primestat::csv
