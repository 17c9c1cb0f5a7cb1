#pragma once

// Hardy-Littlewood k-tuples: residue-class counts, the singular series,
// direct tuple counts, and the Gallagher window-count histogram.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "primestat/error.hpp"
#include "primestat/models.hpp"
#include "primestat/parallel.hpp"
#include "primestat/sieve.hpp"

namespace primestat {

inline constexpr std::size_t kMaxTupleSize = 8;

/// Distinct non-negative offsets h_1 < ... < h_k.
class OffsetTuple {
public:
    explicit OffsetTuple(std::vector<std::uint64_t> offsets) : offsets_(std::move(offsets))
    {
        if (offsets_.empty()) throw InputError("tuple needs at least one offset");
        if (offsets_.size() > kMaxTupleSize) throw InputError("tuples larger than 8 are not supported");
        std::sort(offsets_.begin(), offsets_.end());
        if (std::adjacent_find(offsets_.begin(), offsets_.end()) != offsets_.end()) {
            throw InputError("tuple offsets must be distinct");
        }
    }

    std::size_t k() const { return offsets_.size(); }
    const std::vector<std::uint64_t>& offsets() const { return offsets_; }
    std::uint64_t max_offset() const { return offsets_.back(); }

private:
    std::vector<std::uint64_t> offsets_;
};

/// Number of distinct residues of the offsets modulo p.
inline std::size_t nu(const OffsetTuple& t, std::uint64_t p)
{
    if (p < 2) throw InputError("nu needs a modulus >= 2");
    std::vector<std::uint64_t> residues;
    residues.reserve(t.k());
    for (const std::uint64_t h : t.offsets()) residues.push_back(h % p);
    std::sort(residues.begin(), residues.end());
    return static_cast<std::size_t>(std::unique(residues.begin(), residues.end()) - residues.begin());
}

/// Singular series truncated to primes p <= p_max:
///   prod p^(k-1) (p - nu(p)) / (p - 1)^k.
/// Exactly 0 when some p <= p_max is fully covered; exactly 1 for k = 1.
inline double hl_constant(const OffsetTuple& t, std::uint64_t p_max = 1'000'000)
{
    if (p_max < 2) throw InputError("p_max must be >= 2");
    if (t.k() == 1) return 1.0;
    const double k = static_cast<double>(t.k());
    double log_sum = 0;
    for (const std::uint32_t p : base_primes(p_max)) {
        const std::size_t v = nu(t, p);
        if (v == p) return 0.0;
        const double pd = p;
        // log((1 - v/p) / (1 - 1/p)^k)
        log_sum += std::log1p(-static_cast<double>(v) / pd) - k * std::log1p(-1 / pd);
    }
    return std::exp(log_sum);
}

struct HlConvergence {
    std::uint64_t p_max = 0;
    double value = 0;          // at p_max
    double value_doubled = 0;  // at 2 p_max
    double delta() const { return std::abs(value_doubled - value); }
};

inline HlConvergence hl_convergence(const OffsetTuple& t, std::uint64_t p_max = 1'000'000)
{
    return {p_max, hl_constant(t, p_max), hl_constant(t, 2 * p_max)};
}

/// #{1 <= n <= x : n + h_i prime for all i}.
inline std::uint64_t count_tuple_starts(std::uint64_t x, const OffsetTuple& t, const SieveOptions& opts = {})
{
    if (x < 1) return 0;
    if (x > kMaxSieveBound - t.max_offset() - 1) throw InputError("tuple count exceeds the sieve range");
    const PrimeBitmap bitmap = sieve_window({0, x + t.max_offset() + 1}, opts);
    const std::uint64_t h0 = t.offsets().front();
    std::uint64_t count = 0;
    for (const std::uint64_t q : bitmap.primes()) {
        if (q < h0 + 1 || q - h0 > x) continue;
        const std::uint64_t n = q - h0;
        bool all = true;
        for (std::size_t i = 1; i < t.k() && all; ++i) all = bitmap.is_prime(n + t.offsets()[i]);
        count += all ? 1 : 0;
    }
    return count;
}

/// L(t) x / log^k x.
inline double hl_asymptotic(double x, const OffsetTuple& t, double constant)
{
    return constant * x / std::pow(std::log(x), static_cast<double>(t.k()));
}

/// L(t) * integral_2^x dt / log^k t (composite Simpson in log t).
inline double hl_integral(double x, const OffsetTuple& t, double constant, int panels = 20000)
{
    if (!(x > 2)) return 0;
    const double k = static_cast<double>(t.k());
    // substitute t = e^u: integrand e^u / u^k
    const double a = std::log(2.0);
    const double b = std::log(x);
    const int n = panels + panels % 2;
    const double step = (b - a) / n;
    auto f = [k](double u) { return std::exp(u) / std::pow(u, k); };
    double sum = f(a) + f(b);
    for (int i = 1; i < n; ++i) sum += (i % 2 ? 4 : 2) * f(a + i * step);
    return constant * sum * step / 3;
}

/// Histogram of k = pi(x + L) - pi(x), L = floor(lambda log x), over
/// sampled x = 2, 2 + stride, ... <= N; windows are (x, x + L].
struct GallagherHistogram {
    std::uint64_t N = 0;
    double lambda = 0;
    std::uint64_t stride = 1;
    std::uint64_t samples = 0;
    std::vector<std::uint64_t> counts;  // counts[k]

    double empirical(std::size_t k) const
    {
        return k < counts.size() && samples > 0 ? static_cast<double>(counts[k]) / static_cast<double>(samples) : 0.0;
    }
    double predicted(std::size_t k) const { return poisson_pmf(lambda, static_cast<unsigned>(k)); }

    /// 1/2 sum_{k <= k_max} |empirical - Poisson|.
    double total_variation(std::size_t k_max) const
    {
        double tv = 0;
        for (std::size_t k = 0; k <= k_max; ++k) tv += std::abs(empirical(k) - predicted(k));
        return tv / 2;
    }
};

inline GallagherHistogram gallagher_histogram(std::uint64_t n, double lambda, std::uint64_t stride = 1,
                                              const SieveOptions& opts = {})
{
    if (!(lambda > 0)) throw InputError("lambda must be positive");
    if (stride < 1) throw InputError("stride must be >= 1");
    if (n < 2) throw InputError("N must be >= 2");
    auto window_len = [lambda](std::uint64_t x) {
        return static_cast<std::uint64_t>(std::floor(lambda * std::log(static_cast<double>(x))));
    };
    const double reach = static_cast<double>(n) + lambda * std::log(static_cast<double>(n)) + 2;
    if (!(reach < static_cast<double>(kMaxSieveBound))) throw InputError("Gallagher windows exceed the sieve range");

    // Blocks of sampled x, each sieved once including its window overhang.
    constexpr std::uint64_t kBlock = std::uint64_t{1} << 24;
    const std::uint64_t n_samples = (n - 2) / stride + 1;
    const std::uint64_t per_block = std::max<std::uint64_t>(1, kBlock / stride);
    const std::size_t blocks = static_cast<std::size_t>((n_samples + per_block - 1) / per_block);
    std::vector<std::vector<std::uint64_t>> partial(blocks);
    SieveOptions inner = opts;
    inner.workers = 1;

    parallel_for(blocks, opts.workers, [&](std::size_t b, unsigned) {
        const std::uint64_t first_i = b * per_block;
        const std::uint64_t last_i = std::min(n_samples, first_i + per_block) - 1;
        const std::uint64_t x0 = 2 + first_i * stride;
        const std::uint64_t x1 = 2 + last_i * stride;
        const PrimeBitmap bitmap = sieve_window({x0 + 1, x1 + window_len(x1) + 2}, inner);
        auto& hist = partial[b];
        for (std::uint64_t x = x0; x <= x1; x += stride) {
            const std::uint64_t len = window_len(x);
            const std::uint64_t k = len == 0 ? 0 : bitmap.count(x + 1, x + len + 1);
            if (hist.size() <= k) hist.resize(k + 1, 0);
            ++hist[k];
        }
    });

    GallagherHistogram out{n, lambda, stride, n_samples, {}};
    for (const auto& hist : partial) {
        if (out.counts.size() < hist.size()) out.counts.resize(hist.size(), 0);
        for (std::size_t k = 0; k < hist.size(); ++k) out.counts[k] += hist[k];
    }
    return out;
}

}  // namespace primestat
