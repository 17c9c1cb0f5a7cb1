#pragma once

// Segmented sieve of Eratosthenes over arbitrary windows [lo, hi), odd-only
// bit layout. Bit j of a block starting at the even number `lo` stands for
// the odd number lo + 2j + 1; the single even prime 2 is handled by the
// counting routines.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "primestat/error.hpp"
#include "primestat/parallel.hpp"

namespace primestat {

/// Largest exclusive upper bound accepted by any sieve (exact in a double).
inline constexpr std::uint64_t kMaxSieveBound = std::uint64_t{1} << 52;
inline constexpr std::uint64_t kMaxBasePrimeLimit = 100'000'000;
inline constexpr std::size_t kDefaultSegmentEntries = std::size_t{1} << 20;
inline constexpr std::size_t kMinSegmentEntries = std::size_t{1} << 6;

/// Half-open integer range [lo, hi).
struct Window {
    std::uint64_t lo = 0;
    std::uint64_t hi = 0;

    std::uint64_t size() const { return hi - lo; }

    void validate() const
    {
        if (lo >= hi) {
            throw InputError("window [" + std::to_string(lo) + ", " + std::to_string(hi) + ") is empty");
        }
        if (hi > kMaxSieveBound) {
            throw InputError("window upper bound " + std::to_string(hi) + " exceeds 2^52");
        }
    }

    friend bool operator==(const Window&, const Window&) = default;
};

/// Geometry of one measured point: m subintervals of length h around N.
/// The window starts at N - floor(m*h/2) and has length m*h.
struct IntervalSpec {
    std::uint64_t N = 0;
    std::uint64_t h = 1;
    std::uint64_t m = 1;

    std::uint64_t delta_n() const { return h * m; }
    std::uint64_t start() const { return N - delta_n() / 2; }
    Window window() const { return {start(), start() + delta_n()}; }

    void validate() const
    {
        if (h < 1) throw InputError("subinterval length h must be >= 1");
        if (m < 1) throw InputError("subinterval count m must be >= 1");
        if (h > 0xffffffffULL) throw InputError("subinterval length h must fit in 32 bits");
        std::uint64_t dn = 0;
        if (__builtin_mul_overflow(h, m, &dn) || dn > kMaxSieveBound) {
            throw InputError("m*h overflows the sieve range");
        }
        const std::uint64_t half_up = dn / 2 + dn % 2;
        if (N < half_up || N - half_up < 2) {
            throw InputError("spec (N=" + std::to_string(N) + ", h=" + std::to_string(h) + ", m=" +
                             std::to_string(m) + ") violates N - ceil(m*h/2) >= 2");
        }
        if (start() + dn > kMaxSieveBound) throw InputError("interval exceeds 2^52");
    }

    friend bool operator==(const IntervalSpec&, const IntervalSpec&) = default;
};

/// Per-subinterval prime counts p_k for one spec.
struct CountVector {
    IntervalSpec spec;
    std::vector<std::uint32_t> counts;
};

struct SieveOptions {
    std::size_t segment_entries = kDefaultSegmentEntries;  // odd entries (bits) per segment
    unsigned workers = 1;                                  // 0 = hardware parallelism
};

/// floor(sqrt(n)), exact for all 64-bit n.
inline std::uint64_t isqrt(std::uint64_t n)
{
    auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r > 0 && r > n / r) --r;
    while ((r + 1) <= n / (r + 1)) ++r;
    return r;
}

/// All primes <= limit, ascending. 2 <= limit <= 10^8.
inline std::vector<std::uint32_t> base_primes(std::uint64_t limit)
{
    if (limit < 2 || limit > kMaxBasePrimeLimit) {
        throw ConfigError("base prime limit " + std::to_string(limit) + " outside [2, 10^8]");
    }
    // composite[i] <-> odd number 2i + 1
    const std::size_t n_odd = static_cast<std::size_t>((limit + 1) / 2);
    std::vector<char> composite(n_odd, 0);
    composite[0] = 1;
    for (std::size_t i = 1;; ++i) {
        const std::uint64_t p = 2 * i + 1;
        if (p * p > limit) break;
        if (composite[i]) continue;
        for (std::uint64_t q = p * p; q <= limit; q += 2 * p) composite[q / 2] = 1;
    }
    std::vector<std::uint32_t> primes{2};
    for (std::size_t i = 1; i < n_odd; ++i) {
        if (!composite[i]) primes.push_back(static_cast<std::uint32_t>(2 * i + 1));
    }
    return primes;
}

/// Immutable, shareable table of sieving primes covering windows up to `bound`.
class BasePrimeTable {
public:
    explicit BasePrimeTable(std::uint64_t bound)
        : limit_(std::max<std::uint64_t>(2, isqrt(bound > 0 ? bound - 1 : 0))), primes_(base_primes(limit_))
    {}

    std::uint64_t limit() const { return limit_; }
    std::span<const std::uint32_t> primes() const { return primes_; }

    /// True when every composite below `hi` has a factor in the table.
    bool covers(std::uint64_t hi) const { return hi == 0 || isqrt(hi - 1) <= limit_; }

private:
    std::uint64_t limit_;
    std::vector<std::uint32_t> primes_;
};

namespace detail {

inline std::uint64_t popcount_range(std::span<const std::uint64_t> words, std::uint64_t jb, std::uint64_t je)
{
    if (jb >= je) return 0;
    const std::uint64_t wb = jb >> 6;
    const std::uint64_t we = (je - 1) >> 6;
    const std::uint64_t head = ~std::uint64_t{0} << (jb & 63);
    const std::uint64_t tail = ~std::uint64_t{0} >> (63 - ((je - 1) & 63));
    if (wb == we) return static_cast<std::uint64_t>(std::popcount(words[wb] & head & tail));
    std::uint64_t total = static_cast<std::uint64_t>(std::popcount(words[wb] & head));
    for (std::uint64_t w = wb + 1; w < we; ++w) total += static_cast<std::uint64_t>(std::popcount(words[w]));
    return total + static_cast<std::uint64_t>(std::popcount(words[we] & tail));
}

/// Sieves the odd numbers lo+1, lo+3, ..., lo+2*nbits-1 (lo even) into `words`.
/// Requires the primes to cover sqrt(lo + 2*nbits).
inline void sieve_odd_block(std::uint64_t lo, std::uint64_t nbits, std::span<const std::uint32_t> primes,
                            std::span<std::uint64_t> words)
{
    const std::uint64_t n_words = (nbits + 63) / 64;
    std::fill_n(words.begin(), n_words, ~std::uint64_t{0});
    if (nbits % 64 != 0) words[n_words - 1] = ~std::uint64_t{0} >> (64 - nbits % 64);

    const std::uint64_t block_hi = lo + 2 * nbits;
    std::uint64_t* w = words.data();
    for (std::size_t i = 1; i < primes.size(); ++i) {
        const std::uint64_t p = primes[i];
        const std::uint64_t pp = p * p;
        if (pp >= block_hi) break;
        std::uint64_t first = pp;
        if (first < lo) {
            first = (lo + p - 1) / p * p;
            if ((first & 1) == 0) first += p;
        }
        for (std::uint64_t j = (first - lo - 1) / 2; j < nbits; j += p) {
            w[j >> 6] &= ~(std::uint64_t{1} << (j & 63));
        }
    }
    // 1 is not prime.
    if (lo == 0) w[0] &= ~std::uint64_t{1};
}

/// Splits [even_base, hi) into segments of `entries` odd slots (2*entries integers).
class SegmentPlan {
public:
    SegmentPlan(Window window, std::size_t entries)
        : base_(window.lo & ~std::uint64_t{1}), hi_(window.hi), entries_(entries)
    {
        segments_ = static_cast<std::size_t>((hi_ - base_ + 2 * entries_ - 1) / (2 * entries_));
    }

    std::size_t segments() const { return segments_; }
    std::uint64_t base() const { return base_; }
    std::uint64_t seg_lo(std::size_t s) const { return base_ + 2 * entries_ * s; }
    std::uint64_t seg_hi(std::size_t s) const { return std::min(hi_, seg_lo(s) + 2 * entries_); }
    std::uint64_t seg_bits(std::size_t s) const { return (seg_hi(s) - seg_lo(s) + 1) / 2; }
    std::size_t entries() const { return entries_; }

private:
    std::uint64_t base_;
    std::uint64_t hi_;
    std::size_t entries_;
    std::size_t segments_;
};

inline std::size_t checked_segment_entries(const SieveOptions& opts)
{
    if (opts.segment_entries < kMinSegmentEntries || opts.segment_entries % 64 != 0) {
        throw ConfigError("segment size must be a multiple of 64 and at least 64 entries");
    }
    return opts.segment_entries;
}

inline std::shared_ptr<const BasePrimeTable> table_for(Window window)
{
    auto table = std::make_shared<const BasePrimeTable>(window.hi);
    if (!table->covers(window.hi)) throw std::logic_error("base prime table does not cover sieve window");
    return table;
}

/// Primes in [a, b) where [a, b) lies within the block that starts at the even `lo`.
inline std::uint64_t count_in_block(std::span<const std::uint64_t> words, std::uint64_t lo, std::uint64_t a,
                                    std::uint64_t b)
{
    const std::uint64_t two = (a <= 2 && 2 < b) ? 1 : 0;
    return popcount_range(words, (a - lo) / 2, (b - lo) / 2) + two;
}

/// Sieves each segment of `window` once and hands it to visit(segment_index, seg_lo, a, b, words, worker),
/// where [a, b) is the part of the segment inside the window.
template <typename Visit>
void for_each_segment(Window window, const SieveOptions& opts, Visit&& visit)
{
    window.validate();
    const std::size_t entries = checked_segment_entries(opts);
    const auto table = table_for(window);
    const SegmentPlan plan(window, entries);
    const unsigned workers = std::min<unsigned>(resolve_workers(opts.workers),
                                                static_cast<unsigned>(std::max<std::size_t>(1, plan.segments())));
    std::vector<std::vector<std::uint64_t>> scratch(workers, std::vector<std::uint64_t>(entries / 64));
    parallel_for(plan.segments(), workers, [&](std::size_t s, unsigned worker) {
        auto& words = scratch[worker];
        const std::uint64_t lo = plan.seg_lo(s);
        sieve_odd_block(lo, plan.seg_bits(s), table->primes(), words);
        const std::uint64_t a = std::max(lo, window.lo);
        const std::uint64_t b = plan.seg_hi(s);
        visit(s, lo, a, b, std::span<const std::uint64_t>(words), worker);
    });
}

}  // namespace detail

/// Primality bitmap of a window. Offsets are relative to window().lo.
class PrimeBitmap {
public:
    PrimeBitmap(Window window, std::uint64_t base, std::vector<std::uint64_t> words)
        : window_(window), base_(base), words_(std::move(words))
    {}

    Window window() const { return window_; }
    std::uint64_t size() const { return window_.size(); }

    /// Is lo + offset prime?
    bool test(std::uint64_t offset) const { return is_prime(window_.lo + offset); }

    /// Is n prime? n must lie in the window.
    bool is_prime(std::uint64_t n) const
    {
        if (n < window_.lo || n >= window_.hi) throw InputError("value outside sieved window");
        if ((n & 1) == 0) return n == 2;
        const std::uint64_t j = (n - base_) / 2;
        return (words_[j >> 6] >> (j & 63)) & 1;
    }

    std::uint64_t count() const { return count(window_.lo, window_.hi); }

    /// Primes in [a, b), clipped to the window.
    std::uint64_t count(std::uint64_t a, std::uint64_t b) const
    {
        a = std::max(a, window_.lo);
        b = std::min(b, window_.hi);
        if (a >= b) return 0;
        return detail::count_in_block(words_, base_, a, b);
    }

    /// Ascending list of the primes in the window.
    std::vector<std::uint64_t> primes() const
    {
        std::vector<std::uint64_t> out;
        if (window_.lo <= 2 && 2 < window_.hi) out.push_back(2);
        for (std::size_t w = 0; w < words_.size(); ++w) {
            std::uint64_t bits = words_[w];
            while (bits != 0) {
                const std::uint64_t j = 64 * w + static_cast<std::uint64_t>(std::countr_zero(bits));
                const std::uint64_t n = base_ + 2 * j + 1;
                if (n >= window_.lo && n < window_.hi) out.push_back(n);
                bits &= bits - 1;
            }
        }
        return out;
    }

private:
    Window window_;
    std::uint64_t base_;
    std::vector<std::uint64_t> words_;
};

inline PrimeBitmap sieve_window(Window window, const SieveOptions& opts = {})
{
    window.validate();
    const std::size_t entries = detail::checked_segment_entries(opts);
    const auto table = detail::table_for(window);
    const detail::SegmentPlan plan(window, entries);
    const std::uint64_t total_bits = (window.hi - plan.base() + 1) / 2;
    std::vector<std::uint64_t> words((total_bits + 63) / 64);
    // Segments own disjoint word ranges because entries is a multiple of 64.
    parallel_for(plan.segments(), opts.workers, [&](std::size_t s, unsigned) {
        const std::uint64_t nbits = plan.seg_bits(s);
        std::span<std::uint64_t> dest(words.data() + s * (entries / 64), (nbits + 63) / 64);
        detail::sieve_odd_block(plan.seg_lo(s), nbits, table->primes(), dest);
    });
    return PrimeBitmap(window, plan.base(), std::move(words));
}

/// Number of primes in [lo, hi).
inline std::uint64_t count_primes(Window window, const SieveOptions& opts = {})
{
    window.validate();
    const detail::SegmentPlan plan(window, detail::checked_segment_entries(opts));
    std::vector<std::uint64_t> per_segment(plan.segments(), 0);
    detail::for_each_segment(window, opts,
                             [&](std::size_t s, std::uint64_t lo, std::uint64_t a, std::uint64_t b,
                                 std::span<const std::uint64_t> words, unsigned) {
                                 per_segment[s] = detail::count_in_block(words, lo, a, b);
                             });
    return std::accumulate(per_segment.begin(), per_segment.end(), std::uint64_t{0});
}

/// counts[k] = primes in [start + k*h, start + (k+1)*h), k = 0..m-1.
inline CountVector subinterval_counts(const IntervalSpec& spec, const SieveOptions& opts = {})
{
    spec.validate();
    const Window window = spec.window();
    const std::uint64_t start = window.lo;
    const std::uint64_t h = spec.h;
    const unsigned workers = resolve_workers(opts.workers);
    std::vector<std::vector<std::uint32_t>> partial(workers);

    detail::for_each_segment(window, opts,
                             [&](std::size_t, std::uint64_t lo, std::uint64_t a, std::uint64_t b,
                                 std::span<const std::uint64_t> words, unsigned worker) {
                                 auto& counts = partial[worker];
                                 if (counts.empty()) counts.assign(spec.m, 0);
                                 std::uint64_t k = (a - start) / h;
                                 const std::uint64_t k_last = (b - 1 - start) / h;
                                 for (; k <= k_last; ++k) {
                                     const std::uint64_t sa = std::max(a, start + k * h);
                                     const std::uint64_t sb = std::min(b, start + (k + 1) * h);
                                     counts[k] += static_cast<std::uint32_t>(detail::count_in_block(words, lo, sa, sb));
                                 }
                             });

    CountVector out{spec, std::vector<std::uint32_t>(spec.m, 0)};
    for (const auto& counts : partial) {
        if (counts.empty()) continue;
        for (std::size_t k = 0; k < counts.size(); ++k) out.counts[k] += counts[k];
    }
    return out;
}

}  // namespace primestat
