#pragma once

// On-disk cache of CountVectors, one file per (N, h, m, convention, code version).
//
// Layout (little endian):
//   "PSCOUNT1"            8 bytes magic
//   u32 convention_version
//   u64 N, u64 h, u64 m
//   u32 n, n bytes        code version string
//   u64 count_len, u32 x count_len
//   32 bytes              SHA-256 of everything above

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <unistd.h>
#include <vector>

#include "primestat/digest.hpp"
#include "primestat/error.hpp"
#include "primestat/sieve.hpp"
#include "primestat/version.hpp"

namespace primestat {

struct CountCacheKey {
    IntervalSpec spec;
    unsigned convention_version = kConventionVersion;
    std::string code_version = kCodeVersion;

    std::string canonical() const
    {
        return "N=" + std::to_string(spec.N) + ";h=" + std::to_string(spec.h) + ";m=" + std::to_string(spec.m) +
               ";convention=" + std::to_string(convention_version) + ";code=" + code_version;
    }
    std::string filename() const { return sha256_hex(canonical()) + ".cnt"; }
};

enum class CacheStatus { hit, miss, corrupt, key_mismatch };

struct CacheLookup {
    CacheStatus status = CacheStatus::miss;
    std::optional<CountVector> counts;
};

namespace detail {

inline constexpr char kCacheMagic[8] = {'P', 'S', 'C', 'O', 'U', 'N', 'T', '1'};

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
    bool u32(std::uint32_t& v) { return read(v, 4); }
    bool u64(std::uint64_t& v) { return read(v, 8); }
    bool raw(std::size_t n, std::span<const std::uint8_t>& out)
    {
        if (bytes_.size() - pos_ < n) return false;
        out = bytes_.subspan(pos_, n);
        pos_ += n;
        return true;
    }
    std::size_t pos() const { return pos_; }

private:
    template <typename T>
    bool read(T& v, int n)
    {
        if (bytes_.size() - pos_ < static_cast<std::size_t>(n)) return false;
        v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<T>(bytes_[pos_ + i]) << (8 * i);
        pos_ += n;
        return true;
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_cache_entry(const CountCacheKey& key, const CountVector& counts)
{
    std::vector<std::uint8_t> out(std::begin(detail::kCacheMagic), std::end(detail::kCacheMagic));
    detail::put_u32(out, key.convention_version);
    detail::put_u64(out, key.spec.N);
    detail::put_u64(out, key.spec.h);
    detail::put_u64(out, key.spec.m);
    detail::put_u32(out, static_cast<std::uint32_t>(key.code_version.size()));
    out.insert(out.end(), key.code_version.begin(), key.code_version.end());
    detail::put_u64(out, counts.counts.size());
    for (const std::uint32_t c : counts.counts) detail::put_u32(out, c);
    const Sha256 sum = Sha256Builder().update(out).finish();
    out.insert(out.end(), sum.begin(), sum.end());
    return out;
}

inline CacheLookup decode_cache_entry(const CountCacheKey& key, std::span<const std::uint8_t> bytes)
{
    CacheLookup corrupt{CacheStatus::corrupt, std::nullopt};
    if (bytes.size() < sizeof detail::kCacheMagic + 32) return corrupt;
    const auto body = bytes.first(bytes.size() - 32);
    const Sha256 sum = Sha256Builder().update(body).finish();
    if (!std::equal(sum.begin(), sum.end(), bytes.end() - 32)) return corrupt;
    if (!std::equal(std::begin(detail::kCacheMagic), std::end(detail::kCacheMagic), body.begin())) return corrupt;

    detail::ByteReader r(body.subspan(sizeof detail::kCacheMagic));
    std::uint32_t convention = 0, version_len = 0;
    std::uint64_t n = 0, h = 0, m = 0, len = 0;
    std::span<const std::uint8_t> version;
    if (!r.u32(convention) || !r.u64(n) || !r.u64(h) || !r.u64(m) || !r.u32(version_len) ||
        !r.raw(version_len, version) || !r.u64(len)) {
        return corrupt;
    }
    const std::string code_version(version.begin(), version.end());
    if (convention != key.convention_version || code_version != key.code_version || n != key.spec.N ||
        h != key.spec.h || m != key.spec.m) {
        return {CacheStatus::key_mismatch, std::nullopt};
    }
    if (len != m) return corrupt;
    CountVector out{key.spec, std::vector<std::uint32_t>(len)};
    for (auto& c : out.counts) {
        if (!r.u32(c)) return corrupt;
    }
    if (r.pos() != body.size() - sizeof detail::kCacheMagic) return corrupt;
    return {CacheStatus::hit, std::move(out)};
}

/// Directory of cache entries. Writes go to a temporary file renamed into place.
class CountCache {
public:
    explicit CountCache(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

    const std::filesystem::path& dir() const { return dir_; }
    std::filesystem::path path_for(const CountCacheKey& key) const { return dir_ / key.filename(); }

    CacheLookup get(const CountCacheKey& key) const
    {
        std::ifstream in(path_for(key), std::ios::binary);
        if (!in) return {};
        const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return decode_cache_entry(key, bytes);
    }

    void put(const CountCacheKey& key, const CountVector& counts) const
    {
        const auto bytes = encode_cache_entry(key, counts);
        static std::atomic<unsigned> serial{0};
        const auto target = path_for(key);
        auto tmp = target;
        tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(serial.fetch_add(1));
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw InputError("cannot write cache file " + tmp.string());
            out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            if (!out) throw InputError("short write to cache file " + tmp.string());
        }
        std::filesystem::rename(tmp, target);
    }

    /// Cached counts for the spec, sieving and storing them on a miss or a bad entry.
    CountVector get_or_compute(const IntervalSpec& spec, const SieveOptions& opts) const
    {
        const CountCacheKey key{spec};
        auto found = get(key);
        if (found.status == CacheStatus::hit) return std::move(*found.counts);
        CountVector counts = subinterval_counts(spec, opts);
        put(key, counts);
        return counts;
    }

private:
    std::filesystem::path dir_;
};

}  // namespace primestat
