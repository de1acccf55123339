#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace matchcert {

// Shortest decimal that round-trips a double (17 significant digits max).
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent generator stream for trial `index` under a master seed.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ed2701ULL));
}

// Uniform double in [0,1) from 53 random mantissa bits. Used instead of
// std::uniform_real_distribution so draws are identical across standard
// library implementations.
template <typename Rng>
double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// FNV-1a, used for manifest content digests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline unsigned default_workers() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

// Splits [0, total) into `chunks` contiguous ranges and runs `fn(begin, end,
// chunk_index)` on a pool of `workers` threads. Chunk boundaries depend only
// on (total, chunks), never on scheduling.
inline void parallel_chunks(std::size_t total, unsigned workers, unsigned chunks,
                            const std::function<void(std::size_t, std::size_t, unsigned)>& fn) {
    if (workers == 0) throw std::invalid_argument("workers must be positive");
    if (chunks == 0) chunks = 1;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    std::size_t base = total / chunks, rem = total % chunks;
    std::size_t at = 0;
    for (unsigned c = 0; c < chunks; ++c) {
        std::size_t len = base + (c < rem ? 1 : 0);
        ranges.emplace_back(at, at + len);
        at += len;
    }
    if (workers == 1) {
        for (unsigned c = 0; c < chunks; ++c) fn(ranges[c].first, ranges[c].second, c);
        return;
    }
    std::atomic<unsigned> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr err;
    std::mutex err_mu;
    auto work = [&] {
        for (;;) {
            unsigned c = next.fetch_add(1);
            if (c >= chunks) return;
            try {
                fn(ranges[c].first, ranges[c].second, c);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

struct ResourceError : std::runtime_error {
    std::size_t required_bytes;
    ResourceError(const std::string& what, std::size_t bytes)
        : std::runtime_error(what), required_bytes(bytes) {}
};

struct SolverToleranceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace matchcert
