#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace bsdebm {

// Substream tags. Chain and Brownian draws for one path never share a stream.
enum class StreamTag : std::uint64_t {
    Chain = 0x43484149ULL,
    Brownian = 0x42524f57ULL,
    Auxiliary = 0x41555849ULL,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed of the substream for (master seed, path index, tag). Depends on nothing
// else, so a path is reproducible from its index alone.
inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index, StreamTag tag) {
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ index);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tag));
    return h;
}

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t master, std::uint64_t index, StreamTag tag) {
    return Rng(stream_seed(master, index, tag));
}

// Default worker count: BSDEBM_WORKERS if set, else hardware concurrency.
inline std::size_t default_workers() {
    if (const char* env = std::getenv("BSDEBM_WORKERS")) {
        try {
            long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

// Runs body(chunk_begin, chunk_end) over [0, n) split into chunks of fixed size.
// The chunking depends only on n and chunk, never on the worker count.
template <class Body>
void parallel_chunks(std::size_t n, std::size_t chunk, std::size_t workers, Body&& body) {
    if (n == 0) return;
    chunk = std::max<std::size_t>(1, chunk);
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    workers = std::clamp<std::size_t>(workers, 1, n_chunks);
    std::vector<std::exception_ptr> errors(workers);
    auto run = [&](std::size_t w) {
        try {
            for (std::size_t c = w; c < n_chunks; c += workers)
                body(c * chunk, std::min(n, (c + 1) * chunk));
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers - 1);
        for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
        run(0);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
    parallel_chunks(n, 256, workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) body(i);
    });
}

} // namespace bsdebm
