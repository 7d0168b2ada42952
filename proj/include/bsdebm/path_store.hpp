#pragma once

// Binary path store. Layout is documented in docs/path_store.md.

#include "bsdebm/errors.hpp"
#include "bsdebm/path_engine.hpp"

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace bsdebm {

inline constexpr std::array<char, 8> kPathStoreMagic = {'B', 'S', 'D', 'E', 'B', 'M', 'P', 'S'};
inline constexpr std::uint32_t kPathStoreVersion = 1;

namespace detail {

class Writer {
public:
    explicit Writer(std::vector<char>& buf) : buf_(buf) {}
    template <class T>
    void put(T v) {
        const auto* p = reinterpret_cast<const char*>(&v);
        buf_.insert(buf_.end(), p, p + sizeof(T));
    }

private:
    std::vector<char>& buf_;
};

class Reader {
public:
    Reader(const char* data, std::size_t size) : data_(data), size_(size) {}
    template <class T>
    T get() {
        if (size_ - pos_ < sizeof(T))
            throw PathStoreError(PathStoreError::Kind::CorruptRecord, "path store truncated at byte " + std::to_string(pos_));
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::size_t remaining() const noexcept { return size_ - pos_; }
    // Bounds an element count against what is left in the buffer.
    void expect(std::uint64_t count, std::size_t elem) const {
        if (count > remaining() / elem)
            throw PathStoreError(PathStoreError::Kind::CorruptRecord, "record length exceeds file size");
    }

private:
    const char* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<char> encode_batch(const PathBatch& batch) {
    std::vector<char> buf;
    detail::Writer w(buf);
    for (char c : kPathStoreMagic) w.put(c);
    w.put<std::uint32_t>(kPathStoreVersion);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(batch.n_states));
    w.put<std::uint64_t>(batch.master_seed);
    w.put<std::uint64_t>(batch.grid.steps());
    for (double t : batch.grid.nodes()) w.put(t);
    w.put<std::uint64_t>(batch.paths.size());
    for (const auto& p : batch.paths) {
        w.put<std::uint64_t>(p.seed);
        w.put<std::uint64_t>(p.chain.initial_state);
        w.put<std::uint64_t>(p.chain.jump_times.size());
        for (double t : p.chain.jump_times) w.put(t);
        for (std::size_t k = 1; k < p.chain.states.size(); ++k) w.put<std::uint64_t>(p.chain.states[k]);
        for (double dw : p.brownian_increments) w.put(dw);
    }
    return buf;
}

inline PathBatch decode_batch(const std::vector<char>& buf) {
    using Kind = PathStoreError::Kind;
    detail::Reader r(buf.data(), buf.size());
    for (char c : kPathStoreMagic)
        if (r.get<char>() != c) throw PathStoreError(Kind::CorruptRecord, "bad path store magic");
    const auto version = r.get<std::uint32_t>();
    if (version != kPathStoreVersion)
        throw PathStoreError(Kind::VersionMismatch, "path store version " + std::to_string(version) +
                                                        ", expected " + std::to_string(kPathStoreVersion));
    PathBatch batch;
    batch.n_states = r.get<std::uint32_t>();
    batch.master_seed = r.get<std::uint64_t>();
    const auto steps = r.get<std::uint64_t>();
    r.expect(steps + 1, sizeof(double));
    std::vector<double> nodes(steps + 1);
    for (auto& t : nodes) t = r.get<double>();
    try {
        batch.grid = TimeGrid::from_nodes(std::move(nodes));
    } catch (const Error& e) {
        throw PathStoreError(Kind::CorruptRecord, std::string("bad grid: ") + e.what());
    }
    const auto n_paths = r.get<std::uint64_t>();
    r.expect(n_paths, 3 * sizeof(std::uint64_t));
    batch.paths.resize(n_paths);
    for (auto& p : batch.paths) {
        p.seed = r.get<std::uint64_t>();
        p.chain.horizon = batch.grid.horizon();
        p.chain.initial_state = r.get<std::uint64_t>();
        const auto jumps = r.get<std::uint64_t>();
        r.expect(jumps, 2 * sizeof(double));
        p.chain.jump_times.resize(jumps);
        for (auto& t : p.chain.jump_times) t = r.get<double>();
        p.chain.states.resize(jumps + 1);
        p.chain.states[0] = p.chain.initial_state;
        for (std::size_t k = 1; k <= jumps; ++k) p.chain.states[k] = r.get<std::uint64_t>();
        r.expect(steps, sizeof(double));
        p.brownian_increments.resize(steps);
        for (auto& dw : p.brownian_increments) dw = r.get<double>();
        if (!is_valid_path(p.chain, batch.n_states))
            throw PathStoreError(Kind::CorruptRecord, "invalid chain record");
    }
    if (r.remaining() != 0) throw PathStoreError(Kind::CorruptRecord, "trailing bytes after last record");
    return batch;
}

inline void save_batch(const PathBatch& batch, const std::string& file) {
    const auto buf = encode_batch(batch);
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) throw PathStoreError(PathStoreError::Kind::Io, "cannot open " + file + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw PathStoreError(PathStoreError::Kind::Io, "write failed: " + file);
}

inline PathBatch load_batch(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw PathStoreError(PathStoreError::Kind::Io, "cannot open " + file);
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_batch(buf);
}

} // namespace bsdebm
