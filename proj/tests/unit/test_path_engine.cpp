#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

using namespace bsdebm;
using bsdebm::testing::moments;
using bsdebm::testing::symmetric_chain;

namespace {

// Largest gap between the empirical CDF of v and the standard normal CDF.
double ks_normal(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double f = 0.5 * std::erfc(-v[i] / std::sqrt(2.0));
        d = std::max({d, std::abs(f - static_cast<double>(i) / n), std::abs(static_cast<double>(i + 1) / n - f)});
    }
    return d;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("bsdebm_test_" + name);
}

} // namespace

TEST(TimeGrid, RejectsBadNodes) {
    EXPECT_THROW(TimeGrid::uniform(1.0, 0), Error);
    EXPECT_THROW(TimeGrid::from_nodes({0.0, 0.5, 0.5}), Error);
    EXPECT_THROW(TimeGrid::from_nodes({0.1, 0.5}), Error);
    EXPECT_THROW(TimeGrid::uniform(1.0, 5).coarsened(2), Error);
    EXPECT_EQ(TimeGrid::uniform(1.0, 6).coarsened(3).steps(), 2u);
}

TEST(GenerateBatch, SmallestBatch) {
    const auto b = generate_batch(symmetric_chain(), 0, TimeGrid::uniform(1.0, 1), 1, 99);
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b.paths[0].brownian_increments.size(), 1u);
    EXPECT_TRUE(is_valid_path(b.paths[0].chain, 2));
    EXPECT_THROW(generate_batch(symmetric_chain(), 0, TimeGrid::uniform(1.0, 1), 0, 99), Error);
    EXPECT_THROW(generate_batch(symmetric_chain(), 2, TimeGrid::uniform(1.0, 1), 1, 99), Error);
}

TEST(GenerateBatch, BrownianMomentsAndNormality) {
    const auto b = generate_batch(symmetric_chain(), 0, TimeGrid::uniform(2.0, 4), 50000, 3);
    std::vector<double> wt, first, second;
    for (const auto& p : b.paths) {
        wt.push_back(p.terminal_brownian());
        first.push_back(p.brownian_increments[0]);
        second.push_back(p.brownian_increments[1]);
    }
    const auto m = moments(wt);
    EXPECT_NEAR(m.mean, 0.0, 3.0 * m.se);
    // Var of the sample variance for a normal is 2 sigma^4 / (n - 1).
    EXPECT_NEAR(m.var, 2.0, 3.0 * 2.0 * std::sqrt(2.0 / 49999.0));
    std::vector<double> cross(first.size()), standardized(first.size());
    for (std::size_t p = 0; p < first.size(); ++p) {
        cross[p] = first[p] * second[p];
        standardized[p] = first[p] / std::sqrt(0.5);
    }
    const auto c = moments(cross);
    EXPECT_NEAR(c.mean, 0.0, 3.0 * c.se);
    // 1% critical value of the one-sample KS statistic.
    EXPECT_LT(ks_normal(standardized), 1.63 / std::sqrt(static_cast<double>(first.size())));
}

TEST(GenerateBatch, ChainAndBrownianAreIndependent) {
    const auto b = generate_batch(symmetric_chain(), 0, TimeGrid::uniform(1.0, 2), 50000, 17);
    std::vector<double> prod(b.size());
    const double p2 = bsdebm::testing::kProbSecondState;
    for (std::size_t p = 0; p < b.size(); ++p)
        prod[p] = b.paths[p].terminal_brownian() * ((b.paths[p].chain.final_state() == 1 ? 1.0 : 0.0) - p2);
    const auto m = moments(prod);
    EXPECT_NEAR(m.mean, 0.0, 3.0 * m.se);
}

TEST(GenerateBatch, DeterministicAcrossRunsAndWorkers) {
    const auto a = bsdebm::testing::three_state_chain();
    const auto g = TimeGrid::uniform(1.0, 10);
    const auto b1 = generate_batch(a, 2, g, 3000, 123, 1);
    const auto b2 = generate_batch(a, 2, g, 3000, 123, 1);
    const auto b8 = generate_batch(a, 2, g, 3000, 123, 8);
    EXPECT_EQ(b1, b2);
    EXPECT_EQ(b1, b8);
    EXPECT_NE(b1, generate_batch(a, 2, g, 3000, 124, 1));
    // A path depends only on (seed, index), not on the batch size.
    EXPECT_EQ(b1.paths[10], generate_batch(a, 2, g, 11, 123).paths[10]);
}

TEST(PathBatch, CoarseningSumsIncrements) {
    const auto b = generate_batch(symmetric_chain(), 0, TimeGrid::uniform(1.0, 6), 5, 1);
    const auto c = b.coarsened(3);
    ASSERT_EQ(c.grid.steps(), 2u);
    for (std::size_t p = 0; p < b.size(); ++p) {
        const auto& f = b.paths[p].brownian_increments;
        EXPECT_NEAR(c.paths[p].brownian_increments[0], f[0] + f[1] + f[2], 1e-15);
        EXPECT_NEAR(c.paths[p].terminal_brownian(), b.paths[p].terminal_brownian(), 1e-14);
        EXPECT_EQ(c.paths[p].chain, b.paths[p].chain);
    }
}

TEST(PathBatch, NodeStatesFollowThePath) {
    const auto a = bsdebm::testing::three_state_chain();
    const auto b = generate_batch(a, 0, TimeGrid::uniform(2.0, 8), 200, 5);
    const auto s = node_states(b);
    for (std::size_t p = 0; p < b.size(); ++p) {
        const auto w = b.paths[p].brownian_at_nodes();
        for (std::size_t k = 0; k <= 8; ++k) {
            EXPECT_EQ(s.state_at(k, p), b.paths[p].chain.state_at(b.grid[k]));
            EXPECT_DOUBLE_EQ(s.w_at(k, p), w[k]);
        }
    }
}

TEST(PathStore, RoundTrip) {
    const auto b = generate_batch(bsdebm::testing::three_state_chain(), 1, TimeGrid::uniform(1.5, 7), 100, 77);
    const auto file = temp_file("roundtrip.bin");
    save_batch(b, file.string());
    EXPECT_EQ(load_batch(file.string()), b);
    std::filesystem::remove(file);
}

TEST(PathStore, TruncatedFileIsCorrupt) {
    const auto b = generate_batch(symmetric_chain(), 0, TimeGrid::uniform(1.0, 4), 10, 1);
    auto buf = encode_batch(b);
    for (std::size_t cut : {buf.size() - 1, buf.size() / 2, std::size_t{20}}) {
        std::vector<char> shorter(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(cut));
        try {
            decode_batch(shorter);
            FAIL() << "decoded a truncated buffer of " << cut << " bytes";
        } catch (const PathStoreError& e) {
            EXPECT_EQ(e.kind(), PathStoreError::Kind::CorruptRecord);
        }
    }
    buf.push_back(0);
    EXPECT_THROW(decode_batch(buf), PathStoreError);
}

TEST(PathStore, VersionBumpIsRejected) {
    const auto b = generate_batch(symmetric_chain(), 0, TimeGrid::uniform(1.0, 4), 3, 1);
    auto buf = encode_batch(b);
    buf[8] = static_cast<char>(kPathStoreVersion + 1);
    try {
        decode_batch(buf);
        FAIL();
    } catch (const PathStoreError& e) {
        EXPECT_EQ(e.kind(), PathStoreError::Kind::VersionMismatch);
    }
}

TEST(PathStore, InvalidStateIsCorrupt) {
    ChainPath bad{1.0, 0, {0.5}, {0, 5}};
    PathBatch b;
    b.grid = TimeGrid::uniform(1.0, 1);
    b.n_states = 2;
    b.paths.push_back({bad, {0.1}, 0});
    try {
        decode_batch(encode_batch(b));
        FAIL();
    } catch (const PathStoreError& e) {
        EXPECT_EQ(e.kind(), PathStoreError::Kind::CorruptRecord);
    }
}

TEST(PathStore, MissingFileIsIoError) {
    try {
        load_batch("/nonexistent/dir/paths.bin");
        FAIL();
    } catch (const PathStoreError& e) {
        EXPECT_EQ(e.kind(), PathStoreError::Kind::Io);
    }
}
