#pragma once

#include "bsdebm/errors.hpp"

#include <cmath>
#include <cstddef>
#include <vector>

namespace bsdebm {

// Strictly increasing time nodes on [0, T].
class TimeGrid {
public:
    TimeGrid() = default;

    static TimeGrid uniform(double horizon, std::size_t steps) {
        if (!(horizon >= 0.0) || steps == 0)
            throw Error("TimeGrid::uniform needs horizon >= 0 and at least one step");
        std::vector<double> nodes(steps + 1);
        for (std::size_t k = 0; k <= steps; ++k)
            nodes[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
        nodes.back() = horizon;
        TimeGrid g;
        g.nodes_ = std::move(nodes);
        return g;
    }

    static TimeGrid from_nodes(std::vector<double> nodes) {
        if (nodes.size() < 2 || nodes.front() != 0.0)
            throw Error("TimeGrid needs at least two nodes starting at 0");
        for (std::size_t k = 1; k < nodes.size(); ++k)
            if (!(nodes[k] > nodes[k - 1])) throw Error("TimeGrid nodes must be strictly increasing");
        TimeGrid g;
        g.nodes_ = std::move(nodes);
        return g;
    }

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    std::size_t steps() const noexcept { return nodes_.empty() ? 0 : nodes_.size() - 1; }
    double horizon() const noexcept { return nodes_.empty() ? 0.0 : nodes_.back(); }
    double operator[](std::size_t k) const { return nodes_[k]; }
    double dt(std::size_t k) const { return nodes_[k + 1] - nodes_[k]; }

    // Keeps every factor-th node. steps() must be divisible by factor.
    TimeGrid coarsened(std::size_t factor) const {
        if (factor == 0 || steps() % factor != 0)
            throw Error("TimeGrid::coarsened: step count not divisible by factor");
        std::vector<double> nodes;
        for (std::size_t k = 0; k < nodes_.size(); k += factor) nodes.push_back(nodes_[k]);
        return from_nodes(std::move(nodes));
    }

    bool operator==(const TimeGrid&) const = default;

private:
    std::vector<double> nodes_;
};

// Symmetric uniform spatial grid on [-L, L] with an odd node count, so w = 0 is a node.
class SpaceGrid {
public:
    SpaceGrid() = default;
    SpaceGrid(double half_width, std::size_t nodes) : half_width_(half_width), nodes_(nodes) {
        if (!(half_width > 0.0)) throw Error("SpaceGrid half width must be positive");
        if (nodes < 5 || nodes % 2 == 0) throw Error("SpaceGrid needs an odd node count >= 5");
    }

    std::size_t size() const noexcept { return nodes_; }
    double half_width() const noexcept { return half_width_; }
    double step() const noexcept { return 2.0 * half_width_ / static_cast<double>(nodes_ - 1); }
    double operator[](std::size_t m) const { return -half_width_ + step() * static_cast<double>(m); }
    std::size_t center() const noexcept { return nodes_ / 2; }

private:
    double half_width_ = 1.0;
    std::size_t nodes_ = 5;
};

} // namespace bsdebm
