#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "orthoseg/raster.hpp"

namespace orthoseg {

// Symmetric adjacency over region ids {0..K}, id 0 = background. Background
// is adjacent to every object; objects are adjacent when the minimum distance
// between their pixel sets is below the radius.
class NeighborGraph {
public:
    NeighborGraph() = default;
    NeighborGraph(uint32_t object_count, double radius)
        : object_count_(object_count), radius_(radius), adj_(object_count + 1) {
        for (uint32_t k = 1; k <= object_count; ++k) add_edge(0, k);
    }

    uint32_t object_count() const { return object_count_; }
    double radius() const { return radius_; }

    void add_edge(uint32_t a, uint32_t b) {
        if (a == b) return;
        if (!adjacent(a, b)) {
            adj_[a].push_back(b);
            adj_[b].push_back(a);
        }
    }

    bool adjacent(uint32_t a, uint32_t b) const {
        for (uint32_t n : adj_[a])
            if (n == b) return true;
        return false;
    }

    const std::vector<uint32_t>& neighbors(uint32_t id) const { return adj_[id]; }

    size_t edge_count() const {
        size_t c = 0;
        for (const auto& l : adj_) c += l.size();
        return c / 2;
    }

    // Unordered pairs (a < b), sorted; background pairs included.
    std::vector<std::pair<uint32_t, uint32_t>> edges() const {
        std::vector<std::pair<uint32_t, uint32_t>> e;
        for (uint32_t a = 0; a < adj_.size(); ++a)
            for (uint32_t b : adj_[a])
                if (a < b) e.emplace_back(a, b);
        std::sort(e.begin(), e.end());
        return e;
    }

private:
    uint32_t object_count_ = 0;
    double radius_ = 0;
    std::vector<std::vector<uint32_t>> adj_;
};

// Normalized boundary-distance regression target. For a pixel of object k the
// raw value is the Euclidean distance from its center to the nearest pixel
// center outside k (the canvas border counts as outside); each object is then
// normalized by its own maximum, so object maxima are exactly 1. Background
// is 0. A 1-pixel object gets 1.
Raster<float> distance_target(const LabelMap& labels);

// Objects j,k are neighbors iff min over pixel pairs of the center distance
// is < d. Background (0) is adjacent to every object unconditionally.
NeighborGraph neighbor_graph(const LabelMap& labels, double d);

// Foreground/background frequency balancing: w = N/(2*N_fg) on foreground,
// N/(2*N_bg) on background; all ones when either class is empty. Mean weight
// over the image is 1.
Raster<float> balance_weights(const LabelMap& labels);

}  // namespace orthoseg
