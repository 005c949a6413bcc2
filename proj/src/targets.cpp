#include "orthoseg/targets.hpp"

#include <cmath>

#include "orthoseg/edt.hpp"

namespace orthoseg {

Raster<float> distance_target(const LabelMap& labels) {
    const int h = labels.height(), w = labels.width();
    const uint32_t kmax = labels.max_label();
    Raster<float> out(h, w, 1, 0.0f);
    if (kmax == 0) return out;

    // Finite sentinel instead of +inf: keeps the parabola intersections in the
    // EDT well defined when a scanline has no sources at all.
    const double far = 1e15;
    std::vector<double> grid(static_cast<size_t>(h) * w);

    for (uint32_t k = 1; k <= kmax; ++k) {
        bool present = false;
        for (size_t i = 0; i < labels.size(); ++i) {
            bool in_k = labels.raw()[i] == k;
            grid[i] = in_k ? far : 0.0;
            present |= in_k;
        }
        if (!present) continue;

        squared_edt(grid, h, w);

        // The region beyond the canvas counts as background: clamp by the
        // straight-line distance to the nearest virtual outside pixel.
        double obj_max = 0.0;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (labels.at(y, x) != k) continue;
                double dist = std::sqrt(grid[static_cast<size_t>(y) * w + x]);
                double border = std::min(std::min(y + 1, h - y), std::min(x + 1, w - x));
                dist = std::min(dist, border);
                grid[static_cast<size_t>(y) * w + x] = dist;
                obj_max = std::max(obj_max, dist);
            }
        }
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (labels.at(y, x) == k)
                    out.at(0, y, x) = static_cast<float>(grid[static_cast<size_t>(y) * w + x] / obj_max);
    }
    return out;
}

NeighborGraph neighbor_graph(const LabelMap& labels, double d) {
    if (d <= 0) throw error("neighbor_graph: radius must be positive");
    const int h = labels.height(), w = labels.width();
    const uint32_t kmax = labels.max_label();
    NeighborGraph graph(kmax, d);
    if (kmax < 2) return graph;

    const double far = 1e15;
    const double d2 = d * d;
    std::vector<double> grid(static_cast<size_t>(h) * w);

    // One EDT per object k gives every pixel's distance to k; the minimum over
    // object j's pixels is the pair distance. O(K*N) instead of O(N^2).
    for (uint32_t k = 1; k <= kmax; ++k) {
        for (size_t i = 0; i < labels.size(); ++i)
            grid[i] = labels.raw()[i] == k ? 0.0 : far;
        squared_edt(grid, h, w);

        std::vector<double> min_d2(kmax + 1, far);
        for (size_t i = 0; i < labels.size(); ++i) {
            uint32_t j = labels.raw()[i];
            if (j > k) min_d2[j] = std::min(min_d2[j], grid[i]);
        }
        for (uint32_t j = k + 1; j <= kmax; ++j)
            if (min_d2[j] < d2) graph.add_edge(k, j);
    }
    return graph;
}

Raster<float> balance_weights(const LabelMap& labels) {
    const size_t n = labels.size();
    size_t n_fg = 0;
    for (uint32_t v : labels.raw()) n_fg += v > 0;
    const size_t n_bg = n - n_fg;

    Raster<float> w(labels.height(), labels.width(), 1, 1.0f);
    if (n_fg == 0 || n_bg == 0) return w;

    const float w_fg = static_cast<float>(n) / (2.0f * n_fg);
    const float w_bg = static_cast<float>(n) / (2.0f * n_bg);
    for (size_t i = 0; i < n; ++i)
        w.raw()[i] = labels.raw()[i] > 0 ? w_fg : w_bg;
    return w;
}

}  // namespace orthoseg
