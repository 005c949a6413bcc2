#include "orthoseg/postprocess.hpp"

#include <cmath>
#include <vector>

namespace orthoseg {

LabelMap extract_seeds(const Raster<float>& dist, const PostprocessConfig& cfg) {
    cfg.validate();
    if (dist.channels() != 1) throw error("extract_seeds: distance map must be single-channel");
    Mask above(dist.height(), dist.width(), 1);
    for (size_t i = 0; i < dist.size(); ++i)
        above.raw()[i] = dist.raw()[i] > cfg.t_c ? 1 : 0;

    LabelMap comps = connected_components(above, Connectivity::four);
    if (cfg.min_seed_size > 1) {
        std::vector<size_t> sizes = comps.label_sizes();
        for (uint32_t& v : comps.raw())
            if (v != 0 && sizes[v] < static_cast<size_t>(cfg.min_seed_size)) v = 0;
        comps = relabel_sequential(comps);
    }
    return comps;
}

namespace {

struct UnitField {
    std::vector<float> dir;      // unit vectors, planar like the input
    std::vector<uint8_t> valid;  // 0 where the pixel embedding is degenerate
};

UnitField normalize_field(const Raster<float>& emb, double epsilon) {
    const size_t hw = emb.plane_size();
    const int dim = emb.channels();
    UnitField f;
    f.dir.assign(emb.size(), 0.0f);
    f.valid.assign(hw, 1);
    for (size_t i = 0; i < hw; ++i) {
        double n2 = 0;
        for (int c = 0; c < dim; ++c) {
            double v = emb.raw()[c * hw + i];
            n2 += v * v;
        }
        double n = std::sqrt(n2);
        if (n <= epsilon) {
            f.valid[i] = 0;
            continue;
        }
        for (int c = 0; c < dim; ++c)
            f.dir[c * hw + i] = static_cast<float>(emb.raw()[c * hw + i] / n);
    }
    return f;
}

}  // namespace

LabelMap seed_grow(const Raster<float>& emb, const LabelMap& seeds,
                   const PostprocessConfig& cfg, GrowStats* stats) {
    cfg.validate();
    if (emb.height() != seeds.height() || emb.width() != seeds.width())
        throw error("seed_grow: embedding/seed extent mismatch");
    const int h = seeds.height(), w = seeds.width(), dim = emb.channels();
    const size_t hw = seeds.size();
    const double epsilon = 1e-8;
    const int max_iter = cfg.max_iterations > 0 ? cfg.max_iterations : 10 * std::max(h, w);

    GrowStats local;
    UnitField field = normalize_field(emb, epsilon);
    for (size_t i = 0; i < hw; ++i)
        if (!field.valid[i]) ++local.degenerate_pixels;

    // Frozen mean embedding per seed, from the seed region only.
    const uint32_t kmax = seeds.max_label();
    std::vector<std::vector<double>> mean(kmax + 1);
    std::vector<uint8_t> grower(kmax + 1, 0);
    for (uint32_t k = 1; k <= kmax; ++k) mean[k].assign(dim, 0.0);
    for (size_t i = 0; i < hw; ++i) {
        uint32_t k = seeds.raw()[i];
        if (k == 0) continue;
        for (int c = 0; c < dim; ++c) mean[k][c] += emb.raw()[c * hw + i];
    }
    for (uint32_t k = 1; k <= kmax; ++k) {
        double n2 = 0;
        for (double v : mean[k]) n2 += v * v;
        double n = std::sqrt(n2);
        if (n <= epsilon) {
            ++local.degenerate_seeds;
            continue;  // seed keeps its pixels but cannot grow
        }
        for (double& v : mean[k]) v /= n;
        grower[k] = 1;
    }

    LabelMap assign = seeds;
    static const int off8[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                   {0, 1},   {1, -1}, {1, 0},  {1, 1}};

    // Cosine distance of a unit pixel vector to a unit seed mean.
    auto caccept = [&](size_t i, uint32_t k, float& cd) {
        if (!field.valid[i] || !grower[k]) return false;
        double dot = 0;
        for (int c = 0; c < dim; ++c) dot += field.dir[c * hw + i] * mean[k][c];
        cd = static_cast<float>(1.0 - dot);
        return cd < cfg.t_e;
    };

    std::vector<std::pair<size_t, uint32_t>> additions;
    for (int iter = 0; iter < max_iter; ++iter) {
        additions.clear();
        // Claims are evaluated against the state at iteration start, so the
        // scan order does not influence the result.
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                size_t i = static_cast<size_t>(y) * w + x;
                if (assign.raw()[i] != 0) continue;
                float best_cd = 0;
                uint32_t best_k = 0;
                for (const auto& o : off8) {
                    int ny = y + o[0], nx = x + o[1];
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    uint32_t k = assign.at(ny, nx);
                    if (k == 0 || k == best_k) continue;
                    float cd;
                    if (!caccept(i, k, cd)) continue;
                    if (best_k == 0 || cd < best_cd || (cd == best_cd && k < best_k)) {
                        best_cd = cd;
                        best_k = k;
                    }
                }
                if (best_k != 0) additions.emplace_back(i, best_k);
            }
        }
        if (additions.empty()) break;
        for (const auto& [i, k] : additions) assign.raw()[i] = k;
        local.iterations = iter + 1;
    }

    if (stats) *stats = local;
    return assign;
}

LabelMap mean_shift_reference(const Raster<float>& emb, const Mask& foreground,
                              float bandwidth) {
    if (emb.height() > 128 || emb.width() > 128)
        throw error("mean_shift_reference: refusing images larger than 128x128");
    if (emb.height() != foreground.height() || emb.width() != foreground.width())
        throw error("mean_shift_reference: extent mismatch");
    if (bandwidth <= 0) throw error("mean_shift_reference: bandwidth must be positive");

    const int dim = emb.channels();
    const size_t hw = emb.plane_size();
    UnitField field = normalize_field(emb, 1e-8);

    std::vector<size_t> pix;  // row-major foreground order
    for (size_t i = 0; i < hw; ++i)
        if (foreground.raw()[i] && field.valid[i]) pix.push_back(i);
    const size_t n = pix.size();

    LabelMap out(emb.height(), emb.width(), 0);
    if (n == 0) return out;

    // Points never move; modes do.
    std::vector<double> pts(n * dim), modes(n * dim);
    for (size_t j = 0; j < n; ++j)
        for (int c = 0; c < dim; ++c)
            pts[j * dim + c] = field.dir[c * hw + pix[j]];
    modes = pts;

    const double accept = 1.0 - static_cast<double>(bandwidth);  // dot threshold
    std::vector<double> next(dim);
    for (int iter = 0; iter < 100; ++iter) {
        double max_shift = 0;
        for (size_t j = 0; j < n; ++j) {
            std::fill(next.begin(), next.end(), 0.0);
            for (size_t q = 0; q < n; ++q) {
                double dot = 0;
                for (int c = 0; c < dim; ++c) dot += modes[j * dim + c] * pts[q * dim + c];
                if (dot > accept)
                    for (int c = 0; c < dim; ++c) next[c] += pts[q * dim + c];
            }
            double n2 = 0;
            for (double v : next) n2 += v * v;
            double norm = std::sqrt(n2);
            if (norm <= 1e-12) continue;  // empty window, keep the mode
            double dot = 0;
            for (int c = 0; c < dim; ++c) {
                next[c] /= norm;
                dot += next[c] * modes[j * dim + c];
            }
            max_shift = std::max(max_shift, 1.0 - dot);
            for (int c = 0; c < dim; ++c) modes[j * dim + c] = next[c];
        }
        if (max_shift < 1e-10) break;
    }

    // Union modes with mutual cosine distance < bandwidth/2; components are
    // the clusters, labeled by first row-major appearance.
    std::vector<size_t> parent(n);
    for (size_t j = 0; j < n; ++j) parent[j] = j;
    auto find = [&](size_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    };
    const double merge_dot = 1.0 - bandwidth / 2.0;
    for (size_t a = 0; a < n; ++a)
        for (size_t b = a + 1; b < n; ++b) {
            double dot = 0;
            for (int c = 0; c < dim; ++c) dot += modes[a * dim + c] * modes[b * dim + c];
            if (dot > merge_dot) {
                size_t ra = find(a), rb = find(b);
                if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
            }
        }

    std::vector<uint32_t> cluster_id(n, 0);
    uint32_t next_id = 0;
    for (size_t j = 0; j < n; ++j) {
        size_t r = find(j);
        if (cluster_id[r] == 0 && r == j) cluster_id[r] = ++next_id;
        out.raw()[pix[j]] = cluster_id[find(j)];
    }
    return out;
}

LabelMap segment(const Raster<float>& emb, const Raster<float>& dist,
                 const PostprocessConfig& cfg, GrowStats* stats) {
    if (emb.height() != dist.height() || emb.width() != dist.width())
        throw error("segment: embedding/distance extent mismatch");
    return seed_grow(emb, extract_seeds(dist, cfg), cfg, stats);
}

}  // namespace orthoseg
