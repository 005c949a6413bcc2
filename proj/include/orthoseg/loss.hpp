#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "orthoseg/raster.hpp"
#include "orthoseg/targets.hpp"

// Training loss over the two network outputs.
//
//   L       = L_reg + lambda1 * (L_con + L_dis)
//   L_reg   = (1/N) sum_p w_p (pred_p - target_p)^2
//   L_con   = (1/N) sum_k sum_{p in k} w_p D(e_p, u_k)
//   L_dis   = (1/K) sum_k (1/|N(k)|) sum_{n in N(k)} |1 - D(u_k, u_n)|
//
// with D the cosine distance, u_k the normalized mean embedding of region k,
// and k running over the background region as well: background is one more
// object that neighbors every other. Gradients flow through the mean and its
// normalization (no detachment anywhere).

namespace orthoseg {

struct LossConfig {
    double lambda1 = 5.0;
    double neighbor_radius = 10.0;  // d, in pixels
    double epsilon = 1e-8;

    void validate() const {
        if (lambda1 < 0) throw error("LossConfig: lambda1 must be >= 0");
        if (neighbor_radius <= 0) throw error("LossConfig: neighbor_radius must be > 0");
        if (epsilon <= 0) throw error("LossConfig: epsilon must be > 0");
    }
};

template <typename T>
struct LossReport {
    T l_reg = 0, l_con = 0, l_dis = 0, l_emb = 0, l_total = 0;
    Raster<T> grad_embedding;  // dL_total/d(embedding map)
    Raster<T> grad_distance;   // dL_total/d(distance map)
};

// D(a, b) = 1 - a.b / (|a||b|): 0 parallel, 1 orthogonal, 2 antiparallel.
template <typename T>
T cosine_distance(const T* a, const T* b, int dim, double epsilon = 1e-8) {
    double na = 0, nb = 0, dot = 0;
    for (int i = 0; i < dim; ++i) {
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
        dot += static_cast<double>(a[i]) * b[i];
    }
    na = std::sqrt(na);
    nb = std::sqrt(nb);
    if (na <= epsilon || nb <= epsilon)
        throw degenerate_embedding_error("cosine_distance: vector norm below epsilon");
    return static_cast<T>(1.0 - dot / (na * nb));
}

template <typename T>
T cosine_distance(const std::vector<T>& a, const std::vector<T>& b, double epsilon = 1e-8) {
    if (a.size() != b.size()) throw error("cosine_distance: dimension mismatch");
    return cosine_distance(a.data(), b.data(), static_cast<int>(a.size()), epsilon);
}

// Unit-norm mean embedding per region id 0..K (mean first, then normalized).
// Entries for absent ids are empty vectors.
template <typename T>
struct MeanEmbeddings {
    std::vector<std::vector<T>> u;

    bool present(uint32_t id) const { return id < u.size() && !u[id].empty(); }
};

namespace detail {

// Per-region accumulation shared by mean_embeddings and embedding_loss:
// raw sums S_k, their norms and pixel counts. u_k = S_k/|S_k| (the mean and
// the sum normalize to the same direction).
template <typename T>
struct RegionSums {
    std::vector<std::vector<double>> sum;  // per id, dim entries
    std::vector<double> norm;              // |S_k|
    std::vector<size_t> count;             // M_k
    std::vector<std::vector<double>> unit; // u_k

    uint32_t max_id() const { return static_cast<uint32_t>(sum.size()) - 1; }
};

template <typename T>
RegionSums<T> region_sums(const Raster<T>& emb, const LabelMap& labels, double epsilon) {
    if (emb.height() != labels.height() || emb.width() != labels.width())
        throw error("embedding/labels extent mismatch");
    const int dim = emb.channels();
    const uint32_t kmax = labels.max_label();

    RegionSums<T> rs;
    rs.sum.assign(kmax + 1, {});
    rs.norm.assign(kmax + 1, 0.0);
    rs.count.assign(kmax + 1, 0);
    rs.unit.assign(kmax + 1, {});
    for (auto& s : rs.sum) s.assign(dim, 0.0);

    const size_t hw = labels.size();
    for (size_t i = 0; i < hw; ++i) {
        uint32_t k = labels.raw()[i];
        auto& s = rs.sum[k];
        for (int c = 0; c < dim; ++c) s[c] += emb.raw()[c * hw + i];
        ++rs.count[k];
    }
    for (uint32_t k = 0; k <= kmax; ++k) {
        if (rs.count[k] == 0) continue;
        double n2 = 0;
        for (double v : rs.sum[k]) n2 += v * v;
        rs.norm[k] = std::sqrt(n2);
        if (rs.norm[k] <= epsilon * rs.count[k])
            throw degenerate_embedding_error("mean embedding of region " + std::to_string(k) +
                                             " is degenerate");
        rs.unit[k].resize(dim);
        for (int c = 0; c < dim; ++c) rs.unit[k][c] = rs.sum[k][c] / rs.norm[k];
    }
    return rs;
}

}  // namespace detail

template <typename T>
MeanEmbeddings<T> mean_embeddings(const Raster<T>& emb, const LabelMap& labels,
                                  double epsilon = 1e-8) {
    auto rs = detail::region_sums(emb, labels, epsilon);
    MeanEmbeddings<T> me;
    me.u.resize(rs.unit.size());
    for (size_t k = 0; k < rs.unit.size(); ++k) {
        me.u[k].assign(rs.unit[k].begin(), rs.unit[k].end());
    }
    return me;
}

template <typename T>
struct EmbeddingLossResult {
    T l_con = 0, l_dis = 0;
    Raster<T> grad;  // d(l_con + l_dis)/d(embedding map)
};

template <typename T>
EmbeddingLossResult<T> embedding_loss(const Raster<T>& emb, const LabelMap& labels,
                                      const NeighborGraph& graph, const Raster<T>& weights,
                                      double epsilon = 1e-8) {
    const int dim = emb.channels();
    const size_t hw = labels.size();
    const double inv_n = 1.0 / static_cast<double>(hw);
    auto rs = detail::region_sums(emb, labels, epsilon);
    const uint32_t kmax = rs.max_id();

    EmbeddingLossResult<T> res;
    res.grad = Raster<T>(emb.height(), emb.width(), dim, T(0));

    // ---- consistency term ----
    // Per pixel: w_p (1 - ep.u_k/|ep|). The direct part is orthogonal to e_p;
    // the indirect part flows through the region sum S_k and is identical for
    // every pixel of the region.
    std::vector<std::vector<double>> grad_sum_con(kmax + 1);  // dL_con/dS_k
    for (uint32_t k = 0; k <= kmax; ++k)
        if (rs.count[k]) grad_sum_con[k].assign(dim, 0.0);

    double l_con = 0;
    std::vector<double> ep(dim);
    for (size_t i = 0; i < hw; ++i) {
        uint32_t k = labels.raw()[i];
        const auto& u = rs.unit[k];
        double ne2 = 0;
        for (int c = 0; c < dim; ++c) {
            ep[c] = emb.raw()[c * hw + i];
            ne2 += ep[c] * ep[c];
        }
        double ne = std::sqrt(ne2);
        if (ne <= epsilon)
            throw degenerate_embedding_error("pixel embedding norm below epsilon");
        double dot = 0;
        for (int c = 0; c < dim; ++c) dot += ep[c] * u[c];
        double cosv = dot / ne;
        double w = weights.raw()[i];
        l_con += w * (1.0 - cosv);

        // direct: -(w/N) (u - (e^.u) e^)/|e|
        double scale = w * inv_n / ne;
        for (int c = 0; c < dim; ++c)
            res.grad.raw()[c * hw + i] -= static_cast<T>(scale * (u[c] - cosv * ep[c] / ne));
        // via S_k: -(w/N) (e^ - (e^.u) u)/|S_k|
        double s2 = w * inv_n / rs.norm[k];
        auto& gs = grad_sum_con[k];
        for (int c = 0; c < dim; ++c) gs[c] -= s2 * (ep[c] / ne - cosv * u[c]);
    }
    l_con *= inv_n;

    // ---- discriminative term ----
    // Regions present in the labels; the graph may additionally know an empty
    // background, which simply contributes no terms.
    std::vector<uint32_t> present;
    for (uint32_t k = 0; k <= kmax; ++k)
        if (rs.count[k]) present.push_back(k);
    const double inv_k = present.empty() ? 0.0 : 1.0 / static_cast<double>(present.size());

    std::vector<std::vector<double>> grad_sum_dis(kmax + 1);
    for (uint32_t k : present) grad_sum_dis[k].assign(dim, 0.0);

    double l_dis = 0;
    for (uint32_t k : present) {
        std::vector<uint32_t> nbrs;
        if (k < graph.object_count() + 1)
            for (uint32_t n : graph.neighbors(k))
                if (n <= kmax && rs.count[n]) nbrs.push_back(n);
        if (nbrs.empty()) continue;
        const double beta = inv_k / static_cast<double>(nbrs.size());
        for (uint32_t n : nbrs) {
            const auto& uk = rs.unit[k];
            const auto& un = rs.unit[n];
            double cosv = 0;
            for (int c = 0; c < dim; ++c) cosv += uk[c] * un[c];
            l_dis += beta * std::abs(cosv);
            // d|u_k.u_n|/dS_k = sign(cos) (u_n - cos u_k)/|S_k|
            double sgn = cosv > 0 ? 1.0 : (cosv < 0 ? -1.0 : 0.0);
            auto& gk = grad_sum_dis[k];
            double sk = beta * sgn / rs.norm[k];
            for (int c = 0; c < dim; ++c) gk[c] += sk * (un[c] - cosv * uk[c]);
            auto& gn = grad_sum_dis[n];
            double sn = beta * sgn / rs.norm[n];
            for (int c = 0; c < dim; ++c) gn[c] += sn * (uk[c] - cosv * un[c]);
        }
    }

    // Scatter the per-region sum gradients back to pixels (dS_k/de_p = I).
    for (size_t i = 0; i < hw; ++i) {
        uint32_t k = labels.raw()[i];
        const auto& gc = grad_sum_con[k];
        const auto& gd = grad_sum_dis[k];
        for (int c = 0; c < dim; ++c)
            res.grad.raw()[c * hw + i] += static_cast<T>(gc[c] + gd[c]);
    }

    res.l_con = static_cast<T>(l_con);
    res.l_dis = static_cast<T>(l_dis);
    return res;
}

template <typename T>
struct RegressionLossResult {
    T l_reg = 0;
    Raster<T> grad;  // dl_reg/d(pred)
};

// (1/N) sum w_p (pred_p - target_p)^2.
template <typename T>
RegressionLossResult<T> regression_loss(const Raster<T>& pred, const Raster<T>& target,
                                        const Raster<T>& weights) {
    if (!pred.same_shape(target)) throw error("regression_loss: shape mismatch");
    if (!pred.same_extent(weights)) throw error("regression_loss: weight extent mismatch");
    RegressionLossResult<T> res;
    res.grad = Raster<T>(pred.height(), pred.width(), 1);
    const size_t n = pred.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double acc = 0;
    for (size_t i = 0; i < n; ++i) {
        double r = static_cast<double>(pred.raw()[i]) - target.raw()[i];
        double w = weights.raw()[i];
        acc += w * r * r;
        res.grad.raw()[i] = static_cast<T>(2.0 * w * r * inv_n);
    }
    res.l_reg = static_cast<T>(acc * inv_n);
    return res;
}

// Full loss; the regression target is derived from the labels, so callers
// only ever pass ground truth in one form.
template <typename T>
LossReport<T> total_loss(const Raster<T>& emb, const Raster<T>& pred_dist,
                         const LabelMap& labels, const NeighborGraph& graph,
                         const Raster<T>& weights, const LossConfig& cfg) {
    cfg.validate();
    Raster<T> target = distance_target(labels).template cast<T>();
    auto reg = regression_loss(pred_dist, target, weights);
    auto embl = embedding_loss(emb, labels, graph, weights, cfg.epsilon);

    LossReport<T> rep;
    rep.l_reg = reg.l_reg;
    rep.l_con = embl.l_con;
    rep.l_dis = embl.l_dis;
    rep.l_emb = embl.l_con + embl.l_dis;
    rep.l_total = static_cast<T>(reg.l_reg + cfg.lambda1 * rep.l_emb);
    rep.grad_distance = std::move(reg.grad);
    rep.grad_embedding = std::move(embl.grad);
    const T lam = static_cast<T>(cfg.lambda1);
    for (T& v : rep.grad_embedding.raw()) v *= lam;
    return rep;
}

}  // namespace orthoseg
