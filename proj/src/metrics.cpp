#include "orthoseg/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace orthoseg {

namespace {

// Joint pixel counts between the two labelings: areas plus the dense
// intersection table (objects only, one pass).
struct Overlap {
    uint32_t k_gt = 0, k_pred = 0;                // max ids
    size_t n_gt = 0, n_pred = 0;                  // objects actually present
    std::vector<size_t> area_gt, area_pred;       // indexed by id
    std::vector<std::vector<size_t>> inter;       // [gt id][pred id], objects at 1..K
    size_t fg_gt = 0, fg_pred = 0, fg_inter = 0;  // foreground masks
};

Overlap overlap_counts(const LabelMap& gt, const LabelMap& pred) {
    if (!gt.same_extent(pred)) throw error("metrics: label map extent mismatch");
    Overlap o;
    o.k_gt = gt.max_label();
    o.k_pred = pred.max_label();
    o.area_gt.assign(o.k_gt + 1, 0);
    o.area_pred.assign(o.k_pred + 1, 0);
    o.inter.assign(o.k_gt + 1, std::vector<size_t>(o.k_pred + 1, 0));
    for (size_t i = 0; i < gt.size(); ++i) {
        uint32_t a = gt.raw()[i], b = pred.raw()[i];
        ++o.area_gt[a];
        ++o.area_pred[b];
        ++o.inter[a][b];
        o.fg_gt += a > 0;
        o.fg_pred += b > 0;
        o.fg_inter += a > 0 && b > 0;
    }
    // Ids with no pixels (non-sequential input) are not objects.
    for (uint32_t a = 1; a <= o.k_gt; ++a) o.n_gt += o.area_gt[a] > 0;
    for (uint32_t b = 1; b <= o.k_pred; ++b) o.n_pred += o.area_pred[b] > 0;
    return o;
}

}  // namespace

std::vector<std::vector<double>> iou_matrix(const LabelMap& gt, const LabelMap& pred) {
    Overlap o = overlap_counts(gt, pred);
    std::vector<std::vector<double>> m(o.k_gt, std::vector<double>(o.k_pred, 0.0));
    for (uint32_t a = 1; a <= o.k_gt; ++a) {
        for (uint32_t b = 1; b <= o.k_pred; ++b) {
            size_t inter = o.inter[a][b];
            size_t uni = o.area_gt[a] + o.area_pred[b] - inter;
            m[a - 1][b - 1] = uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
        }
    }
    return m;
}

double ap_at(const LabelMap& gt, const LabelMap& pred, double threshold, MatchResult* match) {
    if (threshold < 0.5) throw error("ap_at: threshold must be >= 0.5");
    Overlap o = overlap_counts(gt, pred);

    struct Cand {
        double iou;
        uint32_t gt, pred;
    };
    std::vector<Cand> cands;
    for (uint32_t a = 1; a <= o.k_gt; ++a) {
        for (uint32_t b = 1; b <= o.k_pred; ++b) {
            size_t inter = o.inter[a][b];
            if (inter == 0) continue;
            double iou = static_cast<double>(inter) / (o.area_gt[a] + o.area_pred[b] - inter);
            if (iou > threshold) cands.push_back({iou, a, b});
        }
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& l, const Cand& r) {
        if (l.iou != r.iou) return l.iou > r.iou;
        if (l.gt != r.gt) return l.gt < r.gt;
        return l.pred < r.pred;
    });

    MatchResult res;
    std::vector<char> gt_used(o.k_gt + 1, 0), pred_used(o.k_pred + 1, 0);
    for (const Cand& c : cands) {
        if (gt_used[c.gt] || pred_used[c.pred]) continue;
        gt_used[c.gt] = pred_used[c.pred] = 1;
        res.pairs.push_back({c.gt, c.pred, c.iou});
    }
    res.tp = static_cast<int>(res.pairs.size());
    res.fp = static_cast<int>(o.n_pred) - res.tp;
    res.fn = static_cast<int>(o.n_gt) - res.tp;
    if (match) *match = res;

    if (o.n_gt == 0 && o.n_pred == 0) return 1.0;
    return static_cast<double>(res.tp) / (res.tp + res.fp + res.fn);
}

double mean_ap(const LabelMap& gt, const LabelMap& pred, const std::vector<double>& thresholds) {
    if (thresholds.empty()) throw error("mean_ap: empty threshold list");
    double acc = 0;
    for (double t : thresholds) acc += ap_at(gt, pred, t);
    return acc / thresholds.size();
}

std::vector<double> default_ap_thresholds() {
    std::vector<double> t;
    for (int i = 0; i < 10; ++i) t.push_back(0.5 + 0.05 * i);
    return t;
}

std::vector<double> ap_thresholds_to_090() {
    std::vector<double> t;
    for (int i = 0; i < 9; ++i) t.push_back(0.5 + 0.05 * i);
    return t;
}

namespace {

// Mean over present objects of A of the best dice against any object of B.
double best_dice(const Overlap& o, bool gt_to_pred) {
    uint32_t ka = gt_to_pred ? o.k_gt : o.k_pred;
    uint32_t kb = gt_to_pred ? o.k_pred : o.k_gt;
    size_t na = gt_to_pred ? o.n_gt : o.n_pred;
    if (na == 0) return 0.0;
    double acc = 0;
    for (uint32_t a = 1; a <= ka; ++a) {
        size_t area_a = gt_to_pred ? o.area_gt[a] : o.area_pred[a];
        if (area_a == 0) continue;
        double best = 0;
        for (uint32_t b = 1; b <= kb; ++b) {
            size_t inter = gt_to_pred ? o.inter[a][b] : o.inter[b][a];
            size_t area_b = gt_to_pred ? o.area_pred[b] : o.area_gt[b];
            if (area_b == 0) continue;
            best = std::max(best, 2.0 * inter / (area_a + area_b));
        }
        acc += best;
    }
    return acc / na;
}

}  // namespace

double sbd(const LabelMap& gt, const LabelMap& pred) {
    Overlap o = overlap_counts(gt, pred);
    return std::min(best_dice(o, true), best_dice(o, false));
}

double fbd(const LabelMap& gt, const LabelMap& pred) {
    Overlap o = overlap_counts(gt, pred);
    if (o.fg_gt == 0 && o.fg_pred == 0) return 1.0;
    return 2.0 * o.fg_inter / static_cast<double>(o.fg_gt + o.fg_pred);
}

DicResult dic(const LabelMap& gt, const LabelMap& pred) {
    Overlap o = overlap_counts(gt, pred);
    DicResult r;
    r.dic = static_cast<int>(o.n_pred) - static_cast<int>(o.n_gt);
    r.abs_dic = std::abs(r.dic);
    return r;
}

std::optional<double> mean_angle_neighbors(const Raster<float>& emb, const LabelMap& labels,
                                           const NeighborGraph& graph,
                                           double* background_mean_deg) {
    MeanEmbeddings<float> me = mean_embeddings(emb, labels);
    constexpr double rad2deg = 180.0 / 3.14159265358979323846;

    double obj_acc = 0, bg_acc = 0;
    int obj_n = 0, bg_n = 0;
    for (const auto& [a, b] : graph.edges()) {
        if (!me.present(a) || !me.present(b)) continue;
        double dot = 0;
        for (size_t c = 0; c < me.u[a].size(); ++c)
            dot += static_cast<double>(me.u[a][c]) * me.u[b][c];
        dot = std::clamp(dot, -1.0, 1.0);
        double deg = std::acos(dot) * rad2deg;
        if (a == 0 || b == 0) {
            bg_acc += deg;
            ++bg_n;
        } else {
            obj_acc += deg;
            ++obj_n;
        }
    }
    if (background_mean_deg) *background_mean_deg = bg_n ? bg_acc / bg_n : 0.0;
    if (obj_n == 0) return std::nullopt;
    return obj_acc / obj_n;
}

EvalReport evaluate_pair(const LabelMap& gt, const LabelMap& pred,
                         const std::vector<double>& thresholds) {
    EvalReport r;
    for (double t : thresholds) r.ap_per_threshold.push_back(ap_at(gt, pred, t));
    double acc = 0;
    for (double v : r.ap_per_threshold) acc += v;
    r.mean_ap = acc / r.ap_per_threshold.size();
    r.sbd = sbd(gt, pred);
    r.fbd = fbd(gt, pred);
    DicResult d = dic(gt, pred);
    r.dic = d.dic;
    r.abs_dic = d.abs_dic;
    return r;
}

}  // namespace orthoseg
