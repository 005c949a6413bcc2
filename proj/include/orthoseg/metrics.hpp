#pragma once

#include <optional>
#include <vector>

#include "orthoseg/loss.hpp"
#include "orthoseg/raster.hpp"
#include "orthoseg/targets.hpp"

namespace orthoseg {

// One-to-one matching at a fixed IoU threshold.
struct MatchResult {
    struct Pair {
        uint32_t gt, pred;
        double iou;
    };
    std::vector<Pair> pairs;
    int tp = 0, fp = 0, fn = 0;
};

struct DicResult {
    int dic = 0;      // pred count - gt count; merging drives it negative
    int abs_dic = 0;  // |dic|
};

// IoU per (gt object, pred object); row a is gt id a+1, column b is pred id
// b+1. Background is excluded from both sets.
std::vector<std::vector<double>> iou_matrix(const LabelMap& gt, const LabelMap& pred);

// DSB2018-style AP: pairs with IoU > threshold matched greedily in descending
// IoU (one-to-one), ap = TP/(TP+FP+FN). For thresholds >= 0.5 the greedy
// matching is optimal because each object has at most one partner above 0.5.
// Empty gt and empty pred give 1; empty gt with predictions gives 0.
double ap_at(const LabelMap& gt, const LabelMap& pred, double threshold,
             MatchResult* match = nullptr);

double mean_ap(const LabelMap& gt, const LabelMap& pred, const std::vector<double>& thresholds);

// 0.5, 0.55, .., 0.95 (10 values).
std::vector<double> default_ap_thresholds();
// 0.5, .., 0.9 (9 values).
std::vector<double> ap_thresholds_to_090();

// Symmetric best dice: min over both directions of the mean best-dice of one
// object set against the other. Best dice over an empty set is 0.
double sbd(const LabelMap& gt, const LabelMap& pred);

// Dice of the two foreground masks; 1 when both are empty.
double fbd(const LabelMap& gt, const LabelMap& pred);

DicResult dic(const LabelMap& gt, const LabelMap& pred);

// Mean pairwise angle (degrees) between mean embeddings of neighboring
// objects; background pairs are excluded from the returned value and
// averaged separately into *background_mean_deg when requested. Pairs where
// either region is absent are skipped; returns nullopt if no pair remains.
std::optional<double> mean_angle_neighbors(const Raster<float>& emb, const LabelMap& labels,
                                           const NeighborGraph& graph,
                                           double* background_mean_deg = nullptr);

// Per-image evaluation row as emitted by the eval CLI.
struct EvalReport {
    std::vector<double> ap_per_threshold;
    double mean_ap = 0;
    double sbd = 0;
    double fbd = 0;
    int dic = 0;
    int abs_dic = 0;
    std::optional<double> man_degrees;
};

EvalReport evaluate_pair(const LabelMap& gt, const LabelMap& pred,
                         const std::vector<double>& thresholds);

}  // namespace orthoseg
