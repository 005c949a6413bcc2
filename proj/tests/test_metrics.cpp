#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "orthoseg/metrics.hpp"

using namespace orthoseg;

namespace {

LabelMap map_of(const std::vector<std::vector<uint32_t>>& rows) {
    LabelMap m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) m.at(y, x) = rows[y][x];
    return m;
}

LabelMap random_partition(int h, int w, int objects, uint64_t seed) {
    return oracles::random_blob_labels(h, w, objects, seed);
}

}  // namespace

TEST_CASE("iou_matrix: identical, disjoint, partial") {
    LabelMap a = map_of({{1, 1, 0}, {0, 0, 0}});
    CHECK(iou_matrix(a, a)[0][0] == doctest::Approx(1.0));

    LabelMap b = map_of({{0, 0, 1}, {0, 0, 1}});
    CHECK(iou_matrix(a, b)[0][0] == 0.0);

    // gt: 10 pixels; pred covers 6 of them plus 2 extra -> 6/12
    LabelMap gt(4, 5, 0), pred(4, 5, 0);
    for (int x = 0; x < 5; ++x) {
        gt.at(0, x) = 1;
        gt.at(1, x) = 1;
    }
    for (int x = 0; x < 3; ++x) {
        pred.at(0, x) = 1;
        pred.at(1, x) = 1;
    }
    pred.at(2, 0) = 1;
    pred.at(2, 1) = 1;
    CHECK(iou_matrix(gt, pred)[0][0] == doctest::Approx(6.0 / 12.0));
}

TEST_CASE("ap_at: perfect prediction, partial overlap cases") {
    LabelMap m = random_partition(16, 16, 4, 1);
    for (double t : {0.5, 0.75, 0.9}) CHECK(ap_at(m, m, t) == doctest::Approx(1.0));

    // one gt object, one pred with IoU 0.6: counted at 0.5, gone at 0.7
    LabelMap gt(4, 5, 0), pred(4, 5, 0);
    for (int x = 0; x < 5; ++x) gt.at(0, x) = 1;         // 5 px
    for (int x = 2; x < 5; ++x) pred.at(0, x) = 1;       // 3 px inside
    // IoU = 3/5 = 0.6
    CHECK(ap_at(gt, pred, 0.5) == doctest::Approx(1.0));
    CHECK(ap_at(gt, pred, 0.7) == doctest::Approx(0.0));  // TP=0, FP=1, FN=1

    // 2 gt, 1 pred matching one of them at high IoU -> 1/(1+0+1)
    LabelMap gt2(6, 6, 0), pred2(6, 6, 0);
    for (int x = 0; x < 4; ++x) {
        gt2.at(0, x) = 1;
        pred2.at(0, x) = 1;
        gt2.at(4, x) = 2;
    }
    CHECK(ap_at(gt2, pred2, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("ap_at: empty conventions and threshold guard") {
    LabelMap empty(4, 4, 0);
    LabelMap some_pad(4, 4, 0);
    some_pad.at(0, 0) = 1;
    CHECK(ap_at(empty, empty, 0.5) == 1.0);
    CHECK(ap_at(empty, some_pad, 0.5) == 0.0);
    CHECK(ap_at(some_pad, empty, 0.5) == 0.0);
    CHECK_THROWS_AS(ap_at(empty, empty, 0.3), error);
}

TEST_CASE("ap_at: invariant under label permutation") {
    LabelMap gt = random_partition(16, 16, 5, 7);
    LabelMap pred = random_partition(16, 16, 4, 8);
    LabelMap gt_p = gt, pred_p = pred;
    uint32_t kg = gt.max_label(), kp = pred.max_label();
    for (uint32_t& v : gt_p.raw())
        if (v) v = kg + 1 - v;
    for (uint32_t& v : pred_p.raw())
        if (v) v = kp + 1 - v;
    for (double t : {0.5, 0.75})
        CHECK(ap_at(gt, pred, t) == doctest::Approx(ap_at(gt_p, pred_p, t)));
}

TEST_CASE("greedy matching equals brute-force optimal matching on random pairs") {
    for (uint64_t seed = 1; seed <= 50; ++seed) {
        LabelMap gt = random_partition(16, 16, 3 + seed % 4, seed * 2 + 1);
        LabelMap pred = random_partition(16, 16, 3 + (seed + 1) % 4, seed * 2 + 2);
        auto iou = iou_matrix(gt, pred);
        for (double t : {0.5, 0.75, 0.9}) {
            MatchResult match;
            ap_at(gt, pred, t, &match);
            std::vector<std::vector<char>> q(iou.size(),
                                             std::vector<char>(iou.empty() ? 0 : iou[0].size(), 0));
            for (size_t a = 0; a < iou.size(); ++a)
                for (size_t b = 0; b < iou[a].size(); ++b) q[a][b] = iou[a][b] > t;
            CHECK(match.tp == oracles::brute_max_matching(q));
        }
    }
}

TEST_CASE("mean_ap: arithmetic and monotonicity") {
    LabelMap gt = random_partition(16, 16, 4, 31);
    LabelMap pred = random_partition(16, 16, 4, 32);
    std::vector<double> ts = default_ap_thresholds();
    REQUIRE(ts.size() == 10);
    double acc = 0;
    for (double t : ts) acc += ap_at(gt, pred, t);
    CHECK(mean_ap(gt, pred, ts) == doctest::Approx(acc / 10));
    CHECK(ap_thresholds_to_090().size() == 9);

    for (size_t i = 1; i < ts.size(); ++i)
        CHECK(ap_at(gt, pred, ts[i]) <= ap_at(gt, pred, ts[i - 1]));
}

TEST_CASE("sbd/fbd/dic: identity and hand-counted fixtures") {
    LabelMap m = random_partition(16, 16, 4, 41);
    CHECK(sbd(m, m) == doctest::Approx(1.0));
    CHECK(fbd(m, m) == doctest::Approx(1.0));
    CHECK(dic(m, m).dic == 0);

    // pred merges two equal 2x2 gt squares (plus the 2-px gap row between
    // them) into one object
    LabelMap gt(2, 7, 0), pred(2, 7, 0);
    for (int y = 0; y < 2; ++y) {
        gt.at(y, 0) = 1;
        gt.at(y, 1) = 1;
        gt.at(y, 4) = 2;
        gt.at(y, 5) = 2;
        for (int x = 0; x < 6; ++x) pred.at(y, x) = 1;
    }
    // areas: each gt object 4, pred object 12, intersections 4 each
    // BD(gt->pred): each object best dice = 2*4/(4+12) = 0.5 -> 0.5
    // BD(pred->gt): 2*4/(16) = 0.5 -> SBD = 0.5
    CHECK(sbd(gt, pred) == doctest::Approx(0.5));
    CHECK(dic(gt, pred).dic == -1);
    CHECK(dic(gt, pred).abs_dic == 1);
    // FBD: fg(gt) = 8, fg(pred) = 12, inter = 8 -> 16/20
    CHECK(fbd(gt, pred) == doctest::Approx(16.0 / 20.0));

    // spurious 1-pixel extra object
    LabelMap pred2 = gt;
    pred2.at(1, 6) = 3;
    CHECK(dic(gt, pred2).dic == 1);
    CHECK(dic(gt, pred2).abs_dic == 1);

    // empty conventions
    LabelMap empty(2, 7, 0);
    CHECK(sbd(gt, empty) == 0.0);
    CHECK(fbd(empty, empty) == 1.0);
}

TEST_CASE("mean_angle_neighbors: orthogonal, identical, 60-degree fixtures") {
    LabelMap m(6, 9, 0);
    for (int y = 2; y < 5; ++y) {
        m.at(y, 1) = 1;
        m.at(y, 2) = 1;
        m.at(y, 4) = 2;
        m.at(y, 5) = 2;
        m.at(y, 7) = 3;
        m.at(y, 8) = 3;
    }
    NeighborGraph g = neighbor_graph(m, 20.0);  // all pairs adjacent
    REQUIRE(g.adjacent(1, 2));
    REQUIRE(g.adjacent(1, 3));
    REQUIRE(g.adjacent(2, 3));

    const size_t hw = m.size();
    auto fill = [&](Raster<float>& emb, uint32_t id, std::vector<float> v) {
        for (size_t i = 0; i < hw; ++i)
            if (m.raw()[i] == id)
                for (size_t c = 0; c < v.size(); ++c) emb.raw()[c * hw + i] = v[c];
    };

    Raster<float> emb(6, 9, 3, 0.0f);
    fill(emb, 0, {0, 0, 1});
    fill(emb, 1, {1, 0, 0});
    fill(emb, 2, {0, 1, 0});
    fill(emb, 3, {1, 0, 0});
    double bg_deg = -1;
    // pairs: (1,2)=90, (1,3)=0, (2,3)=90 -> mean 60; bg pairs 90 each
    auto man = mean_angle_neighbors(emb, m, g, &bg_deg);
    REQUIRE(man.has_value());
    CHECK(*man == doctest::Approx(60.0).epsilon(1e-4));
    CHECK(bg_deg == doctest::Approx(90.0).epsilon(1e-4));

    // three mutually adjacent at pairwise 60 degrees: the normalized
    // (1,1,0), (1,0,1), (0,1,1) have pairwise dot 1/2
    float s = 1.0f / std::sqrt(2.0f);
    fill(emb, 1, {s, s, 0});
    fill(emb, 2, {s, 0, s});
    fill(emb, 3, {0, s, s});
    man = mean_angle_neighbors(emb, m, g);
    CHECK(*man == doctest::Approx(60.0).epsilon(1e-4));

    // identical embeddings -> 0 degrees
    fill(emb, 1, {1, 0, 0});
    fill(emb, 2, {1, 0, 0});
    fill(emb, 3, {1, 0, 0});
    man = mean_angle_neighbors(emb, m, g);
    CHECK(*man == doctest::Approx(0.0));
}

TEST_CASE("evaluate_pair bundles the per-image metrics") {
    LabelMap m = random_partition(16, 16, 4, 90);
    EvalReport r = evaluate_pair(m, m, default_ap_thresholds());
    CHECK(r.mean_ap == doctest::Approx(1.0));
    CHECK(r.sbd == doctest::Approx(1.0));
    CHECK(r.fbd == doctest::Approx(1.0));
    CHECK(r.dic == 0);
}
