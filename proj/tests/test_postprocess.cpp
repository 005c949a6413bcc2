#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>
#include <tuple>

#include "oracles.hpp"
#include "orthoseg/metrics.hpp"
#include "orthoseg/postprocess.hpp"
#include "orthoseg/synthdata.hpp"
#include "orthoseg/targets.hpp"

using namespace orthoseg;

namespace {

// fraction of foreground pixels on which two labelings agree under the best
// greedy overlap bijection
double partition_agreement(const LabelMap& a, const LabelMap& b) {
    std::map<std::pair<uint32_t, uint32_t>, size_t> joint;
    size_t fg = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a.raw()[i] == 0 && b.raw()[i] == 0) continue;
        ++fg;
        joint[{a.raw()[i], b.raw()[i]}]++;
    }
    if (fg == 0) return 1.0;
    std::vector<std::tuple<size_t, uint32_t, uint32_t>> cells;
    for (auto& [k, v] : joint) cells.emplace_back(v, k.first, k.second);
    std::sort(cells.rbegin(), cells.rend());
    std::set<uint32_t> used_a, used_b;
    size_t agree = 0;
    for (auto& [v, la, lb] : cells) {
        if (la == 0 || lb == 0) continue;
        if (used_a.count(la) || used_b.count(lb)) continue;
        used_a.insert(la);
        used_b.insert(lb);
        agree += v;
    }
    return static_cast<double>(agree) / fg;
}

}  // namespace

TEST_CASE("extract_seeds: empty map, threshold behavior, size filter") {
    PostprocessConfig cfg;
    Raster<float> zero(8, 8, 1, 0.0f);
    CHECK(extract_seeds(zero, cfg).max_label() == 0);

    Raster<float> d(8, 8, 1, 0.0f);
    d.at(0, 1, 1) = 0.9f;
    d.at(0, 1, 2) = 0.8f;
    d.at(0, 1, 3) = 0.75f;
    cfg.min_seed_size = 5;
    CHECK(extract_seeds(d, cfg).max_label() == 0);  // 3 pixels < 5
    cfg.min_seed_size = 1;
    LabelMap s = extract_seeds(d, cfg);
    CHECK(s.max_label() == 1);
    CHECK(s.at(1, 1) == 1);
}

TEST_CASE("extract_seeds: ground-truth distance of two separated disks") {
    SceneConfig sc;
    sc.width = sc.height = 48;
    sc.min_objects = sc.max_objects = 2;
    sc.touch_probability = 0.0;
    sc.min_radius = 6;
    sc.max_radius = 8;
    sc.noise_sigma = 0;
    sc.seed = 21;
    Scene scene = generate_scene(sc);
    REQUIRE(scene.labels.max_label() == 2);

    PostprocessConfig cfg;
    LabelMap seeds = extract_seeds(distance_target(scene.labels), cfg);
    CHECK(seeds.max_label() == 2);
    // each seed lies inside its own object
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x)
            if (seeds.at(y, x) != 0) CHECK(scene.labels.at(y, x) != 0);
}

TEST_CASE("seed_grow: orthogonal disk against background stays exact") {
    LabelMap m(16, 16, 0);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
            if (std::hypot(y - 8, x - 8) <= 5) m.at(y, x) = 1;
    Raster<float> emb = oracles::one_hot_embedding<float>(m, 2);

    LabelMap seeds(16, 16, 0);
    seeds.at(8, 8) = 1;
    PostprocessConfig cfg;
    LabelMap grown = seed_grow(emb, seeds, cfg);
    CHECK(grown == m);
}

TEST_CASE("seed_grow: touching rectangles with orthogonal embeddings split exactly") {
    LabelMap m(12, 16, 0);
    for (int y = 2; y < 10; ++y) {
        for (int x = 2; x < 8; ++x) m.at(y, x) = 1;
        for (int x = 8; x < 14; ++x) m.at(y, x) = 2;
    }
    Raster<float> emb = oracles::one_hot_embedding<float>(m, 3);
    LabelMap seeds(12, 16, 0);
    seeds.at(5, 4) = 1;
    seeds.at(5, 11) = 2;
    PostprocessConfig cfg;
    LabelMap grown = seed_grow(emb, seeds, cfg);
    CHECK(grown == m);
}

TEST_CASE("seed_grow: no seeds, monotone growth, seeds never overwritten") {
    Raster<float> emb(8, 8, 2, 1.0f);
    LabelMap none(8, 8, 0);
    PostprocessConfig cfg;
    CHECK(seed_grow(emb, none, cfg).max_label() == 0);

    // two seeds with identical embeddings: conflicts resolve by smallest
    // cosine distance then lowest id, and seed pixels stay put
    LabelMap seeds(8, 8, 0);
    seeds.at(3, 1) = 1;
    seeds.at(3, 6) = 2;
    LabelMap grown = seed_grow(emb, seeds, cfg);
    CHECK(grown.at(3, 1) == 1);
    CHECK(grown.at(3, 6) == 2);
    for (uint32_t v : grown.raw()) CHECK(v != 0);  // everything claimed eventually
}

TEST_CASE("seed_grow: zero-norm pixels stay unassigned and are counted") {
    Raster<float> emb(6, 6, 2, 0.0f);
    LabelMap m(6, 6, 1);
    for (size_t i = 0; i < m.size(); ++i) emb.raw()[i] = 1.0f;  // channel 0 = 1
    emb.at(0, 2, 3) = 0.0f;  // dead pixel
    LabelMap seeds(6, 6, 0);
    seeds.at(0, 0) = 1;
    PostprocessConfig cfg;
    GrowStats stats;
    LabelMap grown = seed_grow(emb, seeds, cfg, &stats);
    CHECK(stats.degenerate_pixels == 1);
    CHECK(grown.at(2, 3) == 0);
    CHECK(grown.at(5, 5) == 1);
}

TEST_CASE("mean_shift_reference: basic fixtures") {
    // two orthogonal groups
    LabelMap m(8, 8, 0);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 4; ++x) m.at(y, x) = 1;
    for (int y = 0; y < 8; ++y)
        for (int x = 4; x < 8; ++x) m.at(y, x) = 2;
    Raster<float> emb = oracles::one_hot_embedding<float>(m, 3, 0.02, 5);
    Mask fg(8, 8, 1, 1);
    LabelMap clusters = mean_shift_reference(emb, fg, 0.3f);
    CHECK(clusters.max_label() == 2);
    CHECK(partition_agreement(clusters, m) == doctest::Approx(1.0));

    // identical embeddings collapse to one cluster
    Raster<float> same(8, 8, 3, 0.0f);
    for (size_t i = 0; i < same.plane_size(); ++i) same.raw()[i] = 1.0f;
    CHECK(mean_shift_reference(same, fg, 0.3f).max_label() == 1);

    // empty mask
    Mask none(8, 8, 1, 0);
    CHECK(mean_shift_reference(emb, none, 0.3f).max_label() == 0);

    Raster<float> big(200, 200, 2, 1.0f);
    Mask bigm(200, 200, 1, 1);
    CHECK_THROWS_AS(mean_shift_reference(big, bigm, 0.3f), error);
}

TEST_CASE("segment: ground-truth-derived inputs reproduce the labels") {
    SceneConfig sc;
    sc.width = sc.height = 64;
    sc.min_objects = sc.max_objects = 5;
    sc.touch_probability = 0.7;
    sc.min_radius = 6;
    sc.noise_sigma = 0;
    sc.seed = 33;
    Scene scene = generate_scene(sc);
    const uint32_t k = scene.labels.max_label();
    REQUIRE(k >= 2);

    Raster<float> emb = oracles::one_hot_embedding<float>(scene.labels, static_cast<int>(k) + 1);
    Raster<float> dist = distance_target(scene.labels);
    PostprocessConfig cfg;
    LabelMap seg = segment(emb, dist, cfg);

    REQUIRE(seg.max_label() == k);
    // per-object IoU must be 1 up to permutation: use greedy matching at 0.5
    MatchResult match;
    ap_at(scene.labels, seg, 0.5, &match);
    CHECK(match.tp == static_cast<int>(k));
    for (const auto& p : match.pairs) CHECK(p.iou == doctest::Approx(1.0));

    // all-zero distance map -> empty segmentation
    Raster<float> zero(64, 64, 1, 0.0f);
    CHECK(segment(emb, zero, cfg).max_label() == 0);
}

TEST_CASE("seed_grow and mean_shift agree on orthogonal cluster fixtures") {
    for (uint64_t seed : {101ull, 102ull, 103ull}) {
        SceneConfig sc;
        sc.width = sc.height = 48;
        sc.min_objects = sc.max_objects = 4;
        sc.touch_probability = 0.5;
        sc.min_radius = 6;
        sc.noise_sigma = 0;
        sc.seed = seed;
        Scene scene = generate_scene(sc);
        const uint32_t k = scene.labels.max_label();
        if (k < 2) continue;

        Raster<float> emb =
            oracles::one_hot_embedding<float>(scene.labels, static_cast<int>(k) + 1, 0.02, seed);
        LabelMap grown = segment(emb, distance_target(scene.labels), PostprocessConfig{});
        LabelMap shifted =
            mean_shift_reference(emb, foreground_mask(scene.labels), 0.3f);
        CHECK(partition_agreement(grown, shifted) >= 0.99);
    }
}
