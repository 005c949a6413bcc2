#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "oracles.hpp"
#include "orthoseg/targets.hpp"

using namespace orthoseg;

TEST_CASE("distance_target: all background is zero") {
    LabelMap m(6, 6, 0);
    Raster<float> d = distance_target(m);
    for (float v : d.raw()) CHECK(v == 0.0f);
}

TEST_CASE("distance_target: 3x3 square in a sea") {
    LabelMap m(9, 9, 0);
    for (int y = 3; y < 6; ++y)
        for (int x = 3; x < 6; ++x) m.at(y, x) = 1;
    Raster<float> d = distance_target(m);
    CHECK(d.at(0, 4, 4) == doctest::Approx(1.0));
    for (int y = 3; y < 6; ++y)
        for (int x = 3; x < 6; ++x)
            if (y != 4 || x != 4) CHECK(d.at(0, y, x) == doctest::Approx(0.5));
    CHECK(d.at(0, 0, 0) == 0.0f);
}

TEST_CASE("distance_target: single-pixel object is 1") {
    LabelMap m(5, 5, 0);
    m.at(2, 2) = 1;
    CHECK(distance_target(m).at(0, 2, 2) == doctest::Approx(1.0));
}

TEST_CASE("distance_target: object maxima are exactly 1, background 0") {
    LabelMap m = oracles::random_blob_labels(32, 32, 6, 99);
    Raster<float> d = distance_target(m);
    const uint32_t kmax = m.max_label();
    std::vector<float> obj_max(kmax + 1, 0.0f);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            uint32_t k = m.at(y, x);
            if (k == 0)
                CHECK(d.at(0, y, x) == 0.0f);
            else
                obj_max[k] = std::max(obj_max[k], d.at(0, y, x));
        }
    for (uint32_t k = 1; k <= kmax; ++k) CHECK(obj_max[k] == 1.0f);
}

TEST_CASE("distance_target matches the brute-force oracle on random maps") {
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        LabelMap m = oracles::random_blob_labels(32, 32, 3 + static_cast<int>(seed % 5), seed);
        Raster<float> fast = distance_target(m);
        Raster<float> slow = oracles::brute_distance_target(m);
        for (size_t i = 0; i < fast.size(); ++i)
            CHECK(fast.raw()[i] == doctest::Approx(slow.raw()[i]).epsilon(1e-6));
    }
}

TEST_CASE("distance_target: translation equivariance") {
    LabelMap a(20, 20, 0), b(20, 20, 0);
    for (int y = 2; y < 7; ++y)
        for (int x = 3; x < 8; ++x) {
            a.at(y, x) = 1;
            b.at(y + 5, x + 6) = 1;
        }
    Raster<float> da = distance_target(a), db = distance_target(b);
    for (int y = 2; y < 7; ++y)
        for (int x = 3; x < 8; ++x)
            CHECK(da.at(0, y, x) == doctest::Approx(db.at(0, y + 5, x + 6)));
}

TEST_CASE("distance_target: invariant under label permutation") {
    LabelMap m = oracles::random_blob_labels(24, 24, 4, 5);
    LabelMap perm = m;
    uint32_t kmax = m.max_label();
    for (uint32_t& v : perm.raw())
        if (v != 0) v = kmax + 1 - v;
    CHECK(distance_target(m).raw() == distance_target(perm).raw());
}

TEST_CASE("neighbor_graph: background adjacent to every object") {
    LabelMap m = oracles::random_blob_labels(24, 24, 3, 2);
    NeighborGraph g = neighbor_graph(m, 10.0);
    for (uint32_t k = 1; k <= g.object_count(); ++k) CHECK(g.adjacent(0, k));
}

TEST_CASE("neighbor_graph: two points at distance 5") {
    LabelMap m(16, 16, 0);
    m.at(4, 4) = 1;
    m.at(4, 9) = 2;  // 5 px apart
    CHECK(neighbor_graph(m, 10.0).adjacent(1, 2));
    CHECK_FALSE(neighbor_graph(m, 4.0).adjacent(1, 2));
    CHECK_FALSE(neighbor_graph(m, 5.0).adjacent(1, 2));  // strict <
}

TEST_CASE("neighbor_graph matches the all-pairs oracle") {
    for (uint64_t seed = 30; seed < 50; ++seed) {
        LabelMap m = oracles::random_blob_labels(32, 32, 6, seed);
        for (double d : {3.0, 10.0}) {
            NeighborGraph g = neighbor_graph(m, d);
            auto expected = oracles::brute_object_adjacency(m, d);
            std::vector<std::pair<uint32_t, uint32_t>> got;
            for (auto [a, b] : g.edges())
                if (a != 0) got.emplace_back(a, b);
            std::sort(expected.begin(), expected.end());
            CHECK(got == expected);
        }
    }
}

TEST_CASE("neighbor_graph: monotone in d") {
    LabelMap m = oracles::random_blob_labels(48, 48, 8, 77);
    NeighborGraph g1 = neighbor_graph(m, 5.0);
    NeighborGraph g2 = neighbor_graph(m, 15.0);
    for (auto [a, b] : g1.edges()) CHECK(g2.adjacent(a, b));
}

TEST_CASE("balance_weights: balanced image gives all ones") {
    LabelMap m(2, 4, 0);
    for (int x = 0; x < 4; ++x) m.at(0, x) = 1;
    Raster<float> w = balance_weights(m);
    for (float v : w.raw()) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("balance_weights: 20 of 100 foreground") {
    LabelMap m(10, 10, 0);
    int placed = 0;
    for (int y = 0; y < 10 && placed < 20; ++y)
        for (int x = 0; x < 10 && placed < 20; ++x) m.at(y, x) = 1 + placed++ % 3;
    Raster<float> w = balance_weights(m);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 10; ++x)
            CHECK(w.at(0, y, x) == doctest::Approx(m.at(y, x) > 0 ? 2.5 : 0.625));
}

TEST_CASE("balance_weights: degenerate maps give ones; sums split evenly") {
    LabelMap empty(4, 4, 0);
    Raster<float> we = balance_weights(empty);
    for (float v : we.raw()) CHECK(v == 1.0f);

    LabelMap m = oracles::random_blob_labels(16, 16, 3, 8);
    Raster<float> w = balance_weights(m);
    double fg = 0, bg = 0, total = 0;
    for (size_t i = 0; i < m.size(); ++i) {
        (m.raw()[i] > 0 ? fg : bg) += w.raw()[i];
        total += w.raw()[i];
    }
    CHECK(fg == doctest::Approx(m.size() / 2.0));
    CHECK(bg == doctest::Approx(m.size() / 2.0));
    CHECK(total / m.size() == doctest::Approx(1.0).epsilon(1e-6));
}
