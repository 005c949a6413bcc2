#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "orthoseg/labels.hpp"
#include "orthoseg/rng.hpp"

using namespace orthoseg;

namespace {

Mask mask_from(const std::vector<std::string>& art) {
    Mask m(static_cast<int>(art.size()), static_cast<int>(art[0].size()), 1);
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x) m.at(0, y, x) = art[y][x] != '.' ? 1 : 0;
    return m;
}

}  // namespace

TEST_CASE("connected_components: empty mask") {
    Mask m(4, 4, 1, 0);
    LabelMap lbl = connected_components(m);
    CHECK(lbl.max_label() == 0);
}

TEST_CASE("connected_components: diagonal pixels split under 4, join under 8") {
    Mask m = mask_from({"X.", ".X"});
    CHECK(connected_components(m, Connectivity::four).max_label() == 2);
    CHECK(connected_components(m, Connectivity::eight).max_label() == 1);
}

TEST_CASE("connected_components: two 3x3 blocks in a 10x10 mask") {
    Mask m(10, 10, 1, 0);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            m.at(0, y, x) = 1;
            m.at(0, y + 6, x + 6) = 1;
        }
    LabelMap lbl = connected_components(m);
    CHECK(lbl.max_label() == 2);
    auto sizes = lbl.label_sizes();
    CHECK(sizes[1] == 9);
    CHECK(sizes[2] == 9);
}

TEST_CASE("connected_components: labels ordered by first row-major pixel") {
    Mask m = mask_from({"..X", "X..", "..X"});
    LabelMap lbl = connected_components(m, Connectivity::four);
    CHECK(lbl.at(0, 2) == 1);
    CHECK(lbl.at(1, 0) == 2);
    CHECK(lbl.at(2, 2) == 3);
}

TEST_CASE("relabel_sequential: first-appearance order") {
    LabelMap m(1, 3, 0);
    m.at(0, 1) = 3;
    m.at(0, 2) = 7;
    LabelMap r = relabel_sequential(m);
    CHECK(r.at(0, 0) == 0);
    CHECK(r.at(0, 1) == 1);
    CHECK(r.at(0, 2) == 2);
}

TEST_CASE("relabel_sequential: identity on sequential maps and idempotent") {
    Pcg32 rng(3);
    LabelMap m(8, 8, 0);
    for (uint32_t& v : m.raw()) v = rng.uniform_int(5) == 0 ? 0 : rng.uniform_int(40);
    LabelMap once = relabel_sequential(m);
    LabelMap twice = relabel_sequential(once);
    CHECK(once == twice);
    CHECK(is_sequential(once));
}

TEST_CASE("relabel_sequential: single label everywhere") {
    LabelMap m(3, 3, 42);
    LabelMap r = relabel_sequential(m);
    for (uint32_t v : r.raw()) CHECK(v == 1);
}

TEST_CASE("relabel_sequential preserves per-label pixel counts") {
    Pcg32 rng(11);
    LabelMap m(16, 16, 0);
    for (uint32_t& v : m.raw()) v = rng.uniform_int(9);
    auto before = m.label_sizes();
    LabelMap r = relabel_sequential(m);
    auto after = r.label_sizes();
    // the multiset of positive counts must survive
    std::vector<size_t> a(before.begin() + 1, before.end()), b(after.begin() + 1, after.end());
    std::erase(a, 0);
    std::erase(b, 0);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(before[0] == after[0]);
}

TEST_CASE("raster transforms: rot90 four times is identity, flips involute") {
    Pcg32 rng(5);
    Raster<float> r(6, 9, 2);
    for (float& v : r.raw()) v = static_cast<float>(rng.uniform());
    CHECK(rot90(rot90(rot90(rot90(r, 1), 1), 1), 1).raw() == r.raw());
    CHECK(flip_horizontal(flip_horizontal(r)).raw() == r.raw());
    CHECK(flip_vertical(flip_vertical(r)).raw() == r.raw());
    CHECK(rot90(r, 1).height() == r.width());
}

TEST_CASE("pad_to_multiple pads with zeros and crop_to restores") {
    Raster<float> r(5, 6, 1, 1.0f);
    Raster<float> p = pad_to_multiple(r, 4);
    CHECK(p.height() == 8);
    CHECK(p.width() == 8);
    CHECK(p.at(0, 7, 7) == 0.0f);
    CHECK(p.at(0, 5, 0) == 0.0f);
    CHECK(p.at(0, 0, 6) == 0.0f);
    CHECK(p.at(0, 4, 5) == 1.0f);
    Raster<float> c = crop_to(p, 5, 6);
    CHECK(c.raw() == r.raw());
}
