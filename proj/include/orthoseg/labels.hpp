#pragma once

#include "orthoseg/raster.hpp"

namespace orthoseg {

enum class Connectivity { four = 4, eight = 8 };

// Labels each maximal connected true-region of the mask with a distinct
// positive id; false pixels stay 0. Ids are 1..K in order of the component's
// first pixel in a row-major scan.
LabelMap connected_components(const Mask& mask, Connectivity conn = Connectivity::four);

// Remaps positive ids to 1..K, ordered by first row-major appearance; 0 is
// preserved. Idempotent.
LabelMap relabel_sequential(const LabelMap& labels);

// True if the positive ids present are exactly 1..K.
bool is_sequential(const LabelMap& labels);

inline Mask foreground_mask(const LabelMap& labels) {
    Mask m(labels.height(), labels.width(), 1);
    for (size_t i = 0; i < labels.size(); ++i)
        m.raw()[i] = labels.raw()[i] > 0 ? 1 : 0;
    return m;
}

}  // namespace orthoseg
