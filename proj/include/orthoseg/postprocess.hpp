#pragma once

#include "orthoseg/labels.hpp"
#include "orthoseg/raster.hpp"

// Segmentation from (embedding map, distance map):
//   1. threshold the distance map at t_c and take connected components
//      (the seed regions),
//   2. compute each seed's normalized mean embedding u_k once,
//   3. repeatedly dilate every region with a 3x3 kernel; a frontier pixel
//      joins a region when its cosine distance to that region's u_k is
//      below t_e (competing claims go to the smallest distance),
//   4. stop when an iteration adds nothing.
// u_k stays frozen at its seed value while the region grows.

namespace orthoseg {

struct PostprocessConfig {
    float t_c = 0.7f;        // seed threshold on the distance map
    float t_e = 0.3f;        // cosine-distance acceptance, 1 - cos(45 deg) rounded as printed
    int min_seed_size = 5;   // seeds smaller than this are dropped; 1 disables
    int max_iterations = 0;  // 0 = 10 * max(H, W)

    void validate() const {
        if (t_c <= 0 || t_c >= 1) throw error("PostprocessConfig: t_c must be in (0, 1)");
        if (t_e <= 0 || t_e >= 2) throw error("PostprocessConfig: t_e must be in (0, 2)");
        if (min_seed_size < 1) throw error("PostprocessConfig: min_seed_size must be >= 1");
    }
};

struct GrowStats {
    int iterations = 0;
    int degenerate_pixels = 0;  // zero-norm embeddings, left unassigned
    int degenerate_seeds = 0;   // seeds whose mean embedding collapsed
};

// Connected components (4-connectivity) of {dist > t_c}, size-filtered and
// relabeled to 1..K.
LabelMap extract_seeds(const Raster<float>& dist, const PostprocessConfig& cfg);

LabelMap seed_grow(const Raster<float>& emb, const LabelMap& seeds,
                   const PostprocessConfig& cfg, GrowStats* stats = nullptr);

// O(N^2)-per-iteration mean shift on the unit sphere with a flat kernel of
// the given cosine-distance bandwidth; modes closer than bandwidth/2 merge.
// A deliberate test oracle: refuses images larger than 128x128.
LabelMap mean_shift_reference(const Raster<float>& emb, const Mask& foreground,
                              float bandwidth);

LabelMap segment(const Raster<float>& emb, const Raster<float>& dist,
                 const PostprocessConfig& cfg, GrowStats* stats = nullptr);

}  // namespace orthoseg
