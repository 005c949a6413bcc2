#pragma once

#include <string>
#include <vector>

#include "orthoseg/raster.hpp"

namespace orthoseg {

enum class ShapeKind { disks, ellipses, grid_pattern };

ShapeKind shape_kind_from_string(const std::string& s);
std::string to_string(ShapeKind k);

// Scenes are reproducible from the seed alone (PCG32 throughout, fixed draw
// order). Objects may touch but never overlap: once a pixel is claimed, later
// objects cannot overwrite it.
struct SceneConfig {
    int width = 64, height = 64;
    int min_objects = 6, max_objects = 10;
    ShapeKind shape = ShapeKind::disks;
    double min_radius = 5.0, max_radius = 9.0;
    double touch_probability = 0.5;  // chance a new object is placed tangent to an existing one
    double noise_sigma = 0.02;
    uint64_t seed = 1;

    void validate() const;
};

struct Scene {
    ImageGrid image;   // 1 channel, [0,1]
    LabelMap labels;   // sequential ids
    bool truncated = false;  // placement gave up before reaching the drawn count
};

Scene generate_scene(const SceneConfig& cfg);

// Writes img_NNNN.png / lbl_NNNN.png pairs plus manifest.csv
// (image,label,objects,truncated); scene i uses seed cfg.seed + i.
struct DatasetSummary {
    std::vector<std::string> image_files, label_files;
    std::vector<int> object_counts;
    int truncated_scenes = 0;
};

DatasetSummary generate_dataset(const SceneConfig& cfg, int count, const std::string& out_dir);

}  // namespace orthoseg
