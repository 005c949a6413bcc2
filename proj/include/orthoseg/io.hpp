#pragma once

#include <string>
#include <utility>

#include "orthoseg/network.hpp"
#include "orthoseg/raster.hpp"

// On-disk formats (byte layouts in docs/FORMATS.md):
//   images      8-bit grayscale or RGB PNG, mapped to [0,1]
//   label maps  16-bit single-channel PNG, pixel value = id, 0 = background
//   tensors     "OSGT" files: magic, u16 version, u32 rank, u32 dims,
//               little-endian f32 payload (planar, row-major)
//   checkpoints "OSEG" files: magic, u16 version, NetworkSpec, named tensors

namespace orthoseg {

struct io_error : error {
    using error::error;
};

ImageGrid read_image_png(const std::string& path);
void write_image_png(const std::string& path, const ImageGrid& img);

LabelMap read_label_png(const std::string& path);
void write_label_png(const std::string& path, const LabelMap& labels);

// Debug output for distance maps: values clamped to [0,1], scaled by 65535.
void write_distance_png(const std::string& path, const Raster<float>& dist);

void write_tensor(const std::string& path, const Raster<float>& t);
Raster<float> read_tensor(const std::string& path);

void save_checkpoint(const std::string& path, const NetworkSpec& spec,
                     const ParamSet<float>& params);
std::pair<NetworkSpec, ParamSet<float>> load_checkpoint(const std::string& path);

}  // namespace orthoseg
