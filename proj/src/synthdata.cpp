#include "orthoseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "orthoseg/io.hpp"
#include "orthoseg/labels.hpp"
#include "orthoseg/rng.hpp"

namespace orthoseg {

ShapeKind shape_kind_from_string(const std::string& s) {
    if (s == "disks") return ShapeKind::disks;
    if (s == "ellipses") return ShapeKind::ellipses;
    if (s == "grid_pattern") return ShapeKind::grid_pattern;
    throw error("unknown shape kind: " + s);
}

std::string to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::disks: return "disks";
        case ShapeKind::ellipses: return "ellipses";
        case ShapeKind::grid_pattern: return "grid_pattern";
    }
    return "?";
}

void SceneConfig::validate() const {
    if (width < 4 || height < 4) throw error("SceneConfig: canvas too small");
    if (min_objects < 0 || max_objects < min_objects)
        throw error("SceneConfig: bad object count range");
    if (min_radius < 1 || max_radius < min_radius)
        throw error("SceneConfig: bad radius range");
    if (2 * max_radius >= std::min(width, height))
        throw error("SceneConfig: radii do not fit the canvas");
    if (touch_probability < 0 || touch_probability > 1)
        throw error("SceneConfig: touch_probability must be in [0,1]");
    if (noise_sigma < 0) throw error("SceneConfig: noise_sigma must be >= 0");
}

namespace {

struct Blob {
    double cx, cy;        // center
    double a, b;          // semi-axes (a == b for disks)
    double cos_t, sin_t;  // orientation
};

// Pixel centers are integer coordinates.
bool inside(const Blob& s, int x, int y) {
    double dx = x - s.cx, dy = y - s.cy;
    double u = dx * s.cos_t + dy * s.sin_t;
    double v = -dx * s.sin_t + dy * s.cos_t;
    return (u * u) / (s.a * s.a) + (v * v) / (s.b * s.b) <= 1.0;
}

// true if the blob would claim at least one pixel already owned
bool overlaps(const Blob& s, const LabelMap& labels) {
    int x0 = std::max(0, static_cast<int>(std::floor(s.cx - std::max(s.a, s.b))));
    int x1 = std::min(labels.width() - 1, static_cast<int>(std::ceil(s.cx + std::max(s.a, s.b))));
    int y0 = std::max(0, static_cast<int>(std::floor(s.cy - std::max(s.a, s.b))));
    int y1 = std::min(labels.height() - 1, static_cast<int>(std::ceil(s.cy + std::max(s.a, s.b))));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (labels.at(y, x) != 0 && inside(s, x, y)) return true;
    return false;
}

// Claims unowned pixels; returns the number claimed.
int rasterize(const Blob& s, LabelMap& labels, uint32_t id) {
    int x0 = std::max(0, static_cast<int>(std::floor(s.cx - std::max(s.a, s.b))));
    int x1 = std::min(labels.width() - 1, static_cast<int>(std::ceil(s.cx + std::max(s.a, s.b))));
    int y0 = std::max(0, static_cast<int>(std::floor(s.cy - std::max(s.a, s.b))));
    int y1 = std::min(labels.height() - 1, static_cast<int>(std::ceil(s.cy + std::max(s.a, s.b))));
    int n = 0;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (labels.at(y, x) == 0 && inside(s, x, y)) {
                labels.at(y, x) = id;
                ++n;
            }
    return n;
}

}  // namespace

Scene generate_scene(const SceneConfig& cfg) {
    cfg.validate();
    Pcg32 rng(cfg.seed);

    Scene sc;
    sc.labels = LabelMap(cfg.height, cfg.width, 0);
    sc.image = ImageGrid(cfg.height, cfg.width, 1, 0.1f);

    const int target = cfg.min_objects +
                       static_cast<int>(rng.uniform_int(static_cast<uint32_t>(
                           cfg.max_objects - cfg.min_objects + 1)));
    std::vector<Blob> placed;
    std::vector<float> intensities;

    auto render_object = [&]() { intensities.push_back(static_cast<float>(0.4 + 0.6 * rng.uniform())); };

    if (cfg.shape == ShapeKind::grid_pattern) {
        // Regular lattice of touching disks mirrors repeated-pattern imagery:
        // first `target` cells in row-major order get one disk each.
        const int cols = target > 0 ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(target)))) : 1;
        const int rows = target > 0 ? (target + cols - 1) / cols : 1;
        const double cell_w = static_cast<double>(cfg.width) / cols;
        const double cell_h = static_cast<double>(cfg.height) / rows;
        double r = std::min(cell_w, cell_h) / 2.0;
        r = std::clamp(r, cfg.min_radius, cfg.max_radius);
        int made = 0;
        for (int i = 0; i < target; ++i) {
            int row = i / cols, col = i % cols;
            Blob s{(col + 0.5) * cell_w, (row + 0.5) * cell_h, r, r, 1.0, 0.0};
            if (rasterize(s, sc.labels, static_cast<uint32_t>(made + 1)) > 0) {
                placed.push_back(s);
                render_object();
                ++made;
            }
        }
        sc.truncated = made < target;
    } else {
        const bool ellipse = cfg.shape == ShapeKind::ellipses;
        const int max_attempts = 64;
        int made = 0;
        for (int i = 0; i < target; ++i) {
            bool ok = false;
            for (int att = 0; att < max_attempts && !ok; ++att) {
                Blob s;
                s.a = rng.uniform(cfg.min_radius, cfg.max_radius);
                s.b = ellipse ? rng.uniform(cfg.min_radius, cfg.max_radius) : s.a;
                double theta = ellipse ? rng.uniform(0.0, 3.14159265358979323846) : 0.0;
                s.cos_t = std::cos(theta);
                s.sin_t = std::sin(theta);
                const double rmax = std::max(s.a, s.b);

                bool touch = !placed.empty() && rng.uniform() < cfg.touch_probability;
                if (touch) {
                    // Walk outward from a placed object until the first
                    // non-overlapping integer offset: tangent placement.
                    const Blob& base = placed[rng.uniform_int(static_cast<uint32_t>(placed.size()))];
                    double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
                    double ux = std::cos(phi), uy = std::sin(phi);
                    double reach = std::max(base.a, base.b) + rmax + 2.0;
                    for (int t = 1; t <= static_cast<int>(reach); ++t) {
                        s.cx = base.cx + t * ux;
                        s.cy = base.cy + t * uy;
                        if (s.cx < rmax || s.cx > cfg.width - 1 - rmax || s.cy < rmax ||
                            s.cy > cfg.height - 1 - rmax)
                            break;
                        if (!overlaps(s, sc.labels)) {
                            ok = true;
                            break;
                        }
                    }
                } else {
                    s.cx = rng.uniform(rmax, cfg.width - 1 - rmax);
                    s.cy = rng.uniform(rmax, cfg.height - 1 - rmax);
                    ok = !overlaps(s, sc.labels);
                }
                if (ok) {
                    if (rasterize(s, sc.labels, static_cast<uint32_t>(made + 1)) == 0) {
                        ok = false;
                        continue;
                    }
                    placed.push_back(s);
                    render_object();
                    ++made;
                }
            }
            if (!ok) {
                sc.truncated = true;
                break;
            }
        }
    }

    sc.labels = relabel_sequential(sc.labels);

    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            uint32_t id = sc.labels.at(y, x);
            if (id > 0) sc.image.at(0, y, x) = intensities[id - 1];
        }
    if (cfg.noise_sigma > 0) {
        for (float& v : sc.image.raw()) {
            v = std::clamp(v + static_cast<float>(rng.gaussian() * cfg.noise_sigma), 0.0f, 1.0f);
        }
    }
    return sc;
}

DatasetSummary generate_dataset(const SceneConfig& cfg, int count, const std::string& out_dir) {
    if (count < 1) throw error("generate_dataset: count must be >= 1");
    std::filesystem::create_directories(out_dir);

    DatasetSummary sum;
    std::string manifest_path = out_dir + "/manifest.csv";
    std::ofstream manifest(manifest_path);
    if (!manifest) throw error("cannot write " + manifest_path);
    manifest << "image,label,objects,truncated\n";

    for (int i = 0; i < count; ++i) {
        SceneConfig c = cfg;
        c.seed = cfg.seed + static_cast<uint64_t>(i);
        Scene sc = generate_scene(c);

        char img_name[32], lbl_name[32];
        std::snprintf(img_name, sizeof img_name, "img_%04d.png", i);
        std::snprintf(lbl_name, sizeof lbl_name, "lbl_%04d.png", i);
        write_image_png(out_dir + "/" + img_name, sc.image);
        write_label_png(out_dir + "/" + lbl_name, sc.labels);

        int k = static_cast<int>(sc.labels.max_label());
        manifest << img_name << "," << lbl_name << "," << k << "," << (sc.truncated ? 1 : 0) << "\n";
        sum.image_files.push_back(img_name);
        sum.label_files.push_back(lbl_name);
        sum.object_counts.push_back(k);
        sum.truncated_scenes += sc.truncated ? 1 : 0;
    }
    return sum;
}

}  // namespace orthoseg
