#pragma once

#include <string>

#include "orthoseg/loss.hpp"
#include "orthoseg/network.hpp"
#include "orthoseg/postprocess.hpp"
#include "orthoseg/synthdata.hpp"

// Flat key=value run configuration, one pair per line, '#' comments. Unknown
// keys are an error; every resolved value is echoed into training log headers
// so runs are reproducible from the log alone.

namespace orthoseg {

struct config_error : error {
    using error::error;
};

struct TrainingConfig {
    double lr = 1e-3;
    int batch_size = 4;
    int steps = 2000;
    uint64_t seed = 1;
    bool augment_flip = true;
    bool augment_rot90 = true;
    int checkpoint_interval = 0;  // 0 = only at the end
};

struct PathsConfig {
    std::string data;        // dataset dir (manifest.csv inside)
    std::string checkpoint;  // output checkpoint
    std::string log;         // training log CSV
};

struct RunConfig {
    NetworkSpec network;
    LossConfig loss;
    PostprocessConfig postprocess;
    TrainingConfig training;
    SceneConfig scene;  // used by `synth`
    PathsConfig paths;

    void validate() const;

    // Canonical echo, one key=value per line, every key present.
    std::string resolved_text() const;
};

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Applies a single key=value assignment (also used for --set overrides).
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace orthoseg
