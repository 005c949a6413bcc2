#pragma once

#include <string>
#include <vector>

#include "orthoseg/config.hpp"
#include "orthoseg/io.hpp"
#include "orthoseg/targets.hpp"

namespace orthoseg {

// One dataset entry with everything the loss needs, precomputed once.
// Distance targets are rederived inside the loss from the (augmented) labels;
// weights transform with the raster and the neighbor graph is invariant under
// flips and quarter turns.
struct TrainScene {
    std::string name;
    ImageGrid image;        // padded to a multiple of 2^depth
    LabelMap labels;        // padded alike
    Raster<float> weights;
    NeighborGraph graph;
    int orig_h = 0, orig_w = 0;
};

// Loads image/label pairs listed in <dir>/manifest.csv.
std::vector<TrainScene> load_dataset(const std::string& dir, const NetworkSpec& spec,
                                     double neighbor_radius);

// Worker threads for per-image forward/backward; reads ORTHOSEG_THREADS,
// capped by the batch size. Results are reduced in batch order, so the count
// never changes the numbers.
int worker_threads(int batch_size);

struct TrainResult {
    int steps_run = 0;
    double initial_loss = 0;  // batch mean at step 0
    double final_loss = 0;
    ParamSet<float> params;
    NetworkSpec spec;
};

// Runs the training loop: sample batch, forward, loss, backward, Adam step,
// one log row per step. Deterministic given the config seed.
TrainResult train(const RunConfig& cfg);

// Forward pass on an arbitrarily sized image: pads to the network stride and
// crops the outputs back.
struct InferenceOutput {
    Raster<float> embedding;
    Raster<float> distance;
};
InferenceOutput infer_image(const NetworkSpec& spec, const ParamSet<float>& params,
                            const ImageGrid& image);

// Inference + segmentation + metrics over a dataset directory, aggregated as
// per-image means. mAN compares predicted embeddings against ground-truth
// regions under a graph of the given radius.
struct ModelEvalResult {
    double ap50 = 0;
    double mean_ap = 0;
    double sbd = 0;
    double fbd = 0;
    double mean_dic = 0;
    double mean_abs_dic = 0;
    double man_degrees = 0;  // over scenes where it is defined
    int scenes = 0;
};
ModelEvalResult evaluate_model(const NetworkSpec& spec, const ParamSet<float>& params,
                               const std::string& data_dir, const PostprocessConfig& pp,
                               const std::vector<double>& thresholds,
                               double eval_neighbor_radius);

}  // namespace orthoseg
