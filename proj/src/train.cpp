#include "orthoseg/train.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "orthoseg/adam.hpp"
#include "orthoseg/labels.hpp"
#include "orthoseg/metrics.hpp"
#include "orthoseg/postprocess.hpp"
#include "orthoseg/rng.hpp"

namespace orthoseg {

std::vector<TrainScene> load_dataset(const std::string& dir, const NetworkSpec& spec,
                                     double neighbor_radius) {
    std::string manifest_path = dir + "/manifest.csv";
    std::ifstream is(manifest_path);
    if (!is) throw io_error("cannot open " + manifest_path);

    std::vector<TrainScene> scenes;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string img_name, lbl_name;
        if (!std::getline(ls, img_name, ',') || !std::getline(ls, lbl_name, ','))
            throw io_error(manifest_path + ": malformed row '" + line + "'");

        TrainScene sc;
        sc.name = img_name.substr(0, img_name.find_last_of('.'));
        ImageGrid img = read_image_png(dir + "/" + img_name);
        LabelMap lbl = relabel_sequential(read_label_png(dir + "/" + lbl_name));
        if (img.height() != lbl.height() || img.width() != lbl.width())
            throw io_error(dir + ": image/label extent mismatch for " + img_name);
        sc.orig_h = img.height();
        sc.orig_w = img.width();
        sc.image = pad_to_multiple(img, spec.stride());
        sc.labels = pad_to_multiple(lbl, spec.stride());
        sc.weights = balance_weights(sc.labels);
        sc.graph = neighbor_graph(sc.labels, neighbor_radius);
        scenes.push_back(std::move(sc));
    }
    if (scenes.empty()) throw io_error(manifest_path + ": no scenes listed");
    return scenes;
}

int worker_threads(int batch_size) {
    int n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ORTHOSEG_THREADS")) {
        int v = std::atoi(env);
        if (v >= 1) n = v;
    }
    return std::max(1, std::min(n, batch_size));
}

namespace {

struct AugmentedScene {
    ImageGrid image;
    LabelMap labels;
    Raster<float> weights;
    const NeighborGraph* graph;
};

// flips/quarter turns applied identically to every raster; the neighbor
// graph is invariant under these isometries.
AugmentedScene augment(const TrainScene& sc, bool flip, int rot, const TrainingConfig& tc) {
    AugmentedScene a{sc.image, sc.labels, sc.weights, &sc.graph};
    if (tc.augment_flip && flip) {
        a.image = flip_horizontal(a.image);
        a.labels = flip_horizontal(a.labels);
        a.weights = flip_horizontal(a.weights);
    }
    if (tc.augment_rot90 && rot) {
        a.image = rot90(a.image, rot);
        a.labels = rot90(a.labels, rot);
        a.weights = rot90(a.weights, rot);
    }
    return a;
}

struct StepAccum {
    double l_reg = 0, l_con = 0, l_dis = 0, l_total = 0;
};

}  // namespace

TrainResult train(const RunConfig& cfg) {
    cfg.validate();
    const NetworkSpec& spec = cfg.network;
    std::vector<TrainScene> scenes = load_dataset(cfg.paths.data, spec, cfg.loss.neighbor_radius);

    // Square inputs only while rot90 augmentation is on (the batch would
    // otherwise change shape under a quarter turn).
    if (cfg.training.augment_rot90)
        for (const TrainScene& sc : scenes)
            if (sc.image.height() != sc.image.width())
                throw error("train: rot90 augmentation needs square images (" + sc.name + ")");

    ParamSet<float> params = init_parameters<float>(spec, cfg.training.seed);
    AdamState<float> opt = AdamState<float>::init(params);
    AdamConfig adam{cfg.training.lr, 0.9, 0.999, 1e-8};

    std::ofstream log;
    if (!cfg.paths.log.empty()) {
        std::filesystem::path lp(cfg.paths.log);
        if (lp.has_parent_path()) std::filesystem::create_directories(lp.parent_path());
        log.open(cfg.paths.log);
        if (!log) throw io_error("cannot write " + cfg.paths.log);
        std::istringstream resolved(cfg.resolved_text());
        std::string line;
        while (std::getline(resolved, line)) log << "# " << line << "\n";
        log << "step,l_reg,l_con,l_dis,l_total\n";
    }

    auto save = [&](const std::string& path) {
        if (path.empty()) return;
        std::filesystem::path cp(path);
        if (cp.has_parent_path()) std::filesystem::create_directories(cp.parent_path());
        save_checkpoint(path, spec, params);
    };

    Pcg32 rng(cfg.training.seed, 17);  // batch/augmentation stream
    const int batch = cfg.training.batch_size;
    const int threads = worker_threads(batch);

    TrainResult result;
    result.spec = spec;

    for (int step = 0; step < cfg.training.steps; ++step) {
        // Draw the whole batch plan up front so worker count cannot shift
        // the RNG stream.
        std::vector<AugmentedScene> batch_scenes;
        batch_scenes.reserve(batch);
        for (int b = 0; b < batch; ++b) {
            const TrainScene& sc = scenes[rng.uniform_int(static_cast<uint32_t>(scenes.size()))];
            bool flip = rng.uniform() < 0.5;
            int rot = static_cast<int>(rng.uniform_int(4));
            batch_scenes.push_back(augment(sc, flip, rot, cfg.training));
        }

        std::vector<ParamSet<float>> grads(batch);
        std::vector<LossReport<float>> reports(batch);
        std::vector<std::string> failures(batch);

        auto run_one = [&](int b) {
            try {
                const AugmentedScene& as = batch_scenes[b];
                ForwardTrace<float> tr = forward(spec, params, as.image);
                reports[b] = total_loss(tr.embedding, tr.distance, as.labels, *as.graph,
                                        as.weights, cfg.loss);
                grads[b] = backward(tr, params, reports[b].grad_embedding,
                                    reports[b].grad_distance);
            } catch (const std::exception& e) {
                failures[b] = e.what();
            }
        };

        if (threads <= 1) {
            for (int b = 0; b < batch; ++b) run_one(b);
        } else {
            std::vector<std::thread> pool;
            for (int t = 0; t < threads; ++t)
                pool.emplace_back([&, t]() {
                    for (int b = t; b < batch; b += threads) run_one(b);
                });
            for (auto& th : pool) th.join();
        }
        for (int b = 0; b < batch; ++b)
            if (!failures[b].empty())
                throw error("train: step " + std::to_string(step) + ": " + failures[b]);

        // Reduce in batch order: deterministic for any thread count.
        ParamSet<float> mean_grad = std::move(grads[0]);
        for (int b = 1; b < batch; ++b)
            for (size_t i = 0; i < mean_grad.tensors.size(); ++i) {
                float* dst = mean_grad.tensors[i].data();
                const float* src = grads[b].tensors[i].data();
                for (size_t j = 0; j < mean_grad.tensors[i].size(); ++j) dst[j] += src[j];
            }
        const float inv_b = 1.0f / static_cast<float>(batch);
        for (auto& t : mean_grad.tensors)
            for (float& v : t.v) v *= inv_b;

        StepAccum acc;
        for (const auto& r : reports) {
            acc.l_reg += r.l_reg;
            acc.l_con += r.l_con;
            acc.l_dis += r.l_dis;
            acc.l_total += r.l_total;
        }
        acc.l_reg /= batch;
        acc.l_con /= batch;
        acc.l_dis /= batch;
        acc.l_total /= batch;

        if (!std::isfinite(acc.l_total))
            throw error("train: non-finite loss at step " + std::to_string(step));

        if (step == 0) result.initial_loss = acc.l_total;
        result.final_loss = acc.l_total;

        adam_step(params, mean_grad, opt, adam);

        if (log)
            log << step << "," << acc.l_reg << "," << acc.l_con << "," << acc.l_dis << ","
                << acc.l_total << "\n";
        if (cfg.training.checkpoint_interval > 0 && (step + 1) % cfg.training.checkpoint_interval == 0)
            save(cfg.paths.checkpoint);
        result.steps_run = step + 1;
    }

    save(cfg.paths.checkpoint);
    result.params = std::move(params);
    return result;
}

InferenceOutput infer_image(const NetworkSpec& spec, const ParamSet<float>& params,
                            const ImageGrid& image) {
    ImageGrid padded = pad_to_multiple(image, spec.stride());
    ForwardTrace<float> tr = forward(spec, params, padded);
    InferenceOutput out;
    out.embedding = crop_to(tr.embedding, image.height(), image.width());
    out.distance = crop_to(tr.distance, image.height(), image.width());
    return out;
}

ModelEvalResult evaluate_model(const NetworkSpec& spec, const ParamSet<float>& params,
                               const std::string& data_dir, const PostprocessConfig& pp,
                               const std::vector<double>& thresholds,
                               double eval_neighbor_radius) {
    std::vector<TrainScene> scenes = load_dataset(data_dir, spec, eval_neighbor_radius);
    ModelEvalResult agg;
    int man_scenes = 0;
    for (const TrainScene& sc : scenes) {
        ImageGrid img = crop_to(sc.image, sc.orig_h, sc.orig_w);
        LabelMap gt = crop_to(sc.labels, sc.orig_h, sc.orig_w);
        InferenceOutput out = infer_image(spec, params, img);
        LabelMap pred = segment(out.embedding, out.distance, pp);

        EvalReport r = evaluate_pair(gt, pred, thresholds);
        agg.ap50 += r.ap_per_threshold.front();
        agg.mean_ap += r.mean_ap;
        agg.sbd += r.sbd;
        agg.fbd += r.fbd;
        agg.mean_dic += r.dic;
        agg.mean_abs_dic += r.abs_dic;

        NeighborGraph g = neighbor_graph(gt, eval_neighbor_radius);
        if (auto man = mean_angle_neighbors(out.embedding, gt, g)) {
            agg.man_degrees += *man;
            ++man_scenes;
        }
        ++agg.scenes;
    }
    if (agg.scenes > 0) {
        agg.ap50 /= agg.scenes;
        agg.mean_ap /= agg.scenes;
        agg.sbd /= agg.scenes;
        agg.fbd /= agg.scenes;
        agg.mean_dic /= agg.scenes;
        agg.mean_abs_dic /= agg.scenes;
    }
    if (man_scenes > 0) agg.man_degrees /= man_scenes;
    return agg;
}

}  // namespace orthoseg
