#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "orthoseg/config.hpp"
#include "orthoseg/io.hpp"
#include "orthoseg/labels.hpp"
#include "orthoseg/metrics.hpp"
#include "orthoseg/postprocess.hpp"
#include "orthoseg/synthdata.hpp"
#include "orthoseg/train.hpp"

namespace fs = std::filesystem;
using namespace orthoseg;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    int64_t seed_override = -1;
};

RunConfig resolve_config(const CommonOpts& c) {
    RunConfig cfg;
    if (!c.config_path.empty()) cfg = parse_config_file(c.config_path);
    for (const std::string& kv : c.sets) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos) throw config_error("--set expects key=value, got " + kv);
        apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (c.seed_override >= 0) {
        cfg.training.seed = static_cast<uint64_t>(c.seed_override);
        cfg.scene.seed = static_cast<uint64_t>(c.seed_override);
    }
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--config", c.config_path, "key=value config file");
    cmd->add_option("--set", c.sets, "override a single config key (key=value), repeatable");
    cmd->add_option("--seed", c.seed_override, "override training.seed and scene.seed");
}

std::vector<std::string> sorted_pngs(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

std::string stem_of(const std::string& name) { return fs::path(name).stem().string(); }

// every consecutive channel triple as an RGB panel, per-channel min-max
// normalized; a trailing partial triple is padded with zero channels
std::vector<ImageGrid> embedding_rgb_panels(const Raster<float>& emb) {
    std::vector<ImageGrid> panels;
    for (int c0 = 0; c0 < emb.channels(); c0 += 3) {
        ImageGrid rgb(emb.height(), emb.width(), 3, 0.0f);
        for (int c = c0; c < std::min(c0 + 3, emb.channels()); ++c) {
            float lo = emb.plane(c)[0], hi = emb.plane(c)[0];
            for (size_t i = 0; i < emb.plane_size(); ++i) {
                lo = std::min(lo, emb.plane(c)[i]);
                hi = std::max(hi, emb.plane(c)[i]);
            }
            float scale = hi > lo ? 1.0f / (hi - lo) : 0.0f;
            for (size_t i = 0; i < emb.plane_size(); ++i)
                rgb.plane(c - c0)[i] = (emb.plane(c)[i] - lo) * scale;
        }
        panels.push_back(std::move(rgb));
    }
    return panels;
}

int cmd_synth(const CommonOpts& common, const std::string& out_dir, int count) {
    RunConfig cfg = resolve_config(common);
    DatasetSummary sum = generate_dataset(cfg.scene, count, out_dir);
    std::cout << "wrote " << sum.image_files.size() << " scenes to " << out_dir;
    if (sum.truncated_scenes)
        std::cout << " (" << sum.truncated_scenes << " truncated placements)";
    std::cout << "\n";
    return 0;
}

int cmd_targets(const std::string& labels_path, const std::string& out_path) {
    LabelMap labels = relabel_sequential(read_label_png(labels_path));
    write_distance_png(out_path, distance_target(labels));
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_train(const CommonOpts& common) {
    RunConfig cfg = resolve_config(common);
    if (cfg.paths.data.empty()) throw config_error("train: paths.data is required");
    if (cfg.paths.checkpoint.empty()) throw config_error("train: paths.checkpoint is required");
    TrainResult res = train(cfg);
    std::cout << "trained " << res.steps_run << " steps";
    if (res.steps_run > 0)
        std::cout << ", loss " << res.initial_loss << " -> " << res.final_loss;
    std::cout << "\ncheckpoint: " << cfg.paths.checkpoint << "\n";
    return 0;
}

int cmd_infer(const std::string& checkpoint, const std::string& images_dir,
              const std::string& out_dir) {
    auto [spec, params] = load_checkpoint(checkpoint);
    fs::create_directories(out_dir);
    int n = 0;
    for (const std::string& name : sorted_pngs(images_dir)) {
        if (name.rfind("lbl_", 0) == 0) continue;  // skip label maps of synth datasets
        ImageGrid img = read_image_png(images_dir + "/" + name);
        InferenceOutput out = infer_image(spec, params, img);
        write_tensor(out_dir + "/" + stem_of(name) + "_emb.osgt", out.embedding);
        write_tensor(out_dir + "/" + stem_of(name) + "_dist.osgt", out.distance);
        ++n;
    }
    std::cout << "inferred " << n << " images into " << out_dir << "\n";
    return 0;
}

int cmd_segment(const CommonOpts& common, const std::string& emb_path,
                const std::string& dist_path, const std::string& out_path) {
    RunConfig cfg = resolve_config(common);
    Raster<float> emb = read_tensor(emb_path);
    Raster<float> dist = read_tensor(dist_path);
    GrowStats stats;
    LabelMap seg = segment(emb, dist, cfg.postprocess, &stats);
    write_label_png(out_path, seg);
    std::cout << "wrote " << out_path << " (" << seg.max_label() << " objects, "
              << stats.iterations << " iterations)\n";
    return 0;
}

int cmd_segment_dir(const CommonOpts& common, const std::string& emb_dir,
                    const std::string& out_dir) {
    RunConfig cfg = resolve_config(common);
    fs::create_directories(out_dir);
    int n = 0;
    for (const auto& e : fs::directory_iterator(emb_dir)) {
        std::string name = e.path().filename().string();
        size_t tag = name.rfind("_emb.osgt");
        if (tag == std::string::npos) continue;
        std::string stem = name.substr(0, tag);
        Raster<float> emb = read_tensor(emb_dir + "/" + name);
        Raster<float> dist = read_tensor(emb_dir + "/" + stem + "_dist.osgt");
        LabelMap seg = segment(emb, dist, cfg.postprocess);
        write_label_png(out_dir + "/" + stem + ".png", seg);
        ++n;
    }
    std::cout << "segmented " << n << " images into " << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& gt_dir, const std::string& pred_dir, const std::string& report,
             const std::string& threshold_set) {
    std::vector<double> thresholds =
        threshold_set == "to-0.9" ? ap_thresholds_to_090() : default_ap_thresholds();

    struct Row {
        std::string name;
        EvalReport r;
    };
    std::vector<Row> rows;
    std::vector<std::string> errors;

    for (const std::string& name : sorted_pngs(gt_dir)) {
        std::string pred_path = pred_dir + "/" + name;
        if (!fs::exists(pred_path)) {
            errors.push_back(name + ": missing prediction");
            continue;
        }
        try {
            LabelMap gt = relabel_sequential(read_label_png(gt_dir + "/" + name));
            LabelMap pred = relabel_sequential(read_label_png(pred_path));
            rows.push_back({name, evaluate_pair(gt, pred, thresholds)});
        } catch (const std::exception& e) {
            errors.push_back(name + ": " + e.what());
        }
    }

    bool json_out = fs::path(report).extension() == ".json";
    std::ofstream os(report);
    if (!os) throw io_error("cannot write " + report);

    EvalReport mean;
    mean.ap_per_threshold.assign(thresholds.size(), 0.0);
    double mean_dic = 0, mean_abs_dic = 0;
    for (const Row& row : rows) {
        for (size_t i = 0; i < thresholds.size(); ++i)
            mean.ap_per_threshold[i] += row.r.ap_per_threshold[i];
        mean.mean_ap += row.r.mean_ap;
        mean.sbd += row.r.sbd;
        mean.fbd += row.r.fbd;
        mean_dic += row.r.dic;
        mean_abs_dic += row.r.abs_dic;
    }
    if (!rows.empty()) {
        for (double& v : mean.ap_per_threshold) v /= rows.size();
        mean.mean_ap /= rows.size();
        mean.sbd /= rows.size();
        mean.fbd /= rows.size();
        mean_dic /= rows.size();
        mean_abs_dic /= rows.size();
    }

    if (json_out) {
        nlohmann::json j;
        for (const Row& row : rows) {
            nlohmann::json r;
            r["image"] = row.name;
            for (size_t i = 0; i < thresholds.size(); ++i) {
                char key[16];
                std::snprintf(key, sizeof key, "ap_%.2f", thresholds[i]);
                r[key] = row.r.ap_per_threshold[i];
            }
            r["mean_ap"] = row.r.mean_ap;
            r["sbd"] = row.r.sbd;
            r["fbd"] = row.r.fbd;
            r["dic"] = row.r.dic;
            r["abs_dic"] = row.r.abs_dic;
            j["images"].push_back(r);
        }
        j["aggregate"] = {{"mean_ap", mean.mean_ap}, {"sbd", mean.sbd},   {"fbd", mean.fbd},
                          {"dic", mean_dic},         {"abs_dic", mean_abs_dic},
                          {"images", rows.size()}};
        j["errors"] = errors;
        os << j.dump(2) << "\n";
    } else {
        os << "image";
        for (double t : thresholds) {
            char key[16];
            std::snprintf(key, sizeof key, ",ap_%.2f", t);
            os << key;
        }
        os << ",mean_ap,sbd,fbd,dic,abs_dic\n";
        auto row_out = [&](const std::string& name, const EvalReport& r, double d, double ad) {
            os << name;
            for (double v : r.ap_per_threshold) os << "," << v;
            os << "," << r.mean_ap << "," << r.sbd << "," << r.fbd << "," << d << "," << ad << "\n";
        };
        for (const Row& row : rows) row_out(row.name, row.r, row.r.dic, row.r.abs_dic);
        row_out("MEAN", mean, mean_dic, mean_abs_dic);
        for (const std::string& e : errors) os << "error," << e << "\n";
    }

    std::cout << "evaluated " << rows.size() << " pairs, " << errors.size() << " errors; mean_ap="
              << mean.mean_ap << " sbd=" << mean.sbd << "\n";
    return errors.empty() ? 0 : 2;
}

int cmd_embed_vis(const std::string& emb_path, const std::string& out_prefix) {
    Raster<float> emb = read_tensor(emb_path);
    auto panels = embedding_rgb_panels(emb);
    for (size_t i = 0; i < panels.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "_%03zu.png", i);
        write_image_png(out_prefix + name, panels[i]);
    }
    std::cout << "wrote " << panels.size() << " panels with prefix " << out_prefix << "\n";
    return 0;
}

int cmd_sweep(const CommonOpts& common, const std::string& eval_data, const std::string& out_dir,
              std::vector<double> d_values, std::vector<int> dim_values, double eval_d) {
    RunConfig base = resolve_config(common);
    if (base.paths.data.empty()) throw config_error("sweep: paths.data is required");
    if (eval_data.empty()) throw config_error("sweep: --eval-data is required");
    fs::create_directories(out_dir);
    if (d_values.empty()) d_values = {10, 30, 100};
    if (dim_values.empty()) dim_values = {4, 16};
    std::sort(d_values.begin(), d_values.end());
    std::sort(dim_values.begin(), dim_values.end());

    std::string summary_path = out_dir + "/summary.csv";
    std::ofstream os(summary_path);
    if (!os) throw io_error("cannot write " + summary_path);
    os << "dim,d,mean_ap,ap_0.50,sbd,fbd,dic,abs_dic,man_deg,status\n";

    int failures = 0;
    for (int dim : dim_values) {
        for (double d : d_values) {
            RunConfig cfg = base;
            cfg.network.embedding_dim = dim;
            cfg.loss.neighbor_radius = d;
            char cell[64];
            std::snprintf(cell, sizeof cell, "cell_d%g_dim%d", d, dim);
            std::string cell_dir = out_dir + "/" + cell;
            fs::create_directories(cell_dir);
            cfg.paths.checkpoint = cell_dir + "/model.oseg";
            cfg.paths.log = cell_dir + "/train_log.csv";
            try {
                TrainResult res = train(cfg);
                ModelEvalResult ev = evaluate_model(res.spec, res.params, eval_data,
                                                    cfg.postprocess, default_ap_thresholds(),
                                                    eval_d);
                os << dim << "," << d << "," << ev.mean_ap << "," << ev.ap50 << "," << ev.sbd
                   << "," << ev.fbd << "," << ev.mean_dic << "," << ev.mean_abs_dic << ","
                   << ev.man_degrees << ",ok\n";
                os.flush();
                std::cout << cell << ": mean_ap=" << ev.mean_ap << " sbd=" << ev.sbd
                          << " mAN=" << ev.man_degrees << "\n";
            } catch (const std::exception& e) {
                ++failures;
                os << dim << "," << d << ",,,,,,,,failed: " << e.what() << "\n";
                os.flush();
                std::cerr << cell << " failed: " << e.what() << "\n";
            }
        }
    }
    std::cout << "summary: " << summary_path << "\n";
    return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"embedding-based instance segmentation with local orthogonality constraints"};
    app.require_subcommand(1);

    CommonOpts synth_opts, train_opts, seg_opts, segdir_opts, sweep_opts;

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_out;
    int synth_count = 16;
    add_common(synth, synth_opts);
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--count", synth_count, "number of scenes");

    // targets
    auto* targets = app.add_subcommand("targets", "distance target from a label map (debug)");
    std::string tgt_labels, tgt_out;
    targets->add_option("--labels", tgt_labels, "label PNG")->required();
    targets->add_option("--out", tgt_out, "output 16-bit PNG")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train a model");
    add_common(train_cmd, train_opts);

    // infer
    auto* infer = app.add_subcommand("infer", "write embedding/distance tensors for images");
    std::string inf_ckpt, inf_images, inf_out;
    infer->add_option("--checkpoint", inf_ckpt)->required();
    infer->add_option("--images", inf_images, "directory of input PNGs")->required();
    infer->add_option("--out", inf_out, "output directory")->required();

    // segment
    auto* segment_cmd = app.add_subcommand("segment", "segment one embedding/distance pair");
    std::string seg_emb, seg_dist, seg_out;
    add_common(segment_cmd, seg_opts);
    segment_cmd->add_option("--emb", seg_emb, "embedding tensor (OSGT)")->required();
    segment_cmd->add_option("--dist", seg_dist, "distance tensor (OSGT)")->required();
    segment_cmd->add_option("--out", seg_out, "output label PNG")->required();

    // segment-dir
    auto* segdir = app.add_subcommand("segment-dir", "segment every *_emb.osgt in a directory");
    std::string segdir_in, segdir_out;
    add_common(segdir, segdir_opts);
    segdir->add_option("--tensors", segdir_in, "directory with *_emb.osgt/*_dist.osgt")->required();
    segdir->add_option("--out", segdir_out, "output directory")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate predictions against ground truth");
    std::string eval_gt, eval_pred, eval_report, eval_thresholds = "to-0.95";
    eval_cmd->add_option("--gt", eval_gt, "ground truth label PNGs")->required();
    eval_cmd->add_option("--pred", eval_pred, "predicted label PNGs")->required();
    eval_cmd->add_option("--report", eval_report, "output report (.csv or .json)")->required();
    eval_cmd->add_option("--thresholds", eval_thresholds, "to-0.95 (default) or to-0.9");

    // embed-vis
    auto* vis = app.add_subcommand("embed-vis", "render embedding channels as RGB panels");
    std::string vis_emb, vis_prefix;
    vis->add_option("--emb", vis_emb, "embedding tensor (OSGT)")->required();
    vis->add_option("--out-prefix", vis_prefix, "output prefix")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "train/evaluate a (d, dim) grid");
    std::string sweep_eval_data, sweep_out;
    std::vector<double> sweep_d;
    std::vector<int> sweep_dim;
    double sweep_eval_d = 10.0;
    add_common(sweep, sweep_opts);
    sweep->add_option("--eval-data", sweep_eval_data, "held-out dataset directory")->required();
    sweep->add_option("--out", sweep_out, "output directory")->required();
    sweep->add_option("--d", sweep_d, "neighbor radii (default 10 30 100)");
    sweep->add_option("--dim", sweep_dim, "embedding dims (default 4 16)");
    sweep->add_option("--eval-d", sweep_eval_d, "neighbor radius for mAN evaluation");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(synth_opts, synth_out, synth_count);
        if (targets->parsed()) return cmd_targets(tgt_labels, tgt_out);
        if (train_cmd->parsed()) return cmd_train(train_opts);
        if (infer->parsed()) return cmd_infer(inf_ckpt, inf_images, inf_out);
        if (segment_cmd->parsed()) return cmd_segment(seg_opts, seg_emb, seg_dist, seg_out);
        if (segdir->parsed()) return cmd_segment_dir(segdir_opts, segdir_in, segdir_out);
        if (eval_cmd->parsed()) return cmd_eval(eval_gt, eval_pred, eval_report, eval_thresholds);
        if (vis->parsed()) return cmd_embed_vis(vis_emb, vis_prefix);
        if (sweep->parsed())
            return cmd_sweep(sweep_opts, sweep_eval_data, sweep_out, sweep_d, sweep_dim,
                             sweep_eval_d);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
