#include "orthoseg/config.hpp"

#include <fstream>
#include <sstream>

namespace orthoseg {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        int r = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw config_error(key + ": expected integer, got '" + v + "'");
    }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        uint64_t r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw config_error(key + ": expected unsigned integer, got '" + v + "'");
    }
}

double to_double(const std::string& key, const std::string& v) {
    try {
        size_t pos;
        double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw config_error(key + ": expected number, got '" + v + "'");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw config_error(key + ": expected boolean, got '" + v + "'");
}

}  // namespace

void apply_config_entry(RunConfig& c, const std::string& key, const std::string& value) {
    if (key == "network.input_channels") c.network.input_channels = to_int(key, value);
    else if (key == "network.base_channels") c.network.base_channels = to_int(key, value);
    else if (key == "network.depth") c.network.depth = to_int(key, value);
    else if (key == "network.embedding_dim") c.network.embedding_dim = to_int(key, value);
    else if (key == "network.head_channels") c.network.head_channels = to_int(key, value);
    else if (key == "loss.lambda1") c.loss.lambda1 = to_double(key, value);
    else if (key == "loss.neighbor_radius") c.loss.neighbor_radius = to_double(key, value);
    else if (key == "loss.epsilon") c.loss.epsilon = to_double(key, value);
    else if (key == "postprocess.t_c") c.postprocess.t_c = static_cast<float>(to_double(key, value));
    else if (key == "postprocess.t_e") c.postprocess.t_e = static_cast<float>(to_double(key, value));
    else if (key == "postprocess.min_seed_size") c.postprocess.min_seed_size = to_int(key, value);
    else if (key == "postprocess.max_iterations") c.postprocess.max_iterations = to_int(key, value);
    else if (key == "training.lr") c.training.lr = to_double(key, value);
    else if (key == "training.batch_size") c.training.batch_size = to_int(key, value);
    else if (key == "training.steps") c.training.steps = to_int(key, value);
    else if (key == "training.seed") c.training.seed = to_u64(key, value);
    else if (key == "training.augment_flip") c.training.augment_flip = to_bool(key, value);
    else if (key == "training.augment_rot90") c.training.augment_rot90 = to_bool(key, value);
    else if (key == "training.checkpoint_interval") c.training.checkpoint_interval = to_int(key, value);
    else if (key == "scene.width") c.scene.width = to_int(key, value);
    else if (key == "scene.height") c.scene.height = to_int(key, value);
    else if (key == "scene.min_objects") c.scene.min_objects = to_int(key, value);
    else if (key == "scene.max_objects") c.scene.max_objects = to_int(key, value);
    else if (key == "scene.shape") c.scene.shape = shape_kind_from_string(value);
    else if (key == "scene.min_radius") c.scene.min_radius = to_double(key, value);
    else if (key == "scene.max_radius") c.scene.max_radius = to_double(key, value);
    else if (key == "scene.touch_probability") c.scene.touch_probability = to_double(key, value);
    else if (key == "scene.noise_sigma") c.scene.noise_sigma = to_double(key, value);
    else if (key == "scene.seed") c.scene.seed = to_u64(key, value);
    else if (key == "paths.data") c.paths.data = value;
    else if (key == "paths.checkpoint") c.paths.checkpoint = value;
    else if (key == "paths.log") c.paths.log = value;
    else throw config_error("unknown config key: " + key);
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(lineno) + ": expected key=value");
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open config file " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const config_error& e) {
        throw config_error(path + ": " + e.what());
    }
}

void RunConfig::validate() const {
    network.validate();
    loss.validate();
    postprocess.validate();
    if (training.lr <= 0) throw config_error("training.lr must be positive");
    if (training.batch_size < 1) throw config_error("training.batch_size must be >= 1");
    if (training.steps < 0) throw config_error("training.steps must be >= 0");
    if (training.checkpoint_interval < 0)
        throw config_error("training.checkpoint_interval must be >= 0");
}

std::string RunConfig::resolved_text() const {
    std::ostringstream os;
    os << "network.input_channels=" << network.input_channels << "\n"
       << "network.base_channels=" << network.base_channels << "\n"
       << "network.depth=" << network.depth << "\n"
       << "network.embedding_dim=" << network.embedding_dim << "\n"
       << "network.head_channels=" << network.head_channels << "\n"
       << "loss.lambda1=" << loss.lambda1 << "\n"
       << "loss.neighbor_radius=" << loss.neighbor_radius << "\n"
       << "loss.epsilon=" << loss.epsilon << "\n"
       << "postprocess.t_c=" << postprocess.t_c << "\n"
       << "postprocess.t_e=" << postprocess.t_e << "\n"
       << "postprocess.min_seed_size=" << postprocess.min_seed_size << "\n"
       << "postprocess.max_iterations=" << postprocess.max_iterations << "\n"
       << "training.lr=" << training.lr << "\n"
       << "training.batch_size=" << training.batch_size << "\n"
       << "training.steps=" << training.steps << "\n"
       << "training.seed=" << training.seed << "\n"
       << "training.augment_flip=" << (training.augment_flip ? "true" : "false") << "\n"
       << "training.augment_rot90=" << (training.augment_rot90 ? "true" : "false") << "\n"
       << "training.checkpoint_interval=" << training.checkpoint_interval << "\n"
       << "scene.width=" << scene.width << "\n"
       << "scene.height=" << scene.height << "\n"
       << "scene.min_objects=" << scene.min_objects << "\n"
       << "scene.max_objects=" << scene.max_objects << "\n"
       << "scene.shape=" << to_string(scene.shape) << "\n"
       << "scene.min_radius=" << scene.min_radius << "\n"
       << "scene.max_radius=" << scene.max_radius << "\n"
       << "scene.touch_probability=" << scene.touch_probability << "\n"
       << "scene.noise_sigma=" << scene.noise_sigma << "\n"
       << "scene.seed=" << scene.seed << "\n"
       << "paths.data=" << paths.data << "\n"
       << "paths.checkpoint=" << paths.checkpoint << "\n"
       << "paths.log=" << paths.log << "\n";
    return os.str();
}

}  // namespace orthoseg
