#include "dehaze/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dehaze {

namespace {

[[noreturn]] void key_error(const std::string& key, const std::string& what) {
    throw std::invalid_argument(key + ": " + what);
}

double parse_number(const std::string& key, const std::string& v) {
    size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        key_error(key, "expected number");
    }
    if (pos != v.size()) key_error(key, "expected number");
    return x;
}

int parse_int(const std::string& key, const std::string& v) {
    const double x = parse_number(key, v);
    const int i = static_cast<int>(x);
    if (static_cast<double>(i) != x) key_error(key, "expected integer");
    return i;
}

uint64_t parse_u64(const std::string& key, const std::string& v) {
    size_t pos = 0;
    uint64_t x = 0;
    try {
        x = std::stoull(v, &pos);
    } catch (const std::exception&) {
        key_error(key, "expected unsigned integer");
    }
    if (pos != v.size()) key_error(key, "expected unsigned integer");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    key_error(key, "expected boolean (true/false/1/0/on/off)");
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_key(RunConfig& cfg, const std::string& key,
                      const std::string& value) {
    if (key == "patch_size")
        cfg.patch_size = parse_int(key, value);
    else if (key == "batch_size")
        cfg.batch_size = parse_int(key, value);
    else if (key == "lr_g")
        cfg.lr_g = parse_number(key, value);
    else if (key == "lr_d")
        cfg.lr_d = parse_number(key, value);
    else if (key == "beta1")
        cfg.beta1 = parse_number(key, value);
    else if (key == "beta2")
        cfg.beta2 = parse_number(key, value);
    else if (key == "lambda1")
        cfg.lambda1 = parse_number(key, value);
    else if (key == "lambda2")
        cfg.lambda2 = parse_number(key, value);
    else if (key == "glda_min_patch")
        cfg.glda_min_patch = parse_int(key, value);
    else if (key == "glda_max_patch")
        cfg.glda_max_patch = parse_int(key, value);
    else if (key == "glda_max_patches")
        cfg.glda_max_patches = parse_int(key, value);
    else if (key == "glda")
        cfg.glda = parse_bool(key, value);
    else if (key == "saca")
        cfg.saca = parse_bool(key, value);
    else if (key == "msfa")
        cfg.msfa = parse_bool(key, value);
    else if (key == "hf_prior")
        cfg.hf_prior = parse_bool(key, value);
    else if (key == "lf_prior")
        cfg.lf_prior = parse_bool(key, value);
    else if (key == "seed")
        cfg.seed = parse_u64(key, value);
    else if (key == "steps")
        cfg.steps = parse_int(key, value);
    else if (key == "width_factor")
        cfg.width_factor = parse_int(key, value);
    else if (key == "d_steps")
        cfg.d_steps = parse_int(key, value);
    else if (key == "nonsat_adv")
        cfg.nonsat_adv = parse_bool(key, value);
    else if (key == "freeze_generator")
        cfg.freeze_generator = parse_bool(key, value);
    else
        key_error(key, "unknown key");
}

void RunConfig::validate() const {
    auto bad = [](const std::string& what) {
        throw std::invalid_argument("config: " + what);
    };
    if (lr_g <= 0.0 || lr_d <= 0.0) bad("learning rates must be positive");
    if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
        bad("betas must lie in (0,1)");
    if (lambda1 < 0.0 || lambda2 < 0.0) bad("lambdas must be nonnegative");
    if (patch_size <= 0 || patch_size % 16 != 0)
        bad("patch_size must be a positive multiple of 16 (four 2x poolings)");
    if (batch_size < 1) bad("batch_size must be >= 1");
    if (glda_min_patch < 1 || glda_max_patch < glda_min_patch)
        bad("glda patch range is empty");
    if (glda_max_patches < 1) bad("glda_max_patches must be >= 1");
    if (steps < 0) bad("steps must be >= 0");
    if (width_factor < 1 || 32 % width_factor != 0 ||
        (32 / width_factor) % 4 != 0)
        bad("width_factor must divide 32 with base width a multiple of 4");
    if (d_steps < 1) bad("d_steps must be >= 1");
}

RunConfig load_config(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& cli_overrides) {
    RunConfig cfg;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config: " + path + ":" +
                                            std::to_string(lineno) +
                                            ": expected 'key = value'");
            apply_config_key(cfg, trim(line.substr(0, eq)),
                             trim(line.substr(eq + 1)));
        }
    }
    for (const auto& [k, v] : cli_overrides) apply_config_key(cfg, k, v);
    cfg.validate();
    return cfg;
}

RunConfig config_from_overrides(
    const std::vector<std::pair<std::string, std::string>>& overrides) {
    RunConfig cfg;
    for (const auto& [k, v] : overrides) apply_config_key(cfg, k, v);
    cfg.validate();
    return cfg;
}

}  // namespace dehaze
