#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace dehaze {

// Full run configuration. Defaults are the desk-scale training setup; the
// paper-scale values (patch 512, width_factor 1) stay reachable through the
// same keys.
struct RunConfig {
    int patch_size = 64;
    int batch_size = 4;
    double lr_g = 1e-4;
    double lr_d = 3e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double lambda1 = 0.5;
    double lambda2 = 0.5;
    int glda_min_patch = 8;
    int glda_max_patch = 50;
    int glda_max_patches = 8;
    bool glda = true;
    bool saca = true;
    bool msfa = true;
    bool hf_prior = true;
    bool lf_prior = true;
    uint64_t seed = 1;
    int steps = 200;
    int width_factor = 4;
    int d_steps = 1;          // discriminator updates per generator update
    bool nonsat_adv = false;  // -log D generator term instead of log(1-D)
    bool freeze_generator = false;

    void validate() const;  // throws on violated invariants
};

// `key = value` lines, '#' comments. Unknown keys and malformed values are
// errors naming the key. Precedence: overrides > file > defaults.
RunConfig load_config(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>&
                          cli_overrides = {});
RunConfig config_from_overrides(
    const std::vector<std::pair<std::string, std::string>>& overrides);
void apply_config_key(RunConfig& cfg, const std::string& key,
                      const std::string& value);

}  // namespace dehaze
