#pragma once

#include <string>

#include "dehaze/trainer.hpp"

namespace dehaze {

// Self-describing binary container, magic header "DIHD1": run config, step
// counter, named parameter tensors, batchnorm buffers and ADAM moments.
// load(save(state)) restores every array bit-for-bit and save(load(path))
// rewrites identical bytes.
void checkpoint_save(const ModelState& st, const std::string& path);
ModelState checkpoint_load(const std::string& path);

}  // namespace dehaze
