#pragma once

#include <string>

#include "oazr/optim.hpp"

namespace oazr {

// Binary checkpoint: magic "OAZR1\n", u32 LE tensor count, then a manifest of
// (name_len u32 LE, name bytes, rank u32 LE, dims u32 LE...) per tensor, then
// all payloads as f32 LE in manifest order. Tensors are written sorted by name.
void save_checkpoint(const ParamStore& store, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace oazr
