#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mrmp/gcn.hpp"
#include "mrmp/tensor.hpp"

namespace mrmp {

enum class CheckpointDtype : std::uint32_t { F32 = 0, F64 = 1 };

// Binary checkpoint: magic "MRMP", u32 version, u32 tensor count; per tensor
// u32 name length + UTF-8 name, u32 rank, u32 dims, u32 dtype tag
// (f32=0, f64=1), raw little-endian data. Latents only; masks are
// recomputed from the threshold a(r).
void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor>>& tensors,
                     CheckpointDtype dtype = CheckpointDtype::F64);

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

void save_model(const std::string& path, const GcnModel& model,
                CheckpointDtype dtype = CheckpointDtype::F64);

// Overwrites the tensors of a freshly built model with checkpoint contents;
// shapes must match the config the model was built from.
void load_model(const std::string& path, GcnModel& model);

}  // namespace mrmp
