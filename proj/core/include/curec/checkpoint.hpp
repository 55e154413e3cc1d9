#pragma once

#include <cstdint>
#include <string>

#include "curec/model.hpp"

namespace curec::checkpoint {

// Header document (arch, tasks, item count, seed, named parameter shapes)
// followed by flat little-endian 64-bit float arrays in header order.
void save(const model::ModelState& m, std::uint64_t seed, const std::string& path);

struct Loaded {
  model::ModelState model;
  std::uint64_t seed = 0;
};

// Rejects unknown versions and any shape mismatch between the header and
// the payload.
Loaded load(const std::string& path);

}  // namespace curec::checkpoint
