#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "kernclass/tensor.hpp"

namespace kernclass {

// Versioned binary container of named 64-bit float tensors ("KCP1" magic).
// Values round-trip exactly (raw IEEE-754 bytes, little-endian).
void save_tensors(const std::filesystem::path& path,
                  const std::vector<std::pair<std::string, const Tensor*>>& tensors);

std::vector<std::pair<std::string, Tensor>> load_tensors(const std::filesystem::path& path);

}  // namespace kernclass
