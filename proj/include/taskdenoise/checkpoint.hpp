#pragma once
// Model checkpoints ("TDNMDL01").
//
// Layout, little-endian:
//   char[8]  magic "TDNMDL01"
//   u32      version (1)
//   u32      descriptor length L
//   char[L]  JSON descriptor: architecture, geometry, tensor names and sizes
//   f64[]    tensors in descriptor order

#include "taskdenoise/nnet.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tdn::nn {

inline constexpr char kModelMagic[9] = "TDNMDL01";
inline constexpr std::uint32_t kModelVersion = 1;

std::vector<unsigned char> serialize_params(const ModelParams& p);
ModelParams deserialize_params(const std::vector<unsigned char>& bytes);

void save_params(const ModelParams& p, const std::filesystem::path& path);
ModelParams load_params(const std::filesystem::path& path);

}  // namespace tdn::nn
