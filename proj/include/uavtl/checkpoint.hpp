#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavtl/network.hpp"

namespace uavtl::agent {

// Binary checkpoint, all integers and floats little-endian:
//   "UAVTLCKP"  magic (8 bytes)
//   u32 version (= 1)
//   u32 input_dim, u32 layer_count
//   per layer: u8 stream (0 trunk, 1 value, 2 advantage), u32 in, u32 out
//   u64 parameter_count, then f64 parameters (per layer: weights row-major, biases)
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const DuelingNetwork& net);
DuelingNetwork decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const DuelingNetwork& net, const std::string& path);
DuelingNetwork load_checkpoint(const std::string& path);

// Throws a load error naming the first layer whose shape differs.
void require_architecture(const DuelingNetwork& net, const Architecture& expected);

}  // namespace uavtl::agent
