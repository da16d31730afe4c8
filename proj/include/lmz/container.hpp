#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lmz/bitstring.hpp"
#include "lmz/predictors.hpp"

namespace lmz {

// On-disk layout, integers little-endian:
//
//   "LMZC" | version u8 | spec length u32 | spec text
//   | original length u64 | lost bit count u32 | packed lost bits
//   | payload bit count u64 | packed payload
inline constexpr std::uint8_t kContainerVersion = 1;

struct Container {
  std::string spec;
  std::uint64_t original_length = 0;
  BitString lost_bits;
  BitString payload;
};

std::vector<std::uint8_t> write_container(const Container& container);
// Bad magic, short or overlong input: corrupt_stream. Other versions:
// unknown_version, raised before anything past the version byte is read.
Container read_container(std::span<const std::uint8_t> bytes);

// Byte transform applied before coding, recorded in the container's spec as
// transform=<name>.
//   none   bytes as they are
//   msb    top bit cleared; lost bits are the MSB plane, or empty when no
//          byte has it set
//   halve  every byte halved; lost bits are the low bits
enum class Transform { none, msb, halve };
const char* to_string(Transform transform);
Transform parse_transform(const std::string& name);

struct ContainerStats {
  double raw_rate = 0;
  std::uint64_t payload_bytes = 0;
  std::uint64_t lost_bits = 0;
};

// Codes data in 2048-symbol segments (the predictor resets at each segment
// boundary) as one arithmetic-coded stream.
std::vector<std::uint8_t> compress_container(std::span<const std::uint8_t> data,
                                             const PredictorSpec& spec, Transform transform,
                                             const ArtifactStore& store = {},
                                             ContainerStats* stats = nullptr);
std::vector<std::uint8_t> decompress_container(std::span<const std::uint8_t> bytes,
                                               const ArtifactStore& store = {});

}  // namespace lmz
