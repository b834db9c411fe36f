#pragma once

// Model checkpoint, little-endian:
//
//   magic        "CKP1"
//   version      u32 (kCheckpointVersion)
//   header_size  u64
//   header       header_size bytes of JSON: model config (including the
//                title length K), training config, character vocabulary and
//                the ordered list of {name, shape} for every parameter
//   payload      float64 values of each parameter, in header order
//   crc32        u32 over every preceding byte
//
// Parameters are stored as float64 so a save/load cycle is bit-exact.

#include <cstdint>
#include <string>
#include <string_view>

#include "clickbait/model.hpp"
#include "clickbait/training.hpp"

namespace clickbait {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointMagic = "CKP1";

struct Checkpoint {
  ModelParams params;
  TrainConfig train;
};

std::string encode_checkpoint(const ModelParams& params, const TrainConfig& train);

/// Throws BadMagicError, VersionMismatchError, ChecksumError, TruncatedError
/// or FormatError; never returns a partially filled model.
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const ModelParams& params, const TrainConfig& train);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace clickbait
