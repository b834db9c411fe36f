#pragma once

// Binary vector files. Both kinds share one little-endian layout:
//
//   magic   4 bytes   "EMB1" (embedding table) or "FTB1" (feature bank)
//   dim     u32
//   count   u32
//   count x {
//     token_length  u32
//     token         token_length bytes of UTF-8
//     values        dim x float32
//   }
//
// Nothing may follow the last entry. Readers reject bad magic
// (BadMagicError), short files (TruncatedError carrying the entry index),
// trailing bytes (LengthMismatchError) and repeated tokens
// (DuplicateTokenError), and never return a partial table.

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clickbait/corpus.hpp"
#include "clickbait/embeddings.hpp"

namespace clickbait {

/// Precomputed per-id feature vectors (image FC7 activations, etc).
class FeatureBank : public EmbeddingTable {
 public:
  using EmbeddingTable::EmbeddingTable;
};

inline constexpr std::string_view kEmbeddingMagic = "EMB1";
inline constexpr std::string_view kFeatureBankMagic = "FTB1";

std::string encode_vectors(const EmbeddingTable& table, std::string_view magic);
EmbeddingTable decode_vectors(std::string_view bytes, std::string_view magic);

EmbeddingTable read_embedding_file(const std::string& path);
void write_embedding_file(const std::string& path, const EmbeddingTable& table);

FeatureBank read_feature_bank(const std::string& path);
void write_feature_bank(const std::string& path, const FeatureBank& bank);

/// Distinct image ids referenced by `records` that `bank` lacks, in first-seen
/// order. Every referenced id is missing when `bank` is null.
std::vector<std::string> missing_image_ids(std::span<const PostRecord> records, const FeatureBank* bank);

// Shared helpers for the binary formats.
std::string read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::string_view bytes);

}  // namespace clickbait
