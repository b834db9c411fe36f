#include "clickbait/vector_files.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "binary_io.hpp"
#include "clickbait/errors.hpp"

namespace clickbait {

std::string encode_vectors(const EmbeddingTable& table, std::string_view magic) {
  detail::ByteWriter w;
  w.raw(magic);
  w.u32(static_cast<std::uint32_t>(table.dim()));
  w.u32(static_cast<std::uint32_t>(table.size()));
  for (const std::string& token : table.tokens()) {
    w.u32(static_cast<std::uint32_t>(token.size()));
    w.raw(token);
    for (float v : *table.find(token)) w.f32(v);
  }
  return w.take();
}

EmbeddingTable decode_vectors(std::string_view bytes, std::string_view magic) {
  detail::ByteReader r(bytes);
  if (bytes.size() < magic.size() || bytes.substr(0, magic.size()) != magic) {
    throw BadMagicError("expected magic '" + std::string(magic) + "'");
  }
  r.skip(magic.size());
  const std::uint32_t dim = r.u32(-1);
  const std::uint32_t count = r.u32(-1);
  if (dim == 0) throw FormatError("vector file declares dimension 0");
  EmbeddingTable table(dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = r.u32(i);
    std::string token(r.raw(len, i));
    std::vector<float> values(dim);
    for (float& v : values) v = r.f32(i);
    try {
      table.insert(std::move(token), std::move(values));
    } catch (const DuplicateTokenError& e) {
      throw DuplicateTokenError(std::string(e.what()) + " at entry " + std::to_string(i));
    }
  }
  if (!r.at_end()) {
    throw LengthMismatchError(std::to_string(r.remaining()) + " unexpected trailing bytes after " +
                              std::to_string(count) + " entries");
  }
  return table;
}

std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path + "'");
}

EmbeddingTable read_embedding_file(const std::string& path) {
  return decode_vectors(read_file_bytes(path), kEmbeddingMagic);
}

void write_embedding_file(const std::string& path, const EmbeddingTable& table) {
  write_file_bytes(path, encode_vectors(table, kEmbeddingMagic));
}

FeatureBank read_feature_bank(const std::string& path) {
  EmbeddingTable table = decode_vectors(read_file_bytes(path), kFeatureBankMagic);
  FeatureBank bank(table.dim());
  for (const std::string& id : table.tokens()) bank.insert(id, *table.find(id));
  return bank;
}

void write_feature_bank(const std::string& path, const FeatureBank& bank) {
  write_file_bytes(path, encode_vectors(bank, kFeatureBankMagic));
}

std::vector<std::string> missing_image_ids(std::span<const PostRecord> records, const FeatureBank* bank) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const PostRecord& r : records) {
    if (!r.image_id) continue;
    if (bank && bank->contains(*r.image_id)) continue;
    if (seen.insert(*r.image_id).second) out.push_back(*r.image_id);
  }
  return out;
}

}  // namespace clickbait
