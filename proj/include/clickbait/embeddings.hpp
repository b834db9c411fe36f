#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "clickbait/tensor.hpp"

namespace clickbait {

/// Token -> fixed-width float vector. Insertion order is kept so that a table
/// written back to disk reproduces the original entry order.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 300);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return order_.size(); }
  bool empty() const noexcept { return order_.empty(); }

  /// Throws DimensionError on a wrong-width vector and DuplicateTokenError
  /// when the token is already present.
  void insert(std::string token, std::vector<float> values);

  const std::vector<float>* find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) != nullptr; }
  const std::vector<std::string>& tokens() const noexcept { return order_; }

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b);

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  std::size_t dim_;
  std::unordered_map<std::string, std::vector<float>, Hash, std::equal_to<>> entries_;
  std::vector<std::string> order_;
};

/// Title padding token; always embeds to zeros.
inline constexpr std::string_view kPadToken = "<pad>";

struct WordLookup {
  std::vector<double> values;
  bool oov = false;
};

/// Stored vector, or zeros flagged `oov` when the token is absent. The padding
/// token yields zeros without the flag.
WordLookup lookup_word(const EmbeddingTable& table, std::string_view token);

struct DocLookup {
  std::vector<double> values;
  bool fallback = false;
};

/// Stored document vector for `doc_id`; otherwise the mean of the known word
/// vectors among `tokens` (zeros if none), flagged as a fallback. `docs` may
/// be null when no document table was supplied.
DocLookup lookup_doc(const EmbeddingTable* docs, const EmbeddingTable& words, std::string_view doc_id,
                     std::span<const std::string> tokens);

/// Lowercases ASCII, splits on whitespace and strips leading/trailing
/// punctuation, keeping a leading '#' or '@'. Empty results are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// Splits UTF-8 into code points; invalid bytes map to themselves.
std::vector<char32_t> decode_utf8(std::string_view text);

// ---------------------------------------------------------------------------
// Character-level CNN word encoder.

class CharVocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnknown = 1;

  CharVocabulary() = default;
  /// Assigns ids 2.. to code points in ascending order.
  static CharVocabulary build(std::span<const std::string> tokens);
  static CharVocabulary from_code_points(std::vector<char32_t> code_points);

  std::size_t index(char32_t c) const;
  /// Number of rows needed in the character table, pad and unknown included.
  std::size_t size() const noexcept { return code_points_.size() + 2; }
  const std::vector<char32_t>& code_points() const noexcept { return code_points_; }

  friend bool operator==(const CharVocabulary&, const CharVocabulary&) = default;

 private:
  std::vector<char32_t> code_points_;
  std::map<char32_t, std::size_t> ids_;
};

struct CharCnnConfig {
  std::size_t char_dim = 16;
  std::size_t kernel_width = 3;
  std::size_t channels = 32;
  std::size_t output_channels = 32;

  static constexpr std::size_t kLayers = 3;

  /// Shortest character sequence the three valid convolutions accept.
  std::size_t min_length() const { return kLayers * (kernel_width - 1) + 1; }

  friend bool operator==(const CharCnnConfig&, const CharCnnConfig&) = default;
};

struct CharCnnParams {
  CharCnnConfig config;
  CharVocabulary vocab;
  Tensor char_table;                                 // [vocab.size() x char_dim]
  std::array<Tensor, CharCnnConfig::kLayers> kernels;  // [width x in x out]
  std::array<Tensor, CharCnnConfig::kLayers> biases;

  /// Glorot-initialised weights, zero biases.
  static CharCnnParams initialize(const CharCnnConfig& config, CharVocabulary vocab, std::uint64_t seed);
};

/// Characters -> conv/ReLU x3 -> max over time. Words shorter than
/// `config.min_length()` are right-padded with the pad character. Throws
/// InvalidArgument on an empty token.
Tensor embed_word_chars(const CharCnnParams& params, std::string_view token);

struct TitleEmbedding {
  Tensor rows;                // [K x (word_dim + output_channels)]
  std::vector<bool> mask;     // true for real tokens
  std::vector<bool> oov;      // per populated row
  std::size_t truncated = 0;  // tokens dropped past K
};

/// Per-token [word vector ; char-CNN vector], right-padded with zero rows to
/// `max_length` or truncated to it.
TitleEmbedding embed_title(const EmbeddingTable& words, const CharCnnParams& chars, std::span<const std::string> tokens,
                           std::size_t max_length);

}  // namespace clickbait
