#include "clickbait/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "clickbait/errors.hpp"
#include "clickbait/init.hpp"

namespace clickbait {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw InvalidArgument("embedding dimension must be positive");
}

void EmbeddingTable::insert(std::string token, std::vector<float> values) {
  if (values.size() != dim_) {
    throw DimensionError("embedding for '" + token + "' has " + std::to_string(values.size()) + " values, table dim is " +
                         std::to_string(dim_));
  }
  if (entries_.contains(token)) throw DuplicateTokenError("duplicate token '" + token + "'");
  order_.push_back(token);
  entries_.emplace(std::move(token), std::move(values));
}

const std::vector<float>* EmbeddingTable::find(std::string_view token) const {
  auto it = entries_.find(token);
  return it == entries_.end() ? nullptr : &it->second;
}

bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
  return a.dim_ == b.dim_ && a.order_ == b.order_ && a.entries_ == b.entries_;
}

WordLookup lookup_word(const EmbeddingTable& table, std::string_view token) {
  WordLookup out{std::vector<double>(table.dim(), 0.0), false};
  if (token == kPadToken) return out;
  if (const auto* v = table.find(token)) {
    std::copy(v->begin(), v->end(), out.values.begin());
  } else {
    out.oov = true;
  }
  return out;
}

DocLookup lookup_doc(const EmbeddingTable* docs, const EmbeddingTable& words, std::string_view doc_id,
                     std::span<const std::string> tokens) {
  if (docs) {
    if (const auto* v = docs->find(doc_id)) return {std::vector<double>(v->begin(), v->end()), false};
  }
  const std::size_t dim = docs ? docs->dim() : words.dim();
  if (words.dim() != dim) {
    throw DimensionError("document fallback needs word dim " + std::to_string(words.dim()) + " == doc dim " +
                         std::to_string(dim));
  }
  DocLookup out{std::vector<double>(dim, 0.0), true};
  std::size_t known = 0;
  for (const std::string& t : tokens) {
    const auto* v = words.find(t);
    if (!v) continue;
    for (std::size_t i = 0; i < dim; ++i) out.values[i] += (*v)[i];
    ++known;
  }
  if (known > 0) {
    for (double& x : out.values) x /= static_cast<double>(known);
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::string_view word = text.substr(start, i - start);
    while (!word.empty() && is_punct(word.front()) && word.front() != '#' && word.front() != '@') word.remove_prefix(1);
    while (!word.empty() && is_punct(word.back())) word.remove_suffix(1);
    if (word.empty()) continue;
    std::string token(word);
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.push_back(std::move(token));
  }
  return out;
}

std::vector<char32_t> decode_utf8(std::string_view text) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t extra = lead >= 0xF0 && lead < 0xF8 ? 3 : lead >= 0xE0 ? 2 : lead >= 0xC0 ? 1 : 0;
    if (lead >= 0xF8 || (lead >= 0x80 && lead < 0xC0)) extra = 0;
    char32_t cp = extra == 0 ? lead : extra == 1 ? (lead & 0x1F) : extra == 2 ? (lead & 0x0F) : (lead & 0x07);
    bool valid = true;
    for (std::size_t k = 1; valid && k <= extra; ++k) {
      if (i + k >= text.size()) {
        valid = false;
        break;
      }
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) valid = false;
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (!valid) {
      out.push_back(lead);
      ++i;
    } else {
      out.push_back(cp);
      i += extra + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

CharVocabulary CharVocabulary::build(std::span<const std::string> tokens) {
  std::set<char32_t> seen;
  for (const std::string& t : tokens)
    for (char32_t c : decode_utf8(t)) seen.insert(c);
  return from_code_points(std::vector<char32_t>(seen.begin(), seen.end()));
}

CharVocabulary CharVocabulary::from_code_points(std::vector<char32_t> code_points) {
  CharVocabulary v;
  for (char32_t c : code_points) {
    if (!v.ids_.emplace(c, v.code_points_.size() + 2).second) {
      throw InvalidArgument("duplicate code point in character vocabulary");
    }
    v.code_points_.push_back(c);
  }
  return v;
}

std::size_t CharVocabulary::index(char32_t c) const {
  auto it = ids_.find(c);
  return it == ids_.end() ? kUnknown : it->second;
}

CharCnnParams CharCnnParams::initialize(const CharCnnConfig& config, CharVocabulary vocab, std::uint64_t seed) {
  if (config.kernel_width == 0 || config.char_dim == 0 || config.channels == 0 || config.output_channels == 0) {
    throw InvalidArgument("char CNN sizes must be positive");
  }
  CharCnnParams p;
  p.config = config;
  p.vocab = std::move(vocab);
  p.char_table = glorot_matrix(config.char_dim, p.vocab.size(), derive_seed(seed, 0));
  // glorot_matrix yields [fanout x fanin]; the table is [chars x char_dim].
  const std::size_t w = config.kernel_width;
  for (std::size_t layer = 0; layer < CharCnnConfig::kLayers; ++layer) {
    const std::size_t in = layer == 0 ? config.char_dim : config.channels;
    const std::size_t out = layer + 1 == CharCnnConfig::kLayers ? config.output_channels : config.channels;
    p.kernels[layer] = Tensor::from_data({w, in, out}, glorot_uniform(w * in, w * out, w * in * out,
                                                                      derive_seed(seed, 1 + layer)),
                                         true);
    p.biases[layer] = Tensor::zeros({out}, true);
  }
  return p;
}

Tensor embed_word_chars(const CharCnnParams& params, std::string_view token) {
  if (token.empty()) throw InvalidArgument("embed_word_chars: empty token");
  std::vector<std::size_t> ids;
  for (char32_t c : decode_utf8(token)) ids.push_back(params.vocab.index(c));
  while (ids.size() < params.config.min_length()) ids.push_back(CharVocabulary::kPad);
  Tensor x = gather_rows(params.char_table, ids);
  for (std::size_t layer = 0; layer < CharCnnConfig::kLayers; ++layer) {
    x = relu(conv1d(x, params.kernels[layer], params.biases[layer]));
  }
  return maxpool_over_time(x);
}

TitleEmbedding embed_title(const EmbeddingTable& words, const CharCnnParams& chars, std::span<const std::string> tokens,
                           std::size_t max_length) {
  if (max_length == 0) throw InvalidArgument("embed_title: title length cap must be at least 1");
  const std::size_t width = words.dim() + chars.config.output_channels;
  const std::size_t used = std::min(tokens.size(), max_length);
  TitleEmbedding out;
  out.truncated = tokens.size() - used;
  out.mask.assign(max_length, false);
  std::vector<Tensor> rows;
  rows.reserve(max_length);
  for (std::size_t i = 0; i < used; ++i) {
    WordLookup word = lookup_word(words, tokens[i]);
    out.oov.push_back(word.oov);
    rows.push_back(concat({Tensor::vector(std::move(word.values)), embed_word_chars(chars, tokens[i])}, 0));
    out.mask[i] = true;
  }
  for (std::size_t i = used; i < max_length; ++i) rows.push_back(Tensor::zeros({width}));
  out.rows = stack_rows(rows);
  return out;
}

}  // namespace clickbait
