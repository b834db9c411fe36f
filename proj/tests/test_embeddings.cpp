#include <random>

#include "doctest.h"

#include "clickbait/embeddings.hpp"
#include "clickbait/errors.hpp"
#include "support.hpp"

using namespace clickbait;
using testing::to_vector;

namespace {

EmbeddingTable small_table() {
  EmbeddingTable t(3);
  t.insert("cat", {1.0f, 2.0f, 3.0f});
  t.insert("dog", {-1.0f, 0.5f, 0.25f});
  return t;
}

CharCnnParams small_cnn(const std::vector<std::string>& tokens, std::uint64_t seed = 3) {
  CharCnnConfig c;
  c.char_dim = 4;
  c.channels = 5;
  c.output_channels = 6;
  return CharCnnParams::initialize(c, CharVocabulary::build(tokens), seed);
}

}  // namespace

TEST_CASE("word lookup") {
  const EmbeddingTable t = small_table();
  const WordLookup hit = lookup_word(t, "dog");
  CHECK_FALSE(hit.oov);
  CHECK(hit.values == std::vector<double>{-1.0, 0.5, 0.25});

  const WordLookup miss = lookup_word(t, "zebra");
  CHECK(miss.oov);
  CHECK(miss.values == std::vector<double>(3, 0.0));

  const WordLookup pad = lookup_word(t, kPadToken);
  CHECK_FALSE(pad.oov);
  CHECK(pad.values == std::vector<double>(3, 0.0));
}

TEST_CASE("embedding table invariants") {
  EmbeddingTable t = small_table();
  CHECK_THROWS_AS(t.insert("cat", {0, 0, 0}), DuplicateTokenError);
  CHECK_THROWS_AS(t.insert("eel", {0, 0}), DimensionError);
  CHECK(t.tokens() == std::vector<std::string>{"cat", "dog"});
  CHECK(t.size() == 2);
}

TEST_CASE("document lookup falls back to the mean word vector") {
  const EmbeddingTable words = small_table();
  EmbeddingTable docs(3);
  docs.insert("7#post", {9.0f, 9.0f, 9.0f});

  const DocLookup stored = lookup_doc(&docs, words, "7#post", std::vector<std::string>{"cat"});
  CHECK_FALSE(stored.fallback);
  CHECK(stored.values == std::vector<double>{9, 9, 9});

  const std::vector<std::string> tokens = {"cat", "unknown", "dog"};
  const DocLookup mean = lookup_doc(&docs, words, "7#desc", tokens);
  CHECK(mean.fallback);
  CHECK(mean.values[0] == doctest::Approx((1.0 - 1.0) / 2.0));
  CHECK(mean.values[1] == doctest::Approx((2.0 + 0.5) / 2.0));
  CHECK(mean.values[2] == doctest::Approx((3.0 + 0.25) / 2.0));

  const DocLookup none = lookup_doc(nullptr, words, "x", std::vector<std::string>{"nothing"});
  CHECK(none.fallback);
  CHECK(none.values == std::vector<double>(3, 0.0));
}

TEST_CASE("tokenizer") {
  CHECK(tokenize("You Won't BELIEVE #This!!") == std::vector<std::string>{"you", "won't", "believe", "#this"});
  CHECK(tokenize("  @user:  10 reasons... why?  ") == std::vector<std::string>{"@user", "10", "reasons", "why"});
  CHECK(tokenize("\"Quoted\" (parens) -- ") == std::vector<std::string>{"quoted", "parens"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("Café") == std::vector<std::string>{"café"});
}

TEST_CASE("utf-8 decoding") {
  CHECK(decode_utf8("ab") == std::vector<char32_t>{U'a', U'b'});
  CHECK(decode_utf8("\xC3\xA9\xE2\x82\xAC") == std::vector<char32_t>{0xE9, 0x20AC});
  CHECK(decode_utf8("\xFF").size() == 1);
}

TEST_CASE("character vocabulary") {
  const CharVocabulary v = CharVocabulary::build(std::vector<std::string>{"ba", "ca"});
  CHECK(v.size() == 5);
  CHECK(v.index(U'a') == 2);
  CHECK(v.index(U'b') == 3);
  CHECK(v.index(U'c') == 4);
  CHECK(v.index(U'z') == CharVocabulary::kUnknown);
  CHECK(CharVocabulary::from_code_points(v.code_points()) == v);
}

TEST_CASE("char cnn word embedding") {
  const CharCnnParams p = small_cnn({"abc", "x"});
  CHECK(p.config.min_length() == 7);
  CHECK(p.char_table.shape() == Shape{p.vocab.size(), 4});

  Tensor one = embed_word_chars(p, "x");
  CHECK(one.shape() == Shape{6});
  for (double v : one.data()) CHECK(v >= 0.0);

  CHECK(to_vector(embed_word_chars(p, "abc").data()) == to_vector(embed_word_chars(p, "abc").data()));
  CHECK(to_vector(embed_word_chars(p, "abc").data()) != to_vector(embed_word_chars(p, "cba").data()));

  // Identical seeds give identical parameters; different seeds do not.
  const CharCnnParams same = small_cnn({"abc", "x"});
  CHECK(to_vector(same.kernels[1].data()) == to_vector(p.kernels[1].data()));
  CHECK(to_vector(small_cnn({"abc", "x"}, 4).kernels[1].data()) != to_vector(p.kernels[1].data()));

  const std::string long_word(40, 'a');
  CHECK(embed_word_chars(p, long_word).shape() == Shape{6});
  CHECK_THROWS_AS(embed_word_chars(p, ""), InvalidArgument);
}

TEST_CASE("title embedding pads, masks and truncates") {
  const EmbeddingTable words = small_table();
  const CharCnnParams chars = small_cnn({"cat", "dog", "zebra"});
  const std::vector<std::string> title = {"cat", "zebra"};

  const TitleEmbedding e = embed_title(words, chars, title, 4);
  CHECK(e.rows.shape() == Shape{4, 3 + 6});
  CHECK(e.mask == std::vector<bool>{true, true, false, false});
  CHECK(e.oov == std::vector<bool>{false, true});
  CHECK(e.truncated == 0);
  CHECK(e.rows.at(0, 0) == 1.0);
  CHECK(e.rows.at(1, 0) == 0.0);  // OOV word part
  for (std::size_t r = 2; r < 4; ++r)
    for (std::size_t c = 0; c < 9; ++c) CHECK(e.rows.at(r, c) == 0.0);

  const Tensor char_part = embed_word_chars(chars, "zebra");
  for (std::size_t c = 0; c < 6; ++c) CHECK(e.rows.at(1, 3 + c) == char_part.at(c));

  const std::vector<std::string> longer = {"cat", "dog", "cat", "dog", "cat"};
  const TitleEmbedding cut = embed_title(words, chars, longer, 3);
  CHECK(cut.rows.shape() == Shape{3, 9});
  CHECK(cut.truncated == 2);
  CHECK(cut.mask == std::vector<bool>{true, true, true});
}

TEST_CASE("padded title rows carry no gradient") {
  const EmbeddingTable words = small_table();
  const CharCnnParams chars = small_cnn({"cat", "zebra"});
  const std::vector<std::string> title = {"zebra"};
  std::mt19937_64 rng(8);

  auto param_grads = [&](const std::vector<double>& weights) {
    for (Tensor t : {chars.char_table, chars.kernels[0], chars.biases[2]}) t.zero_grad();
    const TitleEmbedding e = embed_title(words, chars, title, 3);
    Tensor loss = sum(mul(e.rows, Tensor::from_data(e.rows.shape(), weights)));
    backward(loss, GraphRetention::kRetain);
    std::vector<double> g = to_vector(chars.char_table.grad());
    g.insert(g.end(), chars.kernels[0].grad().begin(), chars.kernels[0].grad().end());
    g.insert(g.end(), chars.biases[2].grad().begin(), chars.biases[2].grad().end());
    return g;
  };

  auto weights = testing::random_values(rng, 3 * 9);
  const auto base = param_grads(weights);
  for (std::size_t i = 9; i < weights.size(); ++i) weights[i] = 100.0 + static_cast<double>(i);
  CHECK(param_grads(weights) == base);
}

TEST_CASE("char cnn gradients match finite differences") {
  const CharCnnParams p = small_cnn({"hello", "wo"});
  std::mt19937_64 rng(21);
  for (const std::string word : {"hello", "wo", "ow", "h"}) {
    const auto r = testing::random_values(rng, 6);
    auto loss = [&] { return dot(embed_word_chars(p, word), Tensor::vector(r)); };
    for (Tensor leaf : {p.char_table, p.kernels[0], p.kernels[2], p.biases[1]}) {
      leaf.zero_grad();
      backward(loss());
      const auto numeric = testing::numeric_gradient(leaf, [&] { return loss().item(); });
      CHECK(testing::max_relative_error(numeric, leaf.grad()) < 1e-4);
      leaf.zero_grad();
    }
  }
}
