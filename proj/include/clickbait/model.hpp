#pragma once

// Hybrid clickbait classifier: a BiLSTM with additive attention over the post
// title, a Siamese net comparing the post and target-description document
// vectors, a Siamese net comparing the attached image with the target
// description, and a logistic output layer over their concatenation.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "clickbait/embeddings.hpp"
#include "clickbait/tensor.hpp"

namespace clickbait {

struct ModelConfig {
  std::size_t word_dim = 300;
  std::size_t doc_dim = 300;
  std::size_t image_dim = 4096;
  CharCnnConfig char_cnn;
  std::size_t hidden = 64;          // per LSTM direction
  std::size_t attention = 64;
  std::size_t siamese_hidden = 128;
  std::size_t siamese_out = 64;
  std::size_t max_title_length = 1;  // K

  std::size_t token_width() const { return word_dim + char_cnn.output_channels; }
  std::size_t fusion_width() const { return 2 * hidden + 2 * siamese_out; }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct DenseLayer {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  static DenseLayer initialize(std::size_t in, std::size_t out, std::uint64_t seed);
  Tensor apply(const Tensor& x) const { return add(matvec(weight, x), bias); }
};

struct LstmCellParams {
  Tensor gate_weights;       // [3H x (H + D)], rows ordered forget, input, output
  Tensor candidate_weights;  // [H x (H + D)]
  Tensor gate_bias;          // [3H]
  Tensor candidate_bias;     // [H]

  static LstmCellParams initialize(std::size_t input_dim, std::size_t hidden, std::uint64_t seed);
  std::size_t hidden() const { return candidate_weights.dim(0); }
  std::size_t input_dim() const { return candidate_weights.dim(1) - hidden(); }
};

struct LstmState {
  Tensor h;
  Tensor c;

  static LstmState zeros(std::size_t hidden);
};

struct AttentionParams {
  Tensor projection;  // W_a, [A x 2H]
  Tensor scorer;      // v_a, [A]

  static AttentionParams initialize(std::size_t annotation_width, std::size_t attention, std::uint64_t seed);
};

/// Shared twin branch: in -> hidden -> out, ReLU after each layer.
struct SiameseParams {
  DenseLayer first;
  DenseLayer second;

  static SiameseParams initialize(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed);
};

struct VisualSiameseParams {
  DenseLayer projection;  // image_dim -> doc_dim
  SiameseParams branch;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct ModelParams {
  ModelConfig config;
  CharCnnParams char_cnn;
  LstmCellParams forward_lstm;
  LstmCellParams backward_lstm;
  AttentionParams attention;
  SiameseParams text_siamese;
  VisualSiameseParams visual_siamese;
  DenseLayer fusion;  // fusion_width -> 1

  /// Glorot weights and zero biases, one derived seed per tensor.
  static ModelParams initialize(const ModelConfig& config, CharVocabulary vocab, std::uint64_t seed);

  /// Every learnable tensor, in a fixed order with stable names.
  std::vector<NamedTensor> parameters() const;
  std::size_t parameter_count() const;
};

// ---------------------------------------------------------------------------

/// One step of the cell:
///   [f, i, o] = sigmoid(W [h_prev; r] + b)
///   l         = tanh(V [h_prev; r] + d)
///   c         = f * c_prev + i * l
///   h         = o * tanh(c)
LstmState lstm_cell(const LstmCellParams& params, const Tensor& input, const LstmState& state);

/// Runs the forward cell left-to-right and the backward cell right-to-left
/// over the unmasked rows of `title` and returns [K x 2H] annotations
/// [h_fwd ; h_bwd]. Masked rows are zero.
Tensor bilstm(const LstmCellParams& forward, const LstmCellParams& backward, const Tensor& title,
              const std::vector<bool>& mask);

struct AttentionOutput {
  Tensor context;                // [2H]
  std::vector<double> weights;   // [K], zero at masked positions
};

/// score_j = v_a . tanh(W_a h_j) over unmasked j, softmax-normalised, and the
/// weighted sum of annotations. Throws InvalidArgument if every position is
/// masked.
AttentionOutput attention(const AttentionParams& params, const Tensor& annotations, const std::vector<bool>& mask);

Tensor siamese_branch(const SiameseParams& params, const Tensor& x);

/// |branch(a) - branch(b)| with one set of branch weights.
Tensor siamese_text(const SiameseParams& params, const Tensor& title_doc, const Tensor& target_doc);

/// |branch(project(image)) - branch(target_doc)|; zeros without an image.
Tensor siamese_visual(const VisualSiameseParams& params, const std::optional<Tensor>& image, const Tensor& target_doc);

/// Model inputs for one post after all table lookups. Only the character CNN
/// and the parameters above remain to be applied.
struct EncodedRecord {
  std::string id;
  std::vector<std::string> title_tokens;
  std::vector<double> post_doc;
  std::vector<double> target_doc;
  std::optional<std::vector<double>> image;
  double label = 0.0;
  bool post_doc_fallback = false;
  bool target_doc_fallback = false;
};

struct ForwardResult {
  Tensor logit;
  Tensor probability;
  std::vector<double> attention_weights;
  std::size_t truncated = 0;
};

/// p = sigmoid(w . [context ; text_siamese ; visual_siamese] + b). Titles are
/// fitted to `params.config.max_title_length`.
ForwardResult forward(const ModelParams& params, const EmbeddingTable& words, const EncodedRecord& record);

/// Throws DimensionError if the record's vectors do not match the config.
void validate_record(const ModelConfig& config, const EncodedRecord& record);

}  // namespace clickbait
