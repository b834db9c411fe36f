#include "clickbait/model.hpp"

#include <algorithm>

#include "clickbait/errors.hpp"
#include "clickbait/init.hpp"

namespace clickbait {

DenseLayer DenseLayer::initialize(std::size_t in, std::size_t out, std::uint64_t seed) {
  return {glorot_matrix(in, out, seed), Tensor::zeros({out}, true)};
}

LstmCellParams LstmCellParams::initialize(std::size_t input_dim, std::size_t hidden, std::uint64_t seed) {
  const std::size_t joint = hidden + input_dim;
  return {glorot_matrix(joint, 3 * hidden, derive_seed(seed, 0)), glorot_matrix(joint, hidden, derive_seed(seed, 1)),
          Tensor::zeros({3 * hidden}, true), Tensor::zeros({hidden}, true)};
}

LstmState LstmState::zeros(std::size_t hidden) { return {Tensor::zeros({hidden}), Tensor::zeros({hidden})}; }

AttentionParams AttentionParams::initialize(std::size_t annotation_width, std::size_t attention, std::uint64_t seed) {
  AttentionParams p;
  p.projection = glorot_matrix(annotation_width, attention, derive_seed(seed, 0));
  p.scorer = Tensor::from_data({attention}, glorot_uniform(attention, 1, attention, derive_seed(seed, 1)), true);
  return p;
}

SiameseParams SiameseParams::initialize(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed) {
  return {DenseLayer::initialize(in, hidden, derive_seed(seed, 0)),
          DenseLayer::initialize(hidden, out, derive_seed(seed, 1))};
}

ModelParams ModelParams::initialize(const ModelConfig& config, CharVocabulary vocab, std::uint64_t seed) {
  if (config.max_title_length == 0) throw InvalidArgument("model: max_title_length must be at least 1");
  ModelParams p;
  p.config = config;
  p.char_cnn = CharCnnParams::initialize(config.char_cnn, std::move(vocab), derive_seed(seed, 1));
  p.forward_lstm = LstmCellParams::initialize(config.token_width(), config.hidden, derive_seed(seed, 2));
  p.backward_lstm = LstmCellParams::initialize(config.token_width(), config.hidden, derive_seed(seed, 3));
  p.attention = AttentionParams::initialize(2 * config.hidden, config.attention, derive_seed(seed, 4));
  p.text_siamese =
      SiameseParams::initialize(config.doc_dim, config.siamese_hidden, config.siamese_out, derive_seed(seed, 5));
  p.visual_siamese.projection = DenseLayer::initialize(config.image_dim, config.doc_dim, derive_seed(seed, 6));
  p.visual_siamese.branch =
      SiameseParams::initialize(config.doc_dim, config.siamese_hidden, config.siamese_out, derive_seed(seed, 7));
  p.fusion = DenseLayer::initialize(config.fusion_width(), 1, derive_seed(seed, 8));
  return p;
}

std::vector<NamedTensor> ModelParams::parameters() const {
  std::vector<NamedTensor> out;
  out.push_back({"char_cnn.char_table", char_cnn.char_table});
  for (std::size_t i = 0; i < CharCnnConfig::kLayers; ++i) {
    out.push_back({"char_cnn.conv" + std::to_string(i) + ".kernels", char_cnn.kernels[i]});
    out.push_back({"char_cnn.conv" + std::to_string(i) + ".bias", char_cnn.biases[i]});
  }
  auto add_lstm = [&out](const std::string& prefix, const LstmCellParams& p) {
    out.push_back({prefix + ".gate_weights", p.gate_weights});
    out.push_back({prefix + ".candidate_weights", p.candidate_weights});
    out.push_back({prefix + ".gate_bias", p.gate_bias});
    out.push_back({prefix + ".candidate_bias", p.candidate_bias});
  };
  auto add_dense = [&out](const std::string& prefix, const DenseLayer& d) {
    out.push_back({prefix + ".weight", d.weight});
    out.push_back({prefix + ".bias", d.bias});
  };
  add_lstm("lstm_forward", forward_lstm);
  add_lstm("lstm_backward", backward_lstm);
  out.push_back({"attention.projection", attention.projection});
  out.push_back({"attention.scorer", attention.scorer});
  add_dense("text_siamese.first", text_siamese.first);
  add_dense("text_siamese.second", text_siamese.second);
  add_dense("visual_siamese.projection", visual_siamese.projection);
  add_dense("visual_siamese.first", visual_siamese.branch.first);
  add_dense("visual_siamese.second", visual_siamese.branch.second);
  add_dense("fusion", fusion);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.numel();
  return n;
}

// ---------------------------------------------------------------------------

LstmState lstm_cell(const LstmCellParams& params, const Tensor& input, const LstmState& state) {
  const std::size_t hidden = params.hidden();
  if (input.rank() != 1 || input.dim(0) != params.input_dim()) {
    throw DimensionError("lstm_cell: input " + to_string(input.shape()) + " does not match input width " +
                         std::to_string(params.input_dim()));
  }
  if (state.h.shape() != Shape{hidden} || state.c.shape() != Shape{hidden}) {
    throw DimensionError("lstm_cell: state does not match hidden size " + std::to_string(hidden));
  }
  Tensor joint = concat({state.h, input}, 0);
  Tensor gates = sigmoid(add(matvec(params.gate_weights, joint), params.gate_bias));
  Tensor forget = slice(gates, 0, hidden);
  Tensor in = slice(gates, hidden, hidden);
  Tensor out = slice(gates, 2 * hidden, hidden);
  Tensor candidate = tanh(add(matvec(params.candidate_weights, joint), params.candidate_bias));
  Tensor cell = add(mul(forget, state.c), mul(in, candidate));
  return {mul(out, tanh(cell)), cell};
}

Tensor bilstm(const LstmCellParams& forward, const LstmCellParams& backward, const Tensor& title,
              const std::vector<bool>& mask) {
  if (title.rank() != 2 || title.dim(0) != mask.size()) {
    throw DimensionError("bilstm: title " + to_string(title.shape()) + " does not match mask of length " +
                         std::to_string(mask.size()));
  }
  if (forward.hidden() != backward.hidden()) throw DimensionError("bilstm: direction hidden sizes differ");
  const std::size_t steps = mask.size();
  const std::size_t hidden = forward.hidden();
  std::vector<std::size_t> live;
  for (std::size_t t = 0; t < steps; ++t)
    if (mask[t]) live.push_back(t);

  std::vector<Tensor> fwd(steps), bwd(steps);
  LstmState state = LstmState::zeros(hidden);
  for (std::size_t t : live) {
    state = lstm_cell(forward, row(title, t), state);
    fwd[t] = state.h;
  }
  state = LstmState::zeros(hidden);
  for (auto it = live.rbegin(); it != live.rend(); ++it) {
    state = lstm_cell(backward, row(title, *it), state);
    bwd[*it] = state.h;
  }
  std::vector<Tensor> rows;
  rows.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    rows.push_back(mask[t] ? concat({fwd[t], bwd[t]}, 0) : Tensor::zeros({2 * hidden}));
  }
  return stack_rows(rows);
}

AttentionOutput attention(const AttentionParams& params, const Tensor& annotations, const std::vector<bool>& mask) {
  if (annotations.rank() != 2 || annotations.dim(0) != mask.size() ||
      annotations.dim(1) != params.projection.dim(1)) {
    throw DimensionError("attention: annotations " + to_string(annotations.shape()) + " incompatible with mask " +
                         std::to_string(mask.size()) + " and projection " + to_string(params.projection.shape()));
  }
  std::vector<std::size_t> live;
  for (std::size_t t = 0; t < mask.size(); ++t)
    if (mask[t]) live.push_back(t);
  if (live.empty()) throw InvalidArgument("attention: every position is masked");

  std::vector<Tensor> rows, scores;
  for (std::size_t t : live) {
    rows.push_back(row(annotations, t));
    scores.push_back(reshape(dot(params.scorer, tanh(matvec(params.projection, rows.back()))), {1}));
  }
  Tensor alpha = softmax(concat(scores, 0));
  Tensor weighted = mul(slice(alpha, 0, 1), rows[0]);
  for (std::size_t k = 1; k < live.size(); ++k) weighted = add(weighted, mul(slice(alpha, k, 1), rows[k]));

  AttentionOutput out;
  out.context = weighted;
  out.weights.assign(mask.size(), 0.0);
  for (std::size_t k = 0; k < live.size(); ++k) out.weights[live[k]] = alpha.at(k);
  return out;
}

Tensor siamese_branch(const SiameseParams& params, const Tensor& x) {
  return relu(params.second.apply(relu(params.first.apply(x))));
}

Tensor siamese_text(const SiameseParams& params, const Tensor& title_doc, const Tensor& target_doc) {
  const std::size_t in = params.first.weight.dim(1);
  if (title_doc.shape() != Shape{in} || target_doc.shape() != Shape{in}) {
    throw DimensionError("siamese_text: inputs " + to_string(title_doc.shape()) + " and " +
                         to_string(target_doc.shape()) + ", expected [" + std::to_string(in) + "]");
  }
  return abs(sub(siamese_branch(params, title_doc), siamese_branch(params, target_doc)));
}

Tensor siamese_visual(const VisualSiameseParams& params, const std::optional<Tensor>& image, const Tensor& target_doc) {
  const std::size_t doc_dim = params.branch.first.weight.dim(1);
  if (target_doc.shape() != Shape{doc_dim}) {
    throw DimensionError("siamese_visual: document vector " + to_string(target_doc.shape()) + ", expected [" +
                         std::to_string(doc_dim) + "]");
  }
  if (!image) return Tensor::zeros({params.branch.second.weight.dim(0)});
  const std::size_t image_dim = params.projection.weight.dim(1);
  if (image->shape() != Shape{image_dim}) {
    throw DimensionError("siamese_visual: image feature " + to_string(image->shape()) + ", expected [" +
                         std::to_string(image_dim) + "]");
  }
  Tensor projected = params.projection.apply(*image);
  return abs(sub(siamese_branch(params.branch, projected), siamese_branch(params.branch, target_doc)));
}

void validate_record(const ModelConfig& config, const EncodedRecord& record) {
  if (record.post_doc.size() != config.doc_dim || record.target_doc.size() != config.doc_dim) {
    throw DimensionError("record '" + record.id + "': document vectors must have " + std::to_string(config.doc_dim) +
                         " values");
  }
  if (record.image && record.image->size() != config.image_dim) {
    throw DimensionError("record '" + record.id + "': image feature has " + std::to_string(record.image->size()) +
                         " values, model expects " + std::to_string(config.image_dim));
  }
}

ForwardResult forward(const ModelParams& params, const EmbeddingTable& words, const EncodedRecord& record) {
  const ModelConfig& cfg = params.config;
  if (words.dim() != cfg.word_dim) {
    throw DimensionError("word table dim " + std::to_string(words.dim()) + " != model word dim " +
                         std::to_string(cfg.word_dim));
  }
  validate_record(cfg, record);

  ForwardResult out;
  std::vector<Tensor> parts;
  TitleEmbedding title = embed_title(words, params.char_cnn, record.title_tokens, cfg.max_title_length);
  out.truncated = title.truncated;
  if (std::any_of(title.mask.begin(), title.mask.end(), [](bool b) { return b; })) {
    Tensor annotations = bilstm(params.forward_lstm, params.backward_lstm, title.rows, title.mask);
    AttentionOutput att = attention(params.attention, annotations, title.mask);
    parts.push_back(att.context);
    out.attention_weights = std::move(att.weights);
  } else {
    // A post whose title has no tokens contributes a zero context.
    parts.push_back(Tensor::zeros({2 * cfg.hidden}));
    out.attention_weights.assign(cfg.max_title_length, 0.0);
  }

  Tensor post_doc = Tensor::vector(record.post_doc);
  Tensor target_doc = Tensor::vector(record.target_doc);
  parts.push_back(siamese_text(params.text_siamese, post_doc, target_doc));
  std::optional<Tensor> image;
  if (record.image) image = Tensor::vector(*record.image);
  parts.push_back(siamese_visual(params.visual_siamese, image, target_doc));

  out.logit = params.fusion.apply(concat(parts, 0));
  out.probability = sigmoid(out.logit);
  return out;
}

}  // namespace clickbait
