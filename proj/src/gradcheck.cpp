#include "clickbait/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "clickbait/embeddings.hpp"
#include "clickbait/init.hpp"
#include "clickbait/model.hpp"

namespace clickbait::gradcheck {

namespace {

using Rng = std::mt19937_64;

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::vector<double> uniform_values(Rng& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

Tensor random_tensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0, bool requires_grad = true) {
  const std::size_t n = shape_numel(shape);
  return Tensor::from_data(std::move(shape), uniform_values(rng, n, lo, hi), requires_grad);
}

// Values with magnitude in [0.1, 1] and random sign; keeps kinked ops smooth
// under a 1e-5 perturbation.
Tensor away_from_zero(Rng& rng, Shape shape) {
  const std::size_t n = shape_numel(shape);
  std::vector<double> v = uniform_values(rng, n, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (double& x : v)
    if (sign(rng)) x = -x;
  return Tensor::from_data(std::move(shape), std::move(v), true);
}

// Scalar loss with a non-trivial adjoint: <out, R> for a fixed random R.
std::function<Tensor(const Tensor&)> projector(Rng& rng) {
  auto seed = rng();
  return [seed](const Tensor& out) {
    Rng local(seed);
    return sum(mul(out, Tensor::from_data(out.shape(), uniform_values(local, out.numel(), -1.0, 1.0))));
  };
}

void add_params(std::vector<Tensor>& inputs, const std::vector<NamedTensor>& named) {
  for (const auto& n : named) inputs.push_back(n.tensor);
}

EmbeddingTable random_words(Rng& rng, std::size_t dim, const std::vector<std::string>& tokens) {
  EmbeddingTable table(dim);
  for (const std::string& t : tokens) {
    if (table.contains(t)) continue;
    std::vector<float> v(dim);
    for (float& x : v) x = static_cast<float>(std::uniform_real_distribution<double>(-0.5, 0.5)(rng));
    table.insert(t, std::move(v));
  }
  return table;
}

std::string random_word(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> pieces = {"a", "b", "c", "d", "e", "\xC3\xA9", "#"};
  std::string w;
  const std::size_t len = pick(rng, 1, max_len);
  for (std::size_t i = 0; i < len; ++i) w += pieces[pick(rng, 0, pieces.size() - 1)];
  return w;
}

CharCnnConfig small_char_config() {
  CharCnnConfig c;
  c.char_dim = 4;
  c.channels = 5;
  c.output_channels = 6;
  return c;
}

ModelConfig small_model_config() {
  ModelConfig m;
  m.word_dim = 4;
  m.doc_dim = 5;
  m.image_dim = 6;
  m.char_cnn = small_char_config();
  m.hidden = 3;
  m.attention = 3;
  m.siamese_hidden = 4;
  m.siamese_out = 3;
  m.max_title_length = 4;
  return m;
}

std::vector<bool> prefix_mask(std::size_t steps, std::size_t live) {
  std::vector<bool> mask(steps, false);
  for (std::size_t i = 0; i < live; ++i) mask[i] = true;
  return mask;
}

// Synthetic record over `words`, optionally without an image.
EncodedRecord synthetic_record(Rng& rng, const ModelConfig& cfg, const std::vector<std::string>& tokens,
                               bool with_image) {
  EncodedRecord r;
  r.id = "synthetic";
  r.title_tokens = tokens;
  r.post_doc = uniform_values(rng, cfg.doc_dim, -1.0, 1.0);
  r.target_doc = uniform_values(rng, cfg.doc_dim, -1.0, 1.0);
  if (with_image) r.image = uniform_values(rng, cfg.image_dim, 0.0, 1.0);
  r.label = std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.0;
  return r;
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::fabs(analytic), std::fabs(numeric), kRelativeFloor});
  return std::fabs(analytic - numeric) / denom;
}

std::vector<std::vector<std::size_t>> probe_coordinates(const Case& c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> out;
  for (const Tensor& t : c.inputs) {
    std::vector<std::size_t> coords;
    if (c.samples_per_input == 0) {
      for (std::size_t i = 0; i < t.numel(); ++i) coords.push_back(i);
    } else {
      for (std::size_t s = 0; s < c.samples_per_input; ++s) coords.push_back(pick(rng, 0, t.numel() - 1));
    }
    out.push_back(std::move(coords));
  }
  return out;
}

Outcome check(const Case& c, std::uint64_t seed) {
  Outcome out{c.group, 1, 0, 0.0, c.tolerance};
  std::vector<Tensor> inputs = c.inputs;
  for (Tensor& t : inputs) t.zero_grad();
  backward(c.loss());
  std::vector<std::vector<double>> analytic;
  for (const Tensor& t : inputs) {
    analytic.emplace_back(t.grad().begin(), t.grad().end());
    if (analytic.back().empty()) analytic.back().assign(t.numel(), 0.0);
  }
  for (Tensor& t : inputs) t.zero_grad();

  NoGradGuard no_grad;
  const auto coords = probe_coordinates(c, seed);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    auto data = inputs[k].mutable_data();
    for (std::size_t i : coords[k]) {
      const double saved = data[i];
      data[i] = saved + kStep;
      const double up = c.loss().item();
      data[i] = saved - kStep;
      const double down = c.loss().item();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * kStep);
      out.max_rel_error = std::max(out.max_rel_error, relative_error(analytic[k][i], numeric));
      ++out.coordinates;
    }
  }
  return out;
}

std::vector<Case> standard_cases(std::uint64_t seed, std::size_t instances) {
  Rng rng(seed);
  std::vector<Case> cases;
  auto push = [&cases](std::string group, std::vector<Tensor> inputs, std::function<Tensor()> loss) {
    cases.push_back({std::move(group), std::move(inputs), std::move(loss)});
  };

  for (std::size_t n = 0; n < instances; ++n) {
    {
      const std::size_t m = pick(rng, 1, 4), k = pick(rng, 1, 4), cols = pick(rng, 1, 4);
      Tensor a = random_tensor(rng, {m, k}), b = random_tensor(rng, {k, cols});
      auto proj = projector(rng);
      push("matmul", {a, b}, [=] { return proj(matmul(a, b)); });
    }
    {
      const std::size_t m = pick(rng, 1, 5), k = pick(rng, 1, 5);
      Tensor w = random_tensor(rng, {m, k}), x = random_tensor(rng, {k});
      auto proj = projector(rng);
      push("matvec", {w, x}, [=] { return proj(matvec(w, x)); });
    }
    {
      const std::size_t len = pick(rng, 1, 6);
      Tensor a = random_tensor(rng, {len}), b = random_tensor(rng, {len});
      Tensor s = random_tensor(rng, {});
      auto proj = projector(rng);
      push("add", {a, b, s}, [=] { return proj(add(add(a, b), s)); });
      push("sub", {a, b, s}, [=] { return proj(sub(s, sub(a, b))); });
      push("mul", {a, b, s}, [=] { return proj(mul(mul(a, b), s)); });
      push("scale", {a}, [=] { return proj(scale(a, -1.7)); });
    }
    {
      Tensor x = random_tensor(rng, {pick(rng, 1, 3), pick(rng, 1, 3)}, -3.0, 3.0);
      Tensor kinked = away_from_zero(rng, {pick(rng, 1, 6)});
      auto proj = projector(rng);
      push("sigmoid", {x}, [=] { return proj(sigmoid(x)); });
      push("tanh", {x}, [=] { return proj(tanh(x)); });
      push("relu", {kinked}, [=] { return proj(relu(kinked)); });
      push("abs", {kinked}, [=] { return proj(abs(kinked)); });
    }
    {
      Tensor a = random_tensor(rng, {pick(rng, 1, 6)});
      Tensor b = random_tensor(rng, a.shape());
      push("sum", {a}, [=] { return scale(sum(mul(a, a)), 0.5); });
      push("dot", {a, b}, [=] { return mul(dot(a, b), dot(a, a)); });
    }
    {
      const std::size_t axis = pick(rng, 0, 1);
      const std::size_t fixed = pick(rng, 1, 3);
      std::vector<Tensor> parts;
      for (std::size_t p = 0, count = pick(rng, 1, 3); p < count; ++p) {
        const std::size_t along = pick(rng, 1, 3);
        parts.push_back(random_tensor(rng, axis == 0 ? Shape{along, fixed} : Shape{fixed, along}));
      }
      auto proj = projector(rng);
      push("concat", parts, [=] { return proj(concat(parts, axis)); });
    }
    {
      const std::size_t len = pick(rng, 2, 7);
      const std::size_t off = pick(rng, 0, len - 1);
      const std::size_t count = pick(rng, 1, len - off);
      Tensor v = random_tensor(rng, {len});
      Tensor m = random_tensor(rng, {pick(rng, 1, 4), pick(rng, 1, 4)});
      const std::size_t r = pick(rng, 0, m.dim(0) - 1);
      auto proj = projector(rng);
      push("slice", {v}, [=] { return proj(slice(v, off, count)); });
      push("row", {m}, [=] { return proj(row(m, r)); });
      push("reshape", {m}, [=] { return proj(reshape(m, {m.numel()})); });
    }
    {
      const std::size_t width = pick(rng, 1, 4);
      std::vector<Tensor> rows;
      for (std::size_t i = 0, count = pick(rng, 1, 4); i < count; ++i) rows.push_back(random_tensor(rng, {width}));
      Tensor table = random_tensor(rng, {pick(rng, 2, 5), width});
      std::vector<std::size_t> idx;
      for (std::size_t i = 0, count = pick(rng, 1, 6); i < count; ++i) idx.push_back(pick(rng, 0, table.dim(0) - 1));
      auto proj = projector(rng);
      push("stack_rows", rows, [=] { return proj(stack_rows(rows)); });
      push("gather_rows", {table}, [=] { return proj(gather_rows(table, idx)); });
    }
    {
      const std::size_t steps = n == 0 ? 6 : pick(rng, 3, 7);
      Tensor x = random_tensor(rng, {steps, 2}), k = random_tensor(rng, {3, 2, 3}), b = random_tensor(rng, {3});
      auto proj = projector(rng);
      push("conv1d", {x, k, b}, [=] { return proj(conv1d(x, k, b)); });
      Tensor seq = random_tensor(rng, {pick(rng, 1, 5), pick(rng, 1, 4)});
      push("maxpool_over_time", {seq}, [=] { return proj(maxpool_over_time(seq)); });
      Tensor logits = random_tensor(rng, {pick(rng, 2, 6)}, -2.0, 2.0);
      push("softmax", {logits}, [=] { return proj(softmax(logits)); });
    }
    {
      Tensor p = random_tensor(rng, {}, 0.05, 0.95);
      const double y = std::bernoulli_distribution(0.5)(rng) ? 1.0 : 0.0;
      push("binary_cross_entropy", {p}, [=] { return binary_cross_entropy(p, y); });
    }

    // Embeddings.
    {
      std::vector<std::string> corpus;
      for (std::size_t i = 0; i < 6; ++i) corpus.push_back(random_word(rng, 5));
      auto chars = std::make_shared<CharCnnParams>(
          CharCnnParams::initialize(small_char_config(), CharVocabulary::build(corpus), rng()));
      std::vector<Tensor> inputs{chars->char_table};
      for (std::size_t l = 0; l < CharCnnConfig::kLayers; ++l) {
        inputs.push_back(chars->kernels[l]);
        inputs.push_back(chars->biases[l]);
      }
      // Non-zero biases keep most ReLUs off their kink.
      for (auto& b : chars->biases)
        for (double& v : b.mutable_data()) v = std::uniform_real_distribution<double>(0.05, 0.3)(rng);
      const std::string word = random_word(rng, 4);
      auto proj = projector(rng);
      push("embed_word_chars", inputs, [=] { return proj(embed_word_chars(*chars, word)); });

      auto words = std::make_shared<EmbeddingTable>(random_words(rng, 3, corpus));
      std::vector<std::string> title(corpus.begin(), corpus.begin() + static_cast<std::ptrdiff_t>(pick(rng, 0, 4)));
      title.push_back("unseen");
      auto proj_title = projector(rng);
      push("embed_title", inputs, [=] { return proj_title(embed_title(*words, *chars, title, 5).rows); });
    }

    // Model components.
    {
      const std::size_t input_dim = 3, hidden = 2;
      auto cell = std::make_shared<LstmCellParams>(LstmCellParams::initialize(input_dim, hidden, rng()));
      for (double& v : cell->gate_bias.mutable_data()) v = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
      for (double& v : cell->candidate_bias.mutable_data())
        v = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
      Tensor r = random_tensor(rng, {input_dim}), h = random_tensor(rng, {hidden}), c = random_tensor(rng, {hidden});
      auto proj_h = projector(rng), proj_c = projector(rng);
      push("lstm_cell",
          {cell->gate_weights, cell->candidate_weights, cell->gate_bias, cell->candidate_bias, r, h, c}, [=] {
            LstmState next = lstm_cell(*cell, r, {h, c});
            return add(proj_h(next.h), proj_c(next.c));
          });

      auto bwd = std::make_shared<LstmCellParams>(LstmCellParams::initialize(input_dim, hidden, rng()));
      const std::size_t steps = 4;
      Tensor title = random_tensor(rng, {steps, input_dim});
      const std::vector<bool> mask = prefix_mask(steps, pick(rng, 1, steps));
      auto proj = projector(rng);
      push("bilstm",
          {cell->gate_weights, cell->candidate_weights, bwd->gate_weights, bwd->candidate_bias, title},
          [=] { return proj(bilstm(*cell, *bwd, title, mask)); });
    }
    {
      auto att = std::make_shared<AttentionParams>(AttentionParams::initialize(4, 3, rng()));
      Tensor annotations = random_tensor(rng, {4, 4});
      std::vector<bool> mask(4);
      for (std::size_t i = 0; i < 4; ++i) mask[i] = std::bernoulli_distribution(0.7)(rng);
      mask[pick(rng, 0, 3)] = true;
      auto proj = projector(rng);
      push("attention", {att->projection, att->scorer, annotations},
          [=] { return proj(attention(*att, annotations, mask).context); });
    }
    {
      auto siam = std::make_shared<SiameseParams>(SiameseParams::initialize(5, 4, 3, rng()));
      for (double& v : siam->first.bias.mutable_data()) v = 0.2;
      for (double& v : siam->second.bias.mutable_data()) v = 0.2;
      Tensor a = random_tensor(rng, {5}), b = random_tensor(rng, {5});
      auto proj = projector(rng);
      push("siamese_text", {siam->first.weight, siam->first.bias, siam->second.weight, siam->second.bias, a, b},
          [=] { return proj(siamese_text(*siam, a, b)); });

      auto vis = std::make_shared<VisualSiameseParams>();
      vis->projection = DenseLayer::initialize(7, 5, rng());
      vis->branch = SiameseParams::initialize(5, 4, 3, rng());
      for (double& v : vis->branch.first.bias.mutable_data()) v = 0.2;
      for (double& v : vis->branch.second.bias.mutable_data()) v = 0.2;
      Tensor image = random_tensor(rng, {7}, 0.0, 1.0);
      Tensor doc = random_tensor(rng, {5});
      auto proj_v = projector(rng);
      push("siamese_visual",
          {vis->projection.weight, vis->projection.bias, vis->branch.first.weight, vis->branch.second.weight, image},
          [=] { return proj_v(siamese_visual(*vis, image, doc)); });
    }
    {
      const ModelConfig cfg = small_model_config();
      std::vector<std::string> tokens;
      for (std::size_t i = 0, count = pick(rng, 1, 5); i < count; ++i) tokens.push_back(random_word(rng, 4));
      auto words = std::make_shared<EmbeddingTable>(
          random_words(rng, cfg.word_dim, std::vector<std::string>(tokens.begin(), tokens.end() - 1)));
      auto params = std::make_shared<ModelParams>(ModelParams::initialize(cfg, CharVocabulary::build(tokens), rng()));
      // Zero biases put ReLUs fed by all-zero inputs exactly on their kink.
      for (const auto& p : params->parameters()) {
        if (p.name.ends_with("bias")) {
          Tensor t = p.tensor;
          auto data = t.mutable_data();
          const auto values = uniform_values(rng, data.size(), -0.5, 0.5);
          std::copy(values.begin(), values.end(), data.begin());
        }
      }
      const EncodedRecord record = synthetic_record(rng, cfg, tokens, n % 3 != 0);
      std::vector<Tensor> inputs;
      add_params(inputs, params->parameters());
      push("model_forward", inputs, [=] {
        return binary_cross_entropy(forward(*params, *words, record).probability, record.label);
      });
    }
  }

  // Full-size model on one record; one sampled coordinate per parameter tensor.
  {
    ModelConfig cfg;
    cfg.max_title_length = 6;
    const std::vector<std::string> tokens = {"you", "won't", "believe", "#this", "qzxv"};
    auto words = std::make_shared<EmbeddingTable>(
        random_words(rng, cfg.word_dim, std::vector<std::string>(tokens.begin(), tokens.end() - 1)));
    auto params = std::make_shared<ModelParams>(ModelParams::initialize(cfg, CharVocabulary::build(tokens), rng()));
    EncodedRecord record = synthetic_record(rng, cfg, tokens, true);
    record.label = 1.0;
    std::vector<Tensor> inputs;
    add_params(inputs, params->parameters());
    Case c{"end_to_end", inputs,
           [=] { return binary_cross_entropy(forward(*params, *words, record).probability, record.label); }, 1,
           kEndToEndTolerance};
    cases.push_back(std::move(c));
  }
  return cases;
}

std::vector<Outcome> run_suite(std::uint64_t seed) {
  std::vector<Outcome> merged;
  std::size_t index = 0;
  for (const Case& c : standard_cases(seed)) {
    Outcome o = check(c, derive_seed(seed, index++));
    auto it = std::find_if(merged.begin(), merged.end(), [&](const Outcome& m) { return m.group == o.group; });
    if (it == merged.end()) {
      merged.push_back(o);
    } else {
      it->instances += 1;
      it->coordinates += o.coordinates;
      it->max_rel_error = std::max(it->max_rel_error, o.max_rel_error);
    }
  }
  return merged;
}

}  // namespace clickbait::gradcheck
