#include "clickbait/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "json.hpp"

#include "clickbait/errors.hpp"
#include "clickbait/metrics.hpp"

namespace clickbait {

double mean_bce(std::span<const double> probabilities, std::span<const double> labels) {
  if (probabilities.size() != labels.size() || probabilities.empty()) {
    throw InvalidArgument("mean_bce: need equal, non-empty inputs");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total += binary_cross_entropy(Tensor::scalar(probabilities[i]), labels[i]).item();
  }
  return total / static_cast<double>(labels.size());
}

// ---------------------------------------------------------------------------

AdadeltaState AdadeltaState::for_params(std::span<const Tensor> params, const AdadeltaConfig& config) {
  AdadeltaState s;
  s.config = config;
  for (const Tensor& p : params) {
    s.sq_grad.emplace_back(p.numel(), 0.0);
    s.sq_update.emplace_back(p.numel(), 0.0);
  }
  return s;
}

void adadelta_update(std::span<double> param, std::span<const double> grad, std::span<double> sq_grad,
                     std::span<double> sq_update, const AdadeltaConfig& config) {
  if (grad.size() != param.size() || sq_grad.size() != param.size() || sq_update.size() != param.size()) {
    throw DimensionError("adadelta: parameter, gradient and accumulator sizes differ");
  }
  const double rho = config.rho;
  const double eps = config.epsilon;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    sq_grad[i] = rho * sq_grad[i] + (1.0 - rho) * g * g;
    const double dx = -std::sqrt(sq_update[i] + eps) / std::sqrt(sq_grad[i] + eps) * g;
    sq_update[i] = rho * sq_update[i] + (1.0 - rho) * dx * dx;
    param[i] += dx;
  }
}

void adadelta_step(std::span<Tensor> params, AdadeltaState& state) {
  if (params.size() != state.sq_grad.size()) {
    throw DimensionError("adadelta: " + std::to_string(params.size()) + " parameters but state for " +
                         std::to_string(state.sq_grad.size()));
  }
  std::vector<double> zeros;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = params[k];
    std::span<const double> g = p.grad();
    if (g.empty()) {
      zeros.assign(p.numel(), 0.0);
      g = zeros;
    }
    adadelta_update(p.mutable_data(), g, state.sq_grad[k], state.sq_update[k], state.config);
  }
}

// ---------------------------------------------------------------------------

DataSplit split_train_val(std::size_t n, SplitRatio ratio, std::uint64_t seed) {
  if (ratio.train == 0 || ratio.validation == 0) throw InvalidArgument("split ratio parts must be positive");
  const std::size_t parts = ratio.train + ratio.validation;
  if (n < parts) {
    throw InvalidArgument("split needs at least " + std::to_string(parts) + " records, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t train_size = (n * ratio.train + parts - 1) / parts;
  DataSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_size));
  split.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(train_size), order.end());
  return split;
}

// ---------------------------------------------------------------------------

std::size_t Resources::doc_dim() const { return docs ? docs->dim() : words->dim(); }
std::size_t Resources::image_dim() const { return images ? images->dim() : default_image_dim; }

EncodedRecord encode_record(const PostRecord& record, const Resources& resources) {
  if (!resources.words) throw InvalidArgument("encode_record: a word table is required");
  EncodedRecord out;
  out.id = record.id;
  out.title_tokens = record.post_title_tokens;
  DocLookup post = lookup_doc(resources.docs, *resources.words, post_doc_id(record), record.post_title_tokens);
  const std::vector<std::string> desc_tokens = tokenize(record.target_description);
  DocLookup target = lookup_doc(resources.docs, *resources.words, target_doc_id(record), desc_tokens);
  out.post_doc = std::move(post.values);
  out.post_doc_fallback = post.fallback;
  out.target_doc = std::move(target.values);
  out.target_doc_fallback = target.fallback;
  if (record.image_id && resources.images) {
    if (const auto* feat = resources.images->find(*record.image_id)) out.image.emplace(feat->begin(), feat->end());
  }
  out.label = record.label.value_or(0.0);
  return out;
}

std::vector<EncodedRecord> encode_records(std::span<const PostRecord> records, const Resources& resources) {
  std::vector<EncodedRecord> out;
  out.reserve(records.size());
  for (const PostRecord& r : records) out.push_back(encode_record(r, resources));
  return out;
}

std::vector<double> predict(const ModelParams& params, const EmbeddingTable& words,
                            std::span<const EncodedRecord> records) {
  NoGradGuard no_grad;
  std::vector<double> out;
  out.reserve(records.size());
  for (const EncodedRecord& r : records) out.push_back(forward(params, words, r).probability.item());
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> labels_of(std::span<const EncodedRecord> records) {
  std::vector<double> out;
  for (const EncodedRecord& r : records) out.push_back(r.label);
  return out;
}

std::vector<std::vector<double>> snapshot(std::span<const Tensor> tensors) {
  std::vector<std::vector<double>> out;
  for (const Tensor& t : tensors) out.emplace_back(t.data().begin(), t.data().end());
  return out;
}

}  // namespace

TrainResult train(const TrainConfig& config, std::span<const PostRecord> corpus, const Resources& resources,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  if (corpus.empty()) throw InvalidArgument("train: empty corpus");
  if (!resources.words) throw InvalidArgument("train: a word table is required");
  if (config.batch_size == 0) throw InvalidArgument("train: batch size must be at least 1");
  for (const PostRecord& r : corpus) {
    if (!r.label) throw InvalidArgument("train: record '" + r.id + "' has no label");
  }

  TrainResult result;
  result.split = split_train_val(corpus.size(), config.split, derive_seed(config.seed, 1));

  std::vector<std::string> train_tokens;
  std::size_t longest = 1;
  for (std::size_t i : result.split.train) {
    const auto& tokens = corpus[i].post_title_tokens;
    train_tokens.insert(train_tokens.end(), tokens.begin(), tokens.end());
    longest = std::max(longest, tokens.size());
  }

  ModelConfig model = config.model;
  model.word_dim = resources.words->dim();
  model.doc_dim = resources.doc_dim();
  model.image_dim = resources.image_dim();
  model.max_title_length = config.max_title_length.value_or(longest);
  result.params = ModelParams::initialize(model, CharVocabulary::build(train_tokens), derive_seed(config.seed, 2));

  std::vector<EncodedRecord> train_set, val_set;
  for (std::size_t i : result.split.train) train_set.push_back(encode_record(corpus[i], resources));
  for (std::size_t i : result.split.validation) val_set.push_back(encode_record(corpus[i], resources));
  const std::vector<double> train_labels = labels_of(train_set);
  const std::vector<double> val_labels = labels_of(val_set);

  std::vector<Tensor> tensors;
  for (auto& named : result.params.parameters()) tensors.push_back(named.tensor);
  AdadeltaState optimizer = AdadeltaState::for_params(tensors, config.adadelta);

  std::vector<std::vector<double>> best = snapshot(tensors);
  double best_f1 = -1.0;
  double best_val_loss = 0.0;
  std::size_t stale = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  const EmbeddingTable& words = *resources.words;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::mt19937_64 rng(derive_seed(config.seed, 1000 + epoch));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - start);
      for (Tensor& t : tensors) t.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const EncodedRecord& rec = train_set[order[k]];
        Tensor loss = binary_cross_entropy(forward(result.params, words, rec).probability, rec.label);
        loss_sum += loss.item();
        backward(scale(loss, weight));
      }
      adadelta_step(tensors, optimizer);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_accuracy =
        compute_metrics(predict(result.params, words, train_set), train_labels, config.threshold).accuracy;
    const std::vector<double> val_probs = predict(result.params, words, val_set);
    const MetricsReport val = compute_metrics(val_probs, val_labels, config.threshold);
    stats.val_loss = mean_bce(val_probs, val_labels);
    stats.val_f1 = val.f1;
    stats.val_accuracy = val.accuracy;
    result.trace.push_back(stats);
    if (on_epoch) on_epoch(stats);

    const bool improved = stats.val_f1 > best_f1 || (stats.val_f1 == best_f1 && stats.val_loss < best_val_loss);
    if (improved) {
      best_f1 = stats.val_f1;
      best_val_loss = stats.val_loss;
      result.best_epoch = epoch;
      best = snapshot(tensors);
      stale = 0;
    } else if (config.patience > 0 && ++stale >= config.patience) {
      break;
    }
  }

  for (std::size_t k = 0; k < tensors.size(); ++k) {
    std::copy(best[k].begin(), best[k].end(), tensors[k].mutable_data().begin());
    tensors[k].zero_grad();
  }
  return result;
}

std::string trace_to_json(std::span<const EpochStats> trace) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const EpochStats& s : trace) {
    arr.push_back({{"epoch", s.epoch},
                   {"train_loss", s.train_loss},
                   {"train_accuracy", s.train_accuracy},
                   {"val_loss", s.val_loss},
                   {"val_f1", s.val_f1},
                   {"val_accuracy", s.val_accuracy}});
  }
  return arr.dump(2);
}

}  // namespace clickbait
