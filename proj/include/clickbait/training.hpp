#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clickbait/corpus.hpp"
#include "clickbait/init.hpp"
#include "clickbait/model.hpp"
#include "clickbait/vector_files.hpp"

namespace clickbait {

// ---------------------------------------------------------------------------
// Loss.

/// Mean binary cross-entropy of `probabilities` against 0/1 `labels`,
/// computed without a graph.
double mean_bce(std::span<const double> probabilities, std::span<const double> labels);

// ---------------------------------------------------------------------------
// Adadelta.

struct AdadeltaConfig {
  double rho = 0.95;
  double epsilon = 1e-6;

  friend bool operator==(const AdadeltaConfig&, const AdadeltaConfig&) = default;
};

/// E[g^2] and E[dx^2] per parameter element.
struct AdadeltaState {
  AdadeltaConfig config;
  std::vector<std::vector<double>> sq_grad;
  std::vector<std::vector<double>> sq_update;

  static AdadeltaState for_params(std::span<const Tensor> params, const AdadeltaConfig& config);
};

/// One update of a single parameter array:
///   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
///   dx      <- -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
///   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
///   x       <- x + dx
void adadelta_update(std::span<double> param, std::span<const double> grad, std::span<double> sq_grad,
                     std::span<double> sq_update, const AdadeltaConfig& config);

/// Applies adadelta_update to every tensor using its accumulated gradient. A
/// tensor without a gradient is treated as having a zero gradient.
void adadelta_step(std::span<Tensor> params, AdadeltaState& state);

// ---------------------------------------------------------------------------
// Data split.

struct SplitRatio {
  std::size_t train = 4;
  std::size_t validation = 1;

  friend bool operator==(const SplitRatio&, const SplitRatio&) = default;
};

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Shuffled partition of [0, n): ceil(n * train / (train + validation))
/// indices go to training. Needs at least train + validation items.
DataSplit split_train_val(std::size_t n, SplitRatio ratio, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Record encoding.

/// Lookup tables a model run draws from. `words` is required.
struct Resources {
  const EmbeddingTable* words = nullptr;
  const EmbeddingTable* docs = nullptr;
  const FeatureBank* images = nullptr;
  std::size_t default_image_dim = 4096;  // used when no bank is supplied

  std::size_t doc_dim() const;
  std::size_t image_dim() const;
};

/// Table lookups for one post. Image ids absent from the bank become a
/// missing image.
EncodedRecord encode_record(const PostRecord& record, const Resources& resources);
std::vector<EncodedRecord> encode_records(std::span<const PostRecord> records, const Resources& resources);

/// Probabilities for each record, evaluated without recording gradients.
std::vector<double> predict(const ModelParams& params, const EmbeddingTable& words,
                            std::span<const EncodedRecord> records);

// ---------------------------------------------------------------------------
// Training loop.

struct TrainConfig {
  std::size_t batch_size = 256;
  std::uint64_t seed = 1;
  std::size_t max_epochs = 200;
  SplitRatio split;
  double threshold = 0.5;
  AdadeltaConfig adadelta;
  std::optional<std::size_t> max_title_length;  // overrides the training maximum
  std::size_t patience = 10;                    // epochs without improvement; 0 disables
  ModelConfig model;                            // input dims are taken from the tables

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean loss over the epoch's batches, pre-update
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  ModelParams params;  // best validation epoch
  std::vector<EpochStats> trace;
  std::size_t best_epoch = 0;
  DataSplit split;
};

/// Mini-batch adadelta on mean BCE with a seeded train/validation split,
/// per-epoch reshuffling and early stopping on validation F1 (validation
/// loss breaks ties). Throws InvalidArgument on an empty corpus, unlabeled
/// records or a missing word table.
TrainResult train(const TrainConfig& config, std::span<const PostRecord> corpus, const Resources& resources,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// JSON array of per-epoch objects {epoch, train_loss, train_accuracy,
/// val_loss, val_f1, val_accuracy}.
std::string trace_to_json(std::span<const EpochStats> trace);

}  // namespace clickbait
